"""Trotter-step diagnostics for kicked collective-spin simulators."""

from trotterlab.spin import (
    SpinSector,
    ModelParams,
    CollectiveOperators,
    build_collective_operators,
    spin_coherent_state,
    target_hamiltonian,
)

__all__ = [
    "SpinSector",
    "ModelParams",
    "CollectiveOperators",
    "build_collective_operators",
    "spin_coherent_state",
    "target_hamiltonian",
]

__version__ = "0.1.0"
