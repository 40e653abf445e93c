"""Input parsing and schema checks for the sweep CSV/JSON contracts."""

from __future__ import annotations

import json
import warnings

import numpy as np

SCHEMAS = {
    "heatmap": ["tau", "s", "dissimilarity", "lyapunov"],
    "error-curve": ["tau", "error_exact", "error_perturbative", "masked"],
    "portrait": ["trajectory_id", "step", "X", "Y", "Z"],
    "otoc": ["delta_tau", "step", "t", "c"],
}


class SchemaError(ValueError):
    """Input file does not match the declared kind's column contract."""


def load_table(path: str, kind: str) -> dict[str, np.ndarray]:
    """Read a sweep CSV and return named columns; empty files give empty columns."""
    expected = SCHEMAS[kind]
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        got = header.split(",") if header else []
        if got != expected:
            missing = [c for c in expected if c not in got]
            extra = [c for c in got if c not in expected]
            detail = []
            if missing:
                detail.append(f"missing column(s) {missing}")
            if extra:
                detail.append(f"unexpected column(s) {extra}")
            if not detail:
                detail.append(f"column order {got} != {expected}")
            raise SchemaError(f"{path}: {'; '.join(detail)} for kind {kind!r}")
        with warnings.catch_warnings():
            # a header-only file is valid input and renders blank axes
            warnings.simplefilter("ignore", UserWarning)
            body = np.genfromtxt(fh, delimiter=",", dtype=float)
    if body.size == 0:
        return {c: np.empty(0) for c in expected}
    body = np.atleast_2d(body)
    return {c: body[:, i] for i, c in enumerate(expected)}


def load_report(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
