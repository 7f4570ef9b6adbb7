"""JSON and CSV encodings for matrices, bases, fields, paths and flows.

Matrices travel as ``{"n": n, "re": [[...]], "im": [[...]]}`` (row major).
Floats are written with 12 significant digits so repeated runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionError, HermitianError, ParseError
from .hermitian import HERM_TOL, as_hermitian
from .lindblad import LindbladBasis

SIG_DIGITS = 12


def fmt_float(x) -> float:
    """Round to 12 significant digits (non-finite values pass through)."""
    x = float(x)
    if not math.isfinite(x) or x == 0.0:
        return 0.0 if x == 0.0 else x
    return float(f"{x:.{SIG_DIGITS}g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if hasattr(obj, "value") and isinstance(obj.value, str):  # enums
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=True) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", path=str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc.msg}", path=str(path),
                         line=exc.lineno, column=exc.colno) from None


# -- matrices ----------------------------------------------------------------

def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"n": a.shape[0], "re": a.real, "im": a.imag}


def matrix_from_json(obj, *, hermitian=True, where="matrix") -> np.ndarray:
    if not isinstance(obj, dict) or "re" not in obj:
        raise ParseError(f"{where}: expected an object with keys n, re, im", where=where)
    try:
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: entries must be numeric arrays", where=where) from None
    if re.ndim != 2 or re.shape[0] != re.shape[1] or im.shape != re.shape:
        raise ParseError(f"{where}: re and im must be equal-size square arrays", where=where,
                         re_shape=list(re.shape), im_shape=list(im.shape))
    n = obj.get("n", re.shape[0])
    if n != re.shape[0]:
        raise DimensionError(f"{where}: declared n={n} but arrays are {re.shape[0]}x{re.shape[0]}",
                             where=where)
    a = re + 1j * im
    if not hermitian:
        return a
    try:
        return as_hermitian(a, HERM_TOL)
    except HermitianError as exc:
        exc.context["where"] = where
        raise


def read_matrix(path) -> np.ndarray:
    return matrix_from_json(load_json(path), where=str(path))


def write_matrix(a, path) -> None:
    write_json(matrix_to_json(a), path)


# -- bases and fields --------------------------------------------------------

def basis_from_json(obj, where="basis") -> LindbladBasis:
    if not isinstance(obj, dict) or not isinstance(obj.get("matrices"), list):
        raise ParseError(f"{where}: expected an object with keys n, matrices", where=where)
    mats = [matrix_from_json(m, hermitian=False, where=f"{where}.matrices[{i}]")
            for i, m in enumerate(obj["matrices"])]
    if not mats:
        raise ParseError(f"{where}: empty basis", where=where)
    n = obj.get("n", mats[0].shape[0])
    if any(m.shape != (n, n) for m in mats):
        raise DimensionError(f"{where}: all matrices must be {n}x{n}", where=where)
    return LindbladBasis(np.array(mats))


def basis_to_json(B: LindbladBasis) -> dict:
    return {"n": B.n, "matrices": [matrix_to_json(m) for m in B.matrices]}


def read_basis(path) -> LindbladBasis:
    return basis_from_json(load_json(path), where=str(path))


def field_from_json(obj, where="field"):
    from .field import MatrixField

    if not isinstance(obj, dict) or not isinstance(obj.get("cells"), list):
        raise ParseError(f"{where}: expected an object with keys n, M, h, cells", where=where)
    cells = [matrix_from_json(c, where=f"{where}.cells[{i}]") for i, c in enumerate(obj["cells"])]
    if not cells:
        raise ParseError(f"{where}: no cells", where=where)
    M = obj.get("M", len(cells))
    if M != len(cells):
        raise DimensionError(f"{where}: declared M={M} but {len(cells)} cells given",
                             where=where)
    n = obj.get("n", cells[0].shape[0])
    if any(c.shape != (n, n) for c in cells):
        raise DimensionError(f"{where}: all cells must be {n}x{n}", where=where)
    try:
        h = float(obj.get("h", 1.0 / M))
    except (TypeError, ValueError):
        raise ParseError(f"{where}: h must be a number", where=where) from None
    return MatrixField(np.array(cells), h)


def field_to_json(f) -> dict:
    return {"n": f.n, "M": f.M, "h": f.h, "cells": [matrix_to_json(c) for c in f.cells]}


def read_field(path):
    return field_from_json(load_json(path), where=str(path))


# -- CSV ---------------------------------------------------------------------

def _entry_names(n):
    return ([f"re_{i}{j}" for i in range(n) for j in range(n)]
            + [f"im_{i}{j}" for i in range(n) for j in range(n)])


def path_rows(times, states):
    """Rows ``(time, cell, re entries..., im entries...)``.

    ``states`` has shape ``(T, n, n)`` (matrix path, cell 0) or ``(T, M, n, n)``.
    """
    states = np.asarray(states)
    if states.ndim == 3:
        states = states[:, None]
    T, M, n, _ = states.shape
    header = ["time", "cell"] + _entry_names(n)
    rows = []
    for t, cells in zip(times, states):
        for i, a in enumerate(cells):
            rows.append([fmt_float(t), i] + [fmt_float(v) for v in a.real.ravel()]
                        + [fmt_float(v) for v in a.imag.ravel()])
    return header, rows


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_path_csv(path, times, states) -> None:
    write_csv(path, *path_rows(times, states))


def write_traces_csv(path, times, states) -> None:
    """Per-cell traces over time, one column per cell."""
    states = np.asarray(states)
    tr = np.trace(states, axis1=-2, axis2=-1).real
    header = ["time"] + [f"cell_{i}" for i in range(tr.shape[1])]
    rows = [[fmt_float(t)] + [fmt_float(v) for v in row] for t, row in zip(times, tr)]
    write_csv(path, header, rows)


def write_flow_csv(path, traj) -> None:
    header = ["step", "time", "value", "min_eig"]
    rows = [[k, fmt_float(t), fmt_float(v), fmt_float(e)]
            for k, (t, v, e) in enumerate(zip(traj.times, traj.values, traj.min_eigenvalues))]
    write_csv(path, header, rows)
