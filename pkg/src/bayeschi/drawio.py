"""File formats: posterior draw CSVs, return series, and hypothesis JSON.

Draw files are plain CSV with a header row of parameter names, one row per
retained draw, optional '#' comment lines, and finite decimal cells
(scientific notation accepted).  Hypothesis files are JSON with either a
"point" or a "linear" object; names resolve against the draw-file header.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .teststat import DrawMatrix


class ParseError(ValueError):
    """Malformed input file; the message names line/column where possible."""


class NameMismatch(ValueError):
    """Hypothesis parameter names do not resolve against the draw header."""


def _data_lines(path):
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def read_draws(path) -> DrawMatrix:
    """Read a draw CSV into a DrawMatrix; raises ParseError with location."""
    rows = []
    names = None
    header_width = 0
    for lineno, line in _data_lines(path):
        cells = [c.strip() for c in line.split(",")]
        if names is None:
            names = cells
            header_width = len(cells)
            if len(set(names)) != len(names):
                raise ParseError(f"{path}: line {lineno}: duplicate column names")
            continue
        if len(cells) != header_width:
            raise ParseError(
                f"{path}: line {lineno}: expected {header_width} cells, got {len(cells)}"
            )
        values = []
        for col, cell in enumerate(cells, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}, column {col}: not a number: {cell!r}"
                ) from None
        rows.append(values)
    if names is None:
        raise ParseError(f"{path}: empty file")
    if len(rows) < 2:
        raise ParseError(f"{path}: need at least 2 draw rows")
    draws = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(draws)):
        raise ParseError(f"{path}: non-finite draw values")
    return DrawMatrix(names, draws)


def write_draws(path, draws: DrawMatrix) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(draws.names) + "\n")
        for row in draws.draws:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_paths(path, h_draws: np.ndarray) -> None:
    """One row per retained draw: h1..h(T+1)."""
    h_draws = np.asarray(h_draws, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"h{k + 1}" for k in range(h_draws.shape[1])) + "\n")
        for row in h_draws:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_returns(path) -> np.ndarray:
    """Single-column return series CSV with header 'r'."""
    values = []
    saw_header = False
    for lineno, line in _data_lines(path):
        cell = line.split(",")[0].strip()
        if not saw_header:
            if cell != "r":
                raise ParseError(f"{path}: line {lineno}: expected header 'r', got {cell!r}")
            saw_header = True
            continue
        try:
            values.append(float(cell))
        except ValueError:
            raise ParseError(
                f"{path}: line {lineno}, column 1: not a number: {cell!r}"
            ) from None
    if not saw_header:
        raise ParseError(f"{path}: empty file")
    y = np.asarray(values, dtype=float)
    if y.size == 0 or not np.all(np.isfinite(y)):
        raise ParseError(f"{path}: return series empty or non-finite")
    return y


def write_returns(path, returns) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("r\n")
        for v in np.asarray(returns, dtype=float):
            fh.write(repr(float(v)) + "\n")


def read_regression_csv(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Regression CSV: header row with a 'y' column plus covariate columns.

    Returns (X, y, names) where X prepends an intercept column and
    names = ['intercept', covariate names...].
    """
    header = None
    rows = []
    for lineno, line in _data_lines(path):
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
            if "y" not in header:
                raise ParseError(f"{path}: line {lineno}: no 'y' column in header")
            continue
        if len(cells) != len(header):
            raise ParseError(
                f"{path}: line {lineno}: expected {len(header)} cells, got {len(cells)}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
    if header is None or not rows:
        raise ParseError(f"{path}: empty file")
    table = np.asarray(rows, dtype=float)
    y_idx = header.index("y")
    cov_idx = [k for k in range(len(header)) if k != y_idx]
    X = np.column_stack([np.ones(table.shape[0]), table[:, cov_idx]])
    names = ["intercept"] + [header[k] for k in cov_idx]
    return X, table[:, y_idx], names


def read_hypothesis(path) -> dict:
    """Load and shape-check a hypothesis JSON file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ParseError(f"{path}: expected a single 'point' or 'linear' object")
    kind = next(iter(raw))
    body = raw[kind]
    if kind == "point":
        params = body.get("params")
        theta0 = body.get("theta0")
        if not isinstance(params, list) or not isinstance(theta0, list):
            raise ParseError(f"{path}: point hypothesis needs 'params' and 'theta0' lists")
        if len(params) != len(theta0):
            raise ParseError(f"{path}: params and theta0 lengths differ")
        return {"kind": "point", "params": [str(p) for p in params],
                "theta0": [float(v) for v in theta0]}
    if kind == "linear":
        params = body.get("params")
        R = body.get("R")
        r = body.get("r")
        if not isinstance(params, list) or not isinstance(R, list) or not isinstance(r, list):
            raise ParseError(f"{path}: linear hypothesis needs 'R', 'r' and 'params' lists")
        R_arr = np.asarray(R, dtype=float)
        r_arr = np.asarray(r, dtype=float)
        if R_arr.ndim != 2 or R_arr.shape != (len(r), len(params)):
            raise ParseError(
                f"{path}: R must be {len(r)} x {len(params)} to match r and params"
            )
        return {"kind": "linear", "params": [str(p) for p in params],
                "R": R_arr, "r": r_arr}
    raise ParseError(f"{path}: unknown hypothesis kind {kind!r}")


def resolve_selector(draws: DrawMatrix, params: list[str]) -> list[int]:
    missing = [p for p in params if p not in draws.names]
    if missing:
        raise NameMismatch(
            f"hypothesis names {missing} absent from draw columns {list(draws.names)}"
        )
    return [draws.names.index(p) for p in params]
