"""CSV readers and writers for the data artifacts exchanged by the CLI.

Schemas: scalar series ``x`` (one value per line, header optional), OU path
``t,x`` and survival data ``time,status,z1,...,zd`` with status 1 for an
event and 0 for censoring. Numbers are written with 17 significant digits.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import TextIO

import numpy as np

from .models import SurvData


class InputError(ValueError):
    pass


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _rows(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line:
            yield lineno, [c.strip() for c in line.split(",")]


def _float(cell: str, lineno: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise InputError(f"line {lineno}: cannot parse {cell!r} as a number") from None
    if not np.isfinite(v):
        raise InputError(f"line {lineno}: non-finite value {cell!r}")
    return v


def _read_table(text: str, header: list[str] | None, required_header: bool, ncols: int | None):
    rows = list(_rows(text))
    if not rows:
        raise InputError("input is empty")
    names = None
    lineno, first = rows[0]
    try:
        [float(c) for c in first]
    except ValueError:
        names = [c.lower() for c in first]
        rows = rows[1:]
    if required_header and names is None:
        raise InputError(f"line {lineno}: missing header {','.join(header)}")
    if names is not None and header is not None and names[: len(header)] != header:
        raise InputError(f"line {lineno}: expected header starting {','.join(header)}, got {','.join(names)}")
    width = ncols if ncols is not None else (len(names) if names else len(rows[0][1]) if rows else 0)
    values = []
    for lineno, cells in rows:
        if len(cells) != width:
            raise InputError(f"line {lineno}: expected {width} fields, got {len(cells)}")
        values.append([_float(c, lineno) for c in cells])
    if not values:
        raise InputError("input has a header but no data rows")
    return names, np.array(values, dtype=float), [ln for ln, _ in rows]


def _text(src) -> str:
    if isinstance(src, (str, Path)):
        try:
            return Path(src).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {src}: {exc}") from None
    return src.read()


def read_series(src) -> np.ndarray:
    _, arr, _ = _read_table(_text(src), ["x"], False, 1)
    return arr[:, 0]


def read_path(src, delta: float | None = None) -> tuple[np.ndarray, float]:
    """Return ``(x, delta)``; ``delta`` is inferred from an evenly spaced ``t`` column."""
    _, arr, _ = _read_table(_text(src), ["t", "x"], False, 2)
    t, x = arr[:, 0], arr[:, 1]
    if len(x) < 2:
        raise InputError("path needs at least two points")
    steps = np.diff(t)
    if delta is None:
        delta = float(steps.mean())
        if not delta > 0 or np.max(np.abs(steps - delta)) > 1e-6 * delta:
            raise InputError("time column is not evenly spaced; pass --delta")
    return x, delta


def read_surv(src) -> SurvData:
    names, arr, lines = _read_table(_text(src), ["time", "status"], True, None)
    if arr.shape[1] < 3:
        raise InputError("survival data needs at least one covariate column")
    for lineno, s in zip(lines, arr[:, 1]):
        if s not in (0.0, 1.0):
            raise InputError(f"line {lineno}: status must be 0 or 1")
    for lineno, t in zip(lines, arr[:, 0]):
        if t <= 0:
            raise InputError(f"line {lineno}: time must be positive")
    return SurvData(time=arr[:, 0], status=arr[:, 1].astype(bool), covariates=arr[:, 2:])


def write_series(x, out: TextIO) -> None:
    out.write("x\n")
    out.writelines(fmt(v) + "\n" for v in x)


def write_path(x, delta: float, out: TextIO) -> None:
    out.write("t,x\n")
    out.writelines(f"{fmt(k * delta)},{fmt(v)}\n" for k, v in enumerate(x))


def write_surv(data: SurvData, out: TextIO) -> None:
    d = data.dim
    out.write(",".join(["time", "status"] + [f"z{j + 1}" for j in range(d)]) + "\n")
    for t, s, z in zip(data.time, data.status, data.covariates):
        out.write(",".join([fmt(t), "1" if s else "0"] + [fmt(v) for v in z]) + "\n")


def write_zpath(path, out: TextIO) -> None:
    d = path.z.shape[1]
    out.write(",".join(["u"] + [f"z{j + 1}" for j in range(d)] + ["norm"]) + "\n")
    for u, z, nrm in zip(path.u, path.z, path.norm):
        out.write(",".join([fmt(u)] + [fmt(v) for v in z] + [fmt(nrm)]) + "\n")


def to_string(writer, *args) -> str:
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()
