"""Columnar text formats for curve families, point sets, and grids.

All floats are written with 17 significant digits, which round-trips IEEE
doubles exactly.  Headers are single lines of key=value fields after a
format tag, so the files stay diffable and greppable.
"""
from __future__ import annotations

import numpy as np

from .curves import CurveFamily, SampledProfile
from .deltasets import DeltaSet
from .errors import ValidationError
from .raster import TubeGrid


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _header_fields(line: str) -> dict:
    out = {}
    for tok in line.split():
        if "=" in tok:
            key, val = tok.split("=", 1)
            out[key] = val
    return out


def save_curves(family: CurveFamily, path, c_grid_size: int = 65):
    """One row per (curve, c-grid sample): y columns, c, profile columns."""
    cs = np.linspace(-1.0, 1.0, c_grid_size)
    with open(path, "w") as fh:
        fh.write("kakeyalab-curves v1\n")
        fh.write(
            f"d={family.d} n={len(family)} C={fmt(family.C)} cgrid={c_grid_size}\n"
        )
        for i, y_row in enumerate(family.params):
            prof = np.asarray(family.profile(y_row, cs), dtype=float).reshape(len(cs), -1)
            for j, c in enumerate(cs):
                cols = [fmt(v) for v in y_row] + [fmt(c)] + [fmt(v) for v in prof[j]]
                fh.write(" ".join(cols) + "\n")


def load_curves(path) -> CurveFamily:
    with open(path) as fh:
        tag = fh.readline().strip()
        if tag != "kakeyalab-curves v1":
            raise ValidationError(f"not a curve file: {tag!r}")
        head = _header_fields(fh.readline())
        d = int(head["d"])
        n = int(head["n"])
        c_grid = int(head["cgrid"])
        c_bound = float(head["C"])
        rows = np.loadtxt(fh, ndmin=2)
    expected = n * c_grid
    if rows.shape[0] != expected:
        raise ValidationError(f"expected {expected} rows, found {rows.shape[0]}")
    m = 2 * (d - 1)
    params = rows[::c_grid, :m]
    cs = rows[:c_grid, m]
    values = {}
    for i in range(n):
        block = rows[i * c_grid : (i + 1) * c_grid, m + 1 :]
        values[SampledProfile.key(params[i])] = block
    profile = SampledProfile(cs, values)
    return CurveFamily(
        d=d, params=params, profile=profile, C=c_bound, profile_dc=profile.derivative
    )


def save_deltaset(dset: DeltaSet, path):
    with open(path, "w") as fh:
        fh.write("kakeyalab-deltaset v1\n")
        fh.write(
            f"n={dset.n} delta={fmt(dset.delta)} s={fmt(dset.s)} count={len(dset)}\n"
        )
        for row in dset.points:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def load_deltaset(path) -> DeltaSet:
    with open(path) as fh:
        tag = fh.readline().strip()
        if tag != "kakeyalab-deltaset v1":
            raise ValidationError(f"not a deltaset file: {tag!r}")
        head = _header_fields(fh.readline())
        pts = np.loadtxt(fh, ndmin=2)
    if pts.shape[0] != int(head["count"]):
        raise ValidationError("row count does not match header")
    return DeltaSet(pts, float(head["delta"]), float(head["s"]))


def save_grid_sparse(grid: TubeGrid, path, labels=None):
    """Sparse rows: integer cell coordinates, count, optional label column."""
    coords = grid.unravel(grid.cells)
    with open(path, "w") as fh:
        fh.write("kakeyalab-grid v1\n")
        mask_id = grid.meta.get("mask_id", "-")
        fh.write(f"d={grid.d} h={fmt(grid.h)} M={grid.M} mask={mask_id} count={len(grid.cells)}\n")
        for i in range(len(grid.cells)):
            cols = [str(v) for v in coords[i]] + [str(int(grid.counts[i]))]
            if labels is not None:
                cols.append(str(labels[i]))
            fh.write(" ".join(cols) + "\n")


def load_grid_sparse(path):
    with open(path) as fh:
        tag = fh.readline().strip()
        if tag != "kakeyalab-grid v1":
            raise ValidationError(f"not a grid file: {tag!r}")
        head = _header_fields(fh.readline())
        d = int(head["d"])
        M = int(head["M"])
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    coords = data[:, :d]
    counts = data[:, d]
    flat = np.zeros(len(coords), dtype=np.int64)
    for ax in range(d):
        flat = flat * M + coords[:, ax]
    order = np.argsort(flat)
    return TubeGrid(d, float(head["h"]), M, flat[order], counts[order])


def save_grid_dense(grid: TubeGrid, path):
    """Dense integer matrix (d = 2 only), row index = first coordinate."""
    dense = grid.dense()
    with open(path, "w") as fh:
        fh.write("kakeyalab-dense v1\n")
        fh.write(f"M={grid.M} h={fmt(grid.h)}\n")
        for row in dense:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def save_points(points: np.ndarray, path, **provenance):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w") as fh:
        fh.write("kakeyalab-points v1\n")
        fields = " ".join(f"{k}={v}" for k, v in sorted(provenance.items()))
        fh.write(f"{fields} cols={points.shape[1]} count={len(points)}\n".lstrip())
        for row in points:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def load_points(path):
    with open(path) as fh:
        tag = fh.readline().strip()
        if tag != "kakeyalab-points v1":
            raise ValidationError(f"not a points file: {tag!r}")
        head = _header_fields(fh.readline())
        pts = np.loadtxt(fh, ndmin=2)
    if pts.shape[0] != int(head["count"]):
        raise ValidationError("row count does not match header")
    return pts, head
