"""Sparse dyadic tube grids: rasterization and L^p norms.

The grid covers [-1,1]^d with cells of dyadic side h; a cell belongs to the
tube around a curve iff its center x = (x', x_d) satisfies
|x' - P_y(x_d)| <= delta.  Storage is sparse (sorted flat indices plus
counts), so only occupied cells cost memory.  The per-tube cell enumeration
is the package's hot loop and lives in kakeyalab._kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .curves import CurveFamily, tangent_by_index
from .errors import ResourceLimitError, ValidationError

CELL_BUDGET = 2**28


def dyadic_below(x: float) -> float:
    """Largest power of two not exceeding x."""
    if x <= 0:
        raise ValidationError("need a positive scale")
    return 2.0 ** math.floor(math.log2(x) + 1e-12)


def _grid_size(h: float) -> int:
    M = 2.0 / h
    M_int = int(round(M))
    if abs(M - M_int) > 1e-9 or M_int & (M_int - 1):
        raise ValidationError(f"cell side h={h} must be dyadic (2/h a power of two)")
    return M_int


def check_budget(d: int, h: float, budget: int = CELL_BUDGET) -> int:
    M = _grid_size(h)
    if M**d > budget:
        required = 2.0 / 2 ** math.floor(math.log2(budget ** (1.0 / d)))
        raise ResourceLimitError(
            f"grid {M}^{d} exceeds the {budget} cell budget; need h >= {required}",
            required=required,
        )
    return M


def slab_centers(h: float, M: int) -> np.ndarray:
    return -1.0 + (np.arange(M) + 0.5) * h


@dataclass
class TubeGrid:
    """Sparse count field over the dyadic cell grid on [-1,1]^d.

    cells: sorted flat indices of occupied cells (last coordinate fastest).
    counts: per-cell tube multiplicity, aligned with cells.
    mask: optional sorted flat-index restriction (e.g. a slab or S').
    """

    d: int
    h: float
    M: int
    cells: np.ndarray
    counts: np.ndarray
    mask: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def unravel(self, flat: np.ndarray) -> np.ndarray:
        """Flat indices -> (n, d) integer coordinates."""
        flat = np.asarray(flat, dtype=np.int64)
        out = np.empty((len(flat), self.d), dtype=np.int64)
        rem = flat.copy()
        for ax in range(self.d - 1, -1, -1):
            out[:, ax] = rem % self.M
            rem //= self.M
        return out

    def centers(self, flat: np.ndarray) -> np.ndarray:
        return -1.0 + (self.unravel(flat) + 0.5) * self.h

    def masked(self) -> "TubeGrid":
        """Grid restricted to its mask (identity when no mask is set)."""
        if self.mask is None:
            return self
        keep = np.isin(self.cells, self.mask, assume_unique=False)
        return TubeGrid(self.d, self.h, self.M, self.cells[keep], self.counts[keep])

    def restrict(self, mask_flat: np.ndarray, mask_id: str = "") -> "TubeGrid":
        g = TubeGrid(
            self.d,
            self.h,
            self.M,
            self.cells,
            self.counts,
            mask=np.unique(np.asarray(mask_flat, dtype=np.int64)),
            meta=dict(self.meta),
        )
        if mask_id:
            g.meta["mask_id"] = mask_id
        return g

    def max_count(self) -> int:
        g = self.masked()
        return int(g.counts.max()) if len(g.counts) else 0

    def total_mass(self) -> float:
        """Integral of the count field: sum count * h^d."""
        g = self.masked()
        return float(g.counts.sum()) * self.cell_volume

    def dense(self) -> np.ndarray:
        """Full count array; d = 2 only (plotting export)."""
        if self.d != 2:
            raise ValidationError("dense export only supported in d = 2")
        out = np.zeros((self.M, self.M), dtype=np.int64)
        g = self.masked()
        idx = g.unravel(g.cells)
        out[idx[:, 0], idx[:, 1]] = g.counts
        return out


def profile_on_slabs(family: CurveFamily, i: int, h: float, M: int) -> np.ndarray:
    cs = slab_centers(h, M)
    prof = np.asarray(family.profile(family.params[i], cs), dtype=float)
    return np.ascontiguousarray(prof.reshape(M, family.d - 1))


def tube_cell_indices(family: CurveFamily, i: int, delta: float, h: float, M: int) -> np.ndarray:
    return _kernels.tube_cells(profile_on_slabs(family, i, h, M), float(delta), float(h), M)


def rasterize_tubes(
    family: CurveFamily,
    params=None,
    delta: float = 1 / 16,
    h: Optional[float] = None,
    budget: int = CELL_BUDGET,
) -> TubeGrid:
    """Accumulate the tube-sum field over the given parameter subset.

    params may be indices into the family or parameter rows; None means the
    whole family.  Counts are order-independent: per-tube cell lists are
    merged with a sorted unique reduction.
    """
    if h is None:
        h = delta / 4.0
    if h > delta / 2.0 + 1e-15:
        raise ValidationError(f"need h <= delta/2, got h={h}, delta={delta}")
    M = check_budget(family.d, h, budget)

    if params is None:
        indices = list(range(len(family)))
    else:
        arr = np.asarray(params)
        if arr.size == 0:
            indices = []
        elif arr.dtype.kind in "iu":
            indices = [int(v) for v in np.atleast_1d(arr)]
        else:
            indices = [family.param_index(y) for y in np.atleast_2d(arr)]

    pieces = [tube_cell_indices(family, i, delta, h, M) for i in indices]
    if pieces:
        allcells = np.concatenate(pieces)
        cells, counts = np.unique(allcells, return_counts=True)
    else:
        cells = np.empty(0, dtype=np.int64)
        counts = np.empty(0, dtype=np.int64)
    return TubeGrid(
        family.d,
        h,
        M,
        cells,
        counts,
        meta={"delta": delta, "n_tubes": len(indices)},
    )


def tube_measure(family: CurveFamily, y, delta: float, h: Optional[float] = None) -> float:
    """Rasterized volume of a single curved tube."""
    if h is None:
        h = delta / 4.0
    M = check_budget(family.d, h)
    i = family.param_index(y) if not isinstance(y, (int, np.integer)) else int(y)
    return len(tube_cell_indices(family, i, delta, h, M)) * h**family.d


def lp_norm(grid: TubeGrid, p) -> float:
    """(sum count^p h^d)^{1/p}; max count for p = inf."""
    g = grid.masked()
    if p == math.inf or p == "inf":
        return float(g.counts.max()) if len(g.counts) else 0.0
    p = float(p)
    if p < 1:
        raise ValidationError(f"L^p norm needs p >= 1, got {p}")
    if not len(g.counts):
        return 0.0
    return float((g.counts.astype(float) ** p).sum() * g.cell_volume) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Straight tubes (used by the multilinear integrals)


@dataclass
class StraightTube:
    """Segment neighborhood: center, unit direction, length, radius."""

    center: np.ndarray
    direction: np.ndarray
    length: float
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.direction = np.asarray(self.direction, dtype=float)
        nrm = np.linalg.norm(self.direction)
        if abs(nrm - 1.0) > 1e-10:
            raise ValidationError("tube direction must be a unit vector")


def straight_tube_cells(tube: StraightTube, h: float, M: int) -> np.ndarray:
    """Flat indices of cells whose center is within radius of the segment."""
    d = len(tube.center)
    half = tube.length / 2.0
    step = h / 2.0
    n_steps = max(2, int(math.ceil(tube.length / step)) + 1)
    ts = np.linspace(-half, half, n_steps)
    pts = tube.center + np.multiply.outer(ts, tube.direction)

    w = int(math.floor(2.0 * tube.radius / h)) + 3
    lo = np.ceil((pts - tube.radius + 1.0) / h - 0.5).astype(np.int64)
    offs = np.arange(w, dtype=np.int64)
    cands = []
    for ax in range(d):
        sh = [1] * (1 + d)
        sh[1 + ax] = w
        cands.append(lo[:, ax].reshape([len(ts)] + [1] * d) + offs.reshape(sh))
    flat = np.zeros([len(ts)] + [w] * d, dtype=np.int64)
    valid = np.ones([len(ts)] + [w] * d, dtype=bool)
    centers = np.empty([len(ts)] + [w] * d + [d])
    for ax in range(d):
        valid &= (cands[ax] >= 0) & (cands[ax] < M)
        centers[..., ax] = -1.0 + (cands[ax] + 0.5) * h
        flat = flat * M + cands[ax]
    cand_flat = flat[valid]
    cand_pts = centers[valid]
    if not len(cand_flat):
        return np.empty(0, dtype=np.int64)
    cand_flat, first = np.unique(cand_flat, return_index=True)
    cand_pts = cand_pts[first]

    # exact distance to the segment
    rel = cand_pts - tube.center
    t = np.clip(rel @ tube.direction, -half, half)
    nearest = np.multiply.outer(t, tube.direction)
    dist2 = ((rel - nearest) ** 2).sum(axis=1)
    keep = dist2 <= tube.radius**2 * (1.0 + 1e-12)
    return cand_flat[keep]


def rasterize_straight_tubes(tubes, d: int, h: float, budget: int = CELL_BUDGET) -> TubeGrid:
    M = check_budget(d, h, budget)
    pieces = [straight_tube_cells(t, h, M) for t in tubes]
    if pieces:
        allcells = np.concatenate(pieces)
        cells, counts = np.unique(allcells, return_counts=True)
    else:
        cells = np.empty(0, dtype=np.int64)
        counts = np.empty(0, dtype=np.int64)
    return TubeGrid(d, h, M, cells, counts, meta={"n_tubes": len(tubes)})


def per_tube_cells_straight(tubes, d: int, h: float, budget: int = CELL_BUDGET):
    M = check_budget(d, h, budget)
    return [straight_tube_cells(t, h, M) for t in tubes], M


# ---------------------------------------------------------------------------
# Per-cap attribution (tube y contributes to cap tau at x iff e_y(x_d) in tau)


def rasterize_with_caps(family: CurveFamily, caps, delta: float, h: Optional[float] = None,
                        params=None, budget: int = CELL_BUDGET):
    """Tube-sum grid plus per-(cell, cap) counts.

    caps is a broadnarrow.CapCover over S^{d-1}.  Returns (grid, cap_cells,
    cap_ids, cap_counts) where the three arrays form a sorted sparse COO
    table of how many tubes hit each cell with direction in each cap.
    """
    if h is None:
        h = delta / 4.0
    M = check_budget(family.d, h, budget)
    if params is None:
        indices = list(range(len(family)))
    else:
        indices = [int(v) for v in np.atleast_1d(np.asarray(params))]

    cs = slab_centers(h, M)
    pair_cells = []
    pair_caps = []
    pieces = []
    for i in indices:
        cells_i = tube_cell_indices(family, i, delta, h, M)
        pieces.append(cells_i)
        tangents = tangent_by_index(family, i, cs)  # (M, d)
        slab_caps = caps.containing(tangents)  # list of arrays per slab
        slab_of = (cells_i % M).astype(np.int64)
        reps = np.array([len(slab_caps[s]) for s in slab_of], dtype=np.int64)
        pair_cells.append(np.repeat(cells_i, reps))
        pair_caps.append(
            np.concatenate([slab_caps[s] for s in slab_of])
            if len(cells_i)
            else np.empty(0, dtype=np.int64)
        )

    if pieces:
        allcells = np.concatenate(pieces)
        cells, counts = np.unique(allcells, return_counts=True)
    else:
        cells = np.empty(0, dtype=np.int64)
        counts = np.empty(0, dtype=np.int64)
    grid = TubeGrid(family.d, h, M, cells, counts, meta={"delta": delta, "n_tubes": len(indices)})

    if pair_cells and sum(len(pc) for pc in pair_cells):
        pc = np.concatenate(pair_cells)
        pk = np.concatenate(pair_caps)
        combo = pc * np.int64(caps.n_caps) + pk
        combo, ccounts = np.unique(combo, return_counts=True)
        cap_cells = combo // caps.n_caps
        cap_ids = (combo % caps.n_caps).astype(np.int64)
    else:
        cap_cells = np.empty(0, dtype=np.int64)
        cap_ids = np.empty(0, dtype=np.int64)
        ccounts = np.empty(0, dtype=np.int64)
    return grid, cap_cells, cap_ids, ccounts
