"""Cap covers of the sphere and the broad/narrow decomposition.

A point of the tube-sum field is classified by looking at which direction
caps carry a significant share of its count, keeping the heaviest dyadic
class of those, and then running a greedy dichotomy: either k+1 of the caps
are certified transversal (wedge of centers >= (999/1000) rho^k), or the
caps concentrate in the rho-neighborhood of a k-dimensional subspace.

The greedy picks the wedge-maximizing cap outside N_rho(H_j) at every step
and declares narrow only when no cap remains outside.  Each pick then
gains a factor > rho - r_cap, so a broad return always certifies; and a
narrow return means every cap (not just half) sits inside the neighborhood.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import CertificateError, ResourceLimitError, ValidationError

CAP_BUDGET = 2**21
DEFAULT_OVERLAP_BOUND = 32


def sphere_grid(d: int, spacing: float) -> np.ndarray:
    """Deterministic quasi-uniform point set on S^{d-1} with the given spacing.

    Built recursively: polar bands at the given angular spacing, each band
    covered by a grid on the equatorial sphere one dimension down.
    """
    if spacing <= 0:
        raise ValidationError("spacing must be positive")
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        n = int(math.ceil(2 * math.pi / spacing))
        ang = 2 * math.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    n_band = int(math.ceil(math.pi / spacing))
    rows = []
    for i in range(n_band):
        theta = math.pi * (i + 0.5) / n_band
        sin_t = math.sin(theta)
        sub = sphere_grid(d - 1, min(math.pi, spacing / max(sin_t, 1e-12)))
        block = np.empty((len(sub), d))
        block[:, 0] = math.cos(theta)
        block[:, 1:] = sin_t * sub
        rows.append(block)
    return np.vstack(rows)


@dataclass
class CapCover:
    """Bounded-overlap cover of S^{d-1} by caps of chord radius r."""

    d: int
    r: float
    centers: np.ndarray
    overlap: Optional[int] = None
    _tree: cKDTree = field(default=None, repr=False)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self._tree = cKDTree(self.centers)

    @property
    def n_caps(self) -> int:
        return len(self.centers)

    def containing(self, directions) -> list:
        """Per-direction arrays of cap ids whose cap contains the direction."""
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        hits = self._tree.query_ball_point(directions, self.r * (1 + 1e-12))
        return [np.array(sorted(hit), dtype=np.int64) for hit in hits]

    def measure_cover(self, net_factor: float = 3.0):
        """Coverage and max overlap on a finer deterministic test net."""
        net = sphere_grid(self.d, self.r / net_factor)
        counts = np.array([len(h) for h in self._tree.query_ball_point(net, self.r * (1 + 1e-12))])
        self.overlap = int(counts.max())
        return int(counts.min()), self.overlap


def build_cap_cover(d: int, r: float, budget: int = CAP_BUDGET,
                    overlap_bound: int = DEFAULT_OVERLAP_BOUND) -> CapCover:
    """Cover S^{d-1} by caps of radius r centered on an r-spaced grid."""
    if not 0 < r <= 1:
        raise ValidationError(f"cap radius must be in (0, 1], got {r}")
    if d < 2 or d > 4:
        raise ValidationError("cap covers supported for d in 2..4")
    est = (4.0 / r) ** (d - 1) * 4
    if est > budget:
        raise ResourceLimitError(
            f"estimated {est:.3g} caps exceeds budget {budget} at r={r}"
        )
    centers = sphere_grid(d, r)
    if len(centers) > budget:
        raise ResourceLimitError(f"{len(centers)} caps exceeds budget {budget}")
    cover = CapCover(d=d, r=r, centers=centers)
    covered, overlap = cover.measure_cover()
    if covered < 1:
        raise ValidationError("internal: cap cover left net points uncovered")
    if overlap > overlap_bound:
        raise ValidationError(
            f"measured overlap {overlap} exceeds configured bound {overlap_bound}"
        )
    return cover


# ---------------------------------------------------------------------------
# Significant caps and dyadic pigeonholing (exact integer arithmetic)


def significant_caps(cap_ids: np.ndarray, counts: np.ndarray, n_caps_total: int):
    """Caps carrying at least 1/(1000 * #caps) of the total count at a point.

    The discarded caps sum to less than total/1000.  Pure integer test:
    1000 * n_caps * count >= total.
    """
    cap_ids = np.asarray(cap_ids, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    keep = 1000 * int(n_caps_total) * counts >= total
    return cap_ids[keep], counts[keep]


def dyadic_pigeonhole(cap_ids: np.ndarray, counts: np.ndarray):
    """Keep the dyadic count class with the largest retained mass.

    All survivors have counts within a factor 2 of each other.  Returns
    (ids, counts, retained_fraction).
    """
    cap_ids = np.asarray(cap_ids, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    if not len(cap_ids):
        raise ValidationError("dyadic pigeonhole needs a nonempty significant set")
    levels = np.floor(np.log2(counts)).astype(np.int64)
    total = int(counts.sum())
    best_level, best_mass = None, -1
    for lev in np.unique(levels):
        mass = int(counts[levels == lev].sum())
        if mass > best_mass:
            best_level, best_mass = lev, mass
    keep = levels == best_level
    return cap_ids[keep], counts[keep], best_mass / total


# ---------------------------------------------------------------------------
# The greedy dichotomy


@dataclass
class Subspace:
    """k-dimensional subspace stored as orthonormal basis rows (k, d)."""

    basis: np.ndarray

    def __post_init__(self):
        self.basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        gram = self.basis @ self.basis.T
        if not np.allclose(gram, np.eye(len(self.basis)), atol=1e-10):
            raise ValidationError("subspace basis must be orthonormal to 1e-10")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def dist(self, u) -> np.ndarray:
        """Euclidean distance |u - proj_H u| (vectorized over rows of u)."""
        u = np.asarray(u, dtype=float)
        proj = (u @ self.basis.T) @ self.basis
        return np.linalg.norm(u - proj, axis=-1)


@dataclass
class DichotomyResult:
    kind: str  # "broad" | "narrow"
    tuple_indices: Optional[tuple] = None
    wedge: Optional[float] = None
    H: Optional[Subspace] = None
    inside_count: Optional[int] = None

    @property
    def is_broad(self) -> bool:
        return self.kind == "broad"


def wedge_of_rows(vectors: np.ndarray) -> float:
    """Parallelepiped volume sqrt(det Gram); clamps tiny negatives."""
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    g = v @ v.T
    det = float(np.linalg.det(g))
    return math.sqrt(max(det, 0.0))


def _complete_basis(rows: np.ndarray, k: int, d: int) -> np.ndarray:
    """Pad orthonormal rows up to k using orthogonalized standard vectors."""
    basis = [r for r in rows]
    for j in range(d):
        if len(basis) >= k:
            break
        cand = np.zeros(d)
        cand[j] = 1.0
        for b in basis:
            cand = cand - np.dot(cand, b) * b
        nrm = np.linalg.norm(cand)
        if nrm > 1e-8:
            basis.append(cand / nrm)
    return np.array(basis[:k])


def required_cap_radius(rho: float, k: int) -> float:
    """Largest cap radius for which the greedy's broad certificate closes."""
    return rho * (1.0 - (999.0 / 1000.0) ** (1.0 / k))


EXHAUSTIVE_TUPLE_BUDGET = 20000


def _best_tuple(centers: np.ndarray, k: int):
    """Best (k+1)-tuple by wedge: exhaustive when affordable, else greedy.

    Returns (indices tuple, wedge) or None when fewer than k+1 caps exist.
    The exhaustive branch makes a narrow verdict at small cardinality a
    certificate that no transversal tuple was missed.
    """
    n, d = centers.shape
    if n < k + 1:
        return None
    n_combos = math.comb(n, k + 1)
    if n_combos <= EXHAUSTIVE_TUPLE_BUDGET:
        combos = np.array(list(itertools.combinations(range(n), k + 1)))
        vs = centers[combos]  # (m, k+1, d)
        gram = np.einsum("mid,mjd->mij", vs, vs)
        dets = np.maximum(np.linalg.det(gram), 0.0)
        best = int(np.argmax(dets))
        return tuple(int(i) for i in combos[best]), math.sqrt(dets[best])
    # greedy max-volume completion from every seed
    best_tuple, best_w = None, -1.0
    for seed in range(n):
        chosen = [seed]
        q = centers[seed : seed + 1].copy()
        q /= np.linalg.norm(q)
        for _ in range(k):
            proj = (centers @ q.T) @ q
            dist = np.linalg.norm(centers - proj, axis=1)
            dist[chosen] = -1.0
            pick = int(np.argmax(dist))
            if dist[pick] <= 0:
                break
            chosen.append(pick)
            new_dir = centers[pick] - proj[pick]
            q = np.vstack([q, new_dir / np.linalg.norm(new_dir)])
        if len(chosen) == k + 1:
            w = wedge_of_rows(centers[chosen])
            if w > best_w:
                best_tuple, best_w = tuple(chosen), w
    return (best_tuple, best_w) if best_tuple is not None else None


def bg_dichotomy(centers: np.ndarray, cap_radius: float, rho: float, k: int) -> DichotomyResult:
    """Greedy transversal-tuple search with a narrow fallback.

    centers are the cap centers of the (pigeonholed) significant set.  The
    result is re-verified before returning: a broad tuple must reach wedge
    (999/1000) rho^k at the centers, a narrow subspace must contain at least
    half the caps in its rho-neighborhood (center test with the cap-radius
    correction).  A re-verification failure raises CertificateError.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    n, d = centers.shape
    if not 1 <= k <= d - 1:
        raise ValidationError(f"need 1 <= k <= d-1, got k={k}, d={d}")
    if not 0 < rho < 1:
        raise ValidationError(f"need rho in (0,1), got {rho}")
    if n == 0:
        raise ValidationError("empty cap set")
    if np.abs(np.linalg.norm(centers, axis=1) - 1).max() > 1e-8:
        raise ValidationError("cap centers must be unit vectors")
    if cap_radius > required_cap_radius(rho, k) + 1e-15:
        raise ValidationError(
            f"cap radius {cap_radius:.3g} too large for rho={rho}, k={k}; "
            f"need <= {required_cap_radius(rho, k):.3g}"
        )
    margin = rho - cap_radius

    chosen = [0]  # all single wedges equal 1: lowest index wins
    q = centers[0:1] / np.linalg.norm(centers[0])
    for _ in range(k):
        proj = (centers @ q.T) @ q
        dist = np.linalg.norm(centers - proj, axis=1)
        outside = np.where(dist > margin)[0]
        if len(outside) == 0:
            # every cap sits inside N_rho(H_j): narrow, unless a transversal
            # tuple exists after all (the greedy's first pick can hide one)
            found = _best_tuple(centers, k)
            if found is not None and found[1] >= (999.0 / 1000.0) * rho**k:
                return DichotomyResult(kind="broad", tuple_indices=found[0],
                                       wedge=found[1])
            H = Subspace(_complete_basis(q, k, d))
            inside = int((H.dist(centers) <= margin + 1e-15).sum())
            if inside < math.ceil(n / 2):
                raise CertificateError(
                    "narrow certificate failed re-verification "
                    f"({inside} < {math.ceil(n / 2)})"
                )
            return DichotomyResult(kind="narrow", H=H, inside_count=inside)
        pick = int(outside[np.argmax(dist[outside])])
        chosen.append(pick)
        new_dir = centers[pick] - proj[pick]
        q = np.vstack([q, new_dir / np.linalg.norm(new_dir)])

    wedge = wedge_of_rows(centers[chosen])
    if wedge < (999.0 / 1000.0) * rho**k:
        raise CertificateError(
            f"broad certificate failed re-verification (wedge {wedge:.3g} "
            f"< {(999.0 / 1000.0) * rho**k:.3g})"
        )
    return DichotomyResult(kind="broad", tuple_indices=tuple(chosen), wedge=wedge)


def narrow_direction_count(cover: CapCover, H: Subspace, rho: float) -> int:
    """How many caps of the (coarse) cover meet N_rho(H)."""
    return int((H.dist(cover.centers) <= rho + cover.r).sum())


# ---------------------------------------------------------------------------
# Whole-grid partition


@dataclass
class BroadNarrowPartition:
    grid: object
    caps: CapCover
    rho: float
    k: int
    broad_mask: np.ndarray          # bool per occupied cell
    cell_results: np.ndarray        # per-cell index into results list
    results: list                   # distinct DichotomyResult objects
    chosen_tuple: Optional[tuple]   # majority transversal tuple (global cap ids)
    selected_cells: np.ndarray      # flat indices of X'_b
    stats: dict


def partition_broad_narrow(capgrid, caps: CapCover, rho: float, k: int, p: float = 2.0):
    """Classify every occupied cell as broad or narrow.

    capgrid is the bundle returned by raster.rasterize_with_caps.  Cells
    sharing the same pigeonholed cap set share one dichotomy run.  Broad
    cells are then pigeonholed over their certified tuples; the majority
    tuple (by sum of count^p) defines X'_b, and the retention inequality
    ||f||^p_{X_b} <= #tuples * ||f||^p_{X'_b} is checked on the spot.
    """
    grid, cap_cells, cap_ids, cap_counts = capgrid
    cells = grid.cells
    counts = grid.counts
    if not len(cells):
        return BroadNarrowPartition(grid, caps, rho, k, np.zeros(0, bool),
                                    np.zeros(0, np.int64), [], None,
                                    np.empty(0, np.int64), {"n_cells": 0})

    # group the sparse (cell, cap, count) table by cell
    starts = np.searchsorted(cap_cells, cells, side="left")
    ends = np.searchsorted(cap_cells, cells, side="right")

    cache = {}
    results = []
    cell_res = np.empty(len(cells), dtype=np.int64)
    for ci in range(len(cells)):
        ids_x = cap_ids[starts[ci]:ends[ci]]
        cnt_x = cap_counts[starts[ci]:ends[ci]]
        sig_ids, sig_cnt = significant_caps(ids_x, cnt_x, caps.n_caps)
        sel_ids, _, _ = dyadic_pigeonhole(sig_ids, sig_cnt)
        key = sel_ids.tobytes()
        if key not in cache:
            res = bg_dichotomy(caps.centers[sel_ids], caps.r, rho, k)
            if res.is_broad:
                res = DichotomyResult(
                    kind="broad",
                    tuple_indices=tuple(int(sel_ids[t]) for t in res.tuple_indices),
                    wedge=res.wedge,
                )
            cache[key] = len(results)
            results.append(res)
        cell_res[ci] = cache[key]

    broad_mask = np.array([results[r].is_broad for r in cell_res], dtype=bool)

    # pigeonhole broad cells over tuples by retained L^p mass
    chosen_tuple = None
    selected = np.empty(0, dtype=np.int64)
    stats = {
        "n_cells": len(cells),
        "n_broad": int(broad_mask.sum()),
        "n_narrow": int((~broad_mask).sum()),
        "n_distinct_capsets": len(results),
    }
    if broad_mask.any():
        mass_by_tuple = {}
        weights = counts.astype(float) ** p
        for ci in np.where(broad_mask)[0]:
            t = results[cell_res[ci]].tuple_indices
            mass_by_tuple[t] = mass_by_tuple.get(t, 0.0) + weights[ci]
        chosen_tuple = max(sorted(mass_by_tuple), key=lambda t: mass_by_tuple[t])
        sel_mask = broad_mask & np.array(
            [results[r].tuple_indices == chosen_tuple if results[r].is_broad else False
             for r in cell_res]
        )
        selected = cells[sel_mask]
        broad_mass = float(weights[broad_mask].sum())
        sel_mass = float(weights[sel_mask].sum())
        n_tuples = len(mass_by_tuple)
        if broad_mass > n_tuples * sel_mass + 1e-9:
            raise CertificateError("tuple pigeonhole retention failed")
        stats.update(
            n_tuples=n_tuples,
            broad_mass_p=broad_mass,
            selected_mass_p=sel_mass,
            retention=sel_mass / broad_mass if broad_mass else 1.0,
        )
    return BroadNarrowPartition(grid, caps, rho, k, broad_mask, cell_res,
                                results, chosen_tuple, selected, stats)
