"""Finite delta-separated sets with non-concentration exponents.

A (delta, s)-set is delta-separated with ball counts controlled by
(r/delta)^s.  The checker restricts centers to the points themselves and
radii to dyadic multiples of delta, which certifies the unrestricted
condition up to a factor 2^s; that factor is built into the threshold and
the witness records the achieved slack.  Balls are open, matching the
separation convention (a delta-separated set has singleton delta-balls).

The extractor realizes the mass-distribution construction on the dyadic
tree: candidates are visited depth-first (Morton order) and greedily
accepted whenever the exact separation and ball-count conditions survive,
so the output passes the checker by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import PipelineError, ValidationError

OPEN_BALL_SHRINK = 1.0 - 1e-12


@dataclass
class DeltaSet:
    points: np.ndarray
    delta: float
    s: float

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.delta <= 0:
            raise ValidationError("delta must be positive")
        if self.s < 0:
            raise ValidationError("exponent s must be nonnegative")

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)


@dataclass
class Witness:
    center: np.ndarray
    radius: float
    count: int
    threshold: float

    @property
    def slack(self) -> float:
        return self.count / self.threshold


def _dyadic_radii(delta: float, diameter: float):
    radii = [delta]
    while radii[-1] < diameter:
        radii.append(radii[-1] * 2.0)
    return radii


def check_delta_s(points, delta: float, s: float):
    """Verify separation and ball counts; returns (ok, worst_witness).

    Counts in open balls B(p, 2^i delta) around every point p must stay
    below 2^s (r/delta)^s.  The empty set passes vacuously with witness
    None.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0 or points.size == 0:
        return True, None
    if delta <= 0:
        raise ValidationError("delta must be positive")
    n_pts = len(points)
    if n_pts == 1:
        return True, Witness(points[0], delta, 1, 2.0**s)

    tree = cKDTree(points)
    dmin = float(tree.query(points, k=2)[0][:, 1].min())
    if dmin < delta * OPEN_BALL_SHRINK:
        return False, Witness(points[0], dmin, 2, 1.0)

    diameter = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    worst: Optional[Witness] = None
    ok = True
    for i, r in enumerate(_dyadic_radii(delta, diameter)):
        counts = tree.query_ball_point(points, r * OPEN_BALL_SHRINK, return_length=True)
        threshold = 2.0**s * 2.0 ** (i * s)
        j = int(np.argmax(counts))
        wit = Witness(points[j], r, int(counts[j]), threshold)
        if worst is None or wit.slack > worst.slack:
            worst = wit
        if wit.count > threshold:
            ok = False
    return ok, worst


# ---------------------------------------------------------------------------
# Dyadic cells and contents


@dataclass
class DyadicCells:
    """Union of dyadic cells at one level inside [0,1]^n."""

    level: int
    indices: np.ndarray  # (N, n) int64

    def __post_init__(self):
        self.indices = np.unique(
            np.atleast_2d(np.asarray(self.indices, dtype=np.int64)), axis=0
        )
        if self.level < 0:
            raise ValidationError("level must be nonnegative")
        if self.indices.size and (
            self.indices.min() < 0 or self.indices.max() >= 2**self.level
        ):
            raise ValidationError("cell indices out of range for the level")

    @property
    def delta(self) -> float:
        return 2.0**-self.level

    @property
    def n(self) -> int:
        return self.indices.shape[1]

    def centers(self) -> np.ndarray:
        return (self.indices + 0.5) * self.delta

    @classmethod
    def from_points(cls, points, level: int) -> "DyadicCells":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx = np.clip(np.floor(points * 2**level), 0, 2**level - 1).astype(np.int64)
        return cls(level=level, indices=idx)


def dyadic_content(cells: DyadicCells, s: float) -> float:
    """Dyadic s-content: min over tree covers of sum side^s, bottom-up."""
    if not len(cells.indices):
        return 0.0
    level_nodes = {tuple(row): (2.0**-cells.level) ** s for row in cells.indices}
    for lev in range(cells.level - 1, -1, -1):
        parents: dict = {}
        for node, val in level_nodes.items():
            p = tuple(i // 2 for i in node)
            parents[p] = parents.get(p, 0.0) + val
        side_s = (2.0**-lev) ** s
        level_nodes = {p: min(side_s, v) for p, v in parents.items()}
    return sum(level_nodes.values())


def _morton_order(indices: np.ndarray, level: int) -> np.ndarray:
    """Depth-first tree order: per level, child choices compared axis-major."""
    n_cells, n_ax = indices.shape
    if level * n_ax > 62:
        raise ValidationError("tree too deep for 64-bit Morton keys")
    keys = np.zeros(n_cells, dtype=np.int64)
    for lev in range(level - 1, -1, -1):  # most significant level first
        for ax in range(n_ax):
            keys = (keys << 1) | ((indices[:, ax] >> lev) & 1)
    return np.argsort(keys, kind="stable")


@dataclass
class FrostmanInfo:
    content: float
    c_impl: float
    n_candidates: int
    n_selected: int


def frostman_extract(cells: DyadicCells, delta: float, s: float,
                     representatives: Optional[np.ndarray] = None):
    """Extract a (delta, s)-subset with cardinality ~ content * delta^{-s}.

    representatives, when given, supplies one point per cell (same order as
    cells.indices) from which the subset is drawn; cell centers otherwise.
    Returns (DeltaSet, FrostmanInfo); the info carries the dyadic s-content
    and the achieved constant c_impl = #P delta^s / content.
    """
    if abs(delta - cells.delta) > 1e-12:
        raise ValidationError("delta must equal the cell side 2^-level")
    if not len(cells.indices):
        raise ValidationError("empty cell set")
    n = cells.n
    content = dyadic_content(cells, s)
    reps = cells.centers() if representatives is None else np.atleast_2d(
        np.asarray(representatives, dtype=float)
    )
    if len(reps) != len(cells.indices):
        raise ValidationError("need one representative per cell")

    order = _morton_order(cells.indices, cells.level)

    if s >= n:
        # the budget exceeds the cell count at every level: the full net of
        # representatives already satisfies the (delta, s) conditions
        points = reps[order]
        dset = DeltaSet(points, delta, s)
        info = FrostmanInfo(content, len(points) * delta**s / content,
                            len(cells.indices), len(points))
        return dset, info

    diameter = math.sqrt(n)
    radii = np.array(_dyadic_radii(delta, diameter))
    thresholds = 2.0**s * (radii / delta) ** s
    shrunk = radii * OPEN_BALL_SHRINK

    accepted = np.empty((0, n))
    counts = np.zeros((0, len(radii)), dtype=np.int64)  # counts[i, j] = #B(p_i, r_j)
    for cand_i in order:
        x = reps[cand_i]
        if not len(accepted):
            accepted = x[None, :]
            counts = np.ones((1, len(radii)), dtype=np.int64)
            continue
        dists = np.linalg.norm(accepted - x, axis=1)
        if dists.min() < delta * OPEN_BALL_SHRINK:
            continue
        inside = dists[:, None] < shrunk[None, :]  # (n_acc, n_radii)
        new_counts = inside.sum(axis=0) + 1
        if np.any(new_counts > thresholds):
            continue
        if np.any((counts + inside) > thresholds[None, :]):
            continue
        counts += inside
        accepted = np.vstack([accepted, x])
        counts = np.vstack([counts, new_counts])

    dset = DeltaSet(accepted, delta, s)
    info = FrostmanInfo(content, len(accepted) * delta**s / content,
                        len(cells.indices), len(accepted))
    return dset, info


# ---------------------------------------------------------------------------
# Fractal parameter sets


def cantor_parameter_set(beta: float, depth: int = 8, ambient: int = 1) -> np.ndarray:
    """Self-similar set on [0,1] with box dimension beta, as points in R^ambient.

    Two branches with contraction ratio r solving beta = log 2 / log(1/r).
    beta = 0 collapses to one point; beta = 1 fills a uniform grid.  Left
    interval endpoints are produced; endpoints are computed in exact
    rational arithmetic whenever 1/r is an integer.
    """
    if not 0 <= beta <= 1:
        raise ValidationError(f"beta must lie in [0,1], got {beta}")
    if beta == 0:
        pts = np.array([[0.0]])
    else:
        inv = 2.0 ** (1.0 / beta)  # 1/ratio
        if abs(inv - round(inv)) < 1e-9:
            ratio = Fraction(1, int(round(inv)))
            starts = [Fraction(0)]
            width = Fraction(1)
        else:
            ratio = 2.0 ** (-1.0 / beta)
            starts = [0.0]
            width = 1.0
        for _ in range(depth):
            starts = starts + [a + (1 - ratio) * width for a in starts]
            width = ratio * width
        pts = np.array([[float(a)] for a in sorted(set(starts))])
    if ambient > 1:
        pts = np.column_stack([pts, np.zeros((len(pts), ambient - 1))])
    return pts


# ---------------------------------------------------------------------------
# Line space: lifts and projections


def line_space_project(x, v):
    """Drop the v-component: (x, v) -> (x - <x,v> v, v)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValidationError("direction must be a unit vector")
    return x - np.dot(x, v) * v, v


def line_space_lift(pairs, t_range=(-1.0, 1.0), samples: int = 32) -> np.ndarray:
    """Sample the flow-invariant set {(x + t v, v)} over a t-grid.

    pairs is an (N, 2d) array of (x, v) rows with x orthogonal to v.
    Output has one row per (pair, t): (x + t v, v), shape (N*samples, 2d).
    """
    pairs = np.atleast_2d(np.asarray(pairs, dtype=float))
    if pairs.shape[1] % 2:
        raise ValidationError("rows must concatenate (x, v) of equal length")
    d = pairs.shape[1] // 2
    x, v = pairs[:, :d], pairs[:, d:]
    if np.abs(np.linalg.norm(v, axis=1) - 1.0).max() > 1e-10:
        raise ValidationError("directions must be unit vectors")
    if np.abs(np.einsum("ij,ij->i", x, v)).max() > 1e-10:
        raise ValidationError("base points must be orthogonal to directions")
    ts = np.linspace(t_range[0], t_range[1], samples)
    moved = x[:, None, :] + ts[None, :, None] * v[:, None, :]
    vrep = np.broadcast_to(v[:, None, :], moved.shape)
    return np.concatenate([moved, vrep], axis=2).reshape(-1, 2 * d)


# ---------------------------------------------------------------------------
# Covers and the discretization pipeline


@dataclass
class DyadicCover:
    """Balls of radius 2^-k covering part of a set at one scale."""

    k: int
    centers: np.ndarray
    tree: cKDTree = field(default=None, repr=False)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.tree = cKDTree(self.centers)

    @property
    def radius(self) -> float:
        return 2.0**-self.k

    def covers(self, points) -> np.ndarray:
        dist, _ = self.tree.query(np.atleast_2d(points))
        return dist <= self.radius * (1 + 1e-12)


def cover_ladder_sum(covers, alpha: float, eps: float) -> float:
    return sum(2.0 ** (-c.k * (alpha + eps)) * len(c.centers) for c in covers)


def effective_alpha(covers, eps: float, tol: float = 1e-10) -> float:
    """Smallest alpha with sum_k 2^{-k(alpha+eps)} #B_k <= 1."""
    lo, hi = 0.0, 64.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if cover_ladder_sum(covers, mid, eps) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class PipelineResult:
    delta_set: DeltaSet        # A' in parameter space (original coordinates)
    delta: float
    k1: int
    slab_centers: np.ndarray   # centers of the doubled balls forming S'
    slab_radius: float
    info: dict


def discretize_union(family, covers, alpha: float, beta: float, k: int, eps: float,
                     c_samples: int = 512) -> PipelineResult:
    """Scale selection, level pigeonholing, and Frostman extraction.

    For each curve, the level capturing the largest k^2-weighted share of
    its covered length is selected (such a level exists whenever the curve
    is covered at all, since sum 1/k^2 converges); curves are grouped by
    level, the level with the largest k^2-weighted dyadic content wins, and
    a (delta, 2(k-1)+beta-eps)-subset is extracted from that group.  S' is
    the union of doubled balls at the winning level.
    """
    if cover_ladder_sum(covers, alpha, eps) > 1.0 + 1e-9:
        raise ValidationError(
            "cover ladder violates the weighted sum bound for this alpha/eps"
        )
    cs = np.linspace(-1.0, 1.0, c_samples)
    n_curves = len(family)
    frac = np.zeros((len(covers), n_curves))
    for ci in range(n_curves):
        prof = np.asarray(family.profile(family.params[ci], cs), dtype=float)
        pts = np.column_stack([prof.reshape(len(cs), -1), cs])
        covered_any = np.zeros(len(cs), dtype=bool)
        for li, cov in enumerate(covers):
            hit = cov.covers(pts)
            frac[li, ci] = hit.mean() * 2.0  # length of covered c-interval
            covered_any |= hit
        if not covered_any.any():
            raise PipelineError(
                f"curve {ci} is never covered: invalid cover ladder"
            )
    ks = np.array([c.k for c in covers], dtype=float)
    weighted = ks[:, None] ** 2 * frac
    sel_level = np.argmax(weighted, axis=0)  # k(y) per curve
    total_len = np.minimum(frac.sum(axis=0), 2.0)
    c_select = float((weighted[sel_level, np.arange(n_curves)] /
                      (ks[sel_level] ** 2 * total_len)).min())

    t = 2 * (k - 1) + beta - eps
    scaled = (family.params + 1.0) / 2.0  # into [0,1]^m for the dyadic tree
    contents = {}
    for li, cov in enumerate(covers):
        members = np.where(sel_level == li)[0]
        if not len(members):
            continue
        cells = DyadicCells.from_points(scaled[members], cov.k)
        contents[li] = dyadic_content(cells, t)
    all_cells = DyadicCells.from_points(scaled, max(c.k for c in covers))
    total_content = dyadic_content(all_cells, t)
    best_li = max(sorted(contents), key=lambda li: covers[li].k ** 2 * contents[li])
    k1 = covers[best_li].k
    c_level = covers[best_li].k ** 2 * contents[best_li] / total_content

    members = np.where(sel_level == best_li)[0]
    level_cells = DyadicCells.from_points(scaled[members], k1)
    # one representative parameter per cell: lowest curve index wins
    cell_of = np.clip(np.floor(scaled[members] * 2**k1), 0, 2**k1 - 1).astype(np.int64)
    rep_for: dict = {}
    for row, ci in enumerate(members):
        key = tuple(cell_of[row])
        if key not in rep_for:
            rep_for[key] = ci
    rep_points = np.array(
        [scaled[rep_for[tuple(idx)]] for idx in level_cells.indices]
    )
    delta = 2.0**-k1
    dset_scaled, finfo = frostman_extract(level_cells, delta, t, representatives=rep_points)
    params_out = dset_scaled.points * 2.0 - 1.0

    info = {
        "c_select": c_select,
        "c_level": c_level,
        "c_frostman": finfo.c_impl,
        "content_level": contents[best_li],
        "content_total": total_content,
        "n_selected": len(dset_scaled),
        "level_members": len(members),
    }
    return PipelineResult(
        delta_set=DeltaSet(params_out, 2 * delta, t),
        delta=delta,
        k1=k1,
        slab_centers=covers[best_li].centers,
        slab_radius=2.0 * covers[best_li].radius,
        info=info,
    )
