"""Wedge volumes, multilinear tube integrals, and scale recursion.

The multilinear integral puts k+1 straight tube families on a shared grid
and integrates (sum over tuples of joint indicators weighted by the wedge
of their directions)^{1/k}.  Curved families are handled by the classical
two-step: inside a cube of side 2 sqrt(delta) a curved delta-tube lies in a
straight (1+C) delta-tube tangent at the cube's center slice, and the
curved tubes at scale delta embed in curved (10+C) sqrt(delta)-tubes, which
yields a ladder of scales climbing toward unit size.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CurveFamily, tangent_by_index
from .errors import (
    InsufficientDataError,
    TransversalityError,
    ValidationError,
)
from .raster import (
    StraightTube,
    check_budget,
    dyadic_below,
    lp_norm,
    rasterize_tubes,
    straight_tube_cells,
)


def wedge_volume(vectors) -> float:
    """Volume of the parallelepiped spanned by k+1 unit vectors in R^d.

    Computed as sqrt(det Gram); symmetric under permutations and zero
    (within roundoff) exactly when the vectors are linearly dependent.
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    n, d = v.shape
    if n > d:
        raise ValidationError(f"{n} vectors cannot span a parallelepiped in R^{d}")
    norms = np.linalg.norm(v, axis=1)
    if np.abs(norms - 1.0).max() > 1e-10:
        raise ValidationError("wedge inputs must be unit vectors to 1e-10")
    gram = v @ v.T
    return math.sqrt(max(float(np.linalg.det(gram)), 0.0))


# ---------------------------------------------------------------------------
# Multilinear Kakeya on straight tubes


def _group_by_cell(per_tube_cells):
    """Flatten per-tube cell lists into a (cell, tube id) table sorted by cell."""
    if not per_tube_cells:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    cells = np.concatenate(per_tube_cells)
    ids = np.concatenate(
        [np.full(len(c), i, dtype=np.int64) for i, c in enumerate(per_tube_cells)]
    )
    order = np.argsort(cells, kind="stable")
    return cells[order], ids[order]


def multilinear_kakeya_integral(families, delta: float, h: float | None = None):
    """Grid value of the (k+1)-linear tube integral with wedge weights.

    families: k+1 lists of StraightTube with common radius delta.  Returns
    (integral, normalized) where normalized is the integral divided by
    delta^d (prod #T_j)^{1/k}.
    """
    if h is None:
        h = delta / 4.0
    k = len(families) - 1
    if k < 1:
        raise ValidationError("need at least two tube families")
    d = len(families[0][0].center)
    M = check_budget(d, h)

    # tubes sharing a direction contribute identically to every tuple, so
    # aggregate counts per distinct direction before looping over tuples
    fam_cells = []
    fam_dirids = []
    fam_dirs = []
    for tubes in families:
        dirs = np.array([t.direction for t in tubes])
        uniq, dir_of = np.unique(np.round(dirs, 12), axis=0, return_inverse=True)
        cells, ids = _group_by_cell([straight_tube_cells(t, h, M) for t in tubes])
        fam_cells.append(cells)
        fam_dirids.append(dir_of[ids])
        fam_dirs.append(uniq / np.linalg.norm(uniq, axis=1, keepdims=True))

    # cells present in every family
    common = np.unique(fam_cells[0])
    for fc in fam_cells[1:]:
        common = np.intersect1d(common, fc, assume_unique=False)

    wedge_cache: dict = {}

    def wedge_of(combo):
        w = wedge_cache.get(combo)
        if w is None:
            w = wedge_volume(np.array([fam_dirs[j][g] for j, g in enumerate(combo)]))
            wedge_cache[combo] = w
        return w

    total = 0.0
    for cell in common:
        groups = []
        for fc, fg, fd in zip(fam_cells, fam_dirids, fam_dirs):
            a = np.searchsorted(fc, cell, side="left")
            b = np.searchsorted(fc, cell, side="right")
            gids, gcounts = np.unique(fg[a:b], return_counts=True)
            groups.append(list(zip(gids, gcounts)))
        s = 0.0
        for combo in itertools.product(*groups):
            mult = 1.0
            for _, cnt in combo:
                mult *= cnt
            s += mult * wedge_of(tuple(int(g) for g, _ in combo))
        total += s ** (1.0 / k)
    integral = total * h**d

    norm = delta**d * float(np.prod([len(t) for t in families])) ** (1.0 / k)
    return integral, integral / norm


def monte_carlo_core_volume(families, delta: float, n_samples: int, seed: int = 0):
    """Independent oracle for the integral: sample the bounding box of the
    common intersection and average the exact integrand."""
    rng = np.random.default_rng(seed)
    d = len(families[0][0].center)
    k = len(families) - 1
    # the integrand vanishes off every family's support: sample only the
    # intersection of the per-family bounding boxes
    lo = np.full(d, -1.0)
    hi = np.full(d, 1.0)
    for tubes in families:
        flo = np.full(d, np.inf)
        fhi = np.full(d, -np.inf)
        for t in tubes:
            half = abs(t.length / 2.0) * np.abs(t.direction) + t.radius
            flo = np.minimum(flo, t.center - half)
            fhi = np.maximum(fhi, t.center + half)
        lo = np.maximum(lo, flo)
        hi = np.minimum(hi, fhi)
    if np.any(hi <= lo):
        return 0.0
    vol_box = float(np.prod(hi - lo))
    pts = lo + rng.random((n_samples, d)) * (hi - lo)

    def members(tubes, pts):
        out = []
        for t in tubes:
            rel = pts - t.center
            s = np.clip(rel @ t.direction, -t.length / 2.0, t.length / 2.0)
            dist2 = ((rel - np.multiply.outer(s, t.direction)) ** 2).sum(axis=1)
            out.append(dist2 <= t.radius**2)
        return out

    fam_members = [members(tubes, pts) for tubes in families]
    vals = np.zeros(n_samples)
    for combo in itertools.product(*[range(len(t)) for t in families]):
        w = wedge_volume(np.array([families[j][i].direction for j, i in enumerate(combo)]))
        if w <= 0:
            continue
        joint = np.ones(n_samples, dtype=bool)
        for j, i in enumerate(combo):
            joint &= fam_members[j][i]
        vals += w * joint
    return float((vals ** (1.0 / k)).mean() * vol_box)


# ---------------------------------------------------------------------------
# Curved-to-straight step and the scale recursion


@dataclass
class TransversalTuple:
    """k+1 direction caps certified against the wedge floor rho^k / 2.

    Certification happens at the cap centers with an explicit correction of
    (k+1) * cap_radius subtracted, which covers every point selection from
    the caps.
    """

    directions: np.ndarray  # (k+1, d) cap centers
    rho: float
    cap_radius: float = 0.0

    def __post_init__(self):
        self.directions = np.atleast_2d(np.asarray(self.directions, dtype=float))

    @property
    def k(self) -> int:
        return len(self.directions) - 1

    @property
    def floor(self) -> float:
        return self.rho**self.k / 2.0

    def certify(self) -> bool:
        """Center wedge minus the cap-radius correction clears the floor."""
        w = wedge_volume(self.directions)
        return w - (self.k + 1) * self.cap_radius >= self.floor


@dataclass
class StraightenedCube:
    center: np.ndarray
    side: float
    tubes: list  # (family_index, curve_index, StraightTube)


def cube_count(delta: float, d: int) -> int:
    return int(math.ceil(delta**-0.5)) ** d


def curved_mlk_step(families, delta: float):
    """Straighten curved tubes inside each cube of side 2 sqrt(delta).

    families: list of CurveFamily (or a single one).  Inside a cube Q with
    center slice c_Q, every curve whose tube can meet Q is replaced by the
    straight tube of radius (1+C) delta around its tangent line at c_Q.
    Returns (list of StraightenedCube for nonempty cubes, n_cubes_total,
    side).
    """
    if isinstance(families, CurveFamily):
        families = [families]
    if delta >= math.exp(-2):
        raise ValidationError("step requires delta < e^-2")
    d = families[0].d
    side = 2.0 * math.sqrt(delta)
    n_axis = int(math.ceil(delta**-0.5))
    total = n_axis**d
    centers_1d = -1.0 + (np.arange(n_axis) + 0.5) * (2.0 / n_axis)
    # cube side used for placement is 2/n_axis >= side when delta^{-1/2} is
    # not an integer; the cover stays a partition of [-1,1]^d
    place_side = 2.0 / n_axis

    out = []
    seg_half = 2.0 * math.sqrt(d * delta)
    for idx in itertools.product(range(n_axis), repeat=d):
        center = centers_1d[list(idx)]
        c_q = center[-1]
        entry = []
        for fi, fam in enumerate(families):
            reach = place_side / 2.0 + (1.0 + fam.C) * delta + fam.C * place_side
            for ci in range(len(fam)):
                p = np.asarray(fam.profile(fam.params[ci], c_q), dtype=float).ravel()
                if np.max(np.abs(p - center[: d - 1])) > reach:
                    continue
                e = tangent_by_index(fam, ci, np.asarray(c_q))
                tube = StraightTube(
                    center=np.concatenate([p, [c_q]]),
                    direction=e,
                    length=2 * seg_half,
                    radius=(1.0 + fam.C) * delta,
                )
                entry.append((fi, ci, tube))
        if entry:
            out.append(StraightenedCube(center=center, side=place_side, tubes=entry))
    return out, total, place_side


def check_wedge_floor(families, rho: float, n_tuples: int = 200, n_c: int = 5, seed: int = 0):
    """Sampled certification of the transversal hypothesis.

    Raises TransversalityError naming the first sampled tuple whose tangent
    wedge falls below rho^k.
    """
    k = len(families) - 1
    rng = np.random.default_rng(seed)
    cs = np.linspace(-1.0, 1.0, n_c)
    sizes = [len(f) for f in families]
    if np.prod(sizes) <= n_tuples:
        combos = list(itertools.product(*[range(s) for s in sizes]))
    else:
        combos = [tuple(int(rng.integers(0, s)) for s in sizes) for _ in range(n_tuples)]
    floor = rho**k
    worst = math.inf
    for combo in combos:
        tangents = [tangent_by_index(families[j], combo[j], cs) for j in range(k + 1)]
        for ic in range(len(cs)):
            w = wedge_volume(np.array([t[ic] for t in tangents]))
            worst = min(worst, w)
            if w < floor:
                raise TransversalityError(
                    f"tuple {combo} at c={cs[ic]:.3f} has wedge {w:.3g} < rho^k={floor:.3g}",
                    tuple_indices=combo,
                )
    return worst


@dataclass
class RecursionTrace:
    rho: float
    scales: list = field(default_factory=list)
    constants: list = field(default_factory=list)          # direct curved integrals
    straight_constants: list = field(default_factory=list)  # per-cube straightened bound
    wedge_floor: float = 0.0
    depth_bound: int = 0

    @property
    def depth(self) -> int:
        return len(self.scales)


def _curved_joint_integral(families, delta: float, h: float):
    """Integral of (prod_j sum_y chi_{T_y^delta})^{1/k} dx on the shared grid."""
    k = len(families) - 1
    d = families[0].d
    grids = [rasterize_tubes(f, None, delta, h) for f in families]
    common = grids[0].cells
    for g in grids[1:]:
        common = np.intersect1d(common, g.cells, assume_unique=True)
    if not len(common):
        return 0.0, grids
    prod = np.ones(len(common), dtype=float)
    for g in grids:
        pos = np.searchsorted(g.cells, common)
        prod *= g.counts[pos].astype(float)
    return float((prod ** (1.0 / k)).sum() * h**d), grids


def _straightened_constant(families, delta: float, h: float, k: int):
    """Sum over occupied cubes of the per-cube integral with straightened
    tubes, normalized like the curved constant."""
    d = families[0].d
    M = check_budget(d, h)
    cubes, _, side = curved_mlk_step(families, delta)
    cells_per_cube = max(1, int(round(side / h)))
    total = 0.0
    for cube in cubes:
        per_family: dict = {fi: [] for fi in range(len(families))}
        for fi, ci, tube in cube.tubes:
            per_family[fi].append((ci, tube))
        if any(not per_family[fi] for fi in per_family):
            continue
        lo_idx = np.floor((cube.center - side / 2.0 + 1.0) / h + 1e-9).astype(np.int64)
        hi_idx = lo_idx + cells_per_cube
        counts = {}
        for fi, pairs in per_family.items():
            seen: dict = {}
            for ci, tube in pairs:
                cells = straight_tube_cells(tube, h, M)
                if not len(cells):
                    continue
                coords = np.empty((len(cells), d), dtype=np.int64)
                rem = cells.copy()
                for ax in range(d - 1, -1, -1):
                    coords[:, ax] = rem % M
                    rem //= M
                inside = np.all((coords >= lo_idx) & (coords < hi_idx), axis=1)
                key_cells = np.unique(cells[inside])
                prev = seen.get(ci)
                seen[ci] = key_cells if prev is None else np.union1d(prev, key_cells)
            fam_cells = np.concatenate([v for v in seen.values()]) if seen else np.empty(0, np.int64)
            if len(fam_cells):
                u, c = np.unique(fam_cells, return_counts=True)
                counts[fi] = (u, c)
        if len(counts) < len(families):
            continue
        common = counts[0][0]
        for fi in range(1, len(families)):
            common = np.intersect1d(common, counts[fi][0], assume_unique=True)
        if not len(common):
            continue
        prod = np.ones(len(common))
        for fi in range(len(families)):
            u, c = counts[fi]
            prod *= c[np.searchsorted(u, common)].astype(float)
        total += float((prod ** (1.0 / k)).sum() * h**d)
    norm = delta**d * float(np.prod([len(f) for f in families])) ** (1.0 / k)
    return total / norm


def curved_mlk_recursion(
    families,
    delta: float,
    rho: float,
    h_ratio: float = 4.0,
    c_dk: float = 1.0,
    seed: int = 0,
    with_straightened: bool = True,
) -> RecursionTrace:
    """Climb the scale ladder delta -> (10+C) sqrt(delta) -> ... toward 1.

    At each level the direct joint integral and (optionally) its per-cube
    straightened upper bound are measured and normalized; the top-level
    constant is checked against the (C' / rho)^{2 log log(1/delta)} budget
    with C' = c_dk (10+C)^{2d}.
    """
    if delta >= math.exp(-2):
        raise ValidationError("recursion requires delta < e^-2")
    k = len(families) - 1
    d = families[0].d
    C = max(f.C for f in families)
    trace = RecursionTrace(rho=rho)
    trace.wedge_floor = check_wedge_floor(families, rho, seed=seed)
    loglog = math.log(math.log(1.0 / delta))
    trace.depth_bound = int(math.floor(2 * loglog)) + 1

    scale = delta
    while True:
        h = dyadic_below(scale / h_ratio)
        integral, _ = _curved_joint_integral(families, scale, h)
        norm = scale**d * float(np.prod([len(f) for f in families])) ** (1.0 / k)
        trace.scales.append(scale)
        trace.constants.append(integral / norm)
        if with_straightened and scale < math.exp(-2):
            trace.straight_constants.append(_straightened_constant(families, scale, h, k))
        else:
            trace.straight_constants.append(float("nan"))
        if scale >= math.exp(-2) or len(trace.scales) >= trace.depth_bound:
            break
        nxt = min(1.0, (10.0 + C) * math.sqrt(scale))
        if nxt <= scale:
            break
        scale = nxt

    c_prime = c_dk * (10.0 + C) ** (2 * d)
    budget = (c_prime / rho) ** (2 * loglog)
    trace_top = trace.constants[0]
    if trace_top > budget:
        raise TransversalityError(
            f"measured constant {trace_top:.3g} exceeds the recursion budget {budget:.3g}"
        )
    return trace


# ---------------------------------------------------------------------------
# Curved Kakeya ratio and exponent fits


def curved_kakeya_ratio(
    family: CurveFamily,
    params,
    delta: float,
    k: int,
    beta: float,
    h: float | None = None,
):
    """Ratio of ||sum chi_T||_{L^p} to delta^{(1-k)/p'} (sum |T_y|)^{1/p}.

    p' = k + beta and p is its dual; p = inf at p' = 1, where the numerator
    degenerates to the max overlap count and the volume factor to 1.
    """
    if not 0 <= beta <= 1:
        raise ValidationError(f"beta must lie in [0,1], got {beta}")
    if not 1 <= k <= family.d - 1:
        raise ValidationError(f"k must lie in [1, d-1], got k={k}, d={family.d}")
    p_prime = k + beta
    grid = rasterize_tubes(family, params, delta, h)
    total_measure = grid.total_mass()  # = sum_y |T_y| by additivity of counts
    if p_prime == 1.0:
        p = math.inf
        numer = float(grid.max_count())
        vol_factor = 1.0
    else:
        p = p_prime / (p_prime - 1.0)
        numer = lp_norm(grid, p)
        vol_factor = total_measure ** (1.0 / p)
    delta_power = delta ** ((1.0 - k) / p_prime)
    denom = delta_power * vol_factor
    ratio = numer / denom if denom > 0 else float("nan")
    components = {
        "p": p,
        "p_prime": p_prime,
        "lp_norm": numer,
        "total_measure": total_measure,
        "delta_power": delta_power,
        "max_count": grid.max_count(),
        "n_tubes": grid.meta.get("n_tubes"),
    }
    return ratio, components


@dataclass
class FitResult:
    slope: float
    intercept: float
    r2: float
    degenerate: bool = False


def exponent_fit(records) -> FitResult:
    """Least squares of log(ratio) against log(1/delta).

    The slope is the empirical epsilon-loss of the family of estimates.
    """
    pts = [(float(d), float(r)) for d, r in records]
    deltas = sorted({p[0] for p in pts})
    if len(deltas) < 3:
        raise InsufficientDataError(f"need >= 3 distinct scales, got {len(deltas)}")
    x = np.log([1.0 / p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return FitResult(slope=0.0, intercept=float(y.mean()), r2=float("nan"), degenerate=True)
    r2 = 1.0 - float((resid**2).sum()) / ss_tot
    return FitResult(slope=float(slope), intercept=float(intercept), r2=r2)
