"""The three constant-curvature extremal constructions.

Each builds, at a chosen fractal exponent beta, a sampled invariant set E
in the unit tangent bundle together with its base projection: a union of
parallel k-planes in flat space, a union of vertical k-planes in the
upper-half-space model, and on the sphere a pencil of rotated great
k-spheres all sharing a fixed S^{k-1}.  The base should measure k + beta
while E measures 2(k-1) + 1 + beta.

Base clouds are sampled on per-leaf grids; the higher-dimensional E clouds
are sampled uniformly at random (seeded), which avoids the lattice
correlations that bias box counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .deltasets import cantor_parameter_set
from .errors import ValidationError


def fibonacci_sphere(n: int, d: int) -> np.ndarray:
    """Deterministic quasi-uniform sample of S^{d-1} (d = 2 or 3)."""
    if d == 2:
        ang = 2 * math.pi * np.arange(n) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if d == 3:
        i = np.arange(n) + 0.5
        phi = math.pi * (1 + math.sqrt(5)) * i
        z = 1 - 2 * i / n
        r = np.sqrt(np.maximum(0.0, 1 - z * z))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValidationError("fibonacci_sphere supports S^1 and S^2 only")


def _random_unit(rng, n: int, dim: int) -> np.ndarray:
    if dim == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _check_dk(d: int, k: int):
    if not 1 <= k <= d - 1:
        raise ValidationError(f"need 1 <= k <= d-1, got k={k}, d={d}")


# ---------------------------------------------------------------------------
# Sphere


def sphere_rotation(theta: float, d: int, k: int) -> np.ndarray:
    """Block rotation Id_k + g_theta on R^{d+1}.

    g_theta rotates coordinates k+1 and k+2 (1-indexed) by theta and fixes
    coordinates k+3 .. d+1.
    """
    _check_dk(d, k)
    if not -math.pi / 6 - 1e-12 <= theta <= math.pi / 6 + 1e-12:
        raise ValidationError("theta must lie in [-pi/6, pi/6]")
    rot = np.eye(d + 1)
    c, s = math.cos(theta), math.sin(theta)
    rot[k, k] = c
    rot[k, k + 1] = -s
    rot[k + 1, k] = s
    rot[k + 1, k + 1] = c
    return rot


@dataclass
class SphereExample:
    d: int
    k: int
    beta: float
    thetas: np.ndarray
    base_sphere: np.ndarray       # samples of S^k in R^{d+1}
    projection: np.ndarray        # samples of pi(E) in R^{d+1}
    lift: np.ndarray              # samples of E in R^{2(d+1)}
    rotations: list = field(default_factory=list)


def sphere_example(d: int, k: int, beta: float, depth: int = 6,
                   samples: int = 400, lift_samples: int | None = None,
                   seed: int = 0) -> SphereExample:
    """Pencil of rotated great k-spheres through a common S^{k-1}.

    samples is the per-rotation size of the base-sphere cloud; the E cloud
    draws lift_samples random (point, tangent) pairs spread over the
    rotations.
    """
    _check_dk(d, k)
    if lift_samples is None:
        lift_samples = samples
    rng = np.random.default_rng(seed)
    thetas = cantor_parameter_set(beta, depth).ravel() * (math.pi / 3) - math.pi / 6
    per_theta_base = max(64, samples // len(thetas))
    base = np.zeros((per_theta_base, d + 1))
    base[:, : k + 1] = fibonacci_sphere(per_theta_base, k + 1)

    rotations = [sphere_rotation(t, d, k) for t in thetas]
    # fresh random points per rotation: rotating one fixed cloud would leave
    # correlated gaps in the union
    proj_rows = []
    for rot in rotations:
        pts = np.zeros((per_theta_base, d + 1))
        pts[:, : k + 1] = _random_unit(rng, per_theta_base, k + 1)
        proj_rows.append(pts @ rot.T)

    per_theta = max(1, lift_samples // len(thetas))
    lift_rows = []
    for rot in rotations:
        pts = np.zeros((per_theta, d + 1))
        pts[:, : k + 1] = _random_unit(rng, per_theta, k + 1)
        # random unit tangents to S^k at each point, inside the same block
        raw = rng.normal(size=(per_theta, k + 1))
        raw -= np.einsum("ij,ij->i", raw, pts[:, : k + 1])[:, None] * pts[:, : k + 1]
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        tang = np.zeros((per_theta, d + 1))
        tang[:, : k + 1] = raw
        lift_rows.append(np.column_stack([pts @ rot.T, tang @ rot.T]))
    return SphereExample(
        d=d,
        k=k,
        beta=beta,
        thetas=thetas,
        base_sphere=base,
        projection=np.vstack(proj_rows),
        lift=np.vstack(lift_rows),
        rotations=rotations,
    )


# ---------------------------------------------------------------------------
# Hyperbolic upper half-space


def hyperbolic_example(d: int, k: int, beta: float, depth: int = 6,
                       samples: int = 2000, lift_samples: int | None = None,
                       seed: int = 0):
    """Geodesics in parallel vertical k-planes orthogonal to the boundary.

    Planes are {t} x R^{k-1} x R_+ in coordinates (t, y, h), offset by a
    Cantor set in the first coordinate (remaining coordinates stay zero).
    Geodesics inside a plane are vertical lines and semicircles centered on
    the boundary {x_d = 0}.  E samples carry euclidean-normalized tangents:
    this is a chart of the unit tangent bundle that stays bi-Lipschitz down
    to small heights (the metric-normalized tangent block collapses like h
    and would hide the direction dimension from desk-scale box counts).

    Returns (E sample (N, 2d), base sample (N, d), residuals dict).
    """
    _check_dk(d, k)
    if lift_samples is None:
        lift_samples = samples
    rng = np.random.default_rng(seed)
    offsets = cantor_parameter_set(beta, depth).ravel()
    n_off = len(offsets)

    base_t = offsets[rng.integers(0, n_off, samples)]
    base = np.zeros((samples, d))
    base[:, 0] = base_t
    if k > 1:
        base[:, 1:k] = rng.uniform(-1.0, 1.0, size=(samples, k - 1))
    base[:, d - 1] = rng.uniform(0.05, 1.0, samples)

    lift_t = offsets[rng.integers(0, n_off, lift_samples)]
    pts = np.zeros((lift_samples, d))
    tang = np.zeros((lift_samples, d))
    pts[:, 0] = lift_t
    resid = 0.0
    if k == 1:
        # each plane is a vertical line; the only geodesic is the line itself
        hs = rng.uniform(0.05, 1.0, lift_samples)
        pts[:, d - 1] = hs
        tang[:, d - 1] = rng.choice([-1.0, 1.0], lift_samples)
    else:
        # every (point, in-plane direction) lies on a unique geodesic of the
        # plane, so the lift of all its geodesics is the plane's full unit
        # tangent bundle: sample it directly as a product
        pts[:, 1:k] = rng.uniform(-1.0, 1.0, size=(lift_samples, k - 1))
        pts[:, d - 1] = rng.uniform(0.05, 1.0, lift_samples)
        v = _random_unit(rng, lift_samples, k)
        tang[:, 1:k] = v[:, : k - 1]
        tang[:, d - 1] = v[:, k - 1]
        # construction invariant on a parametrized sub-sample: geodesics are
        # semicircles centered on the boundary
        n_check = min(10000, lift_samples)
        centers = rng.uniform(-0.6, 0.6, size=(n_check, k - 1))
        u = _random_unit(rng, n_check, k - 1)
        radii = rng.uniform(0.2, 1.2, n_check)
        phis = rng.uniform(0.15, math.pi - 0.15, n_check)
        y = centers + radii[:, None] * np.cos(phis)[:, None] * u
        h = radii * np.sin(phis)
        resid = float(
            np.abs(np.linalg.norm(np.column_stack([y - centers, h]), axis=1) - radii).max()
        )
    lift = np.column_stack([pts, tang])
    return lift, base, {"semicircle_residual": resid}


# ---------------------------------------------------------------------------
# Euclidean space


def euclidean_example(d: int, k: int, beta: float, depth: int = 6,
                      samples: int = 2000, lift_samples: int | None = None,
                      seed: int = 0):
    """All lines inside a Cantor(beta) union of parallel k-planes.

    Planes are R^k x {t w} with w the (k+1)-st coordinate direction.
    Returns (E sample (N, 2d) of (point, direction) rows, base sample
    (N, d), membership residual).
    """
    _check_dk(d, k)
    if lift_samples is None:
        lift_samples = samples
    rng = np.random.default_rng(seed)
    offsets = cantor_parameter_set(beta, depth).ravel()
    n_off = len(offsets)

    base = np.zeros((samples, d))
    base[:, :k] = rng.uniform(-1.0, 1.0, size=(samples, k))
    if k < d:
        base[:, k] = offsets[rng.integers(0, n_off, samples)]

    pts = np.zeros((lift_samples, d))
    pts[:, :k] = rng.uniform(-1.0, 1.0, size=(lift_samples, k))
    if k < d:
        pts[:, k] = offsets[rng.integers(0, n_off, lift_samples)]
    dirs = np.zeros((lift_samples, d))
    dirs[:, :k] = _random_unit(rng, lift_samples, k)
    lift = np.column_stack([pts, dirs])

    # membership: base points of lines carry an offset-set coordinate and a
    # direction inside the plane
    residual = 0.0
    if k < d:
        sorted_off = np.sort(offsets)
        vals = lift[:, k]
        pos = np.clip(np.searchsorted(sorted_off, vals), 1, len(sorted_off) - 1)
        off_dist = np.minimum(
            np.abs(vals - sorted_off[pos - 1]), np.abs(vals - sorted_off[pos])
        )
        residual = max(float(off_dist.max()), float(np.abs(lift[:, d + k:]).max()))
    return lift, base, residual
