"""Curve families parametrized by the last coordinate.

A family is a finite set of parameters y = (y1, y2) in [-1,1]^{2(d-1)}
together with a profile map P_y(c) in R^{d-1}, c in [-1,1], so that the
curve through (y1, -1) and (y2, 1) is c -> (P_y(c), c).  The module also
builds such families by geodesic shooting in a metric chart, estimates the
regularity (C^2) and transversality constants, and applies the anisotropic
parabolic rescaling used for the narrow-slab induction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import RescaleError, UnknownParameterError, ValidationError

# Finite-difference steps: first derivative trades truncation against
# rounding at ~1e-4, the second derivative needs a coarser step.
H_FD1 = 1e-4
H_FD2 = 1e-3

PARAM_MATCH_TOL = 1e-9


@dataclass
class CurveFamily:
    """A finite family of last-coordinate-parametrized curves.

    params has one row per curve: (y1, y2) concatenated, each in R^{d-1}.
    profile(y_row, c) evaluates P_y(c); c may be a scalar or an array, in
    which case the result has shape (len(c), d-1).  profile_dc, when given,
    is the exact c-derivative with the same calling convention.
    """

    d: int
    params: np.ndarray
    profile: Callable
    C: float = 1.0
    m: Optional[float] = None
    profile_dc: Optional[Callable] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.atleast_2d(np.asarray(self.params, dtype=float))
        if self.d < 2:
            raise ValidationError(f"ambient dimension must be >= 2, got {self.d}")
        if self.params.shape[1] != 2 * (self.d - 1):
            raise ValidationError(
                f"params must have 2*(d-1)={2 * (self.d - 1)} columns, "
                f"got {self.params.shape[1]}"
            )
        if self.C < 1:
            raise ValidationError(f"regularity bound C must be >= 1, got {self.C}")

    def __len__(self):
        return len(self.params)

    def param_index(self, y) -> int:
        y = np.asarray(y, dtype=float).ravel()
        if y.shape != (self.params.shape[1],):
            raise UnknownParameterError(f"parameter shape {y.shape} does not match family")
        dists = np.max(np.abs(self.params - y), axis=1)
        i = int(np.argmin(dists))
        if dists[i] > PARAM_MATCH_TOL:
            raise UnknownParameterError(f"parameter {y} not in family (closest off by {dists[i]:.3g})")
        return i

    def endpoints(self, i: int):
        n = self.d - 1
        return self.params[i, :n], self.params[i, n:]

    def check_endpoints(self, tol: float = 1e-7) -> float:
        """Worst deviation of P_y(-1), P_y(1) from the stored (y1, y2)."""
        worst = 0.0
        for i, y_row in enumerate(self.params):
            y1, y2 = self.endpoints(i)
            p_lo = np.asarray(self.profile(y_row, -1.0), dtype=float).ravel()
            p_hi = np.asarray(self.profile(y_row, 1.0), dtype=float).ravel()
            worst = max(worst, float(np.abs(p_lo - y1).max()), float(np.abs(p_hi - y2).max()))
        if worst > tol:
            raise ValidationError(f"endpoint condition violated by {worst:.3g}")
        return worst


def _check_c(c):
    c_arr = np.asarray(c, dtype=float)
    if np.any(c_arr < -1 - 1e-12) or np.any(c_arr > 1 + 1e-12):
        raise ValidationError(f"curve parameter c={c} outside [-1, 1]")
    return c_arr


def eval_curve(family: CurveFamily, y, c):
    """Point (P_y(c), c) on the curve indexed by y."""
    c_arr = _check_c(c)
    i = family.param_index(y)
    p = np.asarray(family.profile(family.params[i], c_arr), dtype=float)
    if c_arr.ndim == 0:
        return np.concatenate([np.atleast_1d(p), [float(c_arr)]])
    return np.column_stack([p.reshape(len(c_arr), family.d - 1), c_arr])


def _profile_dc(family: CurveFamily, y_row, c_arr, h=H_FD1):
    """First c-derivative of the profile, exact when available.

    Central differences with the stencil shifted inward near c = +-1 so the
    profile is never evaluated outside its domain.
    """
    if family.profile_dc is not None:
        out = np.asarray(family.profile_dc(y_row, c_arr), dtype=float)
        return out.reshape(np.shape(c_arr) + (family.d - 1,)) if np.ndim(c_arr) else out
    c_arr = np.asarray(c_arr, dtype=float)
    scalar = c_arr.ndim == 0
    cc = np.atleast_1d(c_arr)
    # Stencil center shifted inward near +-1 so the profile is never sampled
    # outside its domain; the Taylor term (c - t) f''(t) restores O(h^2)
    # accuracy at the endpoints.
    t = np.clip(cc, -1 + h, 1 - h)
    mid = np.asarray(family.profile(y_row, t), dtype=float).reshape(len(cc), -1)
    hi = np.asarray(family.profile(y_row, t + h), dtype=float).reshape(len(cc), -1)
    lo = np.asarray(family.profile(y_row, t - h), dtype=float).reshape(len(cc), -1)
    out = (hi - lo) / (2 * h) + ((cc - t) / (h * h))[:, None] * (hi - 2 * mid + lo)
    return out[0] if scalar else out


def _profile_d2c(family: CurveFamily, y_row, c_arr, h=H_FD2):
    c_arr = np.atleast_1d(np.asarray(c_arr, dtype=float))
    center = np.clip(c_arr, -1 + h, 1 - h)
    mid = np.asarray(family.profile(y_row, center), dtype=float).reshape(len(c_arr), -1)
    hi = np.asarray(family.profile(y_row, center + h), dtype=float).reshape(len(c_arr), -1)
    lo = np.asarray(family.profile(y_row, center - h), dtype=float).reshape(len(c_arr), -1)
    return (hi - 2 * mid + lo) / (h * h)


def tangent_direction(family: CurveFamily, y, c):
    """Unit tangent e_y(c) = (P'_y(c), 1) / |(P'_y(c), 1)|.

    The last component is always positive: curves are graphs over the last
    coordinate.
    """
    c_arr = _check_c(c)
    i = family.param_index(y)
    return tangent_by_index(family, i, c_arr)


def tangent_by_index(family: CurveFamily, i: int, c_arr):
    c_arr = np.asarray(c_arr, dtype=float)
    scalar = c_arr.ndim == 0
    cc = np.atleast_1d(c_arr)
    dp = _profile_dc(family, family.params[i], cc).reshape(len(cc), family.d - 1)
    vec = np.column_stack([dp, np.ones(len(cc))])
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    return vec[0] if scalar else vec


def regularity_estimate(family: CurveFamily, c_grid_size: int = 65) -> float:
    """Sampled sup over (y, c) of |P| + |P'| + |P''| (Euclidean norms)."""
    if c_grid_size < 3:
        raise ValidationError("c_grid_size must be >= 3")
    cs = np.linspace(-1.0, 1.0, c_grid_size)
    worst = 0.0
    for y_row in family.params:
        p = np.asarray(family.profile(y_row, cs), dtype=float).reshape(len(cs), -1)
        dp = _profile_dc(family, y_row, cs)
        d2p = _profile_d2c(family, y_row, cs)
        total = (
            np.linalg.norm(p, axis=1)
            + np.linalg.norm(dp, axis=1)
            + np.linalg.norm(d2p, axis=1)
        )
        worst = max(worst, float(total.max()))
    return worst


def transversality_estimate(
    family: CurveFamily,
    pair_samples: int = 1000,
    c_samples: int = 16,
    rng_seed: int = 0,
) -> float:
    """Sampled transversality constant m_hat.

    For curve pairs (y, y') and heights (c, c') the separation
    D(c) = |P_y(c) - P_{y'}(c)| + |e_y(c) - e_{y'}(c)| is compared across
    heights; m_hat is the smallest sampled ratio D(c)/D(c'), evaluating each
    sampled (c, c') in both orders so m_hat <= 1 by construction.  Pairs
    with D(c') < 1e-12 are skipped.  Returns nan when every sampled pair is
    degenerate (identical curves).
    """
    n = len(family)
    if n < 2:
        raise ValidationError("transversality needs at least two curves")
    rng = np.random.default_rng(rng_seed)
    cs = np.linspace(-1.0, 1.0, c_samples)

    profiles = np.empty((n, c_samples, family.d - 1))
    tangents = np.empty((n, c_samples, family.d))
    for i in range(n):
        profiles[i] = np.asarray(
            family.profile(family.params[i], cs), dtype=float
        ).reshape(c_samples, -1)
        tangents[i] = tangent_by_index(family, i, cs)

    m_hat = np.inf
    for _ in range(pair_samples):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        if j >= i:
            j += 1
        sep = np.linalg.norm(profiles[i] - profiles[j], axis=1) + np.linalg.norm(
            tangents[i] - tangents[j], axis=1
        )
        a, b = rng.integers(0, c_samples, size=2)
        da, db = sep[a], sep[b]
        if da >= 1e-12 and db >= 1e-12:
            m_hat = min(m_hat, da / db, db / da)
    return float(m_hat) if np.isfinite(m_hat) else float("nan")


# ---------------------------------------------------------------------------
# Metric charts and geodesic shooting


@dataclass
class MetricChart:
    """Riemannian metric on [-1,1]^d given by a coefficient callable.

    g(x) returns the (d, d) symmetric positive definite matrix at x.
    christoffel(x), when provided, returns Gamma[k, i, j]; otherwise the
    symbols are derived from g by central differences at step h_metric.
    """

    d: int
    g: Callable
    christoffel: Optional[Callable] = None
    h_metric: float = 1e-5

    def gamma(self, x):
        if self.christoffel is not None:
            return np.asarray(self.christoffel(x), dtype=float)
        d, h = self.d, self.h_metric
        dg = np.empty((d, d, d))
        for l in range(d):
            e = np.zeros(d)
            e[l] = h
            dg[l] = (np.asarray(self.g(x + e)) - np.asarray(self.g(x - e))) / (2 * h)
        ginv = np.linalg.inv(np.asarray(self.g(x), dtype=float))
        # Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)
        bracket = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
        return 0.5 * np.einsum("kl,lij->kij", ginv, bracket)

    def validate(self, sample_grid: int = 5, lambda_min: float = 1e-8):
        axes = [np.linspace(-1, 1, sample_grid)] * self.d
        for x in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d):
            gx = np.asarray(self.g(x), dtype=float)
            if not np.allclose(gx, gx.T, atol=1e-10):
                raise ValidationError(f"metric not symmetric at {x}")
            if np.linalg.eigvalsh(gx).min() < lambda_min:
                raise ValidationError(f"metric not positive definite at {x}")


def euclidean_chart(d: int) -> MetricChart:
    eye = np.eye(d)
    zero = np.zeros((d, d, d))
    return MetricChart(d, lambda x: eye, christoffel=lambda x: zero)


def hyperbolic_chart(d: int, shift: float = 2.0) -> MetricChart:
    """Upper-half-space metric g = I / (x_d + shift)^2 on the chart cube.

    The shift keeps the chart away from the ideal boundary {x_d = -shift}.
    Conformal factor phi = -log(x_d + shift) gives closed-form symbols.
    """
    if shift <= 1:
        raise ValidationError("shift must exceed 1 so the chart avoids the boundary")

    def g(x):
        return np.eye(d) / (x[d - 1] + shift) ** 2

    def christoffel(x):
        w = x[d - 1] + shift
        gam = np.zeros((d, d, d))
        for i in range(d):
            gam[i, i, d - 1] -= 1.0 / w
            gam[i, d - 1, i] -= 1.0 / w
            gam[d - 1, i, i] += 1.0 / w
        return gam

    return MetricChart(d, g, christoffel=christoffel)


def bump_chart(d: int, amplitude: float = 0.1, width: float = 2.0) -> MetricChart:
    """Conformal perturbation of the flat metric by a Gaussian bump."""

    def conf(x):
        return 1.0 + amplitude * np.exp(-width * float(np.dot(x, x)))

    def g(x):
        return conf(x) ** 2 * np.eye(d)

    def christoffel(x):
        c = conf(x)
        grad = -2.0 * width * (c - 1.0) * np.asarray(x, dtype=float)  # grad of conf
        dphi = grad / c  # phi = log conf
        # Gamma^k_ij = delta_ik dphi_j + delta_jk dphi_i - delta_ij dphi_k
        gam = np.zeros((d, d, d))
        for k in range(d):
            for i in range(d):
                gam[k, k, i] += dphi[i]
                gam[k, i, k] += dphi[i]
                gam[k, i, i] -= dphi[k]
        return gam

    return MetricChart(d, g, christoffel=christoffel)


def _geodesic_rhs(chart: MetricChart, x, v):
    gam = chart.gamma(x)
    return -np.einsum("kij,i,j->k", gam, v, v)


def _integrate_geodesic(chart: MetricChart, x0, v0, steps: int):
    """Fixed-step RK4 for x'' = -Gamma(x)(x', x') on t in [0, 1]."""
    dt = 1.0 / steps
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    traj = np.empty((steps + 1, chart.d))
    vels = np.empty((steps + 1, chart.d))
    traj[0], vels[0] = x, v
    for s in range(steps):
        k1x, k1v = v, _geodesic_rhs(chart, x, v)
        k2x, k2v = v + 0.5 * dt * k1v, _geodesic_rhs(chart, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
        k3x, k3v = v + 0.5 * dt * k2v, _geodesic_rhs(chart, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
        k4x, k4v = v + dt * k3v, _geodesic_rhs(chart, x + dt * k3x, v + dt * k3v)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        traj[s + 1], vels[s + 1] = x, v
    return traj, vels


class SampledProfile:
    """Profile backed by cubic splines through c-grid samples."""

    def __init__(self, c_grid, values_by_param):
        # values_by_param: param key (row bytes) -> (len(c_grid), d-1) array
        self.c_grid = np.asarray(c_grid, dtype=float)
        self._splines = {}
        for key, vals in values_by_param.items():
            self._splines[key] = CubicSpline(self.c_grid, np.asarray(vals), axis=0)

    @staticmethod
    def key(y_row) -> bytes:
        return np.round(np.asarray(y_row, dtype=float), 12).tobytes()

    def __call__(self, y_row, c):
        spline = self._splines.get(self.key(y_row))
        if spline is None:
            raise UnknownParameterError("no sampled profile stored for this parameter")
        return spline(np.clip(c, -1.0, 1.0))

    def derivative(self, y_row, c):
        spline = self._splines.get(self.key(y_row))
        if spline is None:
            raise UnknownParameterError("no sampled profile stored for this parameter")
        return spline(np.clip(c, -1.0, 1.0), 1)


def geodesic_chart_family(
    chart: MetricChart,
    endpoint_grid,
    shoot_tol: float = 1e-8,
    steps: int = 256,
    max_iter: int = 50,
    c_grid_size: int = 129,
    regularity_bound: Optional[float] = None,
) -> CurveFamily:
    """Solve the two-point geodesic boundary problem for every endpoint pair.

    Shooting: RK4 integration of the geodesic equation with Newton iteration
    on the initial velocity (forward-difference Jacobian).  Each solved
    trajectory must have strictly monotone last coordinate, which allows the
    reparametrization c -> (P_y(c), c); the per-family maximum of
    |d x_tilde / dt| / |d x_d / dt| is recorded as info["K_hat"].
    """
    endpoint_grid = np.atleast_2d(np.asarray(endpoint_grid, dtype=float))
    d = chart.d
    if endpoint_grid.shape[1] != 2 * (d - 1):
        raise ValidationError("endpoint rows must be (y1, y2) in R^{2(d-1)}")
    chart.validate()

    cs = np.linspace(-1.0, 1.0, c_grid_size)
    values = {}
    k_hat = 0.0
    residuals = []
    failures = []
    for y_row in endpoint_grid:
        y1, y2 = y_row[: d - 1], y_row[d - 1 :]
        p1 = np.concatenate([y1, [-1.0]])
        p2 = np.concatenate([y2, [1.0]])
        v = p2 - p1
        traj = vels = None
        res = np.inf
        for _ in range(max_iter):
            traj, vels = _integrate_geodesic(chart, p1, v, steps)
            miss = traj[-1] - p2
            res = float(np.linalg.norm(miss))
            if res <= shoot_tol:
                break
            jac = np.empty((d, d))
            dh = max(1e-7, 1e-7 * np.linalg.norm(v))
            for a in range(d):
                dv = np.zeros(d)
                dv[a] = dh
                traj_a, _ = _integrate_geodesic(chart, p1, v + dv, steps)
                jac[:, a] = (traj_a[-1] - traj[-1]) / dh
            try:
                v = v - np.linalg.solve(jac, miss)
            except np.linalg.LinAlgError:
                break
        if res > shoot_tol:
            failures.append((y_row, res))
            continue
        residuals.append(res)

        xd = traj[:, d - 1]
        dxd = vels[:, d - 1]
        if np.any(np.diff(xd) <= 0) or np.any(dxd <= 0):
            raise ValidationError(
                f"last coordinate not monotone along geodesic for y={y_row}: "
                "non-horizontal condition violated"
            )
        k_hat = max(
            k_hat,
            float((np.linalg.norm(vels[:, : d - 1], axis=1) / dxd).max()),
        )
        interp = CubicSpline(xd, traj[:, : d - 1], axis=0)
        values[SampledProfile.key(y_row)] = interp(cs)

    if failures:
        worst = max(f[1] for f in failures)
        raise ValidationError(
            f"shooting failed for {len(failures)} endpoint pair(s), "
            f"worst residual {worst:.3g} > tol {shoot_tol:.3g}"
        )

    profile = SampledProfile(cs, values)
    fam = CurveFamily(
        d=d,
        params=endpoint_grid,
        profile=profile,
        C=1.0,
        profile_dc=profile.derivative,
        info={"K_hat": k_hat, "max_residual": max(residuals), "c_grid_size": c_grid_size},
    )
    est = regularity_estimate(fam)
    fam.C = regularity_bound if regularity_bound is not None else max(1.0, 1.05 * est)
    fam.info["regularity_estimate"] = est
    return fam


# ---------------------------------------------------------------------------
# Parabolic rescaling


@dataclass
class RescaleContext:
    """Geometry of one narrow slab: interval, cap direction, and the maps.

    The slab is S_J = [-1,1]^{d-1} x J with J = [c_J - rho/(2000C),
    c_J + rho/(2000C)].  shear() fixes R^{d-1} x {0} pointwise and sends the
    cap direction to e_d; aniso() is the map e_j -> rho^{-2} e_j (j < d),
    e_d -> (2000 C / rho) e_d.  x_center recenters the tube axis so rescaled
    curves stay near the origin.
    """

    d: int
    c_J: float
    rho: float
    C: float
    e_tau: np.ndarray
    x_center: np.ndarray = None

    def __post_init__(self):
        self.e_tau = np.asarray(self.e_tau, dtype=float)
        if abs(np.linalg.norm(self.e_tau) - 1.0) > 1e-10:
            raise ValidationError("cap direction must be a unit vector")
        if self.e_tau[self.d - 1] <= 0:
            raise ValidationError("cap direction must have positive last component")
        if self.x_center is None:
            self.x_center = np.zeros(self.d - 1)
        self.x_center = np.asarray(self.x_center, dtype=float)

    @property
    def half_width(self) -> float:
        return self.rho / (2000.0 * self.C)

    @property
    def interval(self):
        return (self.c_J - self.half_width, self.c_J + self.half_width)

    def shear_matrix(self) -> np.ndarray:
        """Unique linear map fixing R^{d-1} x {0} with e_tau -> e_d."""
        d = self.d
        ed_comp = self.e_tau[d - 1]
        m = np.eye(d)
        m[: d - 1, d - 1] = -self.e_tau[: d - 1] / ed_comp
        m[d - 1, d - 1] = 1.0 / ed_comp
        return m

    def aniso_matrix(self) -> np.ndarray:
        m = np.eye(self.d) / self.rho**2
        m[self.d - 1, self.d - 1] = 2000.0 * self.C / self.rho
        return m

    def endpoint_extractor(self, family: CurveFamily, i: int):
        lo, hi = self.interval
        p_lo = np.asarray(family.profile(family.params[i], lo), dtype=float).ravel()
        p_hi = np.asarray(family.profile(family.params[i], hi), dtype=float).ravel()
        return p_lo, p_hi


def parabolic_rescale(family: CurveFamily, subset, ctx: RescaleContext, delta: float):
    """Blow a narrow slab of curves back up to unit scale.

    Curves are translated so the slab center sits at the origin, sheared so
    the cap direction becomes vertical, then stretched by rho^{-2}
    horizontally and 2000C/rho vertically.  Tubes of width delta map into
    tubes of width about delta/rho^2, which is the returned new scale.
    """
    new_delta = delta / ctx.rho**2
    if new_delta > 1.0:
        raise RescaleError(f"rescaled width {new_delta:.3g} exceeds unit scale")
    if delta >= ctx.rho**2:
        raise RescaleError("need delta < rho^2 for the rescale to refine")

    d = family.d
    subset_arr = np.asarray(subset)
    if subset_arr.dtype.kind in "iu":
        subset = [int(s) for s in np.atleast_1d(subset_arr)]
    else:
        subset = [family.param_index(y) for y in np.atleast_2d(subset_arr)]

    ed_comp = float(ctx.e_tau[d - 1])
    e_hor = ctx.e_tau[: d - 1]
    cap_r = ctx.rho
    for i in subset:
        e_here = tangent_by_index(family, i, np.asarray(ctx.c_J))
        if np.linalg.norm(e_here - ctx.e_tau) > 2 * cap_r + 1e-9:
            raise ValidationError(
                f"curve {i}: tangent at c_J not inside the doubled cap"
            )

    scale_c = ctx.half_width  # rho / 2000C
    rho2 = ctx.rho**2

    def make_profile(idx):
        y_row = family.params[idx]

        def prof(_z_row, c):
            c_arr = np.asarray(c, dtype=float)
            # pull back through the anisotropic map and the shear
            u = scale_c * c_arr  # height after undoing the vertical stretch
            c_orig = ctx.c_J + ed_comp * u
            p = np.asarray(family.profile(y_row, c_orig), dtype=float)
            p = p.reshape(np.shape(c_arr) + (d - 1,)) if np.ndim(c_arr) else p.ravel()
            sheared = p - ctx.x_center - np.multiply.outer(np.asarray(u), e_hor) if np.ndim(c_arr) else (
                p - ctx.x_center - u * e_hor
            )
            return sheared / rho2

        return prof

    profiles = {}
    new_params = np.empty((len(subset), 2 * (d - 1)))
    for row, idx in enumerate(subset):
        prof = make_profile(idx)
        lo_val = np.asarray(prof(None, -1.0), dtype=float).ravel()
        hi_val = np.asarray(prof(None, 1.0), dtype=float).ravel()
        new_params[row, : d - 1] = lo_val
        new_params[row, d - 1 :] = hi_val
        profiles[row] = prof

    # dict-dispatch profile keyed on the new parameter rows
    table = {SampledProfile.key(new_params[r]): profiles[r] for r in range(len(subset))}

    def dispatch(z_row, c):
        fn = table.get(SampledProfile.key(z_row))
        if fn is None:
            raise UnknownParameterError("parameter not in rescaled family")
        return fn(z_row, c)

    out = CurveFamily(
        d=d,
        params=new_params,
        profile=dispatch,
        C=family.C,
        info={"rho": ctx.rho, "c_J": ctx.c_J, "parent_delta": delta},
    )
    return out, new_delta


# ---------------------------------------------------------------------------
# Builtin analytic families


def line_family(params, d: int = 2, C: float = 2.0) -> CurveFamily:
    """Straight chords: P_y(c) = (y1 + y2)/2 + c (y2 - y1)/2."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    n = d - 1

    def profile(y_row, c):
        mid = (y_row[:n] + y_row[n:]) / 2.0
        slope = (y_row[n:] - y_row[:n]) / 2.0
        return mid + np.multiply.outer(np.asarray(c, dtype=float), slope)

    def profile_dc(y_row, c):
        slope = (y_row[n:] - y_row[:n]) / 2.0
        return np.multiply.outer(np.ones_like(np.asarray(c, dtype=float)), slope)

    return CurveFamily(d=d, params=params, profile=profile, C=C, profile_dc=profile_dc)


def parabola_family(params, d: int = 2, bend: float = 0.5, C: float = 3.0) -> CurveFamily:
    """Parabolic profiles: the straight chord plus bend * (c^2 - 1) / 2.

    The quadratic correction vanishes at c = +-1, so the endpoint convention
    is preserved for every bend.
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    n = d - 1
    bend_vec = np.zeros(n)
    bend_vec[0] = bend

    def profile(y_row, c):
        c_arr = np.asarray(c, dtype=float)
        mid = (y_row[:n] + y_row[n:]) / 2.0
        slope = (y_row[n:] - y_row[:n]) / 2.0
        lin = mid + np.multiply.outer(c_arr, slope)
        return lin + np.multiply.outer((c_arr**2 - 1.0) / 2.0, bend_vec)

    def profile_dc(y_row, c):
        c_arr = np.asarray(c, dtype=float)
        slope = (y_row[n:] - y_row[:n]) / 2.0
        return np.multiply.outer(np.ones_like(c_arr), slope) + np.multiply.outer(
            c_arr, bend_vec
        )

    return CurveFamily(d=d, params=params, profile=profile, C=C, profile_dc=profile_dc)
