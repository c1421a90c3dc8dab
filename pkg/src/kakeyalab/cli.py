"""Experiment orchestration: config parsing, seeded runs, CSV emission.

Configs are flat key=value text (one per line, # comments).  A run writes
records.csv in a per-run directory named by the config hash; identical
config and seed produce byte-identical CSV.  Wall-clock timings are
reported on the log stream only and the CSV wall_ms column is fixed at 0,
keeping the file deterministic.

CSV schema (one metric per row):
run_id,kind,d,k,beta,delta,h,rho,seed,metric_name,metric_value,wall_ms
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import broadnarrow, dimension, kakeya, serialize, sharpness
from . import deltasets as ds
from .curves import CurveFamily, line_family, parabola_family
from .errors import (
    CertificateError,
    KakeyaLabError,
    ResourceLimitError,
    ValidationError,
)
from .raster import StraightTube, rasterize_tubes, rasterize_with_caps

log = logging.getLogger("kakeyalab")

KINDS = ("curved-kakeya", "mlk", "broadnarrow", "boxdim", "sharpness", "lift", "pipeline")
GEOMETRIES = ("euclidean", "hyperbolic", "spherical")

CSV_COLUMNS = (
    "run_id,kind,d,k,beta,delta,h,rho,seed,metric_name,metric_value,wall_ms"
)

DEFAULT_DELTAS = {
    "curved-kakeya": "2^-4,2^-5,2^-6,2^-7",
    "mlk": "2^-3,2^-4,2^-5,2^-6",
    "broadnarrow": "2^-5",
    "pipeline": "2^-5",
}


@dataclass
class ExperimentConfig:
    kind: str
    d: int = 2
    k: int = 1
    beta: float = 1.0
    deltas: list = field(default_factory=list)
    h_ratio: int = 4
    rho: float = 2**-4
    family: str = "lines"
    geometry: str = "euclidean"
    depth: int = 8
    samples: int = 2000
    seed: int = 0
    out: str = "runs"
    source_text: str = ""

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.normalized().encode()).hexdigest()

    @property
    def run_id(self) -> str:
        return self.config_hash[:12]

    def normalized(self) -> str:
        keys = [
            ("kind", self.kind),
            ("d", self.d),
            ("k", self.k),
            ("beta", serialize.fmt(self.beta)),
            ("deltas", ",".join(serialize.fmt(x) for x in self.deltas)),
            ("h_ratio", self.h_ratio),
            ("rho", serialize.fmt(self.rho)),
            ("family", self.family),
            ("geometry", self.geometry),
            ("depth", self.depth),
            ("samples", self.samples),
            ("seed", self.seed),
        ]
        return "\n".join(f"{k}={v}" for k, v in keys)


def _parse_delta(tok: str) -> float:
    tok = tok.strip()
    if "^" in tok:
        base, expo = tok.split("^", 1)
        val = float(base) ** float(expo)
    else:
        val = float(tok)
    if val <= 0 or val > 1:
        raise ValueError(f"scale {tok} outside (0, 1]")
    j = math.log2(1.0 / val)
    if abs(j - round(j)) > 1e-9:
        raise ValueError(f"scale {tok} is not dyadic")
    return 2.0 ** -round(j)


_INT_KEYS = {"d", "k", "h_ratio", "depth", "samples", "seed"}
_FLOAT_KEYS = {"beta", "rho"}
_STR_KEYS = {"kind", "family", "geometry", "out"}


def validate_config(text: str) -> ExperimentConfig:
    """Parse and validate key=value config text.

    Unknown keys, out-of-range values, and non-dyadic scales are rejected
    with the offending line number.
    """
    values: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {ln}: expected key=value, got {raw!r}")
        key, val = (t.strip() for t in line.split("=", 1))
        if key in values:
            raise ValidationError(f"line {ln}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _STR_KEYS:
                values[key] = val
            elif key == "deltas":
                values[key] = [_parse_delta(t) for t in val.split(",") if t.strip()]
            else:
                raise ValidationError(f"line {ln}: unknown key {key!r}")
        except ValidationError:
            raise
        except ValueError as exc:
            raise ValidationError(f"line {ln}: {exc}") from exc

    if "kind" not in values:
        raise ValidationError("missing required key 'kind'")
    cfg = ExperimentConfig(**values, source_text=text)
    if cfg.kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}, got {cfg.kind!r}")
    if cfg.d < 2 or cfg.d > 4:
        raise ValidationError(f"d must lie in 2..4, got {cfg.d}")
    if not 1 <= cfg.k <= cfg.d - 1:
        raise ValidationError(f"need 1 <= k <= d-1, got k={cfg.k}, d={cfg.d}")
    if not 0.0 <= cfg.beta <= 1.0:
        raise ValidationError(f"beta must lie in [0,1], got {cfg.beta}")
    if cfg.h_ratio not in (2, 4, 8):
        raise ValidationError(f"h_ratio must be 2, 4 or 8, got {cfg.h_ratio}")
    if not 0 < cfg.rho < 1:
        raise ValidationError(f"rho must lie in (0,1), got {cfg.rho}")
    if cfg.geometry not in GEOMETRIES:
        raise ValidationError(f"geometry must be one of {GEOMETRIES}")
    if not cfg.deltas:
        cfg.deltas = [
            _parse_delta(t) for t in DEFAULT_DELTAS.get(cfg.kind, "2^-4").split(",")
        ]
    if any(b >= a for a, b in zip(cfg.deltas, cfg.deltas[1:])):
        raise ValidationError("deltas must be strictly decreasing")
    return cfg


# ---------------------------------------------------------------------------
# Builtin families


def _family_options(spec: str):
    if ":" in spec:
        name, rest = spec.split(":", 1)
        opts = {}
        for tok in rest.split(","):
            if tok.strip():
                k, v = tok.split("=", 1)
                opts[k.strip()] = v.strip()
        return name.strip(), opts
    return spec.strip(), {}


def build_family(spec: str, d: int, delta: float | None = None) -> CurveFamily:
    """Builtin curve families, or file:<path> for a serialized one.

    lines / parabolas take n (count; default scales like 1/delta) and
    spread (slope range).  Endpoint parameters trace a line in parameter
    space, so the parameter set is delta-separated with exponent 1 when
    n ~ 1/delta.
    """
    name, opts = _family_options(spec)
    if name == "file":
        return serialize.load_curves(opts.get("path") or spec.split(":", 1)[1])
    default_n = int(round(1.0 / delta)) + 1 if delta else 17
    n = int(opts.get("n", default_n))
    spread = float(opts.get("spread", 0.3))
    ts = np.linspace(0.0, 1.0, n)
    a = (ts - 0.5) * 1.0  # midpoint sweep
    b = spread * (ts - 0.5) * 2.0  # slope sweep
    m = d - 1
    params = np.zeros((n, 2 * m))
    params[:, 0] = a - b
    params[:, m] = a + b
    if name == "lines":
        return line_family(params, d=d)
    if name == "parabolas":
        return parabola_family(params, d=d, bend=float(opts.get("bend", 0.5)))
    raise ValidationError(f"unknown family {spec!r}")


def orthogonal_tube_families(d: int, k: int, n_tubes: int, delta: float, seed: int,
                             offset_scale: float = 2.0):
    """k+1 axis-aligned tube families with random offsets at scale delta.

    Offsets are drawn uniformly at offset_scale * delta around the origin
    (a bush through the common core), so the configuration is homothetic
    across the scale ladder and the normalized constant stays flat.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    fams = []
    for j in range(k + 1):
        axis = np.zeros(d)
        axis[j % d] = 1.0
        tubes = []
        for _ in range(n_tubes):
            offset = rng.uniform(-offset_scale * delta, offset_scale * delta, size=d)
            offset[j % d] = 0.0
            tubes.append(StraightTube(offset, axis, 1.6, delta))
        fams.append(tubes)
    return fams


# ---------------------------------------------------------------------------
# Record emission


@dataclass
class ExperimentRecord:
    run_id: str
    kind: str
    d: int
    k: int
    beta: float
    delta: float
    h: float
    rho: float
    seed: int
    metric_name: str
    metric_value: float

    def csv_row(self) -> str:
        return ",".join(
            [
                self.run_id,
                self.kind,
                str(self.d),
                str(self.k),
                serialize.fmt(self.beta),
                serialize.fmt(self.delta),
                serialize.fmt(self.h),
                serialize.fmt(self.rho),
                str(self.seed),
                self.metric_name,
                serialize.fmt(self.metric_value),
                "0",
            ]
        )


def _records_for(cfg: ExperimentConfig, metrics, delta: float = 0.0, h: float = 0.0):
    return [
        ExperimentRecord(
            run_id=cfg.run_id,
            kind=cfg.kind,
            d=cfg.d,
            k=cfg.k,
            beta=cfg.beta,
            delta=delta,
            h=h,
            rho=cfg.rho,
            seed=cfg.seed,
            metric_name=name,
            metric_value=float(value),
        )
        for name, value in metrics
    ]


# ---------------------------------------------------------------------------
# Experiment drivers


def _run_curved_kakeya(cfg: ExperimentConfig):
    records = []
    ladder = []
    s = 2 * (cfg.k - 1) + cfg.beta
    for delta in cfg.deltas:
        h = delta / cfg.h_ratio
        fam = build_family(cfg.family, cfg.d, delta)
        ok, wit = ds.check_delta_s(fam.params, delta, s)
        if not ok:
            raise ValidationError(
                f"parameter set is not a (delta,{s}) set at delta={delta}"
            )
        t0 = time.perf_counter()
        ratio, comp = kakeya.curved_kakeya_ratio(fam, None, delta, cfg.k, cfg.beta, h)
        log.info("curved-kakeya delta=%g ratio=%.6g (%.0f ms)",
                 delta, ratio, 1e3 * (time.perf_counter() - t0))
        ladder.append((delta, ratio))
        metrics = [
            ("ratio", ratio),
            ("lp_norm", comp["lp_norm"]),
            ("total_measure", comp["total_measure"]),
            ("max_count", comp["max_count"]),
            ("n_tubes", comp["n_tubes"]),
            ("witness_slack", wit.slack if wit else 0.0),
        ]
        records.extend(_records_for(cfg, metrics, delta, h))
    if len(ladder) >= 3:
        fit = kakeya.exponent_fit(ladder)
        summary = [
            ("epsilon_hat", fit.slope),
            ("fit_intercept", fit.intercept),
            ("fit_r2", fit.r2 if not fit.degenerate else float("nan")),
        ]
        records.extend(_records_for(cfg, summary))
    return records


def _run_mlk(cfg: ExperimentConfig):
    records = []
    values = []
    for delta in cfg.deltas:
        h = delta / cfg.h_ratio
        fams = orthogonal_tube_families(cfg.d, cfg.k, cfg.samples // 40 or 1, delta, cfg.seed)
        integral, chat = kakeya.multilinear_kakeya_integral(fams, delta, h)
        values.append(chat)
        records.extend(
            _records_for(cfg, [("integral", integral), ("c_hat", chat)], delta, h)
        )
    spread = max(values) / min(values) if min(values) > 0 else float("inf")
    records.extend(_records_for(cfg, [("c_hat_spread", spread)]))
    return records


def _run_broadnarrow(cfg: ExperimentConfig):
    delta = cfg.deltas[0]
    h = delta / cfg.h_ratio
    fam = build_family(cfg.family, cfg.d, delta)
    r_fine = 0.5 * broadnarrow.required_cap_radius(cfg.rho, cfg.k)
    caps = broadnarrow.build_cap_cover(cfg.d, r_fine)
    capgrid = rasterize_with_caps(fam, caps, delta, h)
    part = broadnarrow.partition_broad_narrow(capgrid, caps, cfg.rho, cfg.k)
    coarse = broadnarrow.build_cap_cover(cfg.d, cfg.rho)
    narrow_counts = [
        broadnarrow.narrow_direction_count(coarse, res.H, cfg.rho)
        for res in part.results
        if not res.is_broad
    ]
    metrics = [
        ("n_caps_fine", caps.n_caps),
        ("cap_overlap", caps.overlap),
        ("n_cells", part.stats["n_cells"]),
        ("n_broad", part.stats["n_broad"]),
        ("n_narrow", part.stats["n_narrow"]),
        ("n_distinct_capsets", part.stats["n_distinct_capsets"]),
        ("retention", part.stats.get("retention", 1.0)),
        ("n_tuples", part.stats.get("n_tuples", 0)),
        ("max_narrow_dir_count", max(narrow_counts) if narrow_counts else 0),
        ("narrow_dir_bound", coarse.n_caps * cfg.rho ** (1 - cfg.k)),
    ]
    return _records_for(cfg, metrics, delta, h)


def _run_boxdim(cfg: ExperimentConfig):
    pts = ds.cantor_parameter_set(cfg.beta, cfg.depth)
    rec = dimension.box_dimension(pts, 2**-6, 2**-2)
    records = _records_for(
        cfg,
        [("box_dim", rec.slope), ("fit_r2", rec.r2), ("n_scales", len(rec.scales))],
    )
    for hval, count in zip(rec.scales, rec.counts):
        records.extend(_records_for(cfg, [("box_count", count)], delta=hval, h=hval))
    return records


def sharpness_ladder(target_dim: float, geometry: str):
    """Dyadic window matched to the target dimension.

    Low-dimensional clouds support fine scales; higher-dimensional ones
    saturate there (cells outnumber affordable samples), so the window
    coarsens as the target grows.  Calibrated on the three constructions.
    """
    if target_dim <= 2.2:
        return 2**-6, 2**-3
    if geometry != "spherical" or target_dim <= 3.05:
        return 2**-4, 2**-1
    return 2**-3, 2**-1


def sharpness_estimates(geometry: str, d: int, k: int, beta: float, depth: int,
                        samples: int, lift_samples: int, seed: int = 0):
    """Build one construction and estimate both dimensions.

    Returns (dim_projection, dim_lift, residual, n_base, n_lift).
    """
    if geometry == "euclidean":
        lift, base, resid = sharpness.euclidean_example(
            d, k, beta, depth, samples, lift_samples, seed=seed
        )
    elif geometry == "hyperbolic":
        lift, base, info = sharpness.hyperbolic_example(
            d, k, beta, depth, samples, lift_samples, seed=seed
        )
        resid = info["semicircle_residual"]
    elif geometry == "spherical":
        ex = sharpness.sphere_example(d, k, beta, depth, samples, lift_samples, seed=seed)
        lift, base = ex.lift, ex.projection
        resid = float(np.abs(np.linalg.norm(base, axis=1) - 1.0).max())
    else:
        raise ValidationError(f"unknown geometry {geometry!r}")
    lo_b, hi_b = sharpness_ladder(k + beta, geometry)
    lo_l, hi_l = sharpness_ladder(2 * (k - 1) + 1 + beta, geometry)
    rec_base = dimension.box_dimension(base, lo_b, hi_b, drop_ends=False)
    rec_lift = dimension.box_dimension(lift, lo_l, hi_l, drop_ends=False)
    return rec_base.slope, rec_lift.slope, resid, len(base), len(lift)


def _run_sharpness(cfg: ExperimentConfig):
    dim_p, dim_l, resid, n_base, n_lift = sharpness_estimates(
        cfg.geometry, cfg.d, cfg.k, cfg.beta, cfg.depth,
        cfg.samples, cfg.samples * 2, seed=cfg.seed,
    )
    metrics = [
        ("dim_projection", dim_p),
        ("dim_lift", dim_l),
        ("target_projection", cfg.k + cfg.beta),
        ("target_lift", 2 * (cfg.k - 1) + 1 + cfg.beta),
        ("construction_residual", resid),
        ("n_base", n_base),
        ("n_lift", n_lift),
    ]
    return _records_for(cfg, metrics)


def _lift_fixture(cfg: ExperimentConfig) -> np.ndarray:
    name, _ = _family_options(cfg.family)
    if name in ("lines", "line"):
        return np.array([[0.0, 0.0, 0.0, 1.0]])
    if name == "cantor":
        offs = ds.cantor_parameter_set(cfg.beta, cfg.depth).ravel()
        return np.column_stack(
            [offs, np.zeros(len(offs)), np.zeros(len(offs)), np.ones(len(offs))]
        )
    if name == "circle":
        n = cfg.samples
        ang = 2 * np.pi * np.arange(n) / n
        z = np.zeros(n)
        return np.column_stack([z, z, np.cos(ang), np.sin(ang)])
    raise ValidationError(f"unknown lift fixture {cfg.family!r}")


def _run_lift(cfg: ExperimentConfig):
    pairs = _lift_fixture(cfg)
    rec_a, rec_sa, diff = dimension.lift_dimension_check(pairs, samples=cfg.samples)
    metrics = [
        ("dim_A", rec_a.slope),
        ("dim_SA", rec_sa.slope),
        ("difference", diff),
        ("n_lines", len(pairs)),
    ]
    return _records_for(cfg, metrics)


def _run_pipeline(cfg: ExperimentConfig):
    delta = cfg.deltas[0]
    fam = build_family(cfg.family, cfg.d, delta)
    covers = curve_cover_ladder(fam, [int(round(math.log2(1 / delta)))])
    eps = 0.1
    alpha = ds.effective_alpha(covers, eps)
    result = ds.discretize_union(fam, covers, alpha, cfg.beta, cfg.k, eps)
    metrics = [
        ("alpha_effective", alpha),
        ("k1", result.k1),
        ("delta_selected", result.delta),
        ("c_select", result.info["c_select"]),
        ("c_level", result.info["c_level"]),
        ("c_frostman", result.info["c_frostman"]),
        ("n_selected", result.info["n_selected"]),
    ]
    return _records_for(cfg, metrics, delta)


def curve_cover_ladder(family: CurveFamily, levels):
    """Genuine curve covers: balls of radius 2^-k centered along each curve."""
    covers = []
    for k in levels:
        r = 2.0**-k
        n_pts = int(math.ceil(4.0 / r))
        cs = np.linspace(-1.0, 1.0, n_pts)
        centers = []
        for i in range(len(family)):
            prof = np.asarray(family.profile(family.params[i], cs), dtype=float)
            centers.append(np.column_stack([prof.reshape(len(cs), -1), cs]))
        allc = np.vstack(centers)
        # thin to roughly r-separated centers to keep #B_k ~ 2^k per curve
        cells = np.floor((allc + 1.0) / r).astype(np.int64)
        _, first = np.unique(cells, axis=0, return_index=True)
        covers.append(ds.DyadicCover(k, allc[np.sort(first)]))
    return covers


DRIVERS = {
    "curved-kakeya": _run_curved_kakeya,
    "mlk": _run_mlk,
    "broadnarrow": _run_broadnarrow,
    "boxdim": _run_boxdim,
    "sharpness": _run_sharpness,
    "lift": _run_lift,
    "pipeline": _run_pipeline,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None):
    """Dispatch to the driver for cfg.kind and write the run directory.

    Returns (records, csv_path).  Identical config and seed give
    byte-identical CSV output.
    """
    t0 = time.perf_counter()
    records = DRIVERS[cfg.kind](cfg)
    log.info("run %s (%s) finished in %.0f ms",
             cfg.run_id, cfg.kind, 1e3 * (time.perf_counter() - t0))
    root = Path(out_dir if out_dir is not None else cfg.out)
    run_dir = root / cfg.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.txt").write_text(cfg.source_text or cfg.normalized() + "\n")
    csv_path = run_dir / "records.csv"
    with open(csv_path, "w") as fh:
        fh.write(CSV_COLUMNS + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
    return records, csv_path


def export_grid(run_id: str, root: str | Path = "runs"):
    """Re-derive the run's tube grid deterministically and export it.

    Writes grid_sparse.txt (and grid_dense.txt in d = 2) into the run
    directory; only kinds built on a curved family support this.
    """
    run_dir = Path(root) / run_id
    cfg_path = run_dir / "config.txt"
    if not cfg_path.exists():
        raise ValidationError(f"no stored config for run {run_id!r} under {root}")
    cfg = validate_config(cfg_path.read_text())
    if cfg.kind not in ("curved-kakeya", "broadnarrow", "pipeline"):
        raise ValidationError(f"kind {cfg.kind!r} has no grid to export")
    delta = cfg.deltas[-1]
    h = delta / cfg.h_ratio
    fam = build_family(cfg.family, cfg.d, delta)
    grid = rasterize_tubes(fam, None, delta, h)
    sparse_path = run_dir / "grid_sparse.txt"
    serialize.save_grid_sparse(grid, sparse_path)
    paths = [sparse_path]
    if cfg.d == 2:
        dense_path = run_dir / "grid_dense.txt"
        serialize.save_grid_dense(grid, dense_path)
        paths.append(dense_path)
    return paths


FIXTURES = [
    ("lines", "straight chord family; options n=<count>, spread=<slope range>"),
    ("parabolas", "chords with a quadratic bend; options n, spread, bend"),
    ("file:<path>", "serialized curve family (kakeyalab-curves v1)"),
    ("cantor", "lift fixture: Cantor(beta) translates of a vertical line"),
    ("circle", "lift fixture: full direction circle through the origin"),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kakeyalab", description="Curved tube-family experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to key=value config file")
    p_run.add_argument("--out", default=None, help="output root (defaults to config's out)")
    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_exp = sub.add_parser("export-grid", help="export the grid of a past run")
    p_exp.add_argument("run_id")
    p_exp.add_argument("--root", default="runs")
    sub.add_parser("fixtures", help="list builtin families and fixtures")
    args = parser.parse_args(argv)

    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = validate_config(Path(args.config).read_text())
            records, csv_path = run_experiment(cfg, args.out)
            print(csv_path)
        elif args.command == "validate":
            cfg = validate_config(Path(args.config).read_text())
            print(f"ok: run_id={cfg.run_id}")
        elif args.command == "export-grid":
            for p in export_grid(args.run_id, args.root):
                print(p)
        elif args.command == "fixtures":
            for name, desc in FIXTURES:
                print(f"{name:14s} {desc}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except CertificateError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return 4
    except KakeyaLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
