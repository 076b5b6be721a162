"""Batch pipelines: calibration, power sweeps, the detectability table,
scaling collapse, figures and the verification report.

Every job seed is derived from the master seed and the job's coordinates,
so a partial rerun reproduces exactly the rows of a full run.  Finished
table cells are stored as JSON under ``<output>/cells`` and are skipped
when a sweep is resumed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, rng
from .calibration import (
    ThresholdCache,
    asymptotic_threshold,
    bridge_quantile,
    mc_threshold,
    null_rejection_rate,
)
from .errors import ConfigurationError, DependencyError
from .model import baseline_variance
from .power import (
    PowerCurve,
    PowerPoint,
    collapse_dataset,
    delta_min_hat,
    power_curve,
    rescaled_grid,
    scaling_slope,
)
from .profiles import get_profile, signal_constant
from .theory import normal_quantile

log = logging.getLogger(__name__)

WORKERS_ENV = "BLOCKDRIFT_WORKERS"


@dataclass
class ExperimentConfig:
    block_sizes: tuple[int, ...] = (250, 500, 1000, 2000, 4000)
    e0s: tuple[float, ...] = (0.02, 0.05, 0.10)
    profiles: tuple[str, ...] = ("linear", "sinusoidal", "step")
    alpha: float = 0.05
    target_power: float = 0.8
    M0: int = 10_000
    M1: int = 5_000
    seed: int = 20_240_611
    output_dir: str = "results"
    threshold_provenance: str = "monte_carlo"
    # scaling-collapse lattice: delta*sqrt(n) in steps of (center / collapse_points)
    # up to collapse_span * center, center being the achievability amplitude times sqrt(n)
    collapse_e0: float = 0.05
    collapse_points: int = 20
    collapse_span: float = 1.5
    # size validation on fresh seeds
    size_M: int = 10_000

    def __post_init__(self):
        self.block_sizes = tuple(int(n) for n in self.block_sizes)
        self.e0s = tuple(float(e) for e in self.e0s)
        self.profiles = tuple(get_profile(p).kind for p in self.profiles)
        if not (self.block_sizes and self.e0s and self.profiles):
            raise ConfigurationError("block_sizes, e0s and profiles must be non-empty")
        if not 0 < self.alpha < 1 or not 0 < self.target_power < 1:
            raise ConfigurationError("alpha and target_power must lie in (0, 1)")
        if self.threshold_provenance not in ("monte_carlo", "asymptotic"):
            raise ConfigurationError("threshold_provenance must be monte_carlo or asymptotic")

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    def snapshot(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


_LIST_KEYS = {"block_sizes": int, "e0s": float, "profiles": str}


def _coerce(key: str, raw):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    if key not in types:
        raise ConfigurationError(f"unknown config key {key!r}")
    if key in _LIST_KEYS:
        if isinstance(raw, str):
            raw = [x for x in raw.replace(",", " ").split() if x]
        return tuple(_LIST_KEYS[key](x) for x in raw)
    default = getattr(ExperimentConfig(), key)
    if isinstance(default, bool):
        return str(raw).lower() in ("1", "true", "yes")
    return type(default)(raw)


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file; keyword overrides win.

    Lists are comma or whitespace separated, ``#`` starts a comment::

        block_sizes = 1000, 2000, 4000
        e0s = 0.05
        M1 = 2000
    """
    values = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = _coerce(key, val)
    for key, val in overrides.items():
        if val is not None:
            values[key] = _coerce(key, val)
    return ExperimentConfig(**values)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _imap(func, items):
    """Results of ``func(*item)`` in item order, yielded as they finish."""
    items = list(items)
    workers = min(worker_count(), len(items)) if items else 1
    if workers <= 1:
        for it in items:
            yield func(*it)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_star, [(func, it) for it in items])


def _map(func, items):
    return list(_imap(func, items))


def _star(arg):
    func, it = arg
    return func(*it)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float) and math.isnan(x):
        return ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".6g")
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    return path


def _ensure_writable(out: Path):
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc


# -- manifest ---------------------------------------------------------------


@dataclass
class RunManifest:
    config: dict
    files: dict[str, str] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    version: str = __version__
    notes: dict[str, str] = field(default_factory=dict)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def _manifest(cfg: ExperimentConfig) -> RunManifest:
    path = cfg.out / "manifest.json"
    if path.exists():
        m = RunManifest.read(path)
        if m.config != cfg.snapshot():
            log.warning("config changed since last run; starting a fresh manifest")
            m = RunManifest(config=cfg.snapshot())
    else:
        m = RunManifest(config=cfg.snapshot())
    m.notes.setdefault("interpolation", "piecewise-linear in (delta, power)")
    return m


# -- seeds ------------------------------------------------------------------


def calibration_seed(cfg: ExperimentConfig, n: int, e0: float) -> int:
    return rng.derive_seed(cfg.seed, "calibrate", n, float(e0))


def size_seed(cfg: ExperimentConfig, n: int, e0: float) -> int:
    return rng.derive_seed(cfg.seed, "size", n, float(e0))


# -- calibration ------------------------------------------------------------


def _threshold_job(n, e0, alpha, M0, seed):
    return mc_threshold(n, e0, alpha, M0, seed)


def run_calibrate(cfg: ExperimentConfig, manifest: RunManifest | None = None) -> dict:
    """Thresholds for every ``(n, e0)``, cached in ``thresholds.csv``."""
    _ensure_writable(cfg.out)
    own = manifest is None
    manifest = manifest or _manifest(cfg)
    if cfg.threshold_provenance == "asymptotic":
        return {(n, e0): asymptotic_threshold(n, cfg.alpha, e0) for n in cfg.block_sizes for e0 in cfg.e0s}
    t0 = time.perf_counter()
    cache = ThresholdCache(cfg.out / "thresholds.csv")
    keys = [(n, e0) for n in cfg.block_sizes for e0 in cfg.e0s]
    missing = [k for k in keys if (k[0], k[1], cfg.alpha, cfg.M0, calibration_seed(cfg, *k)) not in cache]
    done = _map(_threshold_job, [(n, e0, cfg.alpha, cfg.M0, calibration_seed(cfg, n, e0)) for n, e0 in missing])
    for th in done:
        cache.add(th)
    if done:
        cache.save()
    out = {}
    for n, e0 in keys:
        seed = calibration_seed(cfg, n, e0)
        manifest.seeds[f"calibrate/n={n}/e0={e0:g}"] = seed
        out[(n, e0)] = cache.get(n, e0, cfg.alpha, cfg.M0, seed)
    manifest.files["thresholds"] = "thresholds.csv"
    manifest.timings["calibrate"] = manifest.timings.get("calibrate", 0.0) + time.perf_counter() - t0
    if own:
        manifest.write(cfg.out / "manifest.json")
    return out


# -- table ------------------------------------------------------------------


def _cell_name(n, e0, profile) -> str:
    return f"n{n}_e{e0:g}_{profile}.json"


def _curve_to_json(curve: PowerCurve, est) -> dict:
    return {
        "n": curve.n, "e0": curve.e0, "profile": curve.profile, "threshold": curve.threshold,
        "points": [asdict(p) for p in curve.points],
        "estimate": asdict(est),
    }


def _curve_from_json(d: dict) -> PowerCurve:
    pts = tuple(PowerPoint(**p) for p in d["points"])
    return PowerCurve(n=d["n"], e0=d["e0"], profile=d["profile"], points=pts, threshold=d["threshold"])


def _cell_job(n, e0, profile, threshold, cfg_dict):
    cfg = ExperimentConfig(**cfg_dict)
    curve = power_curve(
        n, e0, profile, threshold, grid="theory", M1=cfg.M1, seed=cfg.seed,
        alpha=cfg.alpha, target_power=cfg.target_power,
    )
    return curve, delta_min_hat(curve, cfg.target_power)


def run_sweep(cfg: ExperimentConfig, manifest: RunManifest | None = None):
    """Power curves and threshold estimates for every ``(n, e0, profile)`` cell."""
    _ensure_writable(cfg.out)
    own = manifest is None
    manifest = manifest or _manifest(cfg)
    thresholds = run_calibrate(cfg, manifest)
    cells_dir = cfg.out / "cells"
    cells_dir.mkdir(exist_ok=True)
    t0 = time.perf_counter()
    cfg_dict = asdict(cfg)
    todo = []
    results = {}
    for n in cfg.block_sizes:
        for e0 in cfg.e0s:
            for prof in cfg.profiles:
                path = cells_dir / _cell_name(n, e0, prof)
                if path.exists():
                    d = json.loads(path.read_text())
                    if d["threshold"] == thresholds[(n, e0)].tau and len(d["points"]) and d["points"][0]["M1"] == cfg.M1:
                        results[(n, e0, prof)] = d
                        continue
                todo.append((n, e0, prof, thresholds[(n, e0)], cfg_dict))
    # each cell is persisted as soon as it finishes so an interrupted sweep resumes
    for (curve, est) in _imap(_cell_job, todo):
        d = _curve_to_json(curve, est)
        (cells_dir / _cell_name(curve.n, curve.e0, curve.profile)).write_text(json.dumps(d, sort_keys=True))
        results[(curve.n, curve.e0, curve.profile)] = d
    manifest.timings["sweep"] = manifest.timings.get("sweep", 0.0) + time.perf_counter() - t0
    curves = {k: _curve_from_json(d) for k, d in results.items()}
    for k, c in curves.items():
        for p in c.points:
            manifest.seeds[f"power/n={k[0]}/e0={k[1]:g}/{k[2]}/delta={p.delta:.12g}"] = p.seed

    rows = []
    for key in sorted(curves):
        for p in curves[key].points:
            rows.append([p.n, p.e0, p.profile, p.delta, p.power, p.se, p.M1, p.seed])
    write_csv(cfg.out / "power_curves.csv", ["n", "e0", "profile", "delta", "power", "se", "M1", "seed"], rows)
    manifest.files["power_curves"] = "power_curves.csv"
    if own:
        manifest.write(cfg.out / "manifest.json")
    estimates = {k: delta_min_hat(c, cfg.target_power) for k, c in curves.items()}
    return curves, estimates


def run_table(cfg: ExperimentConfig):
    """Full sweep plus ``delta_min.csv`` (one row per cell, empty value when not reached)."""
    manifest = _manifest(cfg)
    curves, estimates = run_sweep(cfg, manifest)
    rows = []
    for (n, e0, prof) in sorted(estimates):
        est = estimates[(n, e0, prof)]
        lo = est.bracket[0] if est.bracket else None
        hi = est.bracket[2] if est.bracket else None
        rows.append([n, e0, prof, est.delta_min_hat, est.reason, lo, hi, curves[(n, e0, prof)].threshold])
    write_csv(
        cfg.out / "delta_min.csv",
        ["n", "e0", "profile", "delta_min_hat", "reason", "bracket_lo", "bracket_hi", "tau"],
        rows,
    )
    manifest.files["delta_min"] = "delta_min.csv"

    fits = []
    for e0 in cfg.e0s:
        for prof in cfg.profiles:
            ests = [estimates[(n, e0, prof)] for n in cfg.block_sizes]
            try:
                fit = scaling_slope(ests)
            except ValueError:
                continue
            fits.append([e0, prof, fit.slope, fit.intercept, len(fit.points)])
    write_csv(cfg.out / "scaling_fit.csv", ["e0", "profile", "slope", "intercept", "points"], fits)
    manifest.files["scaling_fit"] = "scaling_fit.csv"
    manifest.write(cfg.out / "manifest.json")
    return estimates


def read_delta_min(path) -> dict:
    """Load ``delta_min.csv`` into ``{(n, e0, profile): value or None}``."""
    out = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            v = row["delta_min_hat"]
            out[(int(row["n"]), float(row["e0"]), row["profile"])] = float(v) if v else None
    return out


# -- collapse ---------------------------------------------------------------


def collapse_lattice(cfg: ExperimentConfig, profile: str, e0: float) -> tuple[float, float]:
    """(step, upper) of the shared ``delta*sqrt(n)`` lattice for one profile."""
    sigma0 = math.sqrt(baseline_variance(e0))
    z = normal_quantile(cfg.target_power)
    center = sigma0 * (bridge_quantile(cfg.alpha) + z) / signal_constant(get_profile(profile))
    return center / cfg.collapse_points, cfg.collapse_span * center


def _collapse_job(n, e0, profile, threshold, cfg_dict):
    cfg = ExperimentConfig(**cfg_dict)
    step, upper = collapse_lattice(cfg, profile, e0)
    grid = rescaled_grid(n, e0, step, upper)
    return power_curve(n, e0, profile, threshold, grid=grid, M1=cfg.M1, seed=cfg.seed, refine=False)


def run_collapse(cfg: ExperimentConfig):
    """Power on a common ``delta*sqrt(n)`` lattice at ``collapse_e0``; writes ``collapse.csv``."""
    _ensure_writable(cfg.out)
    manifest = _manifest(cfg)
    e0 = cfg.collapse_e0
    sub = replace(cfg, e0s=(e0,))
    thresholds = run_calibrate(sub, manifest)
    t0 = time.perf_counter()
    cfg_dict = asdict(cfg)
    jobs = [(n, e0, prof, thresholds[(n, e0)], cfg_dict) for prof in cfg.profiles for n in cfg.block_sizes]
    curves = _map(_collapse_job, jobs)
    rows = collapse_dataset(curves)
    write_csv(
        cfg.out / "collapse.csv",
        ["profile", "n", "e0", "delta", "rescaled", "snr", "power", "se"],
        [[r.profile, r.n, r.e0, r.delta, r.rescaled, r.snr, r.power, r.se] for r in rows],
    )
    manifest.files["collapse"] = "collapse.csv"
    manifest.timings["collapse"] = time.perf_counter() - t0
    manifest.write(cfg.out / "manifest.json")
    return curves


def read_collapse(path) -> list[PowerCurve]:
    groups: dict[tuple, list[PowerPoint]] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["profile"], int(row["n"]), float(row["e0"]))
            p = float(row["power"])
            groups.setdefault(key, []).append(PowerPoint(
                n=key[1], e0=key[2], profile=key[0], delta=float(row["delta"]),
                power=p, se=float(row["se"]), M1=0, seed=0,
            ))
    return [
        PowerCurve(n=k[1], e0=k[2], profile=k[0], points=tuple(sorted(v, key=lambda p: p.delta)), threshold=math.nan)
        for k, v in sorted(groups.items())
    ]


# -- size validation --------------------------------------------------------


def _size_job(n, e0, threshold, M, seed):
    return null_rejection_rate(n, e0, threshold, M, seed)


def run_size_check(cfg: ExperimentConfig, thresholds=None, tau_override: float | None = None) -> list[dict]:
    """Null rejection rate on fresh seeds for each ``(n, e0)``."""
    thresholds = thresholds if thresholds is not None else run_calibrate(cfg)
    jobs = []
    for (n, e0), th in sorted(thresholds.items()):
        tau = th.tau if tau_override is None else tau_override
        jobs.append((n, e0, tau, cfg.size_M, size_seed(cfg, n, e0)))
    out = []
    for (n, e0, tau, M, seed), est in zip(jobs, _map(_size_job, jobs)):
        band = 3.0 * math.sqrt(cfg.alpha * (1 - cfg.alpha) / M)
        out.append({
            "n": n, "e0": e0, "tau": tau, "rate": est.rate, "se": est.se, "M": M, "seed": seed,
            "passed": abs(est.rate - cfg.alpha) <= band,
        })
    return out


# -- figures and verification live in their own modules; thin wrappers here --


def run_figures(cfg: ExperimentConfig, compute_missing: bool = False) -> dict[str, Path]:
    from .plots import figure_collapse, figure_scaling, figure_tradeoff, figure_trajectory

    out = cfg.out
    _ensure_writable(out)
    table = out / "delta_min.csv"
    collapse = out / "collapse.csv"
    if not table.exists():
        if not compute_missing:
            raise DependencyError(f"{table} not found; run the 'table' subcommand first")
        run_table(cfg)
    if not collapse.exists():
        if not compute_missing:
            raise DependencyError(f"{collapse} not found; run the 'collapse' subcommand first")
        run_collapse(cfg)
    manifest = _manifest(cfg)
    rows = read_delta_min(table)
    # plot the collapse baseline when the table has it, else the first table e0
    e0s = sorted({e for (_, e, _) in rows})
    e0 = next((e for e in e0s if math.isclose(e, cfg.collapse_e0)), e0s[0])
    figs = {
        "trajectory": figure_trajectory(out / "fig_trajectory.svg", seed=cfg.seed),
        "scaling": figure_scaling(out / "fig_scaling.svg", rows, e0=e0),
        "collapse": figure_collapse(out / "fig_collapse.svg", read_collapse(collapse)),
        "tradeoff": figure_tradeoff(out / "fig_tradeoff.svg", rows, e0=e0),
    }
    for k, p in figs.items():
        manifest.files[f"figure_{k}"] = p.name
    manifest.write(out / "manifest.json")
    return figs


def run_verify(cfg: ExperimentConfig, tau_override: float | None = None, include_size: bool = True) -> dict:
    from .verify import verification_report

    _ensure_writable(cfg.out)
    report = verification_report(cfg, tau_override=tau_override, include_size=include_size)
    path = cfg.out / "verification.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
