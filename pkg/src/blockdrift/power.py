"""Power estimation, detectability thresholds and scaling analyses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import rng
from .cusum import statistics
from .errors import AdmissibilityError, ConfigurationError, DomainError, InsufficientDataError
from .model import ModelParams, baseline_variance, iter_bit_batches
from .profiles import DriftProfile, delta_max, get_profile, signal_constant
from .theory import required_delta

#: Geometric spacing of the theory-guided grid and its span in powers of the ratio.
GRID_RATIO = 2.0 ** 0.25
GRID_SPAN = (-8, 4)


@dataclass(frozen=True)
class PowerPoint:
    n: int
    e0: float
    profile: str
    delta: float
    power: float
    se: float
    M1: int
    seed: int

    @property
    def rescaled(self) -> float:
        return self.delta * math.sqrt(self.n)


@dataclass(frozen=True)
class PowerCurve:
    n: int
    e0: float
    profile: str
    points: tuple[PowerPoint, ...]
    threshold: float

    @property
    def empty(self) -> bool:
        return not self.points

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p.delta for p in self.points])

    @property
    def powers(self) -> np.ndarray:
        return np.array([p.power for p in self.points])

    @property
    def ses(self) -> np.ndarray:
        return np.array([p.se for p in self.points])

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _profile_key(profile: DriftProfile) -> str:
    return profile.kind if profile.is_canonical else profile.label


def _check_threshold(threshold, n: int, e0: float) -> float:
    tn = getattr(threshold, "n", None)
    if tn is not None and tn != n:
        raise ConfigurationError(f"threshold calibrated for n={tn}, not n={n}")
    te0 = getattr(threshold, "e0", None)
    if getattr(threshold, "provenance", None) == "monte_carlo" and te0 != e0:
        raise ConfigurationError(f"threshold calibrated for e0={te0}, not e0={e0}")
    return float(getattr(threshold, "tau", threshold))


def estimate_power(
    n: int,
    e0: float,
    profile: DriftProfile | str,
    delta: float,
    threshold,
    M1: int = 5_000,
    seed: int = 0,
) -> PowerPoint:
    """Fraction of ``M1`` drifted blocks with ``T_n`` above the threshold."""
    profile = get_profile(profile)
    if delta > delta_max(e0) * (1 + 1e-12):
        raise AdmissibilityError(f"delta={delta} exceeds delta_max={delta_max(e0)}")
    tau = _check_threshold(threshold, n, e0)
    params = ModelParams(e0=e0, n=n, delta=delta, profile=profile)
    hits = 0
    for bits in iter_bit_batches(params, seed, M1):
        hits += int(np.count_nonzero(statistics(bits) > tau))
    power = hits / M1
    return PowerPoint(
        n=n,
        e0=e0,
        profile=_profile_key(profile),
        delta=float(delta),
        power=power,
        se=math.sqrt(power * (1.0 - power) / M1),
        M1=M1,
        seed=seed,
    )


def grid_center(n: int, e0: float, profile: DriftProfile, alpha: float = 0.05, target_power: float = 0.8) -> float:
    """Achievability amplitude, used as the middle of the search grid."""
    return required_delta(n, e0, alpha, 1.0 - target_power, signal_constant(profile))


def theory_grid(
    n: int,
    e0: float,
    profile: DriftProfile | str,
    alpha: float = 0.05,
    target_power: float = 0.8,
    ratio: float = GRID_RATIO,
    span: tuple[int, int] = GRID_SPAN,
) -> np.ndarray:
    """Geometric amplitude grid around the achievability amplitude.

    Points above ``delta_max`` are dropped and replaced by ``delta_max``
    itself; if every point exceeds ``delta_max`` the grid is empty.
    """
    profile = get_profile(profile)
    center = grid_center(n, e0, profile, alpha, target_power)
    grid = center * ratio ** np.arange(span[0], span[1] + 1, dtype=float)
    dmax = delta_max(e0)
    kept = grid[grid <= dmax]
    if kept.size == 0:
        return kept
    if kept.size < grid.size and kept[-1] < dmax:
        kept = np.append(kept, dmax)
    return kept


def rescaled_grid(
    n: int, e0: float, step: float, upper: float, include_zero: bool = True
) -> np.ndarray:
    """Amplitudes on the lattice ``delta * sqrt(n) = k * step`` up to ``upper``.

    Capped at ``delta_max``; shared across ``n`` for collapse plots.
    """
    if step <= 0:
        raise DomainError("step must be positive")
    k_max = int(math.floor(upper / step + 1e-9))
    ks = np.arange(0 if include_zero else 1, k_max + 1)
    deltas = ks * step / math.sqrt(n)
    return deltas[deltas <= delta_max(e0) * (1 + 1e-12)]


def _point_seed(seed: int, n: int, e0: float, profile: DriftProfile, delta: float) -> int:
    return rng.derive_seed(seed, "power", n, float(e0), _profile_key(profile), float(delta))


def _first_crossing(powers: np.ndarray, target: float) -> int | None:
    hit = np.nonzero(powers >= target)[0]
    return int(hit[0]) if hit.size else None


def power_curve(
    n: int,
    e0: float,
    profile: DriftProfile | str,
    threshold,
    grid="theory",
    M1: int = 5_000,
    seed: int = 0,
    alpha: float = 0.05,
    target_power: float = 0.8,
    refine: bool = True,
) -> PowerCurve:
    """Power over an amplitude grid.

    ``grid`` is ``"theory"`` (see :func:`theory_grid`) or an explicit
    sequence of amplitudes.  With ``refine`` one extra point is simulated
    at the midpoint of the first pair bracketing ``target_power``.  Each
    point's seed is derived from ``(seed, n, e0, profile, delta)``, so any
    subset of points can be recomputed on its own.
    """
    profile = get_profile(profile)
    if isinstance(grid, str):
        if grid != "theory":
            raise ValueError(f"unknown grid {grid!r}")
        deltas = theory_grid(n, e0, profile, alpha, target_power)
    else:
        deltas = np.asarray(grid, dtype=float)
    deltas = np.unique(deltas)
    tau = _check_threshold(threshold, n, e0)

    def run(d):
        return estimate_power(n, e0, profile, float(d), threshold, M1, _point_seed(seed, n, e0, profile, float(d)))

    points = [run(d) for d in deltas]
    if refine and len(points) >= 2:
        j = _first_crossing(np.array([p.power for p in points]), target_power)
        if j is not None and j > 0:
            mid = 0.5 * (points[j - 1].delta + points[j].delta)
            points.insert(j, run(mid))
    return PowerCurve(n=n, e0=e0, profile=_profile_key(profile), points=tuple(points), threshold=tau)


@dataclass(frozen=True)
class DeltaMinEstimate:
    n: int
    e0: float
    profile: str
    target_power: float
    delta_min_hat: float | None
    reached: bool
    left_censored: bool = False
    bracket: tuple[float, float, float, float] | None = None  # (d_lo, p_lo, d_hi, p_hi)
    method: str = "linear interpolation, first crossing"

    @property
    def reason(self) -> str:
        if not self.reached:
            return "not-reached"
        return "left-censored" if self.left_censored else ""


def delta_min_hat(curve, target_power: float = 0.8) -> DeltaMinEstimate:
    """Interpolated amplitude at which power first reaches ``target_power``."""
    points = list(curve.points if isinstance(curve, PowerCurve) else curve)
    if isinstance(curve, PowerCurve):
        n, e0, prof = curve.n, curve.e0, curve.profile
    elif points:
        n, e0, prof = points[0].n, points[0].e0, points[0].profile
    else:
        raise InsufficientDataError("empty power curve without metadata")
    deltas = np.array([p.delta for p in points])
    if np.any(np.diff(deltas) < 0):
        raise ValueError("power curve must be sorted by delta")
    powers = np.array([p.power for p in points])
    j = _first_crossing(powers, target_power)
    if j is None:
        return DeltaMinEstimate(n=n, e0=e0, profile=prof, target_power=target_power,
                                delta_min_hat=None, reached=False)
    if j == 0:
        return DeltaMinEstimate(n=n, e0=e0, profile=prof, target_power=target_power,
                                delta_min_hat=float(deltas[0]), reached=True, left_censored=True,
                                bracket=(float(deltas[0]), float(powers[0]), float(deltas[0]), float(powers[0])))
    d0, d1 = deltas[j - 1], deltas[j]
    p0, p1 = powers[j - 1], powers[j]
    est = d0 + (target_power - p0) * (d1 - d0) / (p1 - p0)
    return DeltaMinEstimate(
        n=n, e0=e0, profile=prof, target_power=target_power,
        delta_min_hat=float(est), reached=True,
        bracket=(float(d0), float(p0), float(d1), float(p1)),
    )


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    points: tuple[tuple[int, float], ...]
    residuals: tuple[float, ...] = field(repr=False)


def scaling_slope(estimates) -> ScalingFit:
    """Least-squares fit of ``log delta_min_hat`` on ``log n``.

    Only reached estimates are used; at least three are required.
    """
    pts = sorted((e.n, e.delta_min_hat) for e in estimates if e.reached and e.delta_min_hat)
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 reached estimates, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return ScalingFit(slope=float(slope), intercept=float(intercept), points=tuple(pts),
                      residuals=tuple(float(r) for r in resid))


@dataclass(frozen=True)
class CollapseRow:
    profile: str
    n: int
    e0: float
    delta: float
    rescaled: float  # delta * sqrt(n)
    snr: float  # A(g) * delta * sqrt(n) / sigma0
    power: float
    se: float


def collapse_dataset(curves) -> list[CollapseRow]:
    """Rows of power against ``delta*sqrt(n)`` and the signal-to-noise ratio."""
    rows = []
    for c in curves:
        a = signal_constant(get_profile(c.profile)) if c.profile in ("linear", "sinusoidal", "step") else math.nan
        sigma0 = math.sqrt(baseline_variance(c.e0))
        for p in c.points:
            x = p.delta * math.sqrt(c.n)
            rows.append(CollapseRow(
                profile=c.profile, n=c.n, e0=c.e0, delta=p.delta,
                rescaled=x, snr=a * x / sigma0, power=p.power, se=p.se,
            ))
    rows.sort(key=lambda r: (r.profile, r.e0, r.n, r.delta))
    return rows


def collapse_curve(curve: PowerCurve, coordinate: str = "rescaled") -> tuple[np.ndarray, np.ndarray]:
    x = curve.deltas * math.sqrt(curve.n)
    if coordinate == "snr":
        a = signal_constant(get_profile(curve.profile))
        x = a * x / math.sqrt(baseline_variance(curve.e0))
    return x, curve.powers


def transition_band(curve: PowerCurve, lo: float = 0.2, hi: float = 0.8, coordinate: str = "rescaled") -> tuple[float, float]:
    """Range of the collapse coordinate over which ``curve`` climbs from ``lo`` to ``hi``."""
    x, y = collapse_curve(curve, coordinate)
    ymono = np.maximum.accumulate(y)
    if ymono[-1] < hi or ymono[0] > lo:
        raise InsufficientDataError("curve does not span the transition band")
    return float(np.interp(lo, ymono, x)), float(np.interp(hi, ymono, x))


def collapse_spread(
    curves, band: tuple[float, float], coordinate: str = "rescaled", points: int = 41
) -> dict[tuple, float]:
    """Largest vertical gap between each pair of curves inside ``band``.

    Curves are interpolated piecewise-linearly in the collapse coordinate;
    each pair is compared only where both are defined.  Pairs with no
    overlap inside the band are omitted.
    """
    xs = np.linspace(band[0], band[1], points)
    out = {}
    for a, b in combinations(curves, 2):
        xa, ya = collapse_curve(a, coordinate)
        xb, yb = collapse_curve(b, coordinate)
        lo = max(xa[0], xb[0])
        hi = min(xa[-1], xb[-1])
        sel = xs[(xs >= lo) & (xs <= hi)]
        if sel.size == 0:
            continue
        gap = np.abs(np.interp(sel, xa, ya) - np.interp(sel, xb, yb))
        out[(a.profile, a.n, b.profile, b.n)] = float(gap.max())
    return out
