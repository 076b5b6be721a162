"""Level-alpha thresholds for the CUSUM statistic.

Two routes are available: Monte Carlo under the null at the block's own
``(n, e0)``, and the asymptotic law of the supremum of a Brownian bridge
(Kolmogorov's distribution).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cusum import statistics
from .errors import CalibrationError, DomainError
from .model import ModelParams, iter_bit_batches

SERIES_TOL = 1e-12
QUANTILE_TOL = 1e-8
MIN_CALIBRATION_SAMPLES = 1000


def bridge_sup_cdf(x: float) -> float:
    """``P(sup_t |B0(t)| <= x)`` for a standard Brownian bridge.

    Uses ``1 - 2 sum_k (-1)^(k+1) exp(-2 k^2 x^2)``, truncated once a term
    drops below 1e-12.  Below ``x = 0.2`` that series converges slowly and
    the equivalent theta-function form
    ``sqrt(2 pi)/x sum_k exp(-(2k-1)^2 pi^2 / (8 x^2))`` is summed instead.
    """
    x = float(x)
    if x < 0:
        raise DomainError("x must be non-negative")
    if x < 0.05:
        # first theta term is exp(-pi^2/(8x^2)) < 1e-200 here
        return 0.0
    if x < 0.2:
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * x * x))
            total += term
            if term < SERIES_TOL * max(total, 1e-300) or term == 0.0:
                break
            k += 1
        return min(1.0, math.sqrt(2.0 * math.pi) / x * total)
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < SERIES_TOL:
            break
        k += 1
    return min(1.0, max(0.0, 1.0 - 2.0 * total))


def bridge_quantile(alpha: float) -> float:
    """Upper ``alpha`` point ``q_alpha`` of ``sup |B0|`` by bisection (tol 1e-8)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    target = 1.0 - alpha
    lo, hi = 0.0, 10.0
    while hi - lo > QUANTILE_TOL:
        mid = 0.5 * (lo + hi)
        if bridge_sup_cdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class CalibratedThreshold:
    tau: float
    alpha: float
    n: int
    provenance: str  # "monte_carlo" or "asymptotic"
    e0: float | None = None
    M0: int | None = None
    seed: int | None = None
    achieved_size: float | None = None
    achieved_se: float | None = None
    degenerate_fraction: float | None = None

    @property
    def key(self) -> tuple:
        return (self.n, self.e0, self.alpha, self.M0, self.seed)


def null_statistics(n: int, e0: float, M: int, seed: int) -> np.ndarray:
    """``M`` independent null statistics, replication ``r`` from stream ``(seed, r)``."""
    params = ModelParams(e0=e0, n=n)
    return np.concatenate([statistics(b) for b in iter_bit_batches(params, seed, M)])


def conservative_quantile(sample: np.ndarray, alpha: float) -> tuple[float, float]:
    """Smallest sample value ``v`` with ``mean(sample > v) <= alpha``.

    Returns ``(v, mean(sample > v))``.
    """
    s = np.sort(np.asarray(sample, dtype=float))
    M = s.size
    values = np.unique(s)
    above = M - np.searchsorted(s, values, side="right")
    ok = np.nonzero(above <= alpha * M)[0]
    j = ok[0]
    return float(values[j]), float(above[j] / M)


def mc_threshold(
    n: int, e0: float, alpha: float = 0.05, M0: int = 10_000, seed: int = 0
) -> CalibratedThreshold:
    """Monte Carlo threshold from ``M0`` null blocks at ``(n, e0)``.

    The empirical quantile is taken conservatively, so the size on the
    calibration sample never exceeds ``alpha``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if M0 < MIN_CALIBRATION_SAMPLES:
        raise DomainError(f"M0 must be at least {MIN_CALIBRATION_SAMPLES}")
    sample = null_statistics(n, e0, M0, seed)
    degenerate = float(np.mean(sample == 0.0))
    if degenerate > 0.5:
        raise CalibrationError(
            f"{degenerate:.1%} of null blocks are constant at n={n}, e0={e0}; cannot calibrate"
        )
    tau, size = conservative_quantile(sample, alpha)
    return CalibratedThreshold(
        tau=tau,
        alpha=alpha,
        n=n,
        provenance="monte_carlo",
        e0=e0,
        M0=M0,
        seed=seed,
        achieved_size=size,
        achieved_se=math.sqrt(size * (1.0 - size) / M0),
        degenerate_fraction=degenerate,
    )


def asymptotic_threshold(n: int, alpha: float = 0.05, e0: float | None = None) -> CalibratedThreshold:
    return CalibratedThreshold(tau=bridge_quantile(alpha), alpha=alpha, n=n, provenance="asymptotic", e0=e0)


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    se: float
    M: int


def null_rejection_rate(n: int, e0: float, threshold, M: int, seed: int) -> RateEstimate:
    """Size of the test on ``M`` fresh null blocks, with binomial SE."""
    tau = float(getattr(threshold, "tau", threshold))
    rate = float(np.mean(null_statistics(n, e0, M, seed) > tau))
    return RateEstimate(rate=rate, se=math.sqrt(rate * (1.0 - rate) / M), M=M)


_CACHE_FIELDS = [
    "n", "e0", "alpha", "M0", "seed", "tau",
    "achieved_size", "achieved_se", "degenerate_fraction",
]


class ThresholdCache:
    """CSV-backed store of Monte Carlo thresholds keyed by ``(n, e0, alpha, M0, seed)``.

    Values are written at full precision so a reloaded threshold is
    bit-identical to the computed one.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._store: dict[tuple, CalibratedThreshold] = {}
        if self.path is not None and self.path.exists():
            for th in load_thresholds(self.path):
                self._store[th.key] = th

    def __len__(self):
        return len(self._store)

    def __contains__(self, key):
        return key in self._store

    def add(self, threshold: CalibratedThreshold):
        self._store[threshold.key] = threshold

    def get(self, n, e0, alpha, M0, seed) -> CalibratedThreshold:
        """Cached threshold, computed (and persisted) on an exact-key miss."""
        key = (n, e0, alpha, M0, seed)
        if key not in self._store:
            self.add(mc_threshold(n, e0, alpha, M0, seed))
            self.save()
        return self._store[key]

    def save(self):
        if self.path is not None:
            save_thresholds(self.path, self._store.values())

    def values(self):
        return list(self._store.values())


def save_thresholds(path, thresholds) -> Path:
    path = Path(path)
    rows = sorted(thresholds, key=lambda t: t.key)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CACHE_FIELDS)
        for t in rows:
            w.writerow([
                t.n, repr(t.e0), repr(t.alpha), t.M0, t.seed, repr(t.tau),
                repr(t.achieved_size), repr(t.achieved_se), repr(t.degenerate_fraction),
            ])
    return path


def load_thresholds(path) -> list[CalibratedThreshold]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(CalibratedThreshold(
                tau=float(row["tau"]),
                alpha=float(row["alpha"]),
                n=int(row["n"]),
                provenance="monte_carlo",
                e0=float(row["e0"]),
                M0=int(row["M0"]),
                seed=int(row["seed"]),
                achieved_size=float(row["achieved_size"]),
                achieved_se=float(row["achieved_se"]),
                degenerate_fraction=float(row["degenerate_fraction"]),
            ))
    return out
