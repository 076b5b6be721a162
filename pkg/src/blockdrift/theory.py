"""Numerical checks of the detectability bounds.

Covers the Bernoulli KL divergence and its quadratic expansion, the
Riemann-sum error of ``(1/n) sum g(t_i)^2``, Pinsker's bound on total
variation, the CUSUM achievability amplitude, and an exact-enumeration
oracle for blocks of at most 20 trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .calibration import bridge_quantile
from .cusum import statistics
from .errors import ConfigurationError, DomainError
from .model import ModelParams, baseline_variance, probabilities
from .profiles import DriftProfile, canonical_profiles, l2_norm, signal_constant

MAX_ENUMERATION_N = 20


def normal_quantile(p: float) -> float:
    """Standard normal quantile ``Phi^{-1}(p)``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    return float(special.ndtri(p))


def kl_bernoulli(p: float, q: float) -> float:
    """``KL(Bern(p) || Bern(q))`` in nats, with ``0 log 0 = 0``."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return float(special.xlogy(p, p / q) + special.xlogy(1.0 - p, (1.0 - p) / (1.0 - q)))


def _kl_terms(p: np.ndarray, q: float) -> np.ndarray:
    return special.xlogy(p, p / q) + special.xlogy(1.0 - p, (1.0 - p) / (1.0 - q))


def kl_block(e0: float, delta: float, profile: DriftProfile, n: int) -> float:
    """Exact KL of the drifted block law from the null law (sum over trials)."""
    p = probabilities(ModelParams(e0=e0, n=n, delta=delta, profile=profile))
    return math.fsum(_kl_terms(p, e0))


def kl_quadratic_approx(e0: float, delta: float, profile: DriftProfile, n: int) -> float:
    """Leading term ``delta^2 / (2 sigma0^2) * sum_i g(t_i)^2``."""
    t = np.arange(1, n + 1) / n
    return delta**2 / (2.0 * baseline_variance(e0)) * math.fsum(profile(t) ** 2)


def riemann_gap(profile: DriftProfile, n: int) -> float:
    """``|(1/n) sum g(t_i)^2 - integral of g^2|``."""
    t = np.arange(1, n + 1) / n
    return abs(math.fsum(profile(t) ** 2) / n - l2_norm(profile) ** 2)


def pinsker_tv_bound(kl: float) -> float:
    if kl < 0:
        raise DomainError("KL divergence must be non-negative")
    return math.sqrt(kl / 2.0)


def required_delta(n: int, e0: float, alpha: float, beta: float, a_star: float) -> float:
    """Achievability amplitude ``sigma0 (q_alpha + z_{1-beta}) / (a_star sqrt(n))``.

    A conservative bound: empirical thresholds sit below it.
    """
    if a_star <= 0:
        raise DomainError("a_star must be positive")
    sigma0 = math.sqrt(baseline_variance(e0))
    return sigma0 * (bridge_quantile(alpha) + normal_quantile(1.0 - beta)) / (a_star * math.sqrt(n))


@dataclass(frozen=True)
class TheoryBound:
    kl_exact: float
    kl_quadratic: float
    tv_bound: float
    c_alpha_beta: float
    a_star: float


def theory_bound(
    n: int, e0: float, delta: float, profile: DriftProfile, alpha: float = 0.05, beta: float = 0.2
) -> TheoryBound:
    kl = kl_block(e0, delta, profile, n)
    a = signal_constant(profile)
    return TheoryBound(
        kl_exact=kl,
        kl_quadratic=kl_quadratic_approx(e0, delta, profile, n),
        tv_bound=pinsker_tv_bound(kl),
        c_alpha_beta=required_delta(n, e0, alpha, beta, a) * math.sqrt(n),
        a_star=a,
    )


# -- exact enumeration -------------------------------------------------------


def _all_outcomes(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def _log_probs(bits: np.ndarray, p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lp1 = np.log(p)
        lp0 = np.log1p(-p)
    # select per-trial log-probabilities; -inf where the outcome is impossible
    return np.where(bits == 1, lp1, lp0).sum(axis=1)


@dataclass(frozen=True)
class ExactTestLaw:
    """Exact joint laws of a block under the null and an alternative.

    ``p0``/``p1`` hold the probability of every outcome in binary order
    (trial 1 is the most significant bit); ``t_stat`` is ``T_n`` per outcome.
    """

    n: int
    e0: float
    delta: float
    profile_label: str
    p0: np.ndarray = field(repr=False)
    p1: np.ndarray = field(repr=False)
    t_stat: np.ndarray = field(repr=False)
    threshold: float | None = None

    def support(self) -> np.ndarray:
        return np.unique(self.t_stat)

    def distribution(self, which: str = "h0") -> tuple[np.ndarray, np.ndarray]:
        """Values of ``T_n`` and their exact probabilities."""
        w = self.p0 if which == "h0" else self.p1
        vals, inv = np.unique(self.t_stat, return_inverse=True)
        return vals, np.bincount(inv, weights=w, minlength=vals.size)

    def size(self, threshold: float | None = None) -> float:
        tau = self.threshold if threshold is None else threshold
        return math.fsum(self.p0[self.t_stat > tau])

    def power(self, threshold: float | None = None) -> float:
        tau = self.threshold if threshold is None else threshold
        return math.fsum(self.p1[self.t_stat > tau])

    @property
    def tv(self) -> float:
        return 0.5 * math.fsum(np.abs(self.p1 - self.p0))

    @property
    def kl(self) -> float:
        """Joint ``KL(P1 || P0)`` summed over all outcomes."""
        mask = self.p1 > 0
        return math.fsum(self.p1[mask] * (np.log(self.p1[mask]) - np.log(self.p0[mask])))

    def exact_threshold(self, alpha: float) -> float:
        """Smallest support point ``tau`` with exact null size ``P0(T > tau) <= alpha``."""
        vals, probs = self.distribution("h0")
        tail = np.cumsum(probs[::-1])[::-1]  # tail[j] = P0(T >= vals[j])
        above = np.append(tail[1:], 0.0)  # P0(T > vals[j])
        j = int(np.nonzero(above <= alpha + 1e-15)[0][0])
        return float(vals[j])

    def randomized_test(self, alpha: float) -> tuple[float, float]:
        """``(tau, gamma)`` of the test with null size exactly ``alpha``.

        Rejects when ``T > tau`` and with probability ``gamma`` when ``T == tau``.
        """
        tau = self.exact_threshold(alpha)
        at = self.t_stat == tau
        gamma = (alpha - self.size(tau)) / math.fsum(self.p0[at])
        return tau, min(1.0, max(0.0, gamma))

    def randomized_power(self, alpha: float) -> float:
        tau, gamma = self.randomized_test(alpha)
        return self.power(tau) + gamma * math.fsum(self.p1[self.t_stat == tau])


def exact_enumeration(
    n: int, e0: float, delta: float, profile: DriftProfile | None, threshold=None
) -> ExactTestLaw:
    """Enumerate all ``2**n`` outcomes (``n <= 20``)."""
    if n > MAX_ENUMERATION_N:
        raise ConfigurationError(f"exact enumeration is limited to n <= {MAX_ENUMERATION_N}")
    bits = _all_outcomes(n)
    p_null = np.full(n, e0)
    p_alt = probabilities(ModelParams(e0=e0, n=n, delta=delta, profile=profile))
    p0 = np.exp(_log_probs(bits, p_null))
    p1 = np.exp(_log_probs(bits, p_alt))
    tau = None if threshold is None else float(getattr(threshold, "tau", threshold))
    return ExactTestLaw(
        n=n,
        e0=e0,
        delta=delta,
        profile_label="none" if profile is None else profile.label,
        p0=p0,
        p1=p1,
        t_stat=statistics(bits),
        threshold=tau,
    )


def mixture_law(laws: list[ExactTestLaw]) -> ExactTestLaw:
    """Uniform mixture of alternatives sharing ``(n, e0)``; the null is kept."""
    first = laws[0]
    p1 = np.mean([law.p1 for law in laws], axis=0)
    return ExactTestLaw(
        n=first.n,
        e0=first.e0,
        delta=first.delta,
        profile_label="+".join(law.profile_label for law in laws),
        p0=first.p0,
        p1=p1,
        t_stat=first.t_stat,
        threshold=first.threshold,
    )


@dataclass(frozen=True)
class TrendPoint:
    n: int
    delta: float
    alpha: float
    threshold: float
    gamma: float
    power: float  # exact power of the size-alpha randomized test
    deterministic_size: float
    deterministic_power: float
    tv: float
    pinsker: float

    @property
    def excess(self) -> float:
        return self.power - self.alpha


def lower_bound_trend(
    ns=(8, 12, 16, 20),
    e0: float = 0.5,
    alpha: float = 0.05,
    scale: float = 0.5,
    exponent: float = 0.75,
    profiles: list[DriftProfile] | None = None,
) -> list[TrendPoint]:
    """Exact power of the size-alpha CUSUM test along ``delta_n = scale * n**-exponent``.

    The discrete statistic cannot hit size ``alpha`` exactly, so the test
    randomizes on the boundary atom; the non-randomized size and power are
    reported alongside.  The alternative is the uniform mixture over ``profiles`` (the three
    canonical shapes by default).  With ``n delta_n^2 -> 0`` the power
    should approach ``alpha``.
    """
    profiles = canonical_profiles() if profiles is None else profiles
    out = []
    for n in ns:
        delta = scale * n ** (-exponent)
        laws = [exact_enumeration(n, e0, delta, g) for g in profiles]
        mix = mixture_law(laws)
        tau, gamma = mix.randomized_test(alpha)
        out.append(TrendPoint(
            n=n,
            delta=delta,
            alpha=alpha,
            threshold=tau,
            gamma=gamma,
            power=mix.randomized_power(alpha),
            deterministic_size=mix.size(tau),
            deterministic_power=mix.power(tau),
            tv=mix.tv,
            pinsker=pinsker_tv_bound(mix.kl),
        ))
    return out
