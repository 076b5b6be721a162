"""Machine-checkable properties collected into one JSON report."""

from __future__ import annotations

import math


from .calibration import bridge_quantile, bridge_sup_cdf, mc_threshold
from .profiles import canonical_profiles, cumulative, grid_signal_constant, signal_constant, integral
from .theory import (
    exact_enumeration,
    kl_block,
    kl_quadratic_approx,
    lower_bound_trend,
    pinsker_tv_bound,
    required_delta,
    riemann_gap,
)


def _check(name, lhs, rhs, tolerance, passed) -> dict:
    return {
        "name": name,
        "lhs": None if lhs is None else float(lhs),
        "rhs": None if rhs is None else float(rhs),
        "tolerance": tolerance,
        "passed": bool(passed),
    }


def profile_checks() -> list[dict]:
    out = []
    for g in canonical_profiles():
        m = integral(g)
        out.append(_check(f"mean_zero/{g.kind}", abs(m), 0.0, 1e-9, abs(m) <= 1e-9))
        a_grid = grid_signal_constant(g)
        a = signal_constant(g)
        out.append(_check(f"signal_constant_grid/{g.kind}", a_grid, a, 1e-4, abs(a_grid - a) <= 1e-4))
        end = cumulative(g, 1.0)
        out.append(_check(f"cumulative_at_one/{g.kind}", end, 0.0, 1e-9, abs(end) <= 1e-9))
        # C measured on small n must bound the gap at larger n; 1e-12 absorbs
        # rounding where the Riemann sum is exact (sinusoid)
        c = max(n * riemann_gap(g, n) for n in (10, 20, 50))
        excess = max(riemann_gap(g, n) - c / n for n in (100, 1000, 10_000))
        out.append(_check(f"riemann_bound/{g.kind}", excess, 0.0, "gap <= C/n + 1e-12", excess <= 1e-12))
    return out


def kl_checks(e0: float = 0.05, delta: float = 0.01, n: int = 1000) -> list[dict]:
    out = []
    for g in canonical_profiles():
        kl = kl_block(e0, delta, g, n)
        quad = kl_quadratic_approx(e0, delta, g, n)
        rel = abs(kl - quad) / kl
        out.append(_check(f"kl_quadratic/{g.kind}", rel, 0.05, "< 0.05", rel < 0.05))
        ratio = kl / kl_block(e0, delta / 2, g, n)
        out.append(_check(f"kl_doubling/{g.kind}", ratio, 4.0, "2%", abs(ratio / 4.0 - 1) <= 0.02))
    return out


def oracle_checks(ns=(8, 12, 14), e0: float = 0.3, delta: float = 0.2) -> list[dict]:
    out = []
    for n in ns:
        for g in canonical_profiles():
            law = exact_enumeration(n, e0, delta, g)
            kb = kl_block(e0, delta, g, n)
            out.append(_check(f"joint_kl/n={n}/{g.kind}", law.kl, kb, 1e-10, abs(law.kl - kb) <= 1e-10))
            tv = law.tv
            pb = pinsker_tv_bound(kb)
            out.append(_check(f"pinsker/n={n}/{g.kind}", tv, pb, "tv <= bound", tv <= pb))
    return out


def oracle_size_check(n: int = 12, e0: float = 0.3, alpha: float = 0.05, M0: int = 10_000, seed: int = 7) -> dict:
    th = mc_threshold(n, e0, alpha, M0, seed)
    exact = exact_enumeration(n, e0, 0.0, None).size(th.tau)
    se = math.sqrt(alpha * (1 - alpha) / M0)
    return _check(f"exact_size_at_mc_threshold/n={n}", exact, alpha + 3 * se, "<= alpha + 3 SE", exact <= alpha + 3 * se)


def trend_check() -> dict:
    pts = lower_bound_trend()
    gaps = [p.power - p.alpha for p in pts]
    mono = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] >= 0
    return _check("lower_bound_trend", gaps[-1], gaps[0], "strictly decreasing", mono)


def constant_checks() -> list[dict]:
    q = bridge_quantile(0.05)
    rd = required_delta(4000, 0.05, 0.05, 0.2, 0.5)
    rt = bridge_sup_cdf(bridge_quantile(0.01))
    return [
        _check("bridge_quantile_0.05", q, 1.3581, 1e-4, abs(q - 1.3581) <= 1e-4),
        _check("bridge_roundtrip_0.01", rt, 0.99, 1e-7, abs(rt - 0.99) <= 1e-7),
        _check("required_delta_step_4000", rd, 0.0152, 5e-5, abs(rd - 0.0152) <= 5e-5),
    ]


def verification_report(cfg=None, tau_override: float | None = None, include_size: bool = True) -> dict:
    checks = []
    checks += profile_checks()
    checks += kl_checks()
    checks += oracle_checks()
    checks.append(oracle_size_check())
    checks.append(trend_check())
    checks += constant_checks()
    if include_size and cfg is not None:
        from .experiments import run_size_check

        for row in run_size_check(cfg, tau_override=tau_override):
            band = 3 * math.sqrt(cfg.alpha * (1 - cfg.alpha) / row["M"])
            checks.append(_check(
                f"size/n={row['n']}/e0={row['e0']:g}", row["rate"], cfg.alpha, band, row["passed"]
            ))
    return {"passed": all(c["passed"] for c in checks), "checks": checks}
