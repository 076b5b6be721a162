"""SVG figures.  Output bytes are deterministic for fixed inputs."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .cusum import statistic  # noqa: E402
from .model import ModelParams, baseline_variance, sample_block  # noqa: E402
from .profiles import CANONICAL_KINDS, get_profile  # noqa: E402

COLORS = {"linear": "tab:blue", "sinusoidal": "tab:green", "step": "tab:red"}
MARKERS = {"linear": "o", "sinusoidal": "s", "step": "^"}

_RC = {"svg.hashsalt": "blockdrift", "svg.fonttype": "none", "font.size": 9}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def figure_trajectory(path, seed: int = 0, n: int = 2000, e0: float = 0.05, delta: float = 0.03) -> Path:
    """Partial sums under the null (grey) and a sinusoidal alternative (red)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3))
        k = np.arange(1, n + 1)
        null = statistic(sample_block(ModelParams(e0=e0, n=n), seed, 0))
        alt = statistic(sample_block(ModelParams(e0=e0, n=n, delta=delta, profile=get_profile("sinusoidal")), seed, 1))
        ax.plot(k, null.partial_sums, color="0.55", lw=0.9, label=r"$H_0$")
        ax.plot(k, alt.partial_sums, color="tab:red", lw=0.9, label=rf"$H_1$ sinusoidal, $\delta={delta:g}$")
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("k")
        ax.set_ylabel(r"$S_k$")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def figure_scaling(path, table: dict, e0: float = 0.05) -> Path:
    """Log-log plot of the detectability threshold against n with an n^-1/2 guide."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        anchor = None
        for prof in CANONICAL_KINDS:
            pts = sorted((n, v) for (n, e, p), v in table.items() if p == prof and math.isclose(e, e0) and v)
            if not pts:
                continue
            ns, vs = zip(*pts)
            ax.loglog(ns, vs, MARKERS[prof] + "-", color=COLORS[prof], label=prof)
            if anchor is None:
                anchor = (ns[-1], vs[-1])
        if anchor is not None:
            ns_all = np.array(sorted({n for (n, e, p) in table if math.isclose(e, e0)}), dtype=float)
            ax.loglog(ns_all, anchor[1] * np.sqrt(anchor[0] / ns_all) * 1.6, "k--", lw=0.8, label=r"$\propto n^{-1/2}$")
        ax.set_xlabel("block size n")
        ax.set_ylabel(r"$\hat\delta_{\min}$")
        ax.set_title(rf"$e_0 = {e0:g}$")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def figure_collapse(path, curves) -> Path:
    """One panel per profile: power against delta*sqrt(n), one line per n."""
    profiles = [p for p in CANONICAL_KINDS if any(c.profile == p for c in curves)]
    ns = sorted({c.n for c in curves})
    cmap = plt.get_cmap("viridis")
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(profiles), figsize=(3.2 * len(profiles), 3), sharey=True, squeeze=False)
        for ax, prof in zip(axes[0], profiles):
            for i, n in enumerate(ns):
                for c in curves:
                    if c.profile == prof and c.n == n:
                        x = c.deltas * math.sqrt(n)
                        color = "tab:red" if i == 0 else cmap(i / max(1, len(ns) - 1))
                        ax.plot(x, c.powers, color=color, lw=1.0, zorder=3 if i == 0 else 2, label=f"n={n}")
            ax.set_title(prof)
            ax.set_xlabel(r"$\delta\sqrt{n}$")
        axes[0][0].set_ylabel("power")
        axes[0][-1].legend(frameon=False, fontsize=7)
        fig.tight_layout()
        return _save(fig, path)


def figure_tradeoff(path, table: dict, e0: float = 0.05, profile: str = "step") -> Path:
    """Estimation variance sigma0^2/n next to the detectability threshold."""
    pts = sorted((n, v) for (n, e, p), v in table.items() if p == profile and math.isclose(e, e0) and v)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ns = np.array(sorted({n for (n, e, p) in table if math.isclose(e, e0)}), dtype=float)
        ax.loglog(ns, baseline_variance(e0) / ns, "k-", label=r"Var$(\hat e) = \sigma_0^2/n$")
        ax.set_xlabel("block size n")
        ax.set_ylabel("variance")
        ax2 = ax.twinx()
        ax2.set_yscale("log")
        if pts:
            n2, v2 = zip(*pts)
            ax2.plot(n2, v2, MARKERS[profile] + "-", color=COLORS[profile], label=rf"$\hat\delta_{{\min}}$ ({profile})")
        ax2.set_ylabel(r"$\hat\delta_{\min}$")
        h1, l1 = ax.get_legend_handles_labels()
        h2, l2 = ax2.get_legend_handles_labels()
        ax.legend(h1 + h2, l1 + l2, frameon=False, loc="upper right")
        fig.tight_layout()
        return _save(fig, path)
