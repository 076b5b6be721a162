"""Mean-preserving drift shapes on the unit interval.

A profile ``g`` describes how the error probability moves inside a block,
``e(t) = e0 + delta * g(t)``.  The three canonical shapes (linear,
sinusoidal, step) carry closed-form cumulative integrals and signal
constants; tabulated custom shapes fall back to quadrature and grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError

CANONICAL_KINDS = ("linear", "sinusoidal", "step")

#: Grid used for the sup of |G| when no closed form exists.
SIGNAL_GRID_POINTS = 100_000
#: Grid used by :func:`check_admissible`.
ADMISSIBILITY_GRID_POINTS = 10_000

# Default drift-class parameters (L, c); all canonical shapes except the
# step's Lipschitz clause are admissible under these.
DEFAULT_LIPSCHITZ = 2.0 * math.pi
DEFAULT_ENERGY_FLOOR = 0.5

_MEAN_TOL = 1e-9
_SUP_TOL = 1e-12
_QUAD_ABS_TOL = 1e-10


def _g_linear(t):
    return 2.0 * t - 1.0


def _g_sinusoidal(t):
    return np.sin(2.0 * np.pi * t)


def _g_step(t):
    # right-closed at 1/2: g(1/2) = +1
    return np.where(t < 0.5, -1.0, 1.0)


def _G_linear(t):
    return t * t - t


def _G_sinusoidal(t):
    return (1.0 - np.cos(2.0 * np.pi * t)) / (2.0 * np.pi)


def _G_step(t):
    return np.where(t < 0.5, -t, t - 1.0)


_CANONICAL = {
    "linear": (_g_linear, _G_linear, 0.25, "Linear"),
    "sinusoidal": (_g_sinusoidal, _G_sinusoidal, 1.0 / math.pi, "Sinusoidal"),
    "step": (_g_step, _G_step, 0.5, "Step"),
}


@dataclass(frozen=True)
class DriftProfile:
    """A normalized, mean-zero drift shape ``g`` on ``[0, 1]``.

    Instances are immutable and safe to share between worker processes.
    Build them with :func:`get_profile` or :func:`custom_profile` rather
    than directly.
    """

    kind: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    label: str
    # tabulated nodes, custom profiles only
    nodes: tuple[float, ...] | None = field(default=None, repr=False)

    def __call__(self, t):
        """Vectorized evaluation without domain checks."""
        return self.func(np.asarray(t, dtype=float))

    @property
    def is_canonical(self) -> bool:
        return self.kind in _CANONICAL

    def negated(self) -> "DriftProfile":
        """The mirrored shape ``-g`` (a custom profile)."""
        f = self.func
        return DriftProfile(
            kind="custom", func=lambda t: -f(t), label=f"-{self.label}", nodes=self.nodes
        )

    def __reduce__(self):
        # canonical profiles pickle by name so process pools can ship them
        if self.is_canonical:
            return (get_profile, (self.kind,))
        if self.nodes is not None:
            ts = np.asarray(self.nodes)
            return (custom_profile, (ts, self(ts), self.label))
        raise TypeError("custom profiles built from a callable cannot be pickled")


def get_profile(name: str | DriftProfile) -> DriftProfile:
    """Return a canonical profile by name (``linear``, ``sinusoidal``, ``step``)."""
    if isinstance(name, DriftProfile):
        return name
    key = name.strip().lower()
    aliases = {"lin": "linear", "sin": "sinusoidal", "sine": "sinusoidal"}
    key = aliases.get(key, key)
    if key not in _CANONICAL:
        raise KeyError(f"unknown drift profile {name!r}; expected one of {CANONICAL_KINDS}")
    g, _, _, label = _CANONICAL[key]
    return DriftProfile(kind=key, func=g, label=label)


def canonical_profiles() -> list[DriftProfile]:
    return [get_profile(k) for k in CANONICAL_KINDS]


def custom_profile(
    ts: Sequence[float] | Callable[[np.ndarray], np.ndarray],
    values: Sequence[float] | None = None,
    label: str = "custom",
) -> DriftProfile:
    """Build a user-supplied profile.

    Pass either tabulated ``(ts, values)`` pairs, interpolated linearly,
    or a vectorized callable as ``ts``.  The result must integrate to zero
    and satisfy ``sup |g| <= 1``; otherwise :class:`DomainError` is raised.
    """
    if callable(ts):
        func = ts
        nodes = None
    else:
        t_nodes = np.asarray(ts, dtype=float)
        g_nodes = np.asarray(values, dtype=float)
        if t_nodes.ndim != 1 or t_nodes.shape != g_nodes.shape or t_nodes.size < 2:
            raise DomainError("tabulated profile needs matching 1-d node and value arrays")
        if t_nodes[0] != 0.0 or t_nodes[-1] != 1.0 or np.any(np.diff(t_nodes) <= 0):
            raise DomainError("tabulated nodes must increase strictly from 0 to 1")

        def func(t, _x=t_nodes, _y=g_nodes):
            return np.interp(t, _x, _y)

        nodes = tuple(float(x) for x in t_nodes)

    profile = DriftProfile(kind="custom", func=func, label=label, nodes=nodes)
    mean = integral(profile)
    if abs(mean) > _MEAN_TOL:
        raise DomainError(f"profile is not mean-preserving: integral = {mean:.3e}")
    grid = np.linspace(0.0, 1.0, SIGNAL_GRID_POINTS)
    sup = float(np.max(np.abs(profile(grid))))
    if sup > 1.0 + _SUP_TOL:
        raise DomainError(f"profile violates sup|g| <= 1 (sup = {sup:.6g})")
    return profile


def _breakpoints(profile: DriftProfile) -> list[float] | None:
    if profile.kind == "step":
        return [0.5]
    if profile.nodes is not None and len(profile.nodes) > 2:
        return list(profile.nodes[1:-1])
    return None


def integral(profile: DriftProfile, upper: float = 1.0, power: int = 1) -> float:
    """Quadrature of ``g**power`` over ``[0, upper]``."""
    f = profile.func
    pts = _breakpoints(profile)
    if pts is not None:
        pts = [p for p in pts if 0.0 < p < upper] or None
    if upper == 0.0:
        return 0.0
    val, _ = integrate.quad(
        lambda u: float(f(np.float64(u))) ** power,
        0.0,
        upper,
        epsabs=_QUAD_ABS_TOL,
        epsrel=1e-12,
        limit=500,
        points=pts,
    )
    return float(val)


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    return t


def eval_profile(profile: DriftProfile, t: float) -> float:
    """Evaluate ``g(t)`` for a single ``t`` in ``[0, 1]``."""
    return float(profile(_check_t(t)))


def cumulative(profile: DriftProfile, t: float) -> float:
    """Cumulative drift ``G(t) = integral of g over [0, t]``.

    Canonical kinds use closed forms; custom profiles use adaptive
    quadrature with absolute tolerance 1e-10.
    """
    t = _check_t(t)
    if profile.is_canonical:
        return float(_CANONICAL[profile.kind][1](t))
    return integral(profile, upper=t)


def cumulative_grid(profile: DriftProfile, ts) -> np.ndarray:
    """Vectorized ``G`` on an increasing grid starting at 0."""
    ts = np.asarray(ts, dtype=float)
    if profile.is_canonical:
        return np.asarray(_CANONICAL[profile.kind][1](ts), dtype=float)
    return integrate.cumulative_trapezoid(profile(ts), ts, initial=0.0)


def grid_signal_constant(profile: DriftProfile, grid_points: int = SIGNAL_GRID_POINTS) -> float:
    """``max |G|`` over a uniform grid; a lower bound on the true sup."""
    ts = np.linspace(0.0, 1.0, grid_points)
    if profile.is_canonical:
        G = _CANONICAL[profile.kind][1](ts)
    else:
        # refine the integration grid so the trapezoid error is negligible
        fine = np.linspace(0.0, 1.0, 4 * (grid_points - 1) + 1)
        G = cumulative_grid(profile, fine)[::4]
    return float(np.max(np.abs(G)))


def signal_constant(profile: DriftProfile) -> float:
    """Signal constant ``A(g) = sup_t |G(t)|``.

    Exact for the canonical shapes (1/4, 1/pi, 1/2).  For custom shapes
    this is the sup over a ``SIGNAL_GRID_POINTS`` uniform grid.
    """
    if profile.is_canonical:
        return _CANONICAL[profile.kind][2]
    return grid_signal_constant(profile, SIGNAL_GRID_POINTS)


def l2_norm(profile: DriftProfile) -> float:
    return math.sqrt(integral(profile, power=2))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Numeric membership test of a profile in the drift class G(L, c)."""

    mean_abs: float
    sup_norm: float
    lipschitz_est: float
    l2_norm: float
    L: float
    c: float
    passes: dict[str, bool]
    lipschitz_exempt: bool = False
    note: str = ""

    @property
    def admissible(self) -> bool:
        ok = dict(self.passes)
        if self.lipschitz_exempt:
            ok["lipschitz"] = True
        return all(ok.values())


def check_admissible(
    profile: DriftProfile,
    L: float = DEFAULT_LIPSCHITZ,
    c: float = DEFAULT_ENERGY_FLOOR,
    grid_points: int = ADMISSIBILITY_GRID_POINTS,
) -> AdmissibilityReport:
    if L <= 0 or c <= 0:
        raise DomainError("L and c must be positive")
    ts = np.linspace(0.0, 1.0, grid_points)
    g = profile(ts)
    mean_abs = abs(integral(profile))
    sup = float(np.max(np.abs(g)))
    energy = l2_norm(profile)

    exempt = False
    note = ""
    if profile.kind == "step":
        lip = math.inf
        exempt = True
        note = (
            "step profile is discontinuous at t=1/2; exempted from the Lipschitz "
            "clause (a smoothed step has the same leading-order behaviour)"
        )
    else:
        lip = float(np.max(np.abs(np.diff(g)) / np.diff(ts)))

    passes = {
        "mean_zero": mean_abs <= _MEAN_TOL,
        "sup_norm": sup <= 1.0 + _SUP_TOL,
        "lipschitz": lip <= L * (1.0 + 1e-9),
        "energy": energy >= c,
    }
    return AdmissibilityReport(
        mean_abs=mean_abs,
        sup_norm=sup,
        lipschitz_est=lip,
        l2_norm=energy,
        L=L,
        c=c,
        passes=passes,
        lipschitz_exempt=exempt,
        note=note,
    )


def delta_max(e0: float) -> float:
    """Largest amplitude keeping ``e0 + delta*g`` inside [0, 1] for ``|g| <= 1``."""
    if not 0.0 < e0 < 1.0:
        raise DomainError(f"e0 must lie in (0, 1), got {e0}")
    return min(e0, 1.0 - e0)
