"""Blockwise Bernoulli error model under stationarity and drift.

Trial ``i`` (1-based) sits at ``t_i = i/n`` and errs with probability
``e0 + delta * g(t_i)``.  ``profile=None`` or ``delta=0`` is the null.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import AdmissibilityError, DomainError
from .profiles import DriftProfile, delta_max, get_profile

# Rows sampled per vectorized batch; peak memory is about 9 bytes per cell.
BATCH_ROWS = 512


@dataclass(frozen=True)
class ModelParams:
    e0: float
    n: int
    delta: float = 0.0
    profile: DriftProfile | None = None

    def __post_init__(self):
        if not 0.0 < self.e0 < 1.0:
            raise DomainError(f"e0 must lie in (0, 1), got {self.e0}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if self.delta < 0:
            raise DomainError("delta must be non-negative")
        if isinstance(self.profile, str):
            object.__setattr__(self, "profile", get_profile(self.profile))
        if self.profile is not None and self.delta > delta_max(self.e0) * (1 + 1e-12):
            raise AdmissibilityError(
                f"delta={self.delta} exceeds delta_max={delta_max(self.e0)} for e0={self.e0}"
            )

    @property
    def is_null(self) -> bool:
        return self.profile is None or self.delta == 0.0

    def times(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=float) / self.n


def probabilities(params: ModelParams) -> np.ndarray:
    """Per-trial error probabilities ``p_1..p_n``; never clamped."""
    if params.is_null:
        return np.full(params.n, params.e0)
    p = params.e0 + params.delta * params.profile(params.times())
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise AdmissibilityError("drift pushes an error probability outside [0, 1]")
    return p


def error_prob(params: ModelParams, i: int) -> float:
    if not 1 <= i <= params.n:
        raise DomainError(f"trial index must lie in 1..{params.n}, got {i}")
    if params.is_null:
        return params.e0
    p = params.e0 + params.delta * float(params.profile(i / params.n))
    if not 0.0 <= p <= 1.0:
        raise AdmissibilityError(f"p_{i} = {p} lies outside [0, 1]")
    return p


def baseline_variance(e0: float) -> float:
    """Null per-trial variance ``e0 (1 - e0)``."""
    if not 0.0 < e0 < 1.0:
        raise DomainError(f"e0 must lie in (0, 1), got {e0}")
    return e0 * (1.0 - e0)


@dataclass(frozen=True)
class TrialBlock:
    bits: np.ndarray = field(repr=False)
    params: ModelParams
    seed: int
    replication_index: int

    def __post_init__(self):
        if self.bits.shape != (self.params.n,):
            raise DomainError("block length does not match params.n")

    @property
    def n(self) -> int:
        return self.params.n

    def to_csv_row(self) -> list[str]:
        """Debug row: seed, replication, e0, delta, profile, n, bits as 0/1 text."""
        p = self.params
        return [
            str(self.seed),
            str(self.replication_index),
            repr(p.e0),
            repr(p.delta),
            "" if p.profile is None else p.profile.kind,
            str(p.n),
            "".join("1" if b else "0" for b in self.bits),
        ]

    @classmethod
    def from_csv_row(cls, row: list[str]) -> "TrialBlock":
        seed, rep, e0, delta, kind, n, bits = row
        params = ModelParams(
            e0=float(e0), n=int(n), delta=float(delta), profile=get_profile(kind) if kind else None
        )
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        return cls(bits=arr.astype(np.uint8), params=params, seed=int(seed), replication_index=int(rep))


def sample_block(params: ModelParams, seed: int, replication_index: int) -> TrialBlock:
    p = probabilities(params)
    u = rng.stream(seed, replication_index).random(params.n)
    return TrialBlock(
        bits=(u < p).astype(np.uint8), params=params, seed=seed, replication_index=replication_index
    )


def sample_bits(params: ModelParams, seed: int, count: int, start: int = 0) -> np.ndarray:
    """``(count, n)`` uint8 matrix of blocks ``start .. start+count-1``.

    Row ``r`` equals ``sample_block(params, seed, start + r).bits``.
    """
    p = probabilities(params)
    u = rng.uniforms(seed, start, count, params.n)
    return (u < p).astype(np.uint8)


def iter_bit_batches(params: ModelParams, seed: int, count: int, batch: int = BATCH_ROWS):
    """Yield consecutive bit matrices covering replications ``0 .. count-1``."""
    p = probabilities(params)
    buf = np.empty((min(batch, count), params.n), dtype=np.float64)
    for start in range(0, count, batch):
        rows = min(batch, count - start)
        u = rng.uniforms(seed, start, rows, params.n, out=buf[:rows])
        yield u < p
