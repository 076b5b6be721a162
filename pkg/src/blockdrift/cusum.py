"""Plug-in CUSUM statistic for a single block.

With ``C_k`` the running error count, the centered partial sums are
``S_k = C_k - k * C_n / n``.  All arithmetic is done on the integers
``n*C_k - k*C_n`` so that ``S_n`` is exactly zero and the statistic is
exactly invariant under complementing or reversing the bits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import TrialBlock
from .profiles import DriftProfile, signal_constant


@dataclass(frozen=True)
class CusumTrace:
    e_hat: float
    partial_sums: np.ndarray = field(repr=False)
    normalizer: float
    t_stat: float
    argmax_k: int

    @property
    def n(self) -> int:
        return len(self.partial_sums)


@dataclass(frozen=True)
class TestDecision:
    __test__ = False  # not a pytest class

    reject: bool
    t_stat: float
    threshold: float


def _bits_of(block) -> np.ndarray:
    bits = block.bits if isinstance(block, TrialBlock) else block
    bits = np.asarray(bits)
    if bits.ndim != 1:
        raise DomainError("expected a single block of bits")
    if bits.size == 0:
        raise DomainError("empty block")
    return bits


def _scaled_sums(counts: np.ndarray) -> np.ndarray:
    """``n*C_k - k*C_n`` along the last axis (exact integers)."""
    n = counts.shape[-1]
    k = np.arange(1, n + 1, dtype=counts.dtype)
    return n * counts - k * counts[..., -1:]


def partial_sums(block) -> CusumTrace:
    """Centered partial sums ``S_1..S_n`` (the statistic is left unset)."""
    bits = _bits_of(block)
    n = bits.size
    counts = np.cumsum(bits, dtype=np.int64)
    sums = _scaled_sums(counts) / n
    return CusumTrace(
        e_hat=counts[-1] / n, partial_sums=sums, normalizer=math.nan, t_stat=math.nan, argmax_k=0
    )


def statistic(block) -> CusumTrace:
    """Full trace with ``T_n = max_k |S_k| / sqrt(n e_hat (1 - e_hat))``.

    A constant block (``e_hat`` in {0, 1}) has no normalization and gets
    ``T_n = 0``.
    """
    bits = _bits_of(block)
    n = bits.size
    counts = np.cumsum(bits, dtype=np.int64)
    scaled = _scaled_sums(counts)
    c_n = int(counts[-1])
    j = int(np.argmax(np.abs(scaled)))
    denom_sq = n * c_n * (n - c_n)
    t_stat = 0.0 if denom_sq == 0 else abs(int(scaled[j])) / math.sqrt(denom_sq)
    return CusumTrace(
        e_hat=c_n / n,
        partial_sums=scaled / n,
        normalizer=math.sqrt(c_n * (n - c_n) / n),
        t_stat=t_stat,
        argmax_k=j + 1,
    )


def statistics(bits: np.ndarray) -> np.ndarray:
    """Vectorized ``T_n`` for each row of a ``(M, n)`` bit matrix.

    Agrees exactly with ``statistic(row).t_stat`` for every row.
    """
    bits = np.asarray(bits)
    if bits.ndim == 1:
        bits = bits[None, :]
    n = bits.shape[1]
    # n*C_k stays below n**2, so int32 is exact up to n = 46340
    dtype = np.int32 if n <= 46_000 else np.int64
    counts = np.cumsum(bits, axis=1, dtype=dtype)
    num = np.abs(_scaled_sums(counts)).max(axis=1).astype(np.float64)
    c_n = counts[:, -1].astype(np.float64)
    denom_sq = n * c_n * (n - c_n)
    out = np.zeros(bits.shape[0])
    ok = denom_sq > 0
    out[ok] = num[ok] / np.sqrt(denom_sq[ok])
    return out


def decide(trace: CusumTrace, threshold) -> TestDecision:
    """Reject when ``T_n`` strictly exceeds the threshold.

    ``threshold`` is a :class:`~blockdrift.calibration.CalibratedThreshold`
    or a bare number.
    """
    tau = getattr(threshold, "tau", threshold)
    tn = getattr(threshold, "n", None)
    if tn is not None and tn != trace.n:
        raise ConfigurationError(f"threshold calibrated for n={tn}, block has n={trace.n}")
    tau = float(tau)
    return TestDecision(reject=trace.t_stat > tau, t_stat=trace.t_stat, threshold=tau)


def expected_excursion(n: int, delta: float, profile: DriftProfile) -> float:
    """Leading-order drift excursion ``delta * n * A(g)`` of ``max_k |S_k|``."""
    return delta * n * signal_constant(profile)


def write_trace_csv(trace: CusumTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "S_k"])
        for k, s in enumerate(trace.partial_sums, start=1):
            w.writerow([k, format(float(s), ".6g")])
    return path
