"""Contingency-table helpers for the empirical audits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import ContinuousSpace, DiscreteSpace
from .errors import UndiscretizableState

__all__ = ["ChiSquareResult", "pooled_chi2", "discretize", "total_variation"]


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    cells_tested: int
    cells_skipped: int


def pooled_chi2(strata, rows, cols, min_count=25):
    """Chi-square test that ``rows`` and ``cols`` are independent within every stratum.

    The per-stratum Pearson statistics and degrees of freedom are summed into
    one test (the usual stratified test of conditional independence), which
    keeps the false-rejection rate at the nominal level however many strata
    there are.  Strata with fewer than ``min_count`` samples are skipped;
    empty rows and columns of a stratum add no degrees of freedom.
    """
    strata = np.asarray(strata)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if strata.size == 0:
        return ChiSquareResult(0.0, 0, 1.0, 0, 0)
    _, s = np.unique(strata, return_inverse=True)
    s = s.ravel()
    n_s, n_r, n_c = s.max() + 1, rows.max() + 1, cols.max() + 1
    counts = np.bincount((s * n_r + rows) * n_c + cols, minlength=n_s * n_r * n_c)
    counts = counts.reshape(n_s, n_r, n_c).astype(float)
    size = counts.sum(axis=(1, 2))
    keep = size >= min_count
    c = counts[keep]
    if not len(c):
        return ChiSquareResult(0.0, 0, 1.0, 0, int(n_s))
    r = c.sum(axis=2)
    k = c.sum(axis=1)
    expected = r[:, :, None] * k[:, None, :] / size[keep][:, None, None]
    contrib = np.divide((c - expected) ** 2, expected, out=np.zeros_like(c), where=expected > 0)
    dof = int(np.sum((np.count_nonzero(r, axis=1) - 1) * (np.count_nonzero(k, axis=1) - 1)))
    statistic = float(contrib.sum())
    p = float(stats.chi2.sf(statistic, dof)) if dof > 0 else 1.0
    return ChiSquareResult(statistic, dof, p, int(keep.sum()), int((~keep).sum()))


def discretize(values, space, bins=16):
    """Cell index of each state: discrete states as-is, continuous ones binned per dimension."""
    if isinstance(space, DiscreteSpace):
        return np.asarray(values, dtype=np.int64)
    if not isinstance(space, ContinuousSpace):
        raise UndiscretizableState(f"cannot discretize states of space {space!r}")
    lo = np.asarray(space.low, dtype=float)
    hi = np.asarray(space.high, dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise UndiscretizableState("continuous state space must have finite bounds")
    width = np.where(hi > lo, hi - lo, 1.0)
    idx = np.floor((np.asarray(values, dtype=float) - lo) / width * bins).astype(np.int64)
    idx = np.clip(idx, 0, bins - 1)
    idx[:, hi <= lo] = 0
    return np.ravel_multi_index(tuple(idx.T), (bins,) * space.dim)


def total_variation(p, q, axis=-1):
    return 0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum(axis=axis)
