"""Finite exact representations of a model's statistics.

A model with an exact interface maps a list of setting pairs to an
:class:`ExactTable`: for every pair, the joint probability of
``(lambda-cell, mu_a-cell, mu_b-cell, A, B)``.  Cells partition the state
spaces finely enough that every response probability is constant on a cell,
so conditioning on the cell is the same as conditioning on the state.
The cell partition must not depend on which pair is measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ExactTable", "OUTCOMES", "interval_cells", "group_directions"]

# index 0 <-> outcome -1, index 1 <-> outcome +1
OUTCOMES = np.array([-1.0, 1.0])


@dataclass(frozen=True, eq=False)
class ExactTable:
    pairs: tuple
    joint: np.ndarray  # (P, L, Ma, Mb, 2, 2)

    def __post_init__(self):
        j = np.asarray(self.joint, dtype=float)
        if j.ndim != 6 or j.shape[0] != len(self.pairs) or j.shape[4:] != (2, 2):
            raise ValueError(f"joint has shape {j.shape}, expected (P, L, Ma, Mb, 2, 2)")
        if np.any(j < -1e-15):
            raise ValueError("joint table has negative entries")
        totals = j.reshape(len(self.pairs), -1).sum(axis=1)
        if np.any(np.abs(totals - 1.0) > 1e-12):
            raise ValueError(f"joint table rows sum to {totals}, not 1")
        object.__setattr__(self, "joint", j)

    @property
    def n_lambda(self):
        return self.joint.shape[1]

    def outcome_table(self):
        """P(A, B | pair), shape (P, 2, 2)."""
        return self.joint.sum(axis=(1, 2, 3))

    def correlations(self):
        """E(a, b) = sum_AB A B P(A, B | a, b) for every pair."""
        return np.einsum("pij,i,j->p", self.outcome_table(), OUTCOMES, OUTCOMES)


def interval_cells(breakpoints, low=0.0, high=1.0):
    """Split [low, high] at the given breakpoints.

    Returns ``(edges, lengths, midpoints)``; breakpoints outside the interval
    or within 1e-12 of a neighbour are dropped.
    """
    edges = [low]
    for x in sorted(float(x) for x in breakpoints if low < x < high):
        if x - edges[-1] > 1e-12:
            edges.append(x)
    if high - edges[-1] <= 1e-12 and len(edges) > 1:
        edges.pop()
    edges = np.array([*edges, high])
    return edges, np.diff(edges), 0.5 * (edges[:-1] + edges[1:])


def group_directions(directions, tol=1e-9):
    """Map each direction to the index of its first near-duplicate.

    Returns ``(index_per_input, distinct_directions)``.
    """
    distinct = []
    out = []
    for d in directions:
        for k, e in enumerate(distinct):
            if d.close_to(e, tol):
                out.append(k)
                break
        else:
            out.append(len(distinct))
            distinct.append(d)
    return np.array(out, dtype=np.int64), distinct
