"""Exact and Monte Carlo correlations and the CHSH statistic."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Ensemble, ModelSpec, chsh_pairs, paper_configuration
from .errors import InsufficientRuns, NoExactInterface

__all__ = [
    "Method",
    "ExpectationEstimate",
    "ChshReport",
    "exact_expectation",
    "mc_expectation",
    "chsh_statistic",
    "paper_configuration",
    "settings_mask",
]

SETTINGS_TOL = 1e-9


class Method(enum.Enum):
    EXACT = "Exact"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class ExpectationEstimate:
    value: float
    std_error: float
    n: int
    method: Method

    def __post_init__(self):
        if self.method is Method.EXACT and self.std_error != 0.0:
            raise ValueError("exact estimates carry no standard error")


@dataclass(frozen=True)
class ChshReport:
    e_ab: ExpectationEstimate
    e_abp: ExpectationEstimate
    e_apb: ExpectationEstimate
    e_apbp: ExpectationEstimate
    statistic: float
    std_error: float

    @property
    def terms(self):
        return (self.e_ab, self.e_abp, self.e_apb, self.e_apbp)

    @property
    def method(self):
        return self.e_ab.method

    def to_json(self):
        return {
            "E_ab": self.e_ab.value,
            "E_abp": self.e_abp.value,
            "E_apb": self.e_apb.value,
            "E_apbp": self.e_apbp.value,
            "S": self.statistic,
            "stderr": self.std_error,
            "method": self.method.value,
        }


def exact_expectation(model, a, b, route="auto"):
    """E(a, b) from the model's closed form or by enumerating its exact table.

    ``route`` is ``"auto"`` (closed form if registered), ``"closed_form"`` or
    ``"enumeration"``.
    """
    if route not in ("auto", "closed_form", "enumeration"):
        raise ValueError(f"unknown route {route!r}")
    if route != "enumeration" and model.exact_E is not None:
        value = float(model.exact_E(a, b))
    elif route != "closed_form" and model.exact_table is not None:
        value = float(model.exact_table(((a, b),)).correlations()[0])
    else:
        raise NoExactInterface(f"model {model.model_id!r} has no {route} exact interface")
    return ExpectationEstimate(min(1.0, max(-1.0, value)), 0.0, 0, Method.EXACT)


def settings_mask(ensemble, a, b, tol=SETTINGS_TOL):
    """Runs whose settings match (a, b) component-wise within ``tol``."""
    return np.all(np.abs(ensemble.settings_a - a.as_array()) <= tol, axis=1) & np.all(
        np.abs(ensemble.settings_b - b.as_array()) <= tol, axis=1
    )


def mc_expectation(ensemble, a, b):
    """Sample mean of A B over the runs measured at (a, b)."""
    mask = settings_mask(ensemble, a, b)
    n = int(mask.sum())
    if n < 2:
        raise InsufficientRuns(f"only {n} runs at settings ({a}, {b}); need at least 2")
    prod = ensemble.outcome_a[mask].astype(float) * ensemble.outcome_b[mask]
    return ExpectationEstimate(
        float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n)), n, Method.MONTE_CARLO
    )


def chsh_statistic(source, a, ap, b, bp):
    """|E(a,b) + E(a,b') + E(a',b) - E(a',b')| for a model (exact) or an ensemble (MC)."""
    if isinstance(source, Ensemble):
        terms = [mc_expectation(source, x, y) for x, y in chsh_pairs(a, ap, b, bp)]
    elif isinstance(source, ModelSpec):
        terms = [exact_expectation(source, x, y) for x, y in chsh_pairs(a, ap, b, bp)]
    else:
        raise TypeError("source must be a ModelSpec or an Ensemble")
    s = abs(terms[0].value + terms[1].value + terms[2].value - terms[3].value)
    se = math.sqrt(math.fsum(t.std_error**2 for t in terms))
    return ChshReport(*terms, statistic=s, std_error=se)
