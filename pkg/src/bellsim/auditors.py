"""Exact and empirical audits of the assumptions behind the CHSH bound.

Every audit accepts either a :class:`~bellsim.core.ModelSpec` (exact mode:
conditional probabilities come from the model's exact table under a
settings policy, default the standard CHSH policy) or an
:class:`~bellsim.core.Ensemble` (empirical mode: states are binned, the
same conditional probabilities are estimated from counts, and a pooled
chi-square test decides).

Divergences are maximal absolute differences between the two sides of the
tested identity (total-variation distance for distributions of states).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    FORBIDDEN_A,
    FORBIDDEN_B,
    Ensemble,
    ModelSpec,
    Side,
    paper_configuration,
    paper_policy,
)
from .errors import ModelFailure, NoExactInterface
from .exact import group_directions
from .rng import RngStream, Stage
from .stats import discretize, pooled_chi2

__all__ = [
    "Condition",
    "AuditVerdict",
    "audit_factorizability",
    "audit_settings_independence",
    "audit_microstate_independence",
    "audit_parameter_independence",
    "audit_outcome_independence",
    "audit_structural_locality",
    "audit_inverted_oi_pattern",
    "audit_determinism",
    "audit_all",
    "audit_theorem_chain",
    "TheoremChainReport",
    "outcome_marginals",
]

EXACT_TOL = 1e-9
ALPHA = 1e-3
BINS = 16
MIN_CELL = 25
MAX_SKIPPED = 0.2
_EXACT_MASS = 1e-14


class Condition(enum.Enum):
    FACTORIZABILITY = "Factorizability"
    SETTINGS_INDEPENDENCE = "SettingsIndependence"
    MICROSTATE_INDEPENDENCE = "MicrostateIndependence"
    PARAMETER_INDEPENDENCE = "ParameterIndependence"
    OUTCOME_INDEPENDENCE = "OutcomeIndependence"
    STRUCTURAL_LOCALITY = "StructuralLocality"
    INVERTED_OI_PATTERN = "InvertedOiPattern"
    DETERMINISM = "Determinism"


@dataclass(frozen=True)
class AuditVerdict:
    condition: Condition
    mode: str
    passed: bool
    divergence: float
    p_value: Optional[float] = None
    witness: Optional[dict] = None
    cells_tested: int = 0
    cells_skipped: int = 0
    inconclusive: bool = False

    def to_json(self):
        return {
            "condition": self.condition.value,
            "mode": self.mode,
            "passed": bool(self.passed),
            "divergence": float(self.divergence),
            "p_value": None if self.p_value is None else float(self.p_value),
            "witness": self.witness,
            "cells_tested": int(self.cells_tested),
            "cells_skipped": int(self.cells_skipped),
            "inconclusive": bool(self.inconclusive),
        }


# -- probability views --------------------------------------------------------

@dataclass
class _View:
    """Joint probabilities J[p, l, ma, mb, A, B] over pair, cells and outcomes."""

    joint: np.ndarray
    a_of: np.ndarray
    b_of: np.ndarray
    pair_labels: list
    min_mass: float
    mode: str
    ids: Optional[dict] = None
    min_count: int = MIN_CELL
    n_lambda: int = field(init=False)

    def __post_init__(self):
        self.n_lambda = self.joint.shape[1]
        self.ga = np.eye(self.a_of.max() + 1)[self.a_of]  # (P, Na)
        self.gb = np.eye(self.b_of.max() + 1)[self.b_of]
        self.pl = self.joint.sum(axis=(2, 3))  # P(p, l, A, B)
        self.m_pl = self.pl.sum(axis=(2, 3))
        self.al = np.einsum("pa,plij->alij", self.ga, self.pl)
        self.bl = np.einsum("pb,plij->blij", self.gb, self.pl)
        self.m_al = self.al.sum(axis=(2, 3))
        self.m_bl = self.bl.sum(axis=(2, 3))


def _div(num, den):
    den = np.asarray(den, dtype=float)
    num = np.asarray(num, dtype=float)
    shape = np.broadcast_shapes(num.shape, den.shape)
    return np.divide(num, den, out=np.zeros(shape), where=np.broadcast_to(den > 0, shape))


def _pair_label(a, b):
    return [[float(x) for x in a], [float(x) for x in b]]


def _exact_view(model, policy):
    if model.exact_table is None:
        raise NoExactInterface(f"model {model.model_id!r} has no exact table")
    policy = policy or paper_policy()
    table = model.exact_table(policy.pairs)
    w = np.asarray(policy.weights)
    a_of, _ = group_directions([a for a, _ in policy.pairs])
    b_of, _ = group_directions([b for _, b in policy.pairs])
    labels = [_pair_label(a.as_array(), b.as_array()) for a, b in policy.pairs]
    return _View(w[:, None, None, None, None, None] * table.joint, a_of, b_of, labels,
                 _EXACT_MASS, "exact")


def _compress(x):
    _, inv = np.unique(x, return_inverse=True, axis=0 if np.ndim(x) > 1 else None)
    return inv.ravel().astype(np.int64)


def _empirical_view(ens, bins, min_count):
    if len(ens) < 2:
        raise ModelFailure("empirical audits need at least two runs")
    a_id = _compress(np.round(ens.settings_a, 9))
    b_id = _compress(np.round(ens.settings_b, 9))
    p_id = _compress(a_id * (b_id.max() + 1) + b_id)
    first = np.unique(p_id, return_index=True)[1]
    a_of = a_id[first]
    b_of = b_id[first]
    labels = [_pair_label(ens.settings_a[i], ens.settings_b[i]) for i in first]
    lam = _compress(discretize(ens.lam, ens.lambda_space, bins))
    ma = _compress(discretize(ens.mu_a, ens.mu_a_space, bins))
    mb = _compress(discretize(ens.mu_b, ens.mu_b_space, bins))
    A = (ens.outcome_a.astype(np.int64) + 1) // 2
    B = (ens.outcome_b.astype(np.int64) + 1) // 2
    shape = (p_id.max() + 1, lam.max() + 1, ma.max() + 1, mb.max() + 1, 2, 2)
    flat = np.ravel_multi_index((p_id, lam, ma, mb, A, B), shape)
    joint = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape) / len(ens)
    ids = {"p": p_id, "a": a_id, "b": b_id, "l": lam, "ma": ma, "mb": mb, "A": A, "B": B}
    return _View(joint, a_of, b_of, labels, min_count / len(ens), "empirical", ids, min_count)


def _view(source, policy, bins, min_count):
    if isinstance(source, _View):
        return source
    if isinstance(source, ModelSpec):
        return _exact_view(source, policy)
    if isinstance(source, Ensemble):
        return _empirical_view(source, bins, min_count)
    raise TypeError("source must be a ModelSpec or an Ensemble")


def _argmax(diff, valid):
    """Max of ``diff`` over cells where ``valid`` (broadcast) holds, with its index."""
    d = np.where(np.broadcast_to(valid, diff.shape), diff, -np.inf)
    if not np.isfinite(d).any():
        return 0.0, None
    idx = np.unravel_index(int(np.argmax(d)), d.shape)
    return float(d[idx]), tuple(int(i) for i in idx)


def _outcome(i):
    return 1 if i else -1


# -- divergences --------------------------------------------------------------

def _fact_div(v):
    p_ab = _div(v.pl, v.m_pl[:, :, None, None])
    pa = _div(v.al.sum(axis=3), v.m_al[:, :, None])[v.a_of]
    pb = _div(v.bl.sum(axis=2), v.m_bl[:, :, None])[v.b_of]
    prod = pa[:, :, :, None] * pb[:, :, None, :]
    div, at = _argmax(np.abs(p_ab - prod), (v.m_pl >= v.min_mass)[:, :, None, None])
    if at is None:
        return div, None
    p, l, i, j = at
    return div, {"pair": v.pair_labels[p], "lambda_cell": l, "A": _outcome(i), "B": _outcome(j),
                 "joint": float(p_ab[at]), "product": float(prod[at])}


def _pi_div(v):
    valid = (v.m_pl >= v.min_mass)[:, :, None]
    pa_pl = _div(v.pl.sum(axis=3), v.m_pl[:, :, None])
    pb_pl = _div(v.pl.sum(axis=2), v.m_pl[:, :, None])
    pa = _div(v.al.sum(axis=3), v.m_al[:, :, None])[v.a_of]
    pb = _div(v.bl.sum(axis=2), v.m_bl[:, :, None])[v.b_of]
    da, at_a = _argmax(np.abs(pa_pl - pa), valid)
    db, at_b = _argmax(np.abs(pb_pl - pb), valid)
    side, at = ("A", at_a) if da >= db else ("B", at_b)
    if at is None:
        return max(da, db), None
    p, l, i = at
    return max(da, db), {"side": side, "pair": v.pair_labels[p], "lambda_cell": l,
                         "outcome": _outcome(i)}


def _oi_div(v):
    p_ab = _div(v.pl, v.m_pl[:, :, None, None])
    prod = p_ab.sum(axis=3)[:, :, :, None] * p_ab.sum(axis=2)[:, :, None, :]
    div, at = _argmax(np.abs(p_ab - prod), (v.m_pl >= v.min_mass)[:, :, None, None])
    if at is None:
        return div, None
    p, l, i, j = at
    return div, {"pair": v.pair_labels[p], "lambda_cell": l, "A": _outcome(i), "B": _outcome(j)}


def _si_div(v):
    w = v.m_pl.sum(axis=1)
    cond = _div(v.m_pl, w[:, None])
    tv = 0.5 * np.abs(cond - v.m_pl.sum(axis=0)[None, :]).sum(axis=1)
    tv = np.where(w > 0, tv, 0.0)
    p = int(np.argmax(tv))
    return float(tv[p]), {"pair": v.pair_labels[p]}


def _tv_rows(x, min_mass):
    """Max TV between rows of x (conditioning value, state) and the state marginal."""
    mass = x.sum(axis=1)
    tv = 0.5 * np.abs(_div(x, mass[:, None]) - x.sum(axis=0)[None, :]).sum(axis=1)
    tv = np.where(mass >= min_mass, tv, 0.0)
    k = int(np.argmax(tv)) if len(tv) else 0
    return (float(tv[k]) if len(tv) else 0.0), k


def _mi_div(v):
    # side A microstate vs (b, B); side B microstate vs (a, A)
    xa = np.einsum("pb,pmj->bjm", v.gb, v.joint.sum(axis=(1, 3, 4)))  # (Nb, B, Ma)
    xb = np.einsum("pa,pmi->aim", v.ga, v.joint.sum(axis=(1, 2, 5)))  # (Na, A, Mb)
    out = {}
    worst = (-1.0, None)
    for name, x, other in (("mu_a", xa, "b"), ("mu_b", xb, "a")):
        nset = x.shape[0]
        joint_tv, k = _tv_rows(x.reshape(nset * 2, -1), v.min_mass)
        setting_tv, _ = _tv_rows(x.sum(axis=1), v.min_mass)
        result_tv, _ = _tv_rows(x.sum(axis=0), v.min_mass)
        label = "B" if other == "b" else "A"
        out[name] = {
            f"vs_{other}_{label}": joint_tv,
            f"vs_{other}": setting_tv,
            f"vs_{label}": result_tv,
        }
        if joint_tv > worst[0]:
            worst = (joint_tv, {"clause": name, f"{other}_index": k // 2,
                                label: _outcome(k % 2)})
    witness = dict(worst[1] or {})
    witness["clauses"] = out
    return worst[0], witness


def _inverted_div(v):
    m_plb = v.pl.sum(axis=2)  # P(p, l, B)
    m_alb = v.al.sum(axis=2)
    pa_given_bpl = _div(v.pl, m_plb[:, :, None, :])
    pa_given_bal = _div(v.al, m_alb[:, :, None, :])
    eq_diff = np.abs(pa_given_bpl - pa_given_bal[v.a_of])
    eq, at_eq = _argmax(eq_diff, (m_plb >= v.min_mass)[:, :, None, :])
    pa_al = _div(v.al.sum(axis=3), v.m_al[:, :, None])
    ineq_diff = np.abs(pa_given_bal - pa_al[:, :, :, None])
    ineq, at_ineq = _argmax(ineq_diff, (m_alb >= v.min_mass)[:, :, None, :])
    return eq, ineq, at_eq, at_ineq


def _det_div(v):
    xa = np.einsum("pa,plmi->almi", v.ga, v.joint.sum(axis=(3, 5)))
    xb = np.einsum("pb,plmj->blmj", v.gb, v.joint.sum(axis=(2, 4)))
    worst = 0.0
    for x in (xa, xb):
        mass = x.sum(axis=3)
        cond = _div(x, mass[..., None])
        d = np.minimum(cond, 1.0 - cond).max(axis=3)
        d = np.where(mass >= v.min_mass, d, 0.0)
        worst = max(worst, float(d.max()) if d.size else 0.0)
    return worst


# -- empirical tests ----------------------------------------------------------

def _chi(v, name):
    i = v.ids
    L = v.n_lambda
    if name == "si":
        return pooled_chi2(np.zeros_like(i["p"]), i["p"], i["l"], v.min_count)
    if name == "oi":
        return pooled_chi2(i["p"] * L + i["l"], i["A"], i["B"], v.min_count)
    if name == "pi_a":
        return pooled_chi2(i["a"] * L + i["l"], i["b"], i["A"], v.min_count)
    if name == "pi_b":
        return pooled_chi2(i["b"] * L + i["l"], i["a"], i["B"], v.min_count)
    if name == "mi_a":
        return pooled_chi2(np.zeros_like(i["p"]), i["b"] * 2 + i["B"], i["ma"], v.min_count)
    if name == "mi_b":
        return pooled_chi2(np.zeros_like(i["p"]), i["a"] * 2 + i["A"], i["mb"], v.min_count)
    if name == "inv_eq":
        return pooled_chi2((i["a"] * 2 + i["B"]) * L + i["l"], i["b"], i["A"], v.min_count)
    if name == "inv_ineq":
        return pooled_chi2(i["a"] * L + i["l"], i["B"], i["A"], v.min_count)
    raise KeyError(name)


def _empirical(v, condition, divergence, witness, tests, alpha):
    results = [_chi(v, t) for t in tests]
    p = min(r.p_value for r in results)
    tested = sum(r.cells_tested for r in results)
    skipped = sum(r.cells_skipped for r in results)
    inconclusive = skipped > MAX_SKIPPED * (tested + skipped)
    witness = dict(witness or {})
    witness["tests"] = {t: {"chi2": r.statistic, "dof": r.dof, "p": r.p_value}
                        for t, r in zip(tests, results)}
    return AuditVerdict(condition, "empirical", (p >= alpha) and not inconclusive, divergence,
                        p, witness, tested, skipped, inconclusive)


def _verdict(v, condition, div, witness, tests, tol, alpha):
    if v.mode == "exact":
        return AuditVerdict(condition, "exact", div <= tol, div, None, witness)
    return _empirical(v, condition, div, witness, tests, alpha)


# -- public audits ------------------------------------------------------------

def audit_factorizability(source, policy=None, tol=EXACT_TOL, alpha=ALPHA, bins=BINS,
                          min_count=MIN_CELL):
    """P(A, B | a, b, lambda) = P(A | a, lambda) P(B | b, lambda).

    Empirically this is tested as outcome independence within each
    (a, b, lambda) cell together with parameter independence on both sides,
    whose conjunction is equivalent.
    """
    v = _view(source, policy, bins, min_count)
    div, witness = _fact_div(v)
    return _verdict(v, Condition.FACTORIZABILITY, div, witness, ("oi", "pi_a", "pi_b"), tol, alpha)


def audit_settings_independence(source, policy=None, tol=EXACT_TOL, alpha=ALPHA, bins=BINS,
                                min_count=MIN_CELL):
    """rho(lambda | a, b) = rho(lambda): max TV over setting pairs."""
    v = _view(source, policy, bins, min_count)
    div, witness = _si_div(v)
    return _verdict(v, Condition.SETTINGS_INDEPENDENCE, div, witness, ("si",), tol, alpha)


def audit_microstate_independence(source, policy=None, tol=EXACT_TOL, alpha=ALPHA, bins=BINS,
                                  min_count=MIN_CELL):
    """P(mu_a | b, B) = P(mu_a) and P(mu_b | a, A) = P(mu_b).

    The witness breaks each clause down into dependence on the remote
    setting alone and on the remote outcome alone.
    """
    v = _view(source, policy, bins, min_count)
    div, witness = _mi_div(v)
    return _verdict(v, Condition.MICROSTATE_INDEPENDENCE, div, witness, ("mi_a", "mi_b"), tol,
                    alpha)


def audit_parameter_independence(source, policy=None, tol=EXACT_TOL, alpha=ALPHA, bins=BINS,
                                 min_count=MIN_CELL):
    """P(A | a, b, lambda) = P(A | a, lambda), and the mirror statement for B."""
    v = _view(source, policy, bins, min_count)
    div, witness = _pi_div(v)
    return _verdict(v, Condition.PARAMETER_INDEPENDENCE, div, witness, ("pi_a", "pi_b"), tol,
                    alpha)


def audit_outcome_independence(source, policy=None, tol=EXACT_TOL, alpha=ALPHA, bins=BINS,
                               min_count=MIN_CELL):
    """P(A, B | a, b, lambda) = P(A | a, b, lambda) P(B | a, b, lambda)."""
    v = _view(source, policy, bins, min_count)
    div, witness = _oi_div(v)
    return _verdict(v, Condition.OUTCOME_INDEPENDENCE, div, witness, ("oi",), tol, alpha)


def audit_inverted_oi_pattern(source, policy=None, tol=EXACT_TOL, alpha=ALPHA, bins=BINS,
                              min_count=MIN_CELL):
    """P(A | B, a, b, lambda) = P(A | B, a, lambda) while P(A | B, a, lambda) != P(A | a, lambda).

    ``divergence`` is the size of the inequality clause; the equality
    clause's size is in the witness.  Empirically ``p_value`` belongs to the
    equality clause and the inequality clause must reject at ``alpha``.
    """
    v = _view(source, policy, bins, min_count)
    eq, ineq, at_eq, at_ineq = _inverted_div(v)
    witness = {"equality_divergence": eq, "inequality_divergence": ineq}
    if at_ineq is not None:
        a, l, i, j = at_ineq
        witness["inequality_cell"] = {"a_index": a, "lambda_cell": l, "A": _outcome(i),
                                      "B": _outcome(j)}
    if v.mode == "exact":
        passed = eq <= tol and ineq > tol
        return AuditVerdict(Condition.INVERTED_OI_PATTERN, "exact", passed, ineq, None, witness)
    r_eq = _chi(v, "inv_eq")
    r_ineq = _chi(v, "inv_ineq")
    tested = r_eq.cells_tested + r_ineq.cells_tested
    skipped = r_eq.cells_skipped + r_ineq.cells_skipped
    inconclusive = skipped > MAX_SKIPPED * (tested + skipped)
    witness["tests"] = {
        "inv_eq": {"chi2": r_eq.statistic, "dof": r_eq.dof, "p": r_eq.p_value},
        "inv_ineq": {"chi2": r_ineq.statistic, "dof": r_ineq.dof, "p": r_ineq.p_value},
    }
    passed = r_eq.p_value >= alpha and r_ineq.p_value < alpha and not inconclusive
    return AuditVerdict(Condition.INVERTED_OI_PATTERN, "empirical", passed, ineq, r_eq.p_value,
                        witness, tested, skipped, inconclusive)


def audit_determinism(model, policy=None, tol=EXACT_TOL):
    """Outcomes are 0/1-valued given (own setting, lambda, own microstate)."""
    if not isinstance(model, (ModelSpec, _View)):
        raise TypeError("determinism is audited on models only")
    v = _view(model, policy, BINS, MIN_CELL)
    div = _det_div(v)
    return AuditVerdict(Condition.DETERMINISM, "exact", div <= tol, div)


def _probe_settings(policy, n, stream):
    """Candidate (a, b, b2, a2) probe arrays, each of shape (n, 4, 3).

    First random directions on the sphere; then, for models restricted to a
    finite set of settings, the policy's own directions.
    """
    u = stream.uniform(8)
    z = 2.0 * u[:, :4] - 1.0
    phi = 2.0 * math.pi * u[:, 4:]
    r = np.sqrt(1.0 - z * z)
    yield np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=2)
    policy = policy or paper_policy()
    da = np.array([d.as_array() for d in policy.distinct(Side.A)])
    db = np.array([d.as_array() for d in policy.distinct(Side.B)])
    i = np.arange(n) % len(da)
    j = (np.arange(n) // len(da)) % len(db)
    yield np.stack([da[i], db[j], db[(j + 1) % len(db)], da[(i + 1) % len(da)]], axis=1)


def audit_structural_locality(model, probes=100, policy=None, seed=0):
    """Locality by declaration and by probing.

    Passes iff (i) neither response function declares a read of the remote
    setting or outcome and (ii) holding (own setting, lambda, own
    microstate, stream) fixed, perturbing the remote setting never changes
    an outcome, over ``probes`` random perturbations per side.
    """
    if probes < 100:
        raise ValueError("structural locality needs at least 100 probes")
    declared = model.locality.is_local
    stream = RngStream(seed, np.arange(probes), Stage.SETTINGS)
    changed = probes_run = 0
    last_error = None
    for vecs in _probe_settings(policy, probes, stream):
        a, b, b2, a2 = (vecs[:, k, :].copy() for k in range(4))
        try:
            runs = np.arange(probes)
            lam = model.lambda_space.check(
                model.sample_lambda(a, b, RngStream(seed, runs, Stage.LAMBDA)))
            mu_a, mu_b = model.sample_microstates(a, b, lam, RngStream(seed, runs, Stage.MICROSTATES))

            def outcomes(sa, sb):
                return model.outcomes(sa, sb, lam, mu_a, mu_b,
                                      RngStream(seed, runs, Stage.RESPOND_A),
                                      RngStream(seed, runs, Stage.RESPOND_B))

            A0, B0 = outcomes(a, b)
            A1, _ = outcomes(a, b2)
            _, B1 = outcomes(a2, b)
        except ModelFailure as exc:
            last_error = exc
            continue
        changed = int(np.sum(A0 != A1) + np.sum(B0 != B1))
        probes_run = 2 * probes
        break
    if not probes_run:
        raise ModelFailure(f"could not probe model {model.model_id!r}: {last_error}")
    witness = {
        "declared_local": declared,
        "reads_a": sorted(model.locality.reads_a),
        "reads_b": sorted(model.locality.reads_b),
        "forbidden_reads_a": sorted(model.locality.reads_a & FORBIDDEN_A),
        "forbidden_reads_b": sorted(model.locality.reads_b & FORBIDDEN_B),
        "probes": probes_run,
        "changed": changed,
    }
    return AuditVerdict(Condition.STRUCTURAL_LOCALITY, "exact", declared and changed == 0,
                        changed / probes_run, None, witness, probes_run, 0)


_AUDITS = {
    Condition.FACTORIZABILITY: audit_factorizability,
    Condition.SETTINGS_INDEPENDENCE: audit_settings_independence,
    Condition.MICROSTATE_INDEPENDENCE: audit_microstate_independence,
    Condition.PARAMETER_INDEPENDENCE: audit_parameter_independence,
    Condition.OUTCOME_INDEPENDENCE: audit_outcome_independence,
    Condition.INVERTED_OI_PATTERN: audit_inverted_oi_pattern,
}


def audit_all(source, policy=None, conditions=None, tol=EXACT_TOL, alpha=ALPHA, bins=BINS,
              min_count=MIN_CELL, model=None, probes=100):
    """Run several audits on one source, sharing the probability view.

    ``conditions`` defaults to every statistical condition plus structural
    locality.  For ensembles, structural locality is probed on ``model``
    when given and skipped otherwise.
    """
    if conditions is None:
        conditions = list(_AUDITS) + [Condition.STRUCTURAL_LOCALITY]
    conditions = [Condition(c) for c in conditions]
    stats_needed = [c for c in conditions if c in _AUDITS or c is Condition.DETERMINISM]
    v = _view(source, policy, bins, min_count) if stats_needed else None
    if model is None and isinstance(source, ModelSpec):
        model = source
    out = []
    for c in conditions:
        if c is Condition.STRUCTURAL_LOCALITY:
            if model is not None:
                out.append(audit_structural_locality(model, probes, policy))
        elif c is Condition.DETERMINISM:
            if v.mode == "exact":
                out.append(audit_determinism(v, tol=tol))
        else:
            out.append(_AUDITS[c](v, tol=tol, alpha=alpha))
    return out


def outcome_marginals(model, policy=None):
    """Exact P(A=+1 | a, lambda) and P(A=+1 | a, lambda, mu_a) per distinct side-A setting.

    Returns ``(given_lambda, given_lambda_mu)`` with shapes (Na, L) and
    (Na, L, Ma); cells of zero probability hold NaN.
    """
    v = _exact_view(model, policy)
    mass_l = v.al.sum(axis=(2, 3))
    given_lambda = np.where(mass_l > 0, _div(v.al.sum(axis=3)[..., 1], mass_l), np.nan)
    x = np.einsum("pa,plmi->almi", v.ga, v.joint.sum(axis=(3, 5)))
    mass = x.sum(axis=3)
    given_mu = np.where(mass > 0, _div(x[..., 1], mass), np.nan)
    return given_lambda, given_mu


# -- the main result as a checkable chain --------------------------------------

@dataclass
class TheoremChainReport:
    rows: list
    max_factorizable_chsh: float
    leak: dict
    ablated: dict

    @property
    def holds(self):
        return (
            all(r["ok"] for r in self.rows)
            and self.leak["ok"]
            and self.ablated["ok"]
        )


def _leak_row(model, expect_mi, bound):
    from .estimators import chsh_statistic
    s = chsh_statistic(model, *paper_configuration()).statistic
    verdicts = {v.condition: v for v in audit_all(model)}
    row = {
        "model_id": model.model_id,
        "StructuralLocality": verdicts[Condition.STRUCTURAL_LOCALITY].passed,
        "SettingsIndependence": verdicts[Condition.SETTINGS_INDEPENDENCE].passed,
        "MicrostateIndependence": verdicts[Condition.MICROSTATE_INDEPENDENCE].passed,
        "Factorizability": verdicts[Condition.FACTORIZABILITY].passed,
        "chsh": s,
    }
    row["ok"] = (
        row["StructuralLocality"]
        and row["SettingsIndependence"]
        and row["MicrostateIndependence"] == expect_mi
        and bound(s)
    )
    return row


def audit_theorem_chain(n_models, k_lambda_max, seed):
    """Factorizable models obey the bound; the leak model breaks it; ablation restores it.

    Each of ``n_models`` random factorizable models (k_lambda drawn from
    1..k_lambda_max) must pass the factorizability, settings-independence
    and microstate-independence audits and have exact CHSH <= 2 + 1e-12.
    The leak model must be structurally local and settings independent,
    fail microstate independence and reach 2 sqrt 2 within 1e-12; its
    ablated twin must pass microstate independence and obey the bound.
    """
    from .estimators import chsh_statistic
    from .models import (
        build_ablated_leak_model,
        build_microstate_leak_model,
        build_random_factorizable_model,
    )

    if n_models < 1:
        raise ValueError("n_models must be >= 1")
    rng = np.random.default_rng(seed)
    config = paper_configuration()
    rows = []
    for _ in range(n_models):
        k = int(rng.integers(1, k_lambda_max + 1))
        model = build_random_factorizable_model(k, int(rng.integers(0, 2**63)))
        view = _exact_view(model, None)
        f = audit_factorizability(view)
        si = audit_settings_independence(view)
        mi = audit_microstate_independence(view)
        s = chsh_statistic(model, *config).statistic
        rows.append({
            "model_id": model.model_id,
            "Factorizability": f.passed,
            "SettingsIndependence": si.passed,
            "MicrostateIndependence": mi.passed,
            "chsh": s,
            "ok": f.passed and si.passed and mi.passed and s <= 2.0 + 1e-12,
        })
    leak = _leak_row(build_microstate_leak_model(), False,
                     lambda s: abs(s - 2.0 * math.sqrt(2.0)) <= 1e-12)
    ablated = _leak_row(build_ablated_leak_model(), True, lambda s: s <= 2.0 + 1e-12)
    return TheoremChainReport(rows, max(r["chsh"] for r in rows), leak, ablated)
