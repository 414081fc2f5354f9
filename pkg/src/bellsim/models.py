"""The model zoo.

Each builder returns a :class:`~bellsim.core.ModelSpec`.  Where the
statistics are derivable in closed form the model carries both a registered
correlation ``exact_E`` and an enumerable :class:`~bellsim.exact.ExactTable`;
the two are computed independently and tests hold them against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    Assumption,
    ContinuousSpace,
    DiscreteSpace,
    Locality,
    ModelSpec,
    angle,
    angles,
    paper_configuration,
    paper_policy,
    sign,
)
from .errors import InvalidWeights, ModelFailure, NoExactInterface
from .exact import ExactTable, interval_cells

__all__ = [
    "ModelDescriptor",
    "describe",
    "build_singlet_oracle",
    "build_sign_model",
    "build_microstate_leak_model",
    "build_ablated_leak_model",
    "build_settings_dependent_model",
    "build_weighted_dice_model",
    "build_factorizable_model",
    "build_random_factorizable_model",
    "build_result_leak_demo_model",
    "build_model",
    "ZOO_IDS",
]

LC = Assumption.LOCAL_CAUSALITY
SI = Assumption.SETTINGS_INDEPENDENCE
MI = Assumption.MICROSTATE_INDEPENDENCE
FAC = Assumption.FACTORIZABILITY
DET = Assumption.DETERMINISTIC

UNIT_SQUARE = ContinuousSpace((0.0, 0.0), (1.0, 1.0))
UNIT_INTERVAL = ContinuousSpace((0.0,), (1.0,))
UNIT_BOX3 = ContinuousSpace((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))


@dataclass(frozen=True)
class ModelDescriptor:
    model_id: str
    satisfies: frozenset
    exact_E: Optional[Callable] = None


def describe(model):
    return ModelDescriptor(model.model_id, model.satisfies, model.exact_E)


def _trivial(n):
    return np.zeros(n, dtype=np.int64)


def _plus_minus(condition):
    return np.where(condition, 1, -1).astype(np.int8)


def _index_in(vectors, directions, what):
    """Index of each row of ``vectors`` among ``directions``; ModelFailure if absent."""
    table = np.array([d.as_array() for d in directions])
    close = np.all(np.abs(vectors[:, None, :] - table[None, :, :]) <= 1e-9, axis=2)
    if not np.all(close.any(axis=1)):
        raise ModelFailure(f"{what}: setting not in the model's declared set {directions}")
    return close.argmax(axis=1)


def _index_of(direction, directions, what):
    for k, d in enumerate(directions):
        if direction.close_to(d):
            return k
    raise ModelFailure(f"{what}: setting {direction} not in the model's declared set")


# -- singlet ------------------------------------------------------------------

def build_singlet_oracle():
    """Quantum singlet statistics, realized nonlocally.

    Both outcomes are drawn in one step that reads both settings:
    A is a fair coin and B = -A with probability cos^2(theta/2), which gives
    P(A, B | a, b) = (1 - A B cos theta) / 4.
    """

    def respond_joint(sa, sb, lam, mu_a, mu_b, stream_a, stream_b):
        u = stream_a.uniform(2)
        a_out = _plus_minus(u[:, 0] < 0.5)
        anti = u[:, 1] < np.cos(angles(sa, sb) / 2.0) ** 2
        return a_out, np.where(anti, -a_out, a_out).astype(np.int8)

    def exact_E(a, b):
        return -math.cos(angle(a, b))

    def exact_table(pairs):
        joint = np.zeros((len(pairs), 1, 1, 1, 2, 2))
        for p, (a, b) in enumerate(pairs):
            c = math.cos(angle(a, b))
            for i, A in enumerate((-1, 1)):
                for j, B in enumerate((-1, 1)):
                    joint[p, 0, 0, 0, i, j] = (1.0 - A * B * c) / 4.0
        return ExactTable(tuple(pairs), joint)

    shared = frozenset({"setting_a", "setting_b", "lambda", "mu_a", "mu_b", "shared_stream"})
    return ModelSpec(
        model_id="singlet",
        sample_lambda=lambda sa, sb, stream: _trivial(len(sa)),
        respond_a=None,
        respond_b=None,
        respond_joint=respond_joint,
        locality=Locality(shared, shared),
        exact_E=exact_E,
        exact_table=exact_table,
        satisfies=frozenset({SI, MI}),
    )


# -- sign model ---------------------------------------------------------------

SPHERE_ZPHI = ContinuousSpace((-1.0, 0.0), (1.0, 2.0 * math.pi))


def _sphere_points(lam):
    """(z, phi) equal-area coordinates -> unit vectors."""
    z = lam[:, 0]
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([r * np.cos(lam[:, 1]), r * np.sin(lam[:, 1]), z], axis=1)


def _common_plane(directions):
    """Orthonormal basis (e1, e2) of a plane containing all directions, or None."""
    vs = [d.as_array() for d in directions]
    e1 = vs[0]
    normal = None
    for v in vs[1:]:
        c = np.cross(e1, v)
        if np.linalg.norm(c) > 1e-9:
            normal = c / np.linalg.norm(c)
            break
    if normal is None:
        # all parallel: any plane through e1 works
        helper = np.array([0.0, 0.0, 1.0]) if abs(e1[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        normal = np.cross(e1, helper)
        normal /= np.linalg.norm(normal)
    if any(abs(float(normal @ v)) > 1e-9 for v in vs):
        return None
    return e1, np.cross(normal, e1)


def build_sign_model():
    """lambda uniform on the sphere, A = sign(a . lambda), B = -sign(b . lambda).

    lambda is stored in equal-area coordinates (z, phi): z = cos(polar angle)
    and phi are independent and uniform exactly when the point is uniform on
    the sphere.
    """

    def sample_lambda(sa, sb, stream):
        u = stream.uniform(2)
        return np.stack([2.0 * u[:, 0] - 1.0, 2.0 * math.pi * u[:, 1]], axis=1)

    def respond_a(sa, lam, mu_a, stream):
        return sign(np.einsum("ij,ij->i", sa, _sphere_points(lam)))

    def respond_b(sb, lam, mu_b, stream):
        return -sign(np.einsum("ij,ij->i", sb, _sphere_points(lam)))

    def exact_E(a, b):
        return -1.0 + 2.0 * angle(a, b) / math.pi

    def exact_table(pairs):
        # For coplanar settings only the azimuth psi of lambda's projection
        # onto the plane matters, and psi is uniform on the circle.
        dirs = [d for pair in pairs for d in pair]
        basis = _common_plane(dirs)
        if basis is None:
            raise NoExactInterface("sign model: exact table needs coplanar settings")
        e1, e2 = basis

        def azimuth(d):
            v = d.as_array()
            return math.atan2(float(v @ e2), float(v @ e1))

        cuts = [(azimuth(d) + s * math.pi / 2.0) % (2.0 * math.pi) for d in dirs for s in (1, -1)]
        _, lengths, mids = interval_cells(cuts, 0.0, 2.0 * math.pi)
        weights = lengths / (2.0 * math.pi)
        joint = np.zeros((len(pairs), len(mids), 1, 1, 2, 2))
        for p, (a, b) in enumerate(pairs):
            A = sign(np.cos(mids - azimuth(a)))
            B = -sign(np.cos(mids - azimuth(b)))
            joint[p, np.arange(len(mids)), 0, 0, (A + 1) // 2, (B + 1) // 2] = weights
        return ExactTable(tuple(pairs), joint)

    return ModelSpec(
        model_id="sign",
        lambda_space=SPHERE_ZPHI,
        sample_lambda=sample_lambda,
        respond_a=respond_a,
        respond_b=respond_b,
        exact_E=exact_E,
        exact_table=exact_table,
        satisfies=frozenset({LC, SI, MI, FAC, DET}),
    )


# -- microstate-leak family ---------------------------------------------------

def _leak_respond_a(sa, lam, mu_a, stream):
    # mu_a carries the remote setting; lambda is in side A's past cone
    b_hat = _plus_minus(lam[:, 0] < 0.5)
    anti = lam[:, 1] < np.cos(angles(sa, mu_a) / 2.0) ** 2
    return np.where(anti, -b_hat, b_hat).astype(np.int8)


def _leak_respond_b(sb, lam, mu_b, stream):
    return _plus_minus(lam[:, 0] < 0.5)


def _leak_table(pairs, mu_dirs, mu_weights, u1_edges, u1_probs):
    """Exact table shared by the leak family.

    ``mu_weights(p)`` gives P(mu_a-cell | pair p) over ``mu_dirs``;
    ``u1_probs(p)`` gives P(u1-cell | pair p) over ``u1_edges``.
    """
    cuts = [
        math.cos(angle(a, m) / 2.0) ** 2 for a, _ in pairs for m in mu_dirs
    ]
    _, u2_len, u2_mid = interval_cells(cuts)
    u1_mid = 0.5 * (u1_edges[:-1] + u1_edges[1:])
    n1, n2 = len(u1_mid), len(u2_mid)
    joint = np.zeros((len(pairs), n1 * n2, len(mu_dirs), 1, 2, 2))
    b_hat = np.where(u1_mid < 0.5, 1, -1)
    for p, (a, _) in enumerate(pairs):
        w1 = u1_probs(p)
        wm = mu_weights(p)
        for m, d in enumerate(mu_dirs):
            if wm[m] == 0.0:
                continue
            c2 = math.cos(angle(a, d) / 2.0) ** 2
            for i in range(n1):
                for k in range(n2):
                    A = -b_hat[i] if u2_mid[k] < c2 else b_hat[i]
                    joint[p, i * n2 + k, m, 0, (A + 1) // 2, (b_hat[i] + 1) // 2] = (
                        w1[i] * u2_len[k] * wm[m]
                    )
    return ExactTable(tuple(pairs), joint)


def _remote_settings(pairs):
    out = []
    for _, b in pairs:
        if not any(b.close_to(e) for e in out):
            out.append(b)
    return out


def build_microstate_leak_model():
    """Locally causal, settings independent, and violates microstate independence.

    lambda = (u1, u2) uniform on the unit square.  Side B answers from u1
    alone.  Side A's apparatus microstate carries the setting used on side
    B (correlation set up in the common past), so A can answer -B_hat when
    u2 < cos^2(theta/2) and +B_hat otherwise, with B_hat recomputed from u1.
    """

    def sample_microstates(sa, sb, lam, stream):
        return sb.copy(), _trivial(len(sa))

    def exact_E(a, b):
        return -math.cos(angle(a, b))

    def exact_table(pairs):
        mu_dirs = _remote_settings(pairs)

        def mu_weights(p):
            b = pairs[p][1]
            return np.array([1.0 if b.close_to(d) else 0.0 for d in mu_dirs])

        return _leak_table(pairs, mu_dirs, mu_weights, np.array([0.0, 0.5, 1.0]),
                           lambda p: np.array([0.5, 0.5]))

    return ModelSpec(
        model_id="leak",
        lambda_space=UNIT_SQUARE,
        mu_a_space=UNIT_BOX3,
        sample_lambda=lambda sa, sb, stream: stream.uniform(2),
        sample_microstates=sample_microstates,
        respond_a=_leak_respond_a,
        respond_b=_leak_respond_b,
        exact_E=exact_E,
        exact_table=exact_table,
        satisfies=frozenset({LC, SI, DET}),
    )


def build_ablated_leak_model(policy=None):
    """The leak model with side A's microstate drawn from the remote-setting marginal.

    The microstate still holds some direction b~, but b~ is sampled from the
    policy's marginal distribution of the side-B setting, independently of
    the setting actually chosen.
    """
    policy = policy or paper_policy()
    dirs = []
    weights = []
    for (_, b), w in zip(policy.pairs, policy.weights):
        for k, d in enumerate(dirs):
            if b.close_to(d):
                weights[k] += w
                break
        else:
            dirs.append(b)
            weights.append(w)
    dir_array = np.array([d.as_array() for d in dirs])
    cum = np.cumsum(weights)

    def sample_microstates(sa, sb, lam, stream):
        u = stream.uniform()
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
        return dir_array[idx], _trivial(len(sa))

    def exact_E(a, b):
        return -math.fsum(w * math.cos(angle(a, d)) for d, w in zip(dirs, weights))

    def exact_table(pairs):
        return _leak_table(pairs, dirs, lambda p: np.array(weights), np.array([0.0, 0.5, 1.0]),
                           lambda p: np.array([0.5, 0.5]))

    return ModelSpec(
        model_id="leak-ablated",
        lambda_space=UNIT_SQUARE,
        mu_a_space=UNIT_BOX3,
        sample_lambda=lambda sa, sb, stream: stream.uniform(2),
        sample_microstates=sample_microstates,
        respond_a=_leak_respond_a,
        respond_b=_leak_respond_b,
        exact_E=exact_E,
        exact_table=exact_table,
        satisfies=frozenset({LC, SI, MI, FAC, DET}),
    )


def build_settings_dependent_model(target=None, shift=0.3):
    """Leak-model responses with a lambda sampler that sees the settings.

    For the ``target`` pair (default: the standard (a, b)) u1 ~ U[2 shift, 1],
    which moves its mean from 1/2 to 1/2 + shift.  Used to check the power of
    the settings-independence audit.
    """
    if not 0.0 < shift < 0.5:
        raise ValueError("shift must be in (0, 0.5)")
    if target is None:
        a, _, b, _ = paper_configuration()
        target = (a, b)
    ta, tb = (d.as_array() for d in target)
    lo = 2.0 * shift

    def is_target(sa, sb):
        return np.all(np.abs(sa - ta) <= 1e-9, axis=1) & np.all(np.abs(sb - tb) <= 1e-9, axis=1)

    def sample_lambda(sa, sb, stream):
        u = stream.uniform(2)
        hit = is_target(sa, sb)
        u[hit, 0] = lo + (1.0 - lo) * u[hit, 0]
        return u

    def sample_microstates(sa, sb, lam, stream):
        return sb.copy(), _trivial(len(sa))

    def exact_table(pairs):
        mu_dirs = _remote_settings(pairs)
        edges = np.unique(np.array([0.0, 0.5, lo, 1.0]))
        plain = np.diff(edges)
        shifted = np.diff(np.clip(edges, lo, 1.0)) / (1.0 - lo)

        def u1_probs(p):
            a, b = pairs[p]
            return shifted if (a.close_to(target[0]) and b.close_to(target[1])) else plain

        def mu_weights(p):
            b = pairs[p][1]
            return np.array([1.0 if b.close_to(d) else 0.0 for d in mu_dirs])

        return _leak_table(pairs, mu_dirs, mu_weights, edges, u1_probs)

    return ModelSpec(
        model_id="adversarial",
        lambda_space=UNIT_SQUARE,
        mu_a_space=UNIT_BOX3,
        sample_lambda=sample_lambda,
        sample_microstates=sample_microstates,
        respond_a=_leak_respond_a,
        respond_b=_leak_respond_b,
        exact_table=exact_table,
        satisfies=frozenset({LC, DET}),
    )


# -- weighted dice ------------------------------------------------------------

def _check_probabilities(values, what):
    values = [float(v) for v in values]
    if any(not (0.0 <= v <= 1.0) or math.isnan(v) for v in values):
        raise InvalidWeights(f"{what} must lie in [0, 1], got {values}")
    return values


def build_weighted_dice_model(weights, directions_a=None, directions_b=None):
    """Each apparatus rolls one of several weighted dice.

    lambda is uniform on {0, ..., m-1} (m = len(weights)); a side's setting
    index i in {0, 1} picks die d = (lambda + i) mod m, which for two dice
    is lambda XOR i.  The die roll is the apparatus microstate u ~ U[0, 1],
    and the outcome is +1 iff u < weights[d]: deterministic given
    (setting, lambda, microstate), but only probabilistic given
    (setting, lambda).
    """
    weights = _check_probabilities(weights, "dice weights")
    if len(weights) < 2:
        raise InvalidWeights("need at least two dice")
    if len(set(weights)) == 1:
        raise InvalidWeights("dice weights must not all be equal")
    m = len(weights)
    w = np.array(weights)
    a, ap, b, bp = paper_configuration()
    dirs_a = list(directions_a or (a, ap))
    dirs_b = list(directions_b or (b, bp))
    if len(dirs_a) != 2 or len(dirs_b) != 2:
        raise ValueError("the dice model takes exactly two settings per side")

    def sample_lambda(sa, sb, stream):
        return np.minimum((stream.uniform() * m).astype(np.int64), m - 1)

    def sample_microstates(sa, sb, lam, stream):
        u = stream.uniform(2)
        return u[:, :1], u[:, 1:]

    def respond_a(sa, lam, mu_a, stream):
        d = (lam + _index_in(sa, dirs_a, "dice side A")) % m
        return _plus_minus(mu_a[:, 0] < w[d])

    def respond_b(sb, lam, mu_b, stream):
        d = (lam + _index_in(sb, dirs_b, "dice side B")) % m
        return _plus_minus(mu_b[:, 0] < w[d])

    def exact_E(da, db):
        ia = _index_of(da, dirs_a, "dice side A")
        ib = _index_of(db, dirs_b, "dice side B")
        return math.fsum(
            (2.0 * w[(lam + ia) % m] - 1.0) * (2.0 * w[(lam + ib) % m] - 1.0) for lam in range(m)
        ) / m

    def exact_table(pairs):
        _, lengths, mids = interval_cells(weights)
        n = len(mids)
        joint = np.zeros((len(pairs), m, n, n, 2, 2))
        for p, (da, db) in enumerate(pairs):
            ia = _index_of(da, dirs_a, "dice side A")
            ib = _index_of(db, dirs_b, "dice side B")
            for lam in range(m):
                A = np.where(mids < w[(lam + ia) % m], 1, 0)
                B = np.where(mids < w[(lam + ib) % m], 1, 0)
                for i in range(n):
                    for j in range(n):
                        joint[p, lam, i, j, A[i], B[j]] = lengths[i] * lengths[j] / m
        return ExactTable(tuple(pairs), joint)

    return ModelSpec(
        model_id="dice:" + ",".join(repr(x) for x in weights),
        lambda_space=DiscreteSpace(m),
        mu_a_space=UNIT_INTERVAL,
        mu_b_space=UNIT_INTERVAL,
        sample_lambda=sample_lambda,
        sample_microstates=sample_microstates,
        respond_a=respond_a,
        respond_b=respond_b,
        exact_E=exact_E,
        exact_table=exact_table,
        satisfies=frozenset({LC, SI, MI, FAC, DET}),
    )


# -- factorizable models ------------------------------------------------------

def build_factorizable_model(rho, p_a, p_b, directions_a=None, directions_b=None,
                             model_id="factorizable"):
    """Discrete lambda ~ rho, independent local coins P(A=+1 | a, lambda), P(B=+1 | b, lambda).

    ``p_a`` and ``p_b`` have shape (2, k): row i is the response table of
    the side's i-th setting.
    """
    rho = np.asarray(rho, dtype=float)
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    k = len(rho)
    if k < 1 or np.any(rho < 0) or abs(rho.sum() - 1.0) > 1e-12:
        raise InvalidWeights("rho must be a probability vector")
    if p_a.shape != (2, k) or p_b.shape != (2, k):
        raise ValueError(f"response tables must have shape (2, {k})")
    _check_probabilities(np.concatenate([p_a.ravel(), p_b.ravel()]), "response probabilities")
    a, ap, b, bp = paper_configuration()
    dirs_a = list(directions_a or (a, ap))
    dirs_b = list(directions_b or (b, bp))
    cum = np.cumsum(rho)

    def sample_lambda(sa, sb, stream):
        u = stream.uniform()
        return np.minimum(np.searchsorted(cum, u, side="right"), k - 1).astype(np.int64)

    def respond_a(sa, lam, mu_a, stream):
        return _plus_minus(stream.uniform() < p_a[_index_in(sa, dirs_a, "side A"), lam])

    def respond_b(sb, lam, mu_b, stream):
        return _plus_minus(stream.uniform() < p_b[_index_in(sb, dirs_b, "side B"), lam])

    def exact_table(pairs):
        joint = np.zeros((len(pairs), k, 1, 1, 2, 2))
        for p, (da, db) in enumerate(pairs):
            pa = p_a[_index_of(da, dirs_a, "side A")]
            pb = p_b[_index_of(db, dirs_b, "side B")]
            qa = np.stack([1.0 - pa, pa], axis=1)
            qb = np.stack([1.0 - pb, pb], axis=1)
            joint[p, :, 0, 0] = rho[:, None, None] * qa[:, :, None] * qb[:, None, :]
        return ExactTable(tuple(pairs), joint)

    flags = {LC, SI, MI, FAC}
    if np.all((p_a == 0) | (p_a == 1)) and np.all((p_b == 0) | (p_b == 1)):
        flags.add(DET)
    return ModelSpec(
        model_id=model_id,
        lambda_space=DiscreteSpace(k),
        sample_lambda=sample_lambda,
        respond_a=respond_a,
        respond_b=respond_b,
        exact_table=exact_table,
        satisfies=frozenset(flags),
    )


def build_random_factorizable_model(k_lambda, seed):
    """A factorizable model with random rho and response tables on the standard CHSH settings."""
    if k_lambda < 1:
        raise ValueError("k_lambda must be >= 1")
    rng = np.random.default_rng(seed)
    rho = rng.dirichlet(np.ones(k_lambda))
    p_a = rng.uniform(size=(2, k_lambda))
    p_b = rng.uniform(size=(2, k_lambda))
    return build_factorizable_model(rho, p_a, p_b, model_id=f"randfac:{k_lambda}:{seed}")


# -- result leak --------------------------------------------------------------

def build_result_leak_demo_model():
    """Side A's microstate copies the variable w that fixes B.

    w ~ U[0, 1] is side B's microstate and B = sign(w - 1/2); side A's
    microstate is a copy of w and A = sign(w - 1/2) as well, so A = B.
    Only meant to exhibit the inverted outcome-independence pattern.
    """

    def sample_microstates(sa, sb, lam, stream):
        w = stream.uniform()[:, None]
        return w.copy(), w

    def respond_a(sa, lam, mu_a, stream):
        return sign(mu_a[:, 0] - 0.5)

    def respond_b(sb, lam, mu_b, stream):
        return sign(mu_b[:, 0] - 0.5)

    def exact_E(a, b):
        return 1.0

    def exact_table(pairs):
        joint = np.zeros((len(pairs), 1, 2, 2, 2, 2))
        joint[:, 0, 0, 0, 0, 0] = 0.5  # w < 1/2
        joint[:, 0, 1, 1, 1, 1] = 0.5
        return ExactTable(tuple(pairs), joint)

    return ModelSpec(
        model_id="resultleak",
        mu_a_space=UNIT_INTERVAL,
        mu_b_space=UNIT_INTERVAL,
        sample_lambda=lambda sa, sb, stream: _trivial(len(sa)),
        sample_microstates=sample_microstates,
        respond_a=respond_a,
        respond_b=respond_b,
        exact_E=exact_E,
        exact_table=exact_table,
        satisfies=frozenset({LC, SI, DET}),
    )


# -- registry -----------------------------------------------------------------

ZOO_IDS = ("singlet", "sign", "leak", "leak-ablated", "dice:0.9,0.2", "randfac:4:1", "resultleak")


def build_model(model_id):
    """Build a model from its string id.

    Ids: ``singlet``, ``sign``, ``leak``, ``leak-ablated``, ``adversarial``,
    ``dice:w1,w2[,...]``, ``randfac:k:seed``, ``resultleak``.
    Raises ``ValueError`` for unknown or malformed ids and
    :class:`InvalidWeights` for out-of-range dice weights.
    """
    simple = {
        "singlet": build_singlet_oracle,
        "sign": build_sign_model,
        "leak": build_microstate_leak_model,
        "leak-ablated": build_ablated_leak_model,
        "adversarial": build_settings_dependent_model,
        "resultleak": build_result_leak_demo_model,
    }
    if model_id in simple:
        return simple[model_id]()
    head, _, rest = model_id.partition(":")
    if head == "dice" and rest:
        try:
            weights = [float(x) for x in rest.split(",")]
        except ValueError as exc:
            raise ValueError(f"malformed dice weights in {model_id!r}") from exc
        return build_weighted_dice_model(weights)
    if head == "randfac" and rest:
        parts = rest.split(":")
        if len(parts) != 2:
            raise ValueError(f"expected randfac:k:seed, got {model_id!r}")
        try:
            k, seed = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"malformed randfac id {model_id!r}") from exc
        if k < 1 or seed < 0:
            raise ValueError(f"malformed randfac id {model_id!r}")
        return build_random_factorizable_model(k, seed)
    raise ValueError(f"unknown model id {model_id!r}")
