"""Domain types, the generative model interface and the experiment runner.

Models are vectorized: every procedure on a :class:`ModelSpec` receives
numpy arrays holding a whole batch of runs plus an :class:`~bellsim.rng.RngStream`
whose rows are the per-run streams.  Row ``i`` of every output may depend
only on row ``i`` of the inputs.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import InvalidPolicy, ModelFailure
from .rng import RngStream, Stage

__all__ = [
    "Direction",
    "Outcome",
    "Discrete",
    "Continuous",
    "Side",
    "Microstate",
    "DiscreteSpace",
    "ContinuousSpace",
    "TRIVIAL",
    "RunRecord",
    "Ensemble",
    "SettingsPolicy",
    "Assumption",
    "Locality",
    "LOCAL",
    "ModelSpec",
    "angle",
    "angles",
    "sign",
    "run_experiment",
    "paper_configuration",
    "paper_policy",
    "chsh_pairs",
]

NORM_TOL = 1e-12


@dataclass(frozen=True)
class Direction:
    """A measurement setting: a unit vector in R^3."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not abs(norm - 1.0) <= NORM_TOL:
            raise ValueError(f"Direction must be a unit vector, |v| = {norm!r}")

    @classmethod
    def from_vector(cls, v, normalize=False):
        v = np.asarray(v, dtype=float)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def planar(cls, phi):
        """Unit vector in the x-y plane at azimuth ``phi`` (radians)."""
        return cls(math.cos(phi), math.sin(phi), 0.0)

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def dot(self, other):
        return self.x * other.x + self.y * other.y + self.z * other.z

    def close_to(self, other, tol=1e-9):
        return (
            abs(self.x - other.x) <= tol
            and abs(self.y - other.y) <= tol
            and abs(self.z - other.z) <= tol
        )


def angle(a, b):
    """Angle between two directions in [0, pi]."""
    return math.acos(min(1.0, max(-1.0, a.dot(b))))


def angles(va, vb):
    """Row-wise angle between two (n, 3) arrays of unit vectors."""
    return np.arccos(np.clip(np.einsum("ij,ij->i", va, vb), -1.0, 1.0))


def sign(x):
    """Elementwise sign with sign(0) = +1, as int8."""
    return np.where(np.asarray(x) >= 0, 1, -1).astype(np.int8)


class Outcome(enum.IntEnum):
    DOWN = -1
    UP = 1


@dataclass(frozen=True)
class Discrete:
    index: int


@dataclass(frozen=True)
class Continuous:
    values: tuple


HiddenState = Union[Discrete, Continuous]


class Side(enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class Microstate:
    payload: HiddenState
    side: Side


@dataclass(frozen=True)
class DiscreteSpace:
    """States ``0 .. size-1``; batches are int64 arrays of shape (n,)."""

    size: int

    kind = "d"

    def check(self, values, what="state"):
        values = np.asarray(values)
        if values.ndim != 1 or not np.issubdtype(values.dtype, np.integer):
            raise ModelFailure(f"{what}: expected a 1-d integer array, got {values.dtype} {values.shape}")
        if values.size and (values.min() < 0 or values.max() >= self.size):
            raise ModelFailure(f"{what}: discrete index outside [0, {self.size})")
        return values.astype(np.int64, copy=False)

    def payload(self, value):
        return Discrete(int(value))

    def to_json(self):
        return {"d": self.size}


@dataclass(frozen=True)
class ContinuousSpace:
    """Boxes ``low <= x <= high``; batches are float arrays of shape (n, k)."""

    low: tuple
    high: tuple

    kind = "c"

    def __post_init__(self):
        if len(self.low) != len(self.high) or not self.low:
            raise ValueError("low and high must be nonempty and of equal length")

    @property
    def dim(self):
        return len(self.low)

    def check(self, values, what="state"):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.dim:
            raise ModelFailure(f"{what}: expected shape (n, {self.dim}), got {values.shape}")
        lo = np.asarray(self.low)
        hi = np.asarray(self.high)
        if not np.all(np.isfinite(values)) or np.any(values < lo) or np.any(values > hi):
            raise ModelFailure(f"{what}: continuous state outside declared bounds")
        return values

    def payload(self, value):
        return Continuous(tuple(float(v) for v in value))

    def to_json(self):
        return {"c": [list(self.low), list(self.high)]}


TRIVIAL = DiscreteSpace(1)


def space_from_json(obj):
    if "d" in obj:
        return DiscreteSpace(int(obj["d"]))
    low, high = obj["c"]
    return ContinuousSpace(tuple(float(v) for v in low), tuple(float(v) for v in high))


@dataclass(frozen=True)
class RunRecord:
    setting_a: Direction
    setting_b: Direction
    outcome_a: Outcome
    outcome_b: Outcome
    lam: HiddenState
    mu_a: Microstate
    mu_b: Microstate
    run_index: int


@dataclass(frozen=True)
class SettingsPolicy:
    """A finite distribution over setting pairs ``(a, b)``."""

    pairs: tuple
    weights: tuple
    policy_id: str = "custom"

    def __post_init__(self):
        if not self.pairs:
            raise InvalidPolicy("a settings policy needs at least one pair")
        if len(self.pairs) != len(self.weights):
            raise InvalidPolicy("pairs and weights differ in length")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidPolicy("weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise InvalidPolicy(f"weights sum to {math.fsum(self.weights)!r}, not 1")
        object.__setattr__(self, "pairs", tuple((a, b) for a, b in self.pairs))
        object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))

    @classmethod
    def uniform(cls, pairs, policy_id="custom"):
        pairs = tuple(pairs)
        return cls(pairs, tuple([1.0 / len(pairs)] * len(pairs)), policy_id)

    def distinct(self, side):
        """Distinct directions on one side, in first-appearance order."""
        out = []
        for pair in self.pairs:
            d = pair[0] if side == Side.A else pair[1]
            if not any(d.close_to(e) for e in out):
                out.append(d)
        return out

    def to_json(self):
        return {
            "id": self.policy_id,
            "pairs": [[[a.x, a.y, a.z], [b.x, b.y, b.z]] for a, b in self.pairs],
            "weights": list(self.weights),
        }

    @classmethod
    def from_json(cls, obj):
        pairs = tuple(
            (Direction(*a), Direction(*b)) for a, b in obj["pairs"]
        )
        return cls(pairs, tuple(obj["weights"]), obj.get("id", "custom"))


class Assumption(enum.Enum):
    LOCAL_CAUSALITY = "LocalCausality"
    SETTINGS_INDEPENDENCE = "SettingsIndependence"
    MICROSTATE_INDEPENDENCE = "MicrostateIndependence"
    FACTORIZABILITY = "Factorizability"
    DETERMINISTIC = "Deterministic"


FORBIDDEN_A = frozenset({"setting_b", "outcome_b"})
FORBIDDEN_B = frozenset({"setting_a", "outcome_a"})


@dataclass(frozen=True)
class Locality:
    """Which arguments each response function reads."""

    reads_a: frozenset
    reads_b: frozenset

    @property
    def is_local(self):
        return not (self.reads_a & FORBIDDEN_A) and not (self.reads_b & FORBIDDEN_B)


LOCAL = Locality(
    frozenset({"setting_a", "lambda", "mu_a"}),
    frozenset({"setting_b", "lambda", "mu_b"}),
)


def _no_microstates(setting_a, setting_b, lam, stream):
    n = len(setting_a)
    return np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)


@dataclass(frozen=True)
class ModelSpec:
    """A generative hidden-variable model.

    ``respond_a(setting_a, lam, mu_a, stream)`` and
    ``respond_b(setting_b, lam, mu_b, stream)`` return int arrays of +-1.
    A model whose statistics cannot be produced locally instead supplies
    ``respond_joint(setting_a, setting_b, lam, mu_a, mu_b, stream_a, stream_b)``
    and must say so in ``locality``.

    ``exact_table(pairs)`` returns an :class:`~bellsim.exact.ExactTable`; ``exact_E(a, b)``
    is a registered closed form for the correlation.
    """

    model_id: str
    sample_lambda: Callable
    respond_a: Optional[Callable]
    respond_b: Optional[Callable]
    lambda_space: object = TRIVIAL
    mu_a_space: object = TRIVIAL
    mu_b_space: object = TRIVIAL
    sample_microstates: Callable = _no_microstates
    locality: Locality = LOCAL
    respond_joint: Optional[Callable] = None
    exact_E: Optional[Callable] = None
    exact_table: Optional[Callable] = None
    satisfies: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.respond_joint is None and (self.respond_a is None or self.respond_b is None):
            raise ValueError("a model needs respond_a and respond_b, or respond_joint")

    def outcomes(self, setting_a, setting_b, lam, mu_a, mu_b, stream_a, stream_b):
        if self.respond_joint is not None:
            return self.respond_joint(setting_a, setting_b, lam, mu_a, mu_b, stream_a, stream_b)
        return (
            self.respond_a(setting_a, lam, mu_a, stream_a),
            self.respond_b(setting_b, lam, mu_b, stream_b),
        )


def _check_outcomes(values, n, what):
    values = np.asarray(values)
    if values.shape != (n,):
        raise ModelFailure(f"{what}: expected shape ({n},), got {values.shape}")
    if not np.all((values == 1) | (values == -1)):
        raise ModelFailure(f"{what}: outcomes must be exactly -1 or +1")
    return values.astype(np.int8)


def _to_record(space, value, side=None):
    payload = space.payload(value)
    return payload if side is None else Microstate(payload, side)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A seeded collection of runs, stored column-wise."""

    model_id: str
    settings_policy_id: str
    master_seed: int
    run_index: np.ndarray
    settings_a: np.ndarray
    settings_b: np.ndarray
    outcome_a: np.ndarray
    outcome_b: np.ndarray
    lam: np.ndarray
    mu_a: np.ndarray
    mu_b: np.ndarray
    lambda_space: object = TRIVIAL
    mu_a_space: object = TRIVIAL
    mu_b_space: object = TRIVIAL
    policy: Optional[SettingsPolicy] = None

    def __len__(self):
        return len(self.run_index)

    def record(self, i):
        return RunRecord(
            setting_a=Direction(*map(float, self.settings_a[i])),
            setting_b=Direction(*map(float, self.settings_b[i])),
            outcome_a=Outcome(int(self.outcome_a[i])),
            outcome_b=Outcome(int(self.outcome_b[i])),
            lam=_to_record(self.lambda_space, self.lam[i]),
            mu_a=_to_record(self.mu_a_space, self.mu_a[i], Side.A),
            mu_b=_to_record(self.mu_b_space, self.mu_b[i], Side.B),
            run_index=int(self.run_index[i]),
        )

    @property
    def runs(self):
        return [self.record(i) for i in range(len(self))]

    def __iter__(self):
        return (self.record(i) for i in range(len(self)))

    def head(self, n):
        """The first ``n`` runs as a new ensemble."""
        cols = {
            name: getattr(self, name)[:n]
            for name in ("run_index", "settings_a", "settings_b", "outcome_a",
                         "outcome_b", "lam", "mu_a", "mu_b")
        }
        return Ensemble(
            self.model_id, self.settings_policy_id, self.master_seed,
            lambda_space=self.lambda_space, mu_a_space=self.mu_a_space,
            mu_b_space=self.mu_b_space, policy=self.policy, **cols,
        )

    def same_runs(self, other):
        """Exact, bitwise equality of all run columns."""
        names = ("run_index", "settings_a", "settings_b", "outcome_a",
                 "outcome_b", "lam", "mu_a", "mu_b")
        return all(
            getattr(self, k).dtype == getattr(other, k).dtype
            and np.array_equal(getattr(self, k), getattr(other, k))
            for k in names
        )


def _simulate_chunk(model, pair_a, pair_b, cum, master_seed, runs):
    n = len(runs)
    u = RngStream(master_seed, runs, Stage.SETTINGS).uniform()
    idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    sa = pair_a[idx]
    sb = pair_b[idx]
    lam = model.lambda_space.check(
        model.sample_lambda(sa, sb, RngStream(master_seed, runs, Stage.LAMBDA)), "lambda"
    )
    mu_a, mu_b = model.sample_microstates(
        sa, sb, lam, RngStream(master_seed, runs, Stage.MICROSTATES)
    )
    mu_a = model.mu_a_space.check(mu_a, "mu_a")
    mu_b = model.mu_b_space.check(mu_b, "mu_b")
    a_out, b_out = model.outcomes(
        sa, sb, lam, mu_a, mu_b,
        RngStream(master_seed, runs, Stage.RESPOND_A),
        RngStream(master_seed, runs, Stage.RESPOND_B),
    )
    return (
        sa, sb,
        _check_outcomes(a_out, n, "outcome_a"),
        _check_outcomes(b_out, n, "outcome_b"),
        lam, mu_a, mu_b,
    )


def run_experiment(model, policy, n_runs, master_seed, *, chunk_size=1 << 16, workers=1):
    """Simulate ``n_runs`` trials of ``model`` under ``policy``.

    Per run: a setting pair is drawn from the policy, then lambda, then the
    two microstates, then both outcomes.  Each stage draws from its own
    stream keyed on ``(master_seed, run_index)``, so the result does not
    depend on ``chunk_size`` or ``workers``.
    """
    if not isinstance(n_runs, (int, np.integer)) or n_runs < 1:
        raise ValueError(f"n_runs must be a positive integer, got {n_runs!r}")
    if not isinstance(policy, SettingsPolicy):
        raise InvalidPolicy("policy must be a SettingsPolicy")
    if not 0 <= int(master_seed) < 2**64:
        raise ValueError("master_seed must be a 64-bit unsigned integer")
    pair_a = np.array([a.as_array() for a, _ in policy.pairs])
    pair_b = np.array([b.as_array() for _, b in policy.pairs])
    cum = np.cumsum(policy.weights)
    starts = range(0, n_runs, chunk_size)
    chunks = [np.arange(s, min(s + chunk_size, n_runs), dtype=np.uint64) for s in starts]

    def work(runs):
        return _simulate_chunk(model, pair_a, pair_b, cum, master_seed, runs)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    cols = [np.concatenate([p[k] for p in parts]) for k in range(7)]
    return Ensemble(
        model_id=model.model_id,
        settings_policy_id=policy.policy_id,
        master_seed=int(master_seed),
        run_index=np.arange(n_runs, dtype=np.int64),
        settings_a=cols[0],
        settings_b=cols[1],
        outcome_a=cols[2],
        outcome_b=cols[3],
        lam=cols[4],
        mu_a=cols[5],
        mu_b=cols[6],
        lambda_space=model.lambda_space,
        mu_a_space=model.mu_a_space,
        mu_b_space=model.mu_b_space,
        policy=policy,
    )


_H = math.sqrt(0.5)


def paper_configuration():
    """Coplanar ``(a, a', b, b')`` with a _|_ a', b _|_ b' and 45 degrees between a and b."""
    return (
        Direction(1.0, 0.0, 0.0),
        Direction(0.0, 1.0, 0.0),
        Direction(_H, _H, 0.0),
        Direction(_H, -_H, 0.0),
    )


def chsh_pairs(a, ap, b, bp):
    """The four CHSH setting pairs in the order (ab, ab', a'b, a'b')."""
    return ((a, b), (a, bp), (ap, b), (ap, bp))


def paper_policy():
    """Uniform distribution over the four CHSH pairs of :func:`paper_configuration`."""
    return SettingsPolicy.uniform(chsh_pairs(*paper_configuration()), policy_id="paper")
