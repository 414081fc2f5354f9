"""The two-friends game.

Two friends agree on a strategy in a room, leave by different doors and are
each asked one question (a measurement direction), answering +1 or -1.
They cannot communicate after leaving.  With the shirt-color leak, friend 1
sees a feature of the examiner that is perfectly correlated with the
question put to friend 2.

Rounds are simulated in batches like ensembles: the shared notes for all
rounds come from one counter-based stream, so a transcript is a pure
function of (config, strategy).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    TRIVIAL,
    ContinuousSpace,
    Ensemble,
    SettingsPolicy,
    angles,
    paper_configuration,
    sign,
)
from .errors import InvalidConfig, StrategyViolation
from .estimators import chsh_statistic, mc_expectation
from .rng import RngStream, Stage

__all__ = [
    "Leak",
    "GameConfig",
    "Strategy",
    "GameScore",
    "play_game",
    "run_game",
    "score_transcript",
    "STRATEGIES",
    "get_strategy",
]


class Leak(enum.Enum):
    NONE = "none"
    SHIRT_COLOR_PERFECT = "shirt-color"


@dataclass(frozen=True)
class GameConfig:
    questions_side1: tuple = field(default_factory=lambda: paper_configuration()[:2])
    questions_side2: tuple = field(default_factory=lambda: paper_configuration()[2:])
    rounds: int = 100_000
    leak: Leak = Leak.NONE
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.rounds, (int, np.integer)) or self.rounds < 1:
            raise InvalidConfig(f"rounds must be a positive integer, got {self.rounds!r}")
        if not self.questions_side1 or not self.questions_side2:
            raise InvalidConfig("question lists must be nonempty")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "questions_side1", tuple(self.questions_side1))
        object.__setattr__(self, "questions_side2", tuple(self.questions_side2))
        object.__setattr__(self, "leak", Leak(self.leak))


@dataclass(frozen=True)
class Strategy:
    """What the friends agree on in the room.

    ``prepare(stream)`` returns the shared notes for a batch of rounds, an
    (n, k) float array with entries in ``note_bounds``.
    ``answer_1(q1, notes, leak_obs)`` and ``answer_2(q2, notes)`` return
    +-1 arrays; ``leak_obs`` is the side-2 question seen through the leak,
    or None without one.
    """

    name: str
    prepare: Callable
    answer_1: Callable
    answer_2: Callable
    note_bounds: tuple = ((0.0,), (1.0,))


@dataclass(frozen=True)
class GameScore:
    pairs: tuple
    empirical_E: tuple
    std_errors: tuple
    target_E: tuple
    max_abs_deviation: float
    chsh_empirical: float
    chsh_stderr: float

    def to_json(self):
        return {
            "pairs": [[[a.x, a.y, a.z], [b.x, b.y, b.z]] for a, b in self.pairs],
            "empirical_E": list(self.empirical_E),
            "std_errors": list(self.std_errors),
            "target_E": list(self.target_E),
            "max_abs_deviation": self.max_abs_deviation,
            # CHSH is only defined for two questions per side
            "chsh_empirical": None if math.isnan(self.chsh_empirical) else self.chsh_empirical,
            "chsh_stderr": None if math.isnan(self.chsh_stderr) else self.chsh_stderr,
        }


def _game_policy(config):
    pairs = [(q1, q2) for q1 in config.questions_side1 for q2 in config.questions_side2]
    return SettingsPolicy.uniform(pairs, policy_id="game")


def run_game(config, strategy):
    """Play all rounds; the transcript is returned as an Ensemble.

    lambda holds the shared note, side 1's microstate the leak observation
    (the side-2 question, or a trivial state without a leak).
    """
    n = int(config.rounds)
    runs = np.arange(n, dtype=np.uint64)
    q1 = np.array([q.as_array() for q in config.questions_side1])
    q2 = np.array([q.as_array() for q in config.questions_side2])
    u = RngStream(config.seed, runs, Stage.SETTINGS).uniform(2)
    i1 = np.minimum((u[:, 0] * len(q1)).astype(np.int64), len(q1) - 1)
    i2 = np.minimum((u[:, 1] * len(q2)).astype(np.int64), len(q2) - 1)
    s1, s2 = q1[i1], q2[i2]
    notes = np.asarray(strategy.prepare(RngStream(config.seed, runs, Stage.LAMBDA)), dtype=float)
    note_space = ContinuousSpace(*strategy.note_bounds)
    notes = note_space.check(notes, "shared note")
    leaked = config.leak is Leak.SHIRT_COLOR_PERFECT
    obs = s2.copy() if leaked else None
    a_out = np.asarray(strategy.answer_1(s1, notes, obs)).astype(np.int8)
    b_out = np.asarray(strategy.answer_2(s2, notes)).astype(np.int8)
    for name, x in (("answer_1", a_out), ("answer_2", b_out)):
        if x.shape != (n,) or not np.all((x == 1) | (x == -1)):
            raise StrategyViolation(f"{name} must return one +-1 answer per round")
    mu_space = ContinuousSpace((-1.0,) * 3, (1.0,) * 3) if leaked else TRIVIAL
    return Ensemble(
        model_id=f"game:{strategy.name}:{config.leak.value}",
        settings_policy_id="game",
        master_seed=int(config.seed),
        run_index=np.arange(n, dtype=np.int64),
        settings_a=s1,
        settings_b=s2,
        outcome_a=a_out,
        outcome_b=b_out,
        lam=notes,
        mu_a=obs if leaked else np.zeros(n, dtype=np.int64),
        mu_b=np.zeros(n, dtype=np.int64),
        lambda_space=note_space,
        mu_a_space=mu_space,
        mu_b_space=TRIVIAL,
        policy=_game_policy(config),
    )


def score_transcript(transcript, config):
    """Per-pair correlations against the quantum target -cos(theta), plus CHSH."""
    pairs = _game_policy(config).pairs
    est = [mc_expectation(transcript, q1, q2) for q1, q2 in pairs]
    target = [-math.cos(angles(q1.as_array()[None], q2.as_array()[None])[0]) for q1, q2 in pairs]
    if len(config.questions_side1) == 2 and len(config.questions_side2) == 2:
        (a, ap), (b, bp) = config.questions_side1, config.questions_side2
        report = chsh_statistic(transcript, a, ap, b, bp)
        s, s_err = report.statistic, report.std_error
    else:
        s, s_err = float("nan"), float("nan")
    return GameScore(
        pairs=tuple(pairs),
        empirical_E=tuple(e.value for e in est),
        std_errors=tuple(e.std_error for e in est),
        target_E=tuple(target),
        max_abs_deviation=max(abs(e.value - t) for e, t in zip(est, target)),
        chsh_empirical=s,
        chsh_stderr=s_err,
    )


def play_game(config, strategy):
    return score_transcript(run_game(config, strategy), config)


# -- shipped strategies -------------------------------------------------------

def _unit_pm(x):
    return np.where(x, 1, -1).astype(np.int8)


def _pilot_prepare(stream):
    return stream.uniform(2)


def _pilot_answer_1(q1, notes, leak_obs):
    # friend 1 knows the other question through the leak and answers with
    # the quantum conditional given friend 2's (pre-agreed) answer
    if leak_obs is None:
        raise StrategyViolation("pilot-wave strategy needs the side-2 question; no leak present")
    b_hat = _unit_pm(notes[:, 0] < 0.5)
    anti = notes[:, 1] < np.cos(angles(q1, leak_obs) / 2.0) ** 2
    return np.where(anti, -b_hat, b_hat)


def _pilot_answer_2(q2, notes):
    return _unit_pm(notes[:, 0] < 0.5)


def _sphere_prepare(stream):
    u = stream.uniform(2)
    return np.stack([2.0 * u[:, 0] - 1.0, 2.0 * math.pi * u[:, 1]], axis=1)


def _sphere_vec(notes):
    z = notes[:, 0]
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([r * np.cos(notes[:, 1]), r * np.sin(notes[:, 1]), z], axis=1)


STRATEGIES = {
    "pilot-wave": Strategy(
        "pilot-wave", _pilot_prepare, _pilot_answer_1, _pilot_answer_2,
        ((0.0, 0.0), (1.0, 1.0)),
    ),
    "sign": Strategy(
        "sign",
        _sphere_prepare,
        lambda q1, notes, obs: sign(np.einsum("ij,ij->i", q1, _sphere_vec(notes))),
        lambda q2, notes: -sign(np.einsum("ij,ij->i", q2, _sphere_vec(notes))),
        ((-1.0, 0.0), (1.0, 2.0 * math.pi)),
    ),
    "constant": Strategy(
        "constant",
        lambda stream: np.zeros((len(stream), 1)),
        lambda q1, notes, obs: np.ones(len(q1), dtype=np.int8),
        lambda q2, notes: np.ones(len(q2), dtype=np.int8),
    ),
    "shared-coin": Strategy(
        "shared-coin",
        lambda stream: stream.uniform(1),
        lambda q1, notes, obs: _unit_pm(notes[:, 0] < 0.5),
        lambda q2, notes: _unit_pm(notes[:, 0] < 0.5),
    ),
    "independent-coins": Strategy(
        "independent-coins",
        lambda stream: stream.uniform(2),
        lambda q1, notes, obs: _unit_pm(notes[:, 0] < 0.5),
        lambda q2, notes: _unit_pm(notes[:, 1] < 0.5),
        ((0.0, 0.0), (1.0, 1.0)),
    ),
    # deterministic table reaching the classical optimum 2 at the standard directions
    "classical-optimal": Strategy(
        "classical-optimal",
        lambda stream: np.zeros((len(stream), 1)),
        lambda q1, notes, obs: np.ones(len(q1), dtype=np.int8),
        lambda q2, notes: np.where(q2[:, 1] > 0, -1, 1).astype(np.int8),
    ),
}


def get_strategy(name):
    try:
        return STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}") from None
