import math

import numpy as np
import pytest

from bellsim.core import Direction, paper_policy, run_experiment
from bellsim.errors import InvalidConfig, StrategyViolation
from bellsim.estimators import settings_mask
from bellsim.game import (
    STRATEGIES,
    GameConfig,
    Leak,
    Strategy,
    get_strategy,
    play_game,
    run_game,
)
from bellsim.models import build_model
from bellsim.stats import pooled_chi2


def test_rounds_must_be_positive():
    with pytest.raises(InvalidConfig):
        GameConfig(rounds=0)
    with pytest.raises(InvalidConfig):
        GameConfig(questions_side1=())


def test_sign_strategy_misses_quantum_targets():
    score = play_game(GameConfig(rounds=100_000, seed=2), get_strategy("sign"))
    # sign-model correlations are -1 + 2 theta / pi, 0.207 off at 45 degrees
    assert score.max_abs_deviation > 0.15
    assert score.chsh_empirical <= 2 + 4 * score.chsh_stderr


def test_pilot_wave_with_leak_reproduces_singlet():
    score = play_game(GameConfig(rounds=100_000, leak=Leak.SHIRT_COLOR_PERFECT, seed=2),
                      get_strategy("pilot-wave"))
    for e, t, se in zip(score.empirical_E, score.target_E, score.std_errors):
        assert abs(e - t) < 4 * se
    assert abs(score.chsh_empirical - 2 * math.sqrt(2)) < 4 * score.chsh_stderr


def test_pilot_wave_needs_leak():
    with pytest.raises(StrategyViolation):
        run_game(GameConfig(rounds=10), get_strategy("pilot-wave"))


@pytest.mark.parametrize("name", sorted(STRATEGIES))
def test_no_strategy_beats_bound_without_leak(name):
    try:
        score = play_game(GameConfig(rounds=100_000, seed=9), get_strategy(name))
    except StrategyViolation:
        return
    assert score.chsh_empirical <= 2 + 5 * score.chsh_stderr


def test_game_is_reproducible():
    cfg = GameConfig(rounds=5000, leak=Leak.SHIRT_COLOR_PERFECT, seed=4)
    t1 = run_game(cfg, get_strategy("pilot-wave"))
    t2 = run_game(cfg, get_strategy("pilot-wave"))
    assert t1.same_runs(t2)
    assert t1.model_id == "game:pilot-wave:shirt-color"


def test_leak_observation_is_the_remote_question():
    t = run_game(GameConfig(rounds=200, leak=Leak.SHIRT_COLOR_PERFECT), get_strategy("sign"))
    assert np.array_equal(t.mu_a, t.settings_b)
    t = run_game(GameConfig(rounds=200), get_strategy("sign"))
    assert np.all(t.mu_a == 0)


def test_game_matches_leak_model_tables():
    cfg = GameConfig(rounds=100_000, leak=Leak.SHIRT_COLOR_PERFECT, seed=21)
    game = run_game(cfg, get_strategy("pilot-wave"))
    model = run_experiment(build_model("leak"), paper_policy(), 100_000, 22)
    for a, b in paper_policy().pairs:
        g = settings_mask(game, a, b)
        m = settings_mask(model, a, b)
        source = np.r_[np.zeros(g.sum()), np.ones(m.sum())]
        cell = np.r_[(game.outcome_a[g] + 1) + (game.outcome_b[g] + 1) // 2,
                     (model.outcome_a[m] + 1) + (model.outcome_b[m] + 1) // 2]
        assert pooled_chi2(np.zeros(len(cell)), source.astype(int), cell).p_value >= 1e-3


def test_bad_answers_rejected():
    bad = Strategy("bad", lambda s: s.uniform(1),
                   lambda q, n, o: np.zeros(len(q)), lambda q, n: np.ones(len(q)))
    with pytest.raises(StrategyViolation):
        run_game(GameConfig(rounds=10), bad)


def test_non_chsh_question_lists_score_without_chsh():
    qs1 = (Direction(1.0, 0.0, 0.0),)
    qs2 = (Direction.planar(0.5), Direction.planar(1.0), Direction.planar(2.0))
    score = play_game(GameConfig(qs1, qs2, rounds=3000), get_strategy("sign"))
    assert len(score.empirical_E) == 3
    assert math.isnan(score.chsh_empirical)
    assert score.to_json()["chsh_empirical"] is None


def test_unknown_strategy():
    with pytest.raises(ValueError):
        get_strategy("telepathy")
