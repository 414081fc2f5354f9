import math

import numpy as np
import pytest

from bellsim.core import (
    Assumption,
    Direction,
    SettingsPolicy,
    chsh_pairs,
    paper_configuration,
    paper_policy,
    run_experiment,
)
from bellsim.errors import InvalidWeights, ModelFailure, NoExactInterface
from bellsim.estimators import exact_expectation, mc_expectation
from bellsim.models import (
    ZOO_IDS,
    build_factorizable_model,
    build_model,
    build_sign_model,
    build_weighted_dice_model,
    describe,
)

THETAS = np.linspace(0.0, math.pi, 7)


def fibonacci_sphere(n):
    """Near-uniform deterministic points on the unit sphere."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


@pytest.mark.parametrize("theta", THETAS)
def test_singlet_closed_form(theta):
    m = build_model("singlet")
    a, b = Direction(1.0, 0.0, 0.0), Direction.planar(theta)
    assert exact_expectation(m, a, b).value == pytest.approx(-math.cos(theta), abs=1e-12)
    assert exact_expectation(m, a, b, route="enumeration").value == pytest.approx(
        -math.cos(theta), abs=1e-12)


def test_sign_model_against_sphere_quadrature():
    # independent oracle: average -sign(a.l) sign(b.l) over a dense sphere lattice
    pts = fibonacci_sphere(400_000)
    a = np.array([1.0, 0.0, 0.0])
    m = build_sign_model()
    for theta in THETAS:
        b = np.array([math.cos(theta), math.sin(theta), 0.0])
        sa = np.where(pts @ a >= 0, 1, -1)
        sb = np.where(pts @ b >= 0, 1, -1)
        oracle = float(np.mean(-sa * sb))
        closed = exact_expectation(m, Direction(*a), Direction(*b)).value
        assert closed == pytest.approx(-1.0 + 2.0 * theta / math.pi, abs=1e-12)
        assert abs(closed - oracle) < 2e-3


@pytest.mark.parametrize("theta", THETAS)
def test_sign_table_matches_closed_form(theta):
    m = build_sign_model()
    a, b = Direction.planar(0.3), Direction.planar(0.3 + theta)
    assert exact_expectation(m, a, b, route="enumeration").value == pytest.approx(
        -1.0 + 2.0 * theta / math.pi, abs=1e-12)


def test_sign_table_needs_coplanar_settings():
    m = build_sign_model()
    a = Direction(1.0, 0.0, 0.0)
    b = Direction(0.0, 0.6, 0.8)
    c = Direction(0.0, 1.0, 0.0)
    with pytest.raises(NoExactInterface):
        m.exact_table(((a, b), (c, b)))
    # the closed form still applies
    assert exact_expectation(m, a, b).value == pytest.approx(0.0, abs=1e-12)


def test_leak_joint_table_matches_hand_computation(config):
    m = build_model("leak")
    table = m.exact_table(chsh_pairs(*config))
    for p, (a, b) in enumerate(chsh_pairs(*config)):
        c = math.cos(math.acos(np.clip(a.dot(b), -1, 1)) / 2) ** 2
        # B = +-1 with probability 1/2; A = -B with probability cos^2(theta/2)
        expected = np.array([[0.5 * (1 - c), 0.5 * c], [0.5 * c, 0.5 * (1 - c)]])
        assert np.allclose(table.outcome_table()[p], expected, atol=1e-12)


def test_ablated_leak_correlations(config):
    m = build_model("leak-ablated")
    a, ap, b, bp = config
    h = math.sqrt(0.5)
    # A does not see b; it averages -cos over the b-marginal {b, b'}
    expected = [-h, -h, 0.0, 0.0]
    got = [exact_expectation(m, x, y).value for x, y in chsh_pairs(a, ap, b, bp)]
    assert np.allclose(got, expected, atol=1e-12)


def test_dice_closed_form_by_hand(config):
    m = build_weighted_dice_model((0.9, 0.2))
    a, ap, b, bp = config
    assert exact_expectation(m, a, b).value == pytest.approx(0.5, abs=1e-12)
    assert exact_expectation(m, a, bp).value == pytest.approx(-0.48, abs=1e-12)
    assert exact_expectation(m, ap, b).value == pytest.approx(-0.48, abs=1e-12)
    assert exact_expectation(m, ap, bp).value == pytest.approx(0.5, abs=1e-12)
    for x, y in chsh_pairs(*config):
        assert exact_expectation(m, x, y, route="enumeration").value == pytest.approx(
            exact_expectation(m, x, y).value, abs=1e-12)


@pytest.mark.parametrize("weights", [(1.2, 0.3), (-0.1, 0.5), (0.5,), (0.4, 0.4)])
def test_dice_rejects_bad_weights(weights):
    with pytest.raises(InvalidWeights):
        build_weighted_dice_model(weights)


def test_dice_rejects_undeclared_setting():
    m = build_weighted_dice_model((0.9, 0.2))
    a = paper_configuration()[0]
    odd = Direction.planar(1.0)
    pol = SettingsPolicy.uniform([(a, odd)])
    with pytest.raises(ModelFailure):
        run_experiment(m, pol, 10, 0)


def test_factorizable_model_by_hand(config):
    rho = [0.25, 0.75]
    p_a = [[1.0, 0.0], [0.5, 0.5]]
    p_b = [[1.0, 1.0], [0.0, 1.0]]
    m = build_factorizable_model(rho, p_a, p_b)
    a, ap, b, bp = config
    # E = sum_l rho_l (2pa - 1)(2pb - 1)
    assert exact_expectation(m, a, b).value == pytest.approx(0.25 - 0.75, abs=1e-12)
    assert exact_expectation(m, a, bp).value == pytest.approx(-0.25 - 0.75, abs=1e-12)
    assert exact_expectation(m, ap, b).value == pytest.approx(0.0, abs=1e-12)
    assert Assumption.DETERMINISTIC not in m.satisfies


@pytest.mark.parametrize("model_id", ZOO_IDS + ("adversarial",))
def test_monte_carlo_agrees_with_exact(model_id, config):
    m = build_model(model_id)
    ens = run_experiment(m, paper_policy(), 100_000, 17)
    for x, y in chsh_pairs(*config):
        mc = mc_expectation(ens, x, y)
        ex = exact_expectation(m, x, y).value
        assert abs(mc.value - ex) <= max(4 * mc.std_error, 1e-12)


@pytest.mark.parametrize("bad", ["nope", "dice:", "dice:a,b", "randfac:4", "randfac:x:1", "randfac:0:1"])
def test_build_model_rejects_bad_ids(bad):
    with pytest.raises(ValueError):
        build_model(bad)


def test_model_ids_round_trip():
    for mid in ZOO_IDS:
        assert build_model(mid).model_id == mid


def test_describe_lists_declared_assumptions():
    d = describe(build_model("leak"))
    assert Assumption.SETTINGS_INDEPENDENCE in d.satisfies
    assert Assumption.MICROSTATE_INDEPENDENCE not in d.satisfies
