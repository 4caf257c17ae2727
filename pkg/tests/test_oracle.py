from fractions import Fraction
from itertools import product

import pytest

from bandit_trials.core import ArmState
from bandit_trials.errors import CapacityError
from bandit_trials.index import IndexConfig, finite_horizon_dp_oracle, index_policy_value, whittle_index
from bandit_trials.index.oracle import joint_state_count


def _enumerate_value(states, horizon):
    """Brute force over all adaptive strategies for horizon <= 3 (exact)."""
    def v(x, h):
        if h == 0:
            return Fraction(0)
        best = None
        for k, (s, f) in enumerate(x):
            mu = Fraction(s, s + f)
            up = x[:k] + ((s + 1, f),) + x[k + 1:]
            dn = x[:k] + ((s, f + 1),) + x[k + 1:]
            q = mu * (1 + v(up, h - 1)) + (1 - mu) * v(dn, h - 1)
            best = q if best is None else max(best, q)
        return best
    return v(tuple((a.total_s, a.total_f) for a in states), horizon)


def test_two_arm_horizon_two_by_hand():
    # pull once at 1/2; then the better posterior: 1/2 * 2/3 + 1/2 * 1/2 = 7/12
    res = finite_horizon_dp_oracle([ArmState(), ArmState()], 2, exact=True)
    assert res.value == Fraction(13, 12)
    assert res.tie_set == (0, 1) and res.first_action == 0


@pytest.mark.parametrize("h", [1, 2, 3, 4])
def test_oracle_matches_enumeration(h):
    states = [ArmState(1, 1), ArmState(2, 1), ArmState(1, 3)]
    assert finite_horizon_dp_oracle(states, h, exact=True).value == _enumerate_value(states, h)


def test_float_and_exact_agree():
    states = [ArmState(1, 1), ArmState(3, 2)]
    a = finite_horizon_dp_oracle(states, 7, discount=0.9)
    b = finite_horizon_dp_oracle(states, 7, discount=0.9, exact=True)
    assert a.value == pytest.approx(float(b.value), rel=1e-12)


def test_myopic_policy_is_optimal_at_horizon_one():
    states = [ArmState(2, 3), ArmState(4, 1)]
    res = finite_horizon_dp_oracle(states, 1, exact=True)
    assert res.value == Fraction(4, 5) and res.first_action == 1


def test_index_policy_value_ties_averaged():
    states = [ArmState(), ArmState()]
    v = index_policy_value(states, 2, lambda s, f, r: s / (s + f), exact=True)
    assert v == Fraction(13, 12)


@pytest.mark.parametrize("h", range(1, 7))
def test_whittle_rollout_near_optimal(h):
    cfg = IndexConfig("whittle", 1.0, max(h, 2))
    states = [ArmState(), ArmState()]
    v = index_policy_value(states, h, lambda s, f, r: whittle_index(s, f, r, cfg))
    opt = finite_horizon_dp_oracle(states, h).value
    assert v <= opt + 1e-12
    assert v >= opt * 0.995


def test_capacity_limit():
    assert joint_state_count(2, 2) == 15
    with pytest.raises(CapacityError):
        finite_horizon_dp_oracle([ArmState()] * 6, 60)
