import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mogalign import (
    InvalidParameterError,
    PreferencePair,
    RewardSpec,
    fold_reward,
    oracle_reward,
    prefer,
    shaped_reward,
)
from mogalign.reward import effective_reward


class TestOracleReward:
    def test_peak_at_target(self):
        assert oracle_reward((1.5, -1.5)) == pytest.approx(10.0)

    def test_unit_distance(self):
        assert oracle_reward((0.5, -1.5)) == pytest.approx(1.353353, abs=1e-6)

    def test_origin(self):
        assert oracle_reward((0.0, 0.0)) == pytest.approx(10 * np.exp(-9.0), rel=1e-4)

    def test_batch_shape(self):
        r = oracle_reward(np.array([[1.5, -1.5], [0.0, 0.0]]))
        assert r.shape == (2,)
        assert r[0] == pytest.approx(10.0)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_bounded_and_positive(self, x, y):
        r = oracle_reward((x, y))
        assert 0.0 < r <= 10.0

    def test_strictly_decreasing_in_distance(self):
        d = np.linspace(0.0, 3.0, 30)
        r = oracle_reward(np.column_stack([1.5 + d, np.full(30, -1.5)]))
        assert np.all(np.diff(r) < 0)

    def test_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            RewardSpec(sharpness=-1.0)
        with pytest.raises(InvalidParameterError):
            RewardSpec(fold_threshold=0.0)

    def test_spec_round_trip(self):
        spec = RewardSpec(sharpness=3.0, scale=5.0, fold_threshold=4.0)
        assert RewardSpec.from_dict(spec.to_dict()) == spec


class TestFoldReward:
    def test_boundary_unchanged(self):
        assert fold_reward(8.4636, 8.4636) == pytest.approx(8.4636)

    def test_reflection(self):
        assert fold_reward(9.4636, 8.4636) == pytest.approx(7.4636)

    def test_below_threshold_unchanged(self):
        assert fold_reward(3.0, 8.4636) == pytest.approx(3.0)

    def test_continuous_at_threshold(self):
        eps = 1e-9
        assert fold_reward(8.4636 + eps, 8.4636) == pytest.approx(
            fold_reward(8.4636 - eps, 8.4636), abs=1e-6
        )

    @given(st.floats(0, 20))
    def test_never_exceeds_threshold_above(self, r):
        assert fold_reward(r, 8.4636) <= 8.4636 + 1e-12

    def test_effective_reward_applies_fold(self):
        spec = RewardSpec(fold_threshold=8.4636)
        assert effective_reward((1.5, -1.5), spec) == pytest.approx(2 * 8.4636 - 10.0)

    def test_rejects_bad_threshold(self):
        with pytest.raises(InvalidParameterError):
            fold_reward(1.0, -1.0)


class TestPrefer:
    def test_winner_has_higher_reward(self):
        pair = prefer((0.0, 0.0), (1.5, -1.5))
        np.testing.assert_allclose(pair.winner, [1.5, -1.5])
        np.testing.assert_allclose(pair.loser, [0.0, 0.0])

    def test_tie_keeps_first(self):
        pair = prefer((1.5, -0.5), (1.5, -2.5))
        np.testing.assert_allclose(pair.winner, [1.5, -0.5])

    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
    def test_consistent_with_reward(self, ax, ay, bx, by):
        pair = prefer((ax, ay), (bx, by))
        assert oracle_reward(pair.winner) >= oracle_reward(pair.loser)


class TestShapedReward:
    def test_beta_zero_is_identity(self):
        assert shaped_reward(5.0, -1.0, -2.0, 0.0) == pytest.approx(5.0)

    def test_reference_collapse_dominates(self):
        assert shaped_reward(10.0, -1.0, -41.0, 1.0) == pytest.approx(-30.0)

    def test_monotone_in_log_ratios(self):
        base = shaped_reward(5.0, -1.0, -1.0, 2.0)
        assert shaped_reward(5.0, -0.5, -1.0, 2.0) < base
        assert shaped_reward(5.0, -1.0, -0.5, 2.0) > base

    def test_rejects_negative_beta(self):
        with pytest.raises(InvalidParameterError):
            shaped_reward(1.0, 0.0, 0.0, -0.1)


def test_preference_pair_fields():
    pair = PreferencePair(winner=np.array([1.0, 2.0]), loser=np.array([3.0, 4.0]))
    np.testing.assert_array_equal(pair.winner, [1.0, 2.0])
    np.testing.assert_array_equal(pair.loser, [3.0, 4.0])
