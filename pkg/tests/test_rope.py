import math

import numpy as np
import pytest

from dlfr.errors import DimensionError, ParameterError
from dlfr.rope import (
    attention_score,
    durations_from_schedule,
    positions_from_durations,
    rope_table,
    rotate,
    theta,
)
from dlfr.scheduler import make_config, schedule, single_class_config
from dlfr.video import synth_translate


class TestTheta:
    def test_smallest_dimension(self):
        assert theta(2).tolist() == [1.0]

    def test_dim_four_closed_form(self):
        values = theta(4)
        assert values[0] == 1.0
        assert values[1] == pytest.approx(10000.0 ** (-0.5), rel=1e-15)
        assert values[1] == pytest.approx(0.01, rel=1e-12)

    def test_strictly_decreasing(self):
        for dim in (4, 8, 64):
            values = theta(dim)
            assert np.all(np.diff(values) < 0)

    def test_odd_dimension_rejected(self):
        with pytest.raises(ParameterError):
            theta(5)


class TestPositions:
    def test_unit_durations_reduce_to_token_index(self):
        assert positions_from_durations([1.0] * 5).tolist() == [0, 1, 2, 3, 4]

    def test_mixed_durations_accumulate(self):
        assert positions_from_durations([1, 1, 2, 2]).tolist() == [0, 1, 2, 4]

    def test_single_token(self):
        assert positions_from_durations([3.0]).tolist() == [0.0]

    def test_strictly_increasing_for_positive_durations(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            durations = rng.uniform(0.1, 5.0, size=rng.integers(2, 20))
            positions = positions_from_durations(durations)
            assert np.all(np.diff(positions) > 0)

    def test_nonpositive_duration_rejected(self):
        with pytest.raises(ParameterError):
            positions_from_durations([1.0, 0.0])


class TestRotate:
    def test_zero_position_is_identity(self):
        v = np.arange(8, dtype=float)
        assert np.array_equal(rotate(v, 0.0), v)

    def test_quarter_turn_in_two_dims(self):
        # theta_0 = 1, so position pi/2 rotates (1, 0) onto (0, 1)
        out = rotate(np.array([1.0, 0.0]), math.pi / 2)
        assert out == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_norm_preserved(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            v = rng.normal(size=16)
            p = rng.uniform(-50, 50)
            assert np.linalg.norm(rotate(v, p)) == pytest.approx(
                np.linalg.norm(v), abs=1e-12
            )

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            rotate(np.ones(3), 1.0)
        with pytest.raises(DimensionError):
            rotate(np.ones(4), 1.0, thetas=theta(8))


class TestAttentionScore:
    def test_equal_positions_give_plain_dot(self):
        rng = np.random.default_rng(1)
        q, k = rng.normal(size=8), rng.normal(size=8)
        assert attention_score(q, k, 5.0, 5.0) == pytest.approx(float(q @ k), abs=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            q, k = rng.normal(size=16), rng.normal(size=16)
            p_m, p_n, s = rng.uniform(-40, 40, size=3)
            assert attention_score(q, k, p_m + s, p_n + s) == pytest.approx(
                attention_score(q, k, p_m, p_n), abs=1e-9
            )

    def test_two_dim_relative_angle_closed_form(self):
        e = np.array([1.0, 0.0])
        for phi in (0.0, 0.3, 1.0, -2.5):
            assert attention_score(e, e, phi, 0.0) == pytest.approx(math.cos(phi), abs=1e-12)


class TestRopeTable:
    def standard_table(self, n, dim):
        thetas = theta(dim)
        angles = np.outer(np.arange(n), thetas)
        return np.cos(angles), np.sin(angles)

    def test_unit_durations_recover_standard_table(self):
        table = rope_table([1.0] * 12, dim=8)
        cos, sin = self.standard_table(12, 8)
        assert np.max(np.abs(table.cos - cos)) < 1e-12
        assert np.max(np.abs(table.sin - sin)) < 1e-12

    def test_doubled_durations_sample_even_positions(self):
        table = rope_table([2.0] * 6, dim=8)
        cos, sin = self.standard_table(12, 8)
        assert np.allclose(table.cos, cos[::2], atol=1e-12)
        assert np.allclose(table.sin, sin[::2], atol=1e-12)

    def test_longer_tokens_open_larger_gaps(self):
        table = rope_table([1, 1, 4, 1], dim=4)
        gaps = np.diff(table.positions)
        assert gaps[0] == gaps[1] == 1.0 and gaps[2] == 4.0

    def test_unit_circle_invariant(self):
        table = rope_table([1, 2, 3], dim=6)
        assert np.allclose(table.cos**2 + table.sin**2, 1.0, atol=1e-12)


class TestScheduleDurations:
    def test_uniform_schedule_durations(self):
        clip = synth_translate("checker", 0.0, 16.0, 32, 32, 32)
        sched = schedule(clip, single_class_config(16.0, 4.0), 16)
        assert durations_from_schedule(sched) == [4.0] * 8

    def test_mixed_schedule_with_short_tail(self):
        clip = synth_translate("checker", 0.0, 16.0, 38, 32, 32)
        cfg = make_config(16.0, (1.0, 2.0, 4.0), (0.05, 0.15), smoothing=False)
        sched = schedule(clip, cfg, 16)
        # two full static segments at 16x, then a 6-frame tail at the top
        # class (4 Hz, stride 4): one full token and a 2-frame remainder
        assert durations_from_schedule(sched) == [16.0, 16.0, 4.0, 2.0]
