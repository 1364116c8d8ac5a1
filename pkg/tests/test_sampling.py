"""Tests for sample points and point sweeps."""

import numpy as np
import pytest

from statman.exceptions import ParamError
from statman.utils.sampling import sample_points, sweep

BOX = [(-1.0, 1.0), (0.5, 2.0)]


class TestSamplePoints:
    """Tests for sample_points."""

    def test_deterministic(self):
        """Test that equal seeds give equal points."""
        np.testing.assert_array_equal(sample_points(BOX, 10, seed=3), sample_points(BOX, 10, seed=3))

    def test_seed_changes_points(self):
        """Test that different seeds give different points."""
        assert not np.array_equal(sample_points(BOX, 10, seed=1), sample_points(BOX, 10, seed=2))

    def test_inside_box(self):
        """Test shape and bounds."""
        points = sample_points(BOX, 50)

        assert points.shape == (50, 2)
        assert np.all(points[:, 0] >= -1.0) and np.all(points[:, 0] <= 1.0)
        assert np.all(points[:, 1] >= 0.5) and np.all(points[:, 1] <= 2.0)

    @pytest.mark.parametrize(
        "box",
        [[(1.0, 1.0), (0.0, 1.0)], [(0.0, float("inf")), (0.0, 1.0)], [(0.0, 1.0, 2.0)]],
    )
    def test_bad_box(self, box):
        """Test that empty, infinite or malformed boxes raise ParamError."""
        with pytest.raises(ParamError):
            sample_points(box, 5)

    def test_count_must_be_positive(self):
        """Test that zero points raise ParamError."""
        with pytest.raises(ParamError):
            sample_points(BOX, 0)


@pytest.mark.parametrize("threads", [1, 4])
def test_sweep_keeps_order(threads):
    """Test that results come back in point order."""
    points = [np.array([float(i)]) for i in range(12)]

    assert sweep(lambda p: float(p[0]) ** 2, points, threads=threads) == [
        float(i) ** 2 for i in range(12)
    ]
