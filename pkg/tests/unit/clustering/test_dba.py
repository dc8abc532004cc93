"""
Tests for DBA barycenter averaging
"""

import numpy as np
import pytest

from adaptcast.clustering import dba_average, dba_inertia, dba_medoid
from adaptcast.errors import ClusteringError
from adaptcast.timeseries import SegmentSet


class TestDbaMedoid:
    """Test cases for medoid selection"""

    def test_central_member(self):
        """Test that the member closest to all others is chosen"""
        members = [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.4, 0.4, 0.4]]

        index, values = dba_medoid(members)

        assert index == 2
        np.testing.assert_array_equal(values, [0.4, 0.4, 0.4])

    def test_single_member(self):
        """Test the one-member case"""
        assert dba_medoid([[2.0, 3.0]])[0] == 0


class TestDbaAverage:
    """Test cases for iterative barycenter refinement"""

    def test_single_member_is_its_own_barycenter(self):
        """Test that one member averages to itself with zero inertia"""
        barycenter = dba_average([[0.0, 1.0, 0.5]])

        np.testing.assert_array_equal(barycenter.values, [0.0, 1.0, 0.5])
        assert barycenter.inertia == 0.0

    def test_accepts_segment_sets(self):
        """Test averaging a SegmentSet"""
        segments = SegmentSet.from_values([[0.0, 1.0], [0.0, 1.0]])

        assert dba_average(segments).inertia == 0.0

    def test_improves_on_a_poor_start(self):
        """Test that refinement lowers inertia from an arbitrary start"""
        members = [[0.0, 1.0, 2.0, 1.0], [0.0, 1.2, 1.8, 1.0], [0.2, 0.8, 2.2, 0.9]]
        start = [5.0, 5.0, 5.0, 5.0]

        barycenter = dba_average(members, init=start)

        assert barycenter.inertia < dba_inertia(members, start)
        assert barycenter.inertia_history[0] == pytest.approx(dba_inertia(members, start))

    def test_inertia_never_increases(self):
        """Test monotone inertia over random member sets"""
        rng = np.random.default_rng(11)
        for _ in range(50):
            members = rng.random((int(rng.integers(5, 21)), 24))

            barycenter = dba_average(members)
            history = np.asarray(barycenter.inertia_history)

            assert np.all(np.diff(history) <= 0)
            assert barycenter.inertia <= history[0]
            assert barycenter.inertia == pytest.approx(dba_inertia(members, barycenter.values))

    def test_iteration_cap(self):
        """Test that max_iter bounds the number of updates"""
        rng = np.random.default_rng(12)

        assert dba_average(rng.random((6, 10)), max_iter=1).iterations_used == 1

    def test_empty_members(self):
        """Test that an empty member list is rejected"""
        with pytest.raises(ClusteringError, match="empty"):
            dba_average([])

    def test_mixed_lengths(self):
        """Test that members must share their length"""
        with pytest.raises(ClusteringError, match="mixed lengths"):
            dba_average([[0.0, 1.0], [0.0]])

    def test_init_length_checked(self):
        """Test that the initial center must match the member length"""
        with pytest.raises(ClusteringError, match="Initial center"):
            dba_average([[0.0, 1.0]], init=[0.0])

    @pytest.mark.parametrize("kwargs", [{"max_iter": 0}, {"tol": 0.0}])
    def test_invalid_controls(self, kwargs):
        """Test iteration control validation"""
        with pytest.raises(ClusteringError):
            dba_average([[0.0, 1.0]], **kwargs)
