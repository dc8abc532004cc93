"""
Tests for DTW distances and warping paths
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptcast.clustering import (
    DtwParams,
    WarpingPath,
    dtw_distance,
    dtw_matrix,
    dtw_path,
    dtw_to_many,
    path_cost,
)
from adaptcast.errors import DtwError

sequences = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=1, max_size=12
)


def admissible_paths(len_x, len_y):
    """Every admissible path between two lengths, by exhaustive recursion"""

    def extend(path):
        i, j = path[-1]
        if (i, j) == (len_x - 1, len_y - 1):
            yield path
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            if i + di < len_x and j + dj < len_y:
                yield from extend(path + [(i + di, j + dj)])

    yield from extend([(0, 0)])


def brute_force_dtw(x, y, q=2.0):
    best = min(sum(abs(x[i] - y[j]) ** q for i, j in path) for path in admissible_paths(len(x), len(y)))
    return best ** (1.0 / q)


class TestDtwDistance:
    """Test cases for the DTW distance"""

    def test_identical_sequences(self):
        """Test that a sequence has distance zero to itself"""
        assert dtw_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_warping_absorbs_repetition(self):
        """Test that a stretched copy aligns at zero cost"""
        assert dtw_distance([0.0, 1.0, 2.0], [0.0, 1.0, 1.0, 1.0, 2.0]) == 0.0

    def test_known_value(self):
        """Test a hand-computed distance"""
        # Best path pairs (0,0), (1,1), (2,1): costs 0 + 1 + 0
        assert dtw_distance([0.0, 1.0, 2.0], [0.0, 2.0]) == pytest.approx(1.0)

    def test_exponent_one(self):
        """Test the absolute-difference variant"""
        assert dtw_distance([0.0, 0.0], [3.0, 3.0], DtwParams(q=1.0)) == pytest.approx(6.0)

    def test_empty_input(self):
        """Test that empty sequences are rejected"""
        with pytest.raises(DtwError):
            dtw_distance([], [1.0])

    def test_band_too_narrow(self):
        """Test that a band narrower than the length difference fails"""
        with pytest.raises(DtwError, match="Band"):
            dtw_distance([1.0] * 5, [1.0] * 2, DtwParams(band=1))

    @pytest.mark.parametrize("kwargs", [{"q": 0.0}, {"band": -1}])
    def test_invalid_params(self, kwargs):
        """Test parameter validation"""
        with pytest.raises(DtwError):
            DtwParams(**kwargs)

    def test_matches_brute_force_over_paths(self):
        """Test the recurrence against exhaustive path enumeration"""
        rng = np.random.default_rng(0)
        levels = np.array([0.0, 0.5, 1.0])
        for _ in range(2000):
            x = rng.choice(levels, size=int(rng.integers(1, 7)))
            y = rng.choice(levels, size=int(rng.integers(1, 7)))
            assert dtw_distance(x, y) == pytest.approx(brute_force_dtw(x, y), abs=1e-12)

    def test_exhaustive_small_grid(self):
        """Test every pair of length-3 sequences over two levels"""
        grid = [np.array(v) for v in itertools.product([0.0, 1.0], repeat=3)]
        for x, y in itertools.product(grid, grid):
            assert dtw_distance(x, y) == pytest.approx(brute_force_dtw(x, y), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(sequences, sequences)
    def test_symmetric(self, x, y):
        """Property: DTW is exactly symmetric"""
        assert dtw_distance(x, y) == dtw_distance(y, x)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=1, max_value=10).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(-10, 10), min_size=n, max_size=n),
            st.lists(st.floats(-10, 10), min_size=n, max_size=n),
        )
    ))
    def test_bounded_by_euclidean(self, pair):
        """Property: for equal lengths DTW never exceeds the lock-step distance"""
        x, y = map(np.asarray, pair)
        assert dtw_distance(x, y) <= np.sqrt(np.sum((x - y) ** 2)) + 1e-9

    def test_batched_matches_single(self):
        """Test that batching over candidates gives bit-identical results"""
        rng = np.random.default_rng(3)
        x, many = rng.random(8), rng.random((5, 8))
        batched = dtw_to_many(x, many)

        for b in range(5):
            assert batched[b] == dtw_distance(x, many[b])


class TestDtwPath:
    """Test cases for optimal warping paths"""

    def test_path_is_admissible_and_optimal(self):
        """Test that the returned path realizes the distance"""
        rng = np.random.default_rng(5)
        for _ in range(50):
            x, y = rng.random(int(rng.integers(1, 9))), rng.random(int(rng.integers(1, 9)))
            distance, path = dtw_path(x, y)

            assert path.is_admissible(len(x), len(y))
            assert path_cost(x, y, path) == pytest.approx(distance, abs=1e-12)

    def test_diagonal_preferred_on_ties(self):
        """Test that identical sequences align on the diagonal"""
        _, path = dtw_path([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])

        assert path.pairs == ((0, 0), (1, 1), (2, 2))

    def test_inadmissible_paths(self):
        """Test path admissibility checks"""
        assert not WarpingPath(((0, 0), (2, 2))).is_admissible(3, 3)
        assert not WarpingPath(((0, 1), (1, 1))).is_admissible(2, 2)
        assert not WarpingPath(()).is_admissible(1, 1)


class TestDtwMatrix:
    """Test cases for pairwise distance matrices"""

    def test_entries_match_pairwise(self):
        """Test that each entry equals the pairwise distance"""
        rng = np.random.default_rng(7)
        set_a = [rng.random(6) for _ in range(3)]
        set_b = [rng.random(6), rng.random(4)]
        matrix = dtw_matrix(set_a, set_b)

        assert matrix.shape == (3, 2)
        for i, j in itertools.product(range(3), range(2)):
            assert matrix[i, j] == dtw_distance(set_a[i], set_b[j])

    def test_workers_do_not_change_result(self):
        """Test that threading does not change the matrix"""
        rng = np.random.default_rng(8)
        rows = rng.random((6, 5))

        np.testing.assert_array_equal(dtw_matrix(rows, rows), dtw_matrix(rows, rows, workers=3))

    def test_bad_row_is_located(self):
        """Test that an empty member names its position"""
        with pytest.raises(DtwError, match="pair column 1"):
            dtw_matrix([[1.0]], [[1.0], []])
