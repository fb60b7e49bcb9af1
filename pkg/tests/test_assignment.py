import numpy as np
import pytest

from _oracles import brute_force_lap
from unlabeled_sensing.assignment import solve_blockwise, solve_lap
from unlabeled_sensing.errors import NonFinite, ShapeMismatch
from unlabeled_sensing.permutation import BlockPartition, Permutation


def lap_value(C, p: Permutation) -> float:
    return float(C[np.arange(C.shape[0]), p.map].sum())


def test_identity_reward():
    p, value = solve_lap(np.eye(5))
    assert p.to_list() == [0, 1, 2, 3, 4]
    assert value == 5.0


def test_antidiagonal_reward_two_by_two():
    p, value = solve_lap(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert p.to_list() == [1, 0]
    assert value == 2.0


def test_rejects_nonsquare_and_nonfinite():
    with pytest.raises(ShapeMismatch):
        solve_lap(np.ones((2, 3)))
    with pytest.raises(NonFinite):
        solve_lap(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_matches_brute_force_100_random_6x6():
    rng = np.random.default_rng(0)
    for _ in range(100):
        C = rng.standard_normal((6, 6))
        p, value = solve_lap(C)
        best, _ = brute_force_lap(C)
        assert abs(value - best) <= 1e-12 * max(1.0, abs(best))
        assert abs(lap_value(C, p) - value) <= 1e-12


def test_optimality_against_random_permutations():
    rng = np.random.default_rng(1)
    C = rng.standard_normal((30, 30))
    _, value = solve_lap(C)
    for _ in range(1000):
        q = Permutation(rng.permutation(30))
        assert value >= lap_value(C, q) - 1e-9


def test_row_and_column_shift_invariance():
    # shifting a whole row or column moves the value predictably and the
    # returned permutation still attains the brute-force optimum
    rng = np.random.default_rng(2)
    for _ in range(20):
        C = rng.standard_normal((5, 5))
        shifted = C.copy()
        shifted[2, :] += 3.7
        shifted[:, 4] -= 1.9
        p, value = solve_lap(shifted)
        best, _ = brute_force_lap(shifted)
        assert abs(value - best) <= 1e-12 * max(1.0, abs(best))
        assert abs(lap_value(shifted, p) - value) <= 1e-12


def test_blockwise_identity_and_double_swap():
    part = BlockPartition((2, 2))
    assert solve_blockwise([np.eye(2), np.eye(2)], part).to_list() == [0, 1, 2, 3]
    anti = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert solve_blockwise([anti, anti], part).to_list() == [1, 0, 3, 2]


def test_blockwise_matches_per_block_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(20):
        sizes = tuple(int(s) for s in rng.integers(1, 7, size=3))
        part = BlockPartition(sizes)
        blocks = [rng.standard_normal((s, s)) for s in sizes]
        p = solve_blockwise(blocks, part)
        for block, sl in zip(blocks, part.slices()):
            sub = p.map[sl] - sl.start
            best, _ = brute_force_lap(block)
            got = float(block[np.arange(block.shape[0]), sub].sum())
            assert abs(got - best) <= 1e-12 * max(1.0, abs(best))


def test_blockwise_equals_full_lap_with_sentinel():
    rng = np.random.default_rng(4)
    for _ in range(10):
        sizes = (3, 2, 3)
        part = BlockPartition(sizes)
        blocks = [rng.standard_normal((s, s)) for s in sizes]
        p_block = solve_blockwise(blocks, part)
        full = np.full((8, 8), -1e18 * max(1.0, max(np.abs(b).max() for b in blocks)))
        for block, sl in zip(blocks, part.slices()):
            full[sl, sl] = block
        p_full, _ = solve_lap(full)
        assert p_block.to_list() == p_full.to_list()


def test_blockwise_shape_errors():
    part = BlockPartition((2, 2))
    with pytest.raises(ShapeMismatch):
        solve_blockwise([np.eye(2)], part)
    with pytest.raises(ShapeMismatch):
        solve_blockwise([np.eye(2), np.eye(3)], part)
