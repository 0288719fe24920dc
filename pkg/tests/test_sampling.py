import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extkacz.linalg import MatrixHandle
from extkacz.sampling import Partition, draw, make_partition, make_scheme

A3 = MatrixHandle(np.array([[1.0, 0.0], [0.0, 2.0], [2.0, 2.0]]))


def test_partition_examples():
    one = make_partition(5, 5, 0)
    assert len(one) == 1 and sorted(one.blocks[0]) == list(range(5))
    singles = make_partition(5, 1, 0)
    assert [b.size for b in singles.blocks] == [1] * 5
    assert sorted(np.concatenate(singles.blocks)) == list(range(5))
    a, b = make_partition(5, 2, 42), make_partition(5, 2, 42)
    assert [blk.size for blk in a.blocks] == [2, 2, 1]
    assert all(np.array_equal(x, y) for x, y in zip(a.blocks, b.blocks))
    assert a.permutation_seed == 42


@pytest.mark.parametrize("p", [0, 6, -1])
def test_partition_rejects_bad_p(p):
    with pytest.raises(ValueError):
        make_partition(5, p, 0)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition((np.array([0, 1]), np.array([1, 2])), 2)
    with pytest.raises(ValueError):
        Partition((np.array([0]), np.array([1, 2])), 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.data())
def test_partition_cover_property(dim, data):
    p = data.draw(st.integers(1, dim))
    part = make_partition(dim, p, data.draw(st.integers(0, 2**32 - 1)))
    allidx = np.concatenate(part.blocks)
    assert np.array_equal(np.sort(allidx), np.arange(dim))
    sizes = [b.size for b in part.blocks]
    assert all(s == p for s in sizes[:-1]) and 0 < sizes[-1] <= p
    assert len(part) == -(-dim // p)


def test_partition_text_roundtrip():
    part = make_partition(7, 3, 5)
    text = part.to_text()
    assert len(text.splitlines()) == 3
    assert min(int(t) for t in text.split()) == 1
    back = Partition.from_text(text)
    assert all(np.array_equal(x, y) for x, y in zip(part.blocks, back.blocks))


def test_scheme_examples():
    part = Partition((np.array([0, 1]), np.array([2])), 2)
    sch = make_scheme(A3, part, "row")
    np.testing.assert_array_equal(sch.block_fro_norms_sq, [5.0, 8.0])
    np.testing.assert_allclose(sch.probabilities, [5 / 13, 8 / 13], rtol=1e-15)
    assert sch.total_fro_sq == 13.0

    eq = MatrixHandle(np.array([[3.0, 4.0], [0.0, 5.0], [5.0, 0.0], [-4.0, 3.0]]))
    sch = make_scheme(eq, make_partition(4, 1, 0), "row")
    np.testing.assert_allclose(sch.probabilities, 0.25, rtol=1e-15)

    sch = make_scheme(MatrixHandle(np.eye(3)), make_partition(3, 1, 1), "column")
    np.testing.assert_allclose(sch.probabilities, 1 / 3, rtol=1e-15)


def test_scheme_errors():
    with pytest.raises(ValueError, match="degenerate sampling space"):
        make_scheme(MatrixHandle(np.zeros((3, 2))), make_partition(3, 1, 0), "row")
    with pytest.raises(ValueError):
        make_scheme(A3, make_partition(2, 1, 0), "row")
    with pytest.raises(ValueError):
        make_scheme(A3, make_partition(3, 1, 0), "diagonal")


def test_draw_single_block():
    sch = make_scheme(A3, make_partition(3, 3, 0), "row")
    rng = np.random.default_rng(0)
    assert all(draw(sch, rng).block_id == 0 for _ in range(100))


def test_draw_frequencies_and_zero_block():
    M = np.array([[1.0, 1.0], [0.0, 0.0], [3.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    sch = make_scheme(MatrixHandle(M), Partition(tuple(np.array([i]) for i in range(5)), 1), "row")
    np.testing.assert_array_equal(sch.probabilities[[1, 4]], 0.0)
    assert abs(sch.probabilities.sum() - 1.0) <= 1e-14
    rng = np.random.default_rng(123)
    N = 100_000
    ids = np.array([draw(sch, rng).block_id for _ in range(N)])
    counts = np.bincount(ids, minlength=5)
    assert counts[1] == 0 and counts[4] == 0
    p = sch.probabilities
    se = np.sqrt(N * p * (1 - p))
    assert np.all(np.abs(counts - N * p) <= 3 * se + 1e-12)


def test_draw_returns_matching_block():
    sch = make_scheme(A3, make_partition(3, 2, 3), "row")
    rng = np.random.default_rng(1)
    for _ in range(20):
        d = draw(sch, rng)
        assert np.array_equal(d.indices, sch.partition.blocks[d.block_id])
        assert d.fro_norm_sq == sch.block_fro_norms_sq[d.block_id]
        np.testing.assert_array_equal(d.sub, A3.data[d.indices])


def test_inverse_cdf_edges():
    sch = make_scheme(A3, Partition((np.array([0, 1]), np.array([2])), 2), "row")
    assert sch.index_of(0.0) == 0
    assert sch.index_of(np.nextafter(1.0, 0.0)) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_probabilities_invariant_to_unrelated_scaling(seed, c):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((6, 3))
    part = Partition((np.array([0, 1, 2]), np.array([3, 4, 5])), 3)
    base = make_scheme(MatrixHandle(M), part, "row").probabilities
    # scaling every row of one block by c changes only that block's weight
    M2 = M.copy()
    M2[3:] *= c
    new = make_scheme(MatrixHandle(M2), part, "row")
    ratio = base[1] / base[0] * c**2
    assert new.probabilities[1] / new.probabilities[0] == pytest.approx(ratio, rel=1e-12)
    # scaling the whole matrix changes nothing
    scaled = make_scheme(MatrixHandle(M * c), part, "row").probabilities
    np.testing.assert_allclose(scaled, base, rtol=1e-13)
    assert abs(new.probabilities.sum() - 1) <= 1e-14


def test_reproducible_draws():
    sch = make_scheme(A3, make_partition(3, 1, 9), "row")
    r1, r2 = np.random.default_rng(77), np.random.default_rng(77)
    s1 = [draw(sch, r1).block_id for _ in range(50)]
    s2 = [draw(sch, r2).block_id for _ in range(50)]
    assert s1 == s2
