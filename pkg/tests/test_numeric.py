import numpy as np
import pytest

from convtransfer.numeric import Rng, frob_sq, matmul, rand_uniform


def naive_matmul(a, b):
    # independent triple-loop oracle
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for k in range(a.shape[1]):
                s += a[i, k] * b[k, j]
            out[i, j] = s
    return out


def test_matmul_identity():
    m = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    assert np.array_equal(matmul(np.eye(3), m), m)


def test_matmul_zero():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(matmul(np.zeros((3, 2)), m), np.zeros((3, 2)))


def test_matmul_matches_triple_loop_oracle():
    rng = Rng(7)
    a = rng.normal((3, 4))
    b = rng.normal((4, 2))
    got = matmul(a, b)
    want = naive_matmul(a, b)
    assert np.allclose(got, want, rtol=1e-13, atol=0)


def test_matmul_dimension_mismatch_names_shapes():
    with pytest.raises(ValueError, match="3x4 by 5x2"):
        matmul(np.zeros((3, 4)), np.zeros((5, 2)))


def test_matmul_associativity():
    rng = Rng(11)
    for _ in range(20):
        a, b, c = rng.normal((3, 4)), rng.normal((4, 5)), rng.normal((5, 2))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.allclose(left, right, rtol=1e-9)


def test_frob_sq():
    assert frob_sq(np.zeros((3, 3))) == 0.0
    assert frob_sq(np.array([[3.0], [4.0]])) == 25.0


def test_frob_sq_matches_loop_oracle():
    rng = Rng(3)
    a = rng.normal((4, 4))
    want = sum(a[i, j] ** 2 for i in range(4) for j in range(4))
    assert frob_sq(a) == pytest.approx(want, rel=1e-13)


def test_frob_sq_of_difference_is_exactly_zero():
    a = Rng(5).normal((6, 6))
    assert frob_sq(a - a) == 0.0


def test_rand_uniform_deterministic():
    a = rand_uniform(Rng(123), 5, 7, -1.0, 1.0)
    b = rand_uniform(Rng(123), 5, 7, -1.0, 1.0)
    assert np.array_equal(a, b)


def test_rand_uniform_range():
    m = rand_uniform(Rng(9), 20, 20, 0.25, 0.75)
    assert np.all(m >= 0.25) and np.all(m < 0.75)


def test_rand_uniform_mean_law_of_large_numbers():
    m = rand_uniform(Rng(1), 100, 100, 0.0, 1.0)
    assert abs(m.mean() - 0.5) < 0.02


def test_rand_uniform_rejects_bad_bounds():
    with pytest.raises(ValueError):
        rand_uniform(Rng(0), 2, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        rand_uniform(Rng(0), 2, 2, 2.0, 1.0)


def test_rng_rejects_out_of_range_seed():
    with pytest.raises(ValueError):
        Rng(-1)
    with pytest.raises(ValueError):
        Rng(2**64)
