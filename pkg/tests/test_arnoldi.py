import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from krylovreg.arnoldi import ArnoldiIteration, arnoldi_process, krylov_membership
from krylovreg.operator import DenseOperator

from conftest import random_complex


@pytest.mark.parametrize("shift", [1, 2, 3])
def test_decomposition_relation_and_band(rng, shift):
    A = DenseOperator(random_complex(rng, 30))
    b = random_complex(rng, 30, 1)[:, 0]
    dec = arnoldi_process(A, b, 10, shift=shift)
    assert dec.k == 10 and dec.j == shift
    assert dec.H.shape == (10 + shift, 10)
    res, orth = dec.check(A, rtol=1e-12)
    assert np.allclose(dec.V[:, 0], b / np.linalg.norm(b))


@pytest.mark.parametrize("shift", [2, 3])
def test_shifted_solution_space_is_range_restricted(rng, shift):
    M = rng.standard_normal((25, 25))
    A = DenseOperator(M)
    b = rng.standard_normal(25)
    dec = arnoldi_process(A, b, 6, shift=shift)
    start = np.linalg.matrix_power(M, shift - 1) @ b
    cols = [start]
    for _ in range(5):
        cols.append(M @ cols[-1])
    K = np.column_stack(cols)
    Q = np.linalg.qr(K)[0]
    # the two bases span the same space
    assert np.linalg.norm(dec.Vhat - Q @ (Q.T @ dec.Vhat)) < 1e-8
    assert np.isrealobj(dec.H)


def test_breakdown_is_exact_zero():
    A = DenseOperator(np.eye(6, k=-1))  # downshift
    e1 = np.eye(6)[:, 0]
    it = ArnoldiIteration(A, e1, 6).run()
    assert it.breakdown == 6
    assert it.H[6, 5] == 0.0
    dec = it.decomposition()
    assert dec.breakdown == 6
    assert dec.basis.shape[1] == 6


def test_identity_breaks_down_immediately():
    A = DenseOperator(np.eye(5))
    dec = arnoldi_process(A, np.ones(5), 3)
    assert dec.k == 1 and dec.breakdown == 1
    assert dec.H[1, 0] == 0.0


def test_real_input_stays_real(rng):
    A = DenseOperator(rng.standard_normal((10, 10)))
    dec = arnoldi_process(A, rng.standard_normal(10), 5)
    assert np.isrealobj(dec.V) and np.isrealobj(dec.H)


def test_leading_truncation(rng):
    A = DenseOperator(random_complex(rng, 15))
    dec = arnoldi_process(A, random_complex(rng, 15, 1)[:, 0], 8)
    lead = dec.leading(4)
    assert np.array_equal(lead.H, dec.H[:5, :4])
    lead.check(A)
    with pytest.raises(ValueError):
        dec.leading(9)


def test_invalid_arguments(rng):
    A = DenseOperator(np.eye(4))
    with pytest.raises(ValueError):
        ArnoldiIteration(A, np.zeros(4), 2)
    with pytest.raises(ValueError):
        ArnoldiIteration(A, np.ones(3), 2)
    with pytest.raises(ValueError):
        arnoldi_process(A, np.ones(4), 4)
    with pytest.raises(ValueError):
        ArnoldiIteration(DenseOperator(np.ones((3, 4))), np.ones(4), 2)


def test_membership_of_krylov_vectors(rng):
    M = rng.standard_normal((20, 20))
    b = rng.standard_normal(20)
    dec = arnoldi_process(DenseOperator(M), b, 5)
    assert krylov_membership(dec, M @ M @ b, dim=3) < 1e-12
    assert krylov_membership(dec, rng.standard_normal(20)) > 0.1
    assert krylov_membership(dec, np.zeros(20)) == 0.0


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 12))
def test_arnoldi_invariants_property(seed, shift, k):
    rng = np.random.default_rng(seed)
    A = DenseOperator(random_complex(rng, 16))
    b = random_complex(rng, 16, 1)[:, 0]
    dec = arnoldi_process(A, b, k, shift=shift)
    dec.check(A, rtol=1e-11)
    assert np.all(dec.subdiagonal >= 0)
