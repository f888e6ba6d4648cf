import numpy as np
import pytest

from krylovreg.operator import (CirculantOperator, DenseOperator, LinearOperator,
                                SingularSymbolError, compose, identity_operator)

from conftest import random_complex


def test_dense_operator_applies_matrix_and_adjoint(rng):
    A = random_complex(rng, 5, 3)
    op = DenseOperator(A)
    v = random_complex(rng, 3, 1)[:, 0]
    w = random_complex(rng, 5, 1)[:, 0]
    assert op.shape == (5, 3)
    assert np.allclose(op @ v, A @ v)
    assert np.isclose(np.vdot(w, op.apply(v)), np.vdot(op.apply_adjoint(w), v))
    assert np.isclose(op.scale, np.linalg.norm(A))


def test_apply_checks_dimension(rng):
    op = DenseOperator(np.eye(3))
    with pytest.raises(ValueError):
        op.apply(np.ones(4))


def test_missing_adjoint_is_reported():
    op = LinearOperator((2, 2), lambda v: 2 * v)
    assert not op.has_adjoint
    with pytest.raises(TypeError):
        op.apply_adjoint(np.ones(2))
    assert op.scale > 0


def test_circulant_matches_dense(rng):
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    C = CirculantOperator(np.fft.fft(c))
    dense = C.to_dense()
    assert np.allclose(dense[:, 0], c)
    assert np.allclose(dense[1:, 1:], dense[:-1, :-1])
    v = rng.standard_normal(6)
    assert np.allclose(C.apply(v), dense @ v, atol=1e-13)
    assert np.allclose(C.apply_adjoint(v), dense.conj().T @ v, atol=1e-13)


def test_circulant_inverse(rng):
    d = rng.standard_normal(8) + 3.0
    C = CirculantOperator(d)
    v = rng.standard_normal(8)
    assert np.allclose(C.inverse().apply(C.apply(v)), v, atol=1e-13)


def test_circulant_singular_symbol_raises():
    with pytest.raises(SingularSymbolError) as info:
        CirculantOperator(np.array([1.0, 0.0, 2.0])).inverse()
    assert info.value.index == 1


def test_compose_and_identity(rng):
    A = random_complex(rng, 4)
    B = random_complex(rng, 4)
    op = compose(DenseOperator(A), DenseOperator(B))
    assert np.allclose(op.to_dense(), A @ B)
    assert np.allclose(compose(op, identity_operator(4)).to_dense(), A @ B)
    v = rng.standard_normal(4)
    assert np.allclose(op.apply_adjoint(v), (A @ B).conj().T @ v)
    with pytest.raises(ValueError):
        compose(DenseOperator(np.eye(3)), DenseOperator(np.eye(4)))
