import numpy as np
import pytest

from krylovreg.krylov_solvers import DiscrepancyRule, gmres, lsqr
from krylovreg.operator import DenseOperator, LinearOperator
from krylovreg.problems import circulant_shift_problem, downshift_problem

from conftest import random_complex


def test_discrepancy_rule():
    rule = DiscrepancyRule(2.0, 1.5)
    assert rule.threshold == 3.0
    assert rule.satisfied(3.0) and not rule.satisfied(3.1)
    with pytest.raises(ValueError):
        DiscrepancyRule(-1.0)
    with pytest.raises(ValueError):
        DiscrepancyRule(1.0, 0.5)


def test_gmres_solves_well_conditioned_system(rng):
    M = random_complex(rng, 20) + 8 * np.eye(20)
    x = random_complex(rng, 20, 1)[:, 0]
    hist = gmres(DenseOperator(M), M @ x, x_exact=x, stagnation_window=None)
    assert hist.relerr[-1] < 1e-10


def test_gmres_residual_monotone_and_matches_true(rng):
    M = rng.standard_normal((30, 30))
    b = rng.standard_normal(30)
    hist = gmres(DenseOperator(M), b, kmax=15, true_residual=True, stagnation_window=None)
    assert np.all(np.diff(hist.relres) <= 1e-14)
    assert np.allclose(hist.relres, hist.relres_true, atol=1e-12)


def test_gmres_minimizes_over_krylov_space(rng):
    M = rng.standard_normal((12, 12))
    b = rng.standard_normal(12)
    hist = gmres(DenseOperator(M), b, kmax=4, keep_iterates=True, stagnation_window=None)
    K = np.column_stack([np.linalg.matrix_power(M, i) @ b for i in range(4)])
    c = np.linalg.lstsq(M @ K, b, rcond=None)[0]
    assert np.allclose(hist.iterates[-1], K @ c, atol=1e-9)


def test_gmres_discrepancy_stop(rng):
    M = random_complex(rng, 20) + 6 * np.eye(20)
    b = random_complex(rng, 20, 1)[:, 0]
    rule = DiscrepancyRule(1e-3 * np.linalg.norm(b))
    hist = gmres(DenseOperator(M), b, rule=rule)
    assert hist.stop_reason == "discrepancy"
    k = hist.discrepancy_index
    assert hist.relres[k - 1] * np.linalg.norm(b) <= rule.threshold
    assert hist.relres[k - 2] * np.linalg.norm(b) > rule.threshold


def test_gmres_right_preconditioner_maps_iterates(rng):
    M = random_complex(rng, 10) + 5 * np.eye(10)
    P = np.diag(rng.uniform(1, 2, 10))
    x = rng.standard_normal(10)
    hist = gmres(DenseOperator(M @ P), M @ x, x_exact=x, precond=DenseOperator(P),
                 stagnation_window=None)
    assert hist.relerr[-1] < 1e-10


@pytest.mark.parametrize("factory", [downshift_problem, circulant_shift_problem])
def test_shift_examples_gmres_iterates_vanish(factory):
    p = factory(40)
    hist = gmres(p.A, p.b, x_exact=p.x_exact, keep_iterates=True, stagnation_window=None)
    assert max(np.linalg.norm(x) for x in hist.iterates[:39]) == 0.0


@pytest.mark.parametrize("factory", [downshift_problem, circulant_shift_problem])
def test_shift_examples_lsqr_one_step(factory):
    p = factory(40)
    hist = lsqr(p.A, p.b, x_exact=p.x_exact, kmax=3)
    assert hist.relerr[0] <= 1e-12


def test_lsqr_matches_normal_equations(rng):
    M = rng.standard_normal((25, 10))
    b = rng.standard_normal(25)
    hist = lsqr(DenseOperator(M), b, kmax=10)
    ref = np.linalg.lstsq(M, b, rcond=None)[0]
    assert np.allclose(hist.x_final, ref, atol=1e-10)


def test_lsqr_iterate_lies_in_normal_krylov_space(rng):
    M = rng.standard_normal((15, 15))
    b = rng.standard_normal(15)
    hist = lsqr(DenseOperator(M), b, kmax=3, keep_iterates=True)
    N = M.T @ M
    K = np.column_stack([np.linalg.matrix_power(N, i) @ (M.T @ b) for i in range(3)])
    c = np.linalg.lstsq(M @ K, b, rcond=None)[0]
    assert np.allclose(hist.iterates[-1], K @ c, atol=1e-8)


def test_lsqr_requires_adjoint():
    op = LinearOperator((3, 3), lambda v: v)
    with pytest.raises(TypeError):
        lsqr(op, np.ones(3))
    with pytest.raises(ValueError):
        lsqr(DenseOperator(np.eye(3)), np.zeros(3))
