import numpy as np
import pytest
import scipy.ndimage
from hypothesis import given, settings, strategies as st

from krylovreg.problems import (PROBLEMS, Psf, Rng, add_noise, baart_matrix, baart_problem,
                                blur2d_problem, blur_matrix, build_problem,
                                circulant_shift_problem, downshift_problem, geometric_image,
                                heat_matrix, heat_problem, motion_psf)

M64 = (1 << 64) - 1


def splitmix_reference(seed, n):
    """Textbook sequential SplitMix64 on Python integers."""
    state = seed & M64
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        out.append(z ^ (z >> 31))
    return out


@pytest.mark.parametrize("seed", [0, 1, 12345, 2**64 - 1])
def test_rng_matches_reference_splitmix(seed):
    ref = splitmix_reference(seed, 20)
    r = Rng(seed)
    got = list(r.next_uint64(7)) + list(r.next_uint64(13))
    assert [int(v) for v in got] == ref


def test_rng_known_value():
    # first SplitMix64 output for seed 0
    assert int(Rng(0).next_uint64(1)[0]) == 0xE220A8397B1DCDAF


def test_rng_uniform_and_normal():
    r = Rng(7)
    u = r.uniform(10000)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01
    g = Rng(7).standard_normal(20001)
    assert g.size == 20001
    assert abs(g.mean()) < 0.03 and abs(g.std() - 1) < 0.03
    # Box-Muller order: cosine member then sine member of each pair
    u2 = Rng(3).uniform(2)
    rad = np.sqrt(-2 * np.log1p(-u2[0]))
    assert np.allclose(Rng(3).standard_normal(2),
                       [rad * np.cos(2 * np.pi * u2[1]), rad * np.sin(2 * np.pi * u2[1])])


def test_rng_determinism_and_streams():
    assert np.array_equal(Rng(5).standard_normal(50), Rng(5).standard_normal(50))
    assert not np.array_equal(Rng(5).standard_normal(50), Rng(6).standard_normal(50))


@settings(max_examples=30)
@given(st.integers(1, 500), st.floats(1e-6, 0.5), st.integers(0, 2**63))
def test_add_noise_level_property(m, level, seed):
    b = np.linspace(1.0, 2.0, m)
    bn, e, delta = add_noise(b, level, seed=seed)
    assert np.isclose(np.linalg.norm(e), level * np.linalg.norm(b), rtol=1e-12)
    assert delta == np.linalg.norm(e)
    assert np.array_equal(bn, b + e)


def test_add_noise_zero_and_negative():
    b, e, d = add_noise(np.ones(3), 0.0)
    assert d == 0 and not np.any(e)
    with pytest.raises(ValueError):
        add_noise(np.ones(3), -1.0)


def test_shift_problems():
    p = downshift_problem(6)
    p.check()
    assert np.array_equal(p.b, np.eye(6)[:, 1])
    q = circulant_shift_problem(6)
    q.check()
    Q = q.A.matrix
    assert np.allclose(Q.T @ Q, np.eye(6))
    with pytest.raises(ValueError):
        downshift_problem(1)


def test_baart_against_analytic_rhs():
    n = 200
    A, x = baart_matrix(n)
    hs = np.pi / (2 * n)
    s = (np.arange(1, n + 1) - 0.5) * hs
    rhs = 2 * np.sinh(s) / s * np.sqrt(hs)
    assert np.linalg.norm(A @ x - rhs) / np.linalg.norm(rhs) < 1e-4
    sv = np.linalg.svd(A, compute_uv=False)
    assert abs(sv[0] - 3.2287) < 1e-3
    assert sv[19] / sv[0] < 1e-13   # severely ill-conditioned
    with pytest.raises(ValueError):
        baart_matrix(7)


def test_heat_structure():
    A, x = heat_matrix(200)
    assert np.array_equal(A, np.tril(A))
    assert np.allclose(np.diag(A, -3), A[3, 0])     # Toeplitz
    assert np.all(x[100:] == 0) and abs(x.max() - 1.0) <= 1e-12
    sv = np.linalg.svd(A, compute_uv=False)
    assert np.sum(sv > sv[0] * 1e-14) < 200          # numerically singular
    with pytest.raises(ValueError):
        heat_matrix(5)


@pytest.mark.parametrize("factory", [baart_problem, heat_problem])
def test_noisy_problem_invariants(factory):
    p = factory(40, noise_level=1e-2, seed=3)
    p.check()
    assert np.isclose(p.delta, 1e-2 * np.linalg.norm(p.b_exact))
    q = factory(40, noise_level=1e-2, seed=3)
    assert np.array_equal(p.b, q.b)
    with pytest.raises(ValueError):
        factory(40, noise_level=1e-2)


def test_noise_stream_continues_for_probe():
    p = baart_problem(20, noise_level=1e-2, seed=4)
    r = Rng(4)
    r.standard_normal(20)
    assert np.array_equal(p.rng.standard_normal(5), r.standard_normal(5))


def test_psf_validation():
    with pytest.raises(ValueError):
        Psf(np.zeros((3, 3)), (1, 1))
    with pytest.raises(ValueError):
        Psf(np.ones((3, 3)), (3, 0))
    with pytest.raises(ValueError):
        motion_psf(4)
    psf = motion_psf(7)
    assert np.isclose(psf.kernel.sum(), 1.0) and psf.center == (3, 3)


def test_blur_matches_reflective_convolution():
    n = 12
    psf = motion_psf(5)
    A = blur_matrix(n, psf)
    X = np.random.default_rng(0).standard_normal((n, n))
    ref = scipy.ndimage.convolve(X, psf.kernel, mode="reflect")
    assert np.allclose((A @ X.ravel(order="F")).reshape(n, n, order="F"), ref, atol=1e-14)


def test_blur_asymmetric_psf_is_convolution_not_correlation():
    n = 9
    K = np.zeros((3, 3))
    K[1, 2] = 1.0
    A = blur_matrix(n, Psf(K, (1, 1)))
    X = np.zeros((n, n))
    X[4, 4] = 1.0
    Y = (A @ X.ravel(order="F")).reshape(n, n, order="F")
    assert Y[4, 5] == 1.0 and Y.sum() == 1.0


def test_blur_preserves_mass_and_constants():
    A = blur_matrix(10, motion_psf(7))
    assert np.allclose(A.sum(axis=1), 1.0)
    assert np.allclose(A @ np.ones(100), 1.0)


def test_blur2d_problem():
    p = blur2d_problem(16, noise_level=2e-2, seed=1)
    p.check()
    assert p.shape2d == (16, 16) and p.m == 256
    X = geometric_image(16)
    assert np.array_equal(p.x_exact, X.ravel(order="F"))
    assert X.min() >= 0 and X.max() <= 1
    with pytest.raises(ValueError):
        blur2d_problem(65)
    with pytest.raises(ValueError):
        blur2d_problem(16, boundary="periodic")


def test_build_problem_by_name():
    for name in PROBLEMS:
        p = build_problem(name, 16, 1e-2 if name not in ("downshift", "circshift") else 0.0, 1)
        assert p.name == name
    with pytest.raises(ValueError):
        build_problem("shaw", 10)
