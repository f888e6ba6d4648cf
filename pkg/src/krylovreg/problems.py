"""Test problems and the reproducible noise model.

Noise is drawn from a SplitMix64 stream converted to Gaussians by
Box-Muller, so a given seed yields the same bits on every platform.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .operator import DenseOperator

__all__ = [
    "Rng",
    "NoisyProblem",
    "Psf",
    "add_noise",
    "downshift_problem",
    "circulant_shift_problem",
    "baart_problem",
    "heat_problem",
    "blur2d_problem",
    "geometric_image",
    "motion_psf",
    "blur_matrix",
    "build_problem",
    "PROBLEMS",
]

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class Rng:
    """SplitMix64 generator with a stream position.

    Output ``i`` (0-based) is ``mix(seed + (i + 1) * 0x9E3779B97F4A7C15)``
    modulo ``2**64``, which lets blocks be generated with vector arithmetic.
    """

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self.position = 0

    def next_uint64(self, n):
        idx = np.arange(self.position + 1, self.position + n + 1, dtype=np.uint64)
        self.position += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + idx * _GOLDEN
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, n):
        """Uniforms in ``[0, 1)`` from the top 53 bits."""
        return (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def standard_normal(self, n):
        """Box-Muller Gaussians; each uniform pair gives a cosine then a sine draw."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        ang = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(ang)
        out[1::2] = r * np.sin(ang)
        return out[:n]


@dataclass
class NoisyProblem:
    """``A x_exact = b_exact`` with data ``b = b_exact + e``."""

    name: str
    A: DenseOperator
    b: np.ndarray
    b_exact: np.ndarray
    x_exact: np.ndarray
    e: np.ndarray
    delta: float
    noise_level: float
    seed: Optional[int]
    rng: Optional[Rng] = field(default=None, repr=False)
    shape2d: Optional[Tuple[int, int]] = None

    @property
    def m(self):
        return self.b.shape[0]

    def check(self, rtol=1e-10):
        """Raise AssertionError if the problem invariants fail."""
        if not np.array_equal(self.b, self.b_exact + self.e):
            raise AssertionError("b != b_exact + e")
        bn = np.linalg.norm(self.b_exact)
        if np.linalg.norm(self.A.apply(self.x_exact) - self.b_exact) > rtol * max(bn, 1.0):
            raise AssertionError("A x_exact does not reproduce b_exact")
        if bn > 0 and abs(np.linalg.norm(self.e) / bn - self.noise_level) > 1e-12 * max(self.noise_level, 1e-300):
            raise AssertionError("noise level mismatch")


@dataclass(frozen=True)
class Psf:
    """Point-spread function: pixel weights and the index of the center pixel."""

    kernel: np.ndarray
    center: Tuple[int, int]

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2 or not np.all(np.isfinite(k)) or not np.any(k != 0):
            raise ValueError("PSF kernel must be a finite 2-d array with a nonzero entry")
        r, c = self.center
        if not (0 <= r < k.shape[0] and 0 <= c < k.shape[1]):
            raise ValueError(f"PSF center {self.center} outside kernel of shape {k.shape}")
        object.__setattr__(self, "kernel", k)


def add_noise(b_exact, level, seed=None, rng=None):
    """Add white Gaussian noise of relative norm ``level``.

    Returns ``(b, e, delta)`` with ``delta = ||e|| = level * ||b_exact||``.
    Either ``seed`` or an existing ``rng`` (advanced in place) is used.
    """
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    b_exact = np.asarray(b_exact)
    if level == 0:
        e = np.zeros_like(b_exact)
        return b_exact.copy(), e, 0.0
    if rng is None:
        rng = Rng(0 if seed is None else seed)
    w = rng.standard_normal(b_exact.shape[0])
    e = (level * np.linalg.norm(b_exact) / np.linalg.norm(w)) * w
    return b_exact + e, e, float(np.linalg.norm(e))


def _finish(name, A, x, level, seed, shape2d=None):
    Aop = DenseOperator(A)
    b_exact = A @ x
    rng = Rng(seed) if seed is not None else None
    if level > 0 and rng is None:
        raise ValueError("a seed is required for noisy problems")
    b, e, delta = add_noise(b_exact, level, rng=rng)
    return NoisyProblem(name, Aop, b, b_exact, x, e, delta, float(level), seed, rng, shape2d)


def _unit(m, i):
    v = np.zeros(m)
    v[i] = 1.0
    return v


def downshift_problem(m):
    """Downshift matrix with ``b = e_2`` and solution ``e_1`` (no noise)."""
    if m < 2:
        raise ValueError("m must be >= 2")
    A = np.eye(m, k=-1)
    x = _unit(m, 0)
    return NoisyProblem("downshift", DenseOperator(A), _unit(m, 1), _unit(m, 1), x,
                        np.zeros(m), 0.0, 0.0, None)


def circulant_shift_problem(m):
    """Downshift with the ``(1, m)`` entry set to one; the matrix is unitary."""
    if m < 2:
        raise ValueError("m must be >= 2")
    A = np.eye(m, k=-1)
    A[0, m - 1] = 1.0
    x = _unit(m, 0)
    return NoisyProblem("circshift", DenseOperator(A), _unit(m, 1), _unit(m, 1), x,
                        np.zeros(m), 0.0, 0.0, None)


def baart_matrix(n):
    """Galerkin discretization of the kernel ``exp(s cos t)`` with box functions."""
    if n < 4 or n % 2:
        raise ValueError("baart needs an even n >= 4")
    hs = np.pi / (2 * n)
    ht = np.pi / n
    c = 1.0 / (3.0 * np.sqrt(2.0))
    ihs = np.arange(n + 1) * hs
    nh = n // 2
    A = np.empty((n, n))
    f3 = np.exp(ihs[1:]) - np.exp(ihs[:-1])
    for j in range(1, n + 1):
        f1 = f3
        co2 = np.cos((j - 0.5) * ht)
        co3 = np.cos(j * ht)
        f2 = (np.exp(ihs[1:] * co2) - np.exp(ihs[:-1] * co2)) / co2
        if j == nh:
            f3 = hs * np.ones(n)
        else:
            f3 = (np.exp(ihs[1:] * co3) - np.exp(ihs[:-1] * co3)) / co3
        A[:, j - 1] = c * (f1 + 4.0 * f2 + f3)
    x = -np.diff(np.cos(np.arange(n + 1) * ht)) / np.sqrt(ht)
    return A, x


def baart_problem(m, noise_level=0.0, seed=None):
    A, x = baart_matrix(m)
    return _finish("baart", A, x, noise_level, seed)


def heat_matrix(n):
    """Midpoint rule for the inverse heat Volterra kernel (unit conductivity)."""
    if n < 10:
        raise ValueError("heat needs n >= 10")
    h = 1.0 / n
    t = (np.arange(1, n + 1) - 0.5) * h
    d = h / (2.0 * np.sqrt(np.pi)) * t ** (-1.5) * np.exp(-1.0 / (4.0 * t))
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    A = np.where(diff >= 0, d[np.clip(diff, 0, None)], 0.0)
    x = np.zeros(n)
    for i in range(1, n // 2 + 1):
        ti = i * 20.0 / n
        if ti < 2:
            x[i - 1] = 0.75 * ti ** 2 / 4.0
        elif ti < 3:
            x[i - 1] = 0.75 + (ti - 2.0) * (3.0 - ti)
        else:
            x[i - 1] = 0.75 * np.exp(-(ti - 3.0) * 2.0)
    return A, x


def heat_problem(m, noise_level=0.0, seed=None):
    A, x = heat_matrix(m)
    return _finish("heat", A, x, noise_level, seed)


def geometric_image(n):
    """Piecewise-constant test image (two rectangles and a disk) with values in ``[0, 1]``."""
    if n < 8:
        raise ValueError("image size must be >= 8")
    X = np.zeros((n, n))
    s = n / 32.0
    X[int(4 * s):int(14 * s), int(5 * s):int(13 * s)] = 1.0
    X[int(20 * s):int(27 * s), int(3 * s):int(15 * s)] = 0.4
    r, c = np.mgrid[0:n, 0:n]
    disk = (r - 12.5 * s) ** 2 + (c - 22.5 * s) ** 2 <= (6.5 * s) ** 2
    X[disk] = 0.7
    ring = ((r - 23.5 * s) ** 2 + (c - 23.5 * s) ** 2 <= (4.5 * s) ** 2)
    X[ring] = 0.9
    return X


def motion_psf(size=7):
    """Normalized L-shaped motion blur: one arm along the row, one along the column."""
    if size < 3 or size % 2 == 0:
        raise ValueError("PSF size must be odd and >= 3")
    K = np.zeros((size, size))
    c = size // 2
    K[c, c:] = 1.0
    K[:c + 1, c] = 1.0
    return Psf(K / K.sum(), (c, c))


def _reflect(i, n):
    # half-sample symmetric extension: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} ...
    i = np.where(i < 0, -i - 1, i)
    return np.where(i >= n, 2 * n - 1 - i, i)


def blur_matrix(n, psf):
    """Dense blurring matrix for column-stacked ``n x n`` images.

    ``(A x)[i, j] = sum_{k,l} P[k, l] X[i - k + ck, j - l + cl]``, a 2D
    convolution, with reflective boundary conditions.
    """
    P = psf.kernel
    if P.shape[0] > n or P.shape[1] > n:
        raise ValueError(f"PSF of shape {P.shape} does not fit an {n}x{n} image")
    ck, cl = psf.center
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rows = (I + n * J).ravel()
    A = np.zeros((n * n, n * n))
    for k in range(P.shape[0]):
        for l in range(P.shape[1]):
            w = P[k, l]
            if w == 0:
                continue
            si = _reflect(I - k + ck, n)
            sj = _reflect(J - l + cl, n)
            np.add.at(A, (rows, (si + n * sj).ravel()), w)
    return A


def blur2d_problem(n, psf=None, boundary="reflective", noise_level=0.0, seed=None):
    """Deblurring of :func:`geometric_image` with images stacked by columns."""
    if boundary != "reflective":
        raise ValueError("only reflective boundary conditions are supported")
    if n > 64:
        raise ValueError("blur2d builds a dense matrix; n must be <= 64")
    psf = motion_psf(7) if psf is None else psf
    A = blur_matrix(n, psf)
    x = geometric_image(n).ravel(order="F")
    return _finish("blur2d", A, x, noise_level, seed, (n, n))


PROBLEMS = ("downshift", "circshift", "baart", "heat", "blur2d")


def build_problem(name, m, noise_level=0.0, seed=None, psf=None):
    """Construct a problem by name; for ``blur2d`` ``m`` is the image side ``n``."""
    if name == "downshift":
        return downshift_problem(m)
    if name == "circshift":
        return circulant_shift_problem(m)
    if name == "baart":
        return baart_problem(m, noise_level, seed)
    if name == "heat":
        return heat_problem(m, noise_level, seed)
    if name == "blur2d":
        return blur2d_problem(m, psf, noise_level=noise_level, seed=seed)
    raise ValueError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEMS)}")
