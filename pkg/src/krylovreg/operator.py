"""Applicable linear operators.

Solvers only ever call :meth:`LinearOperator.apply` (and, for LSQR,
:meth:`LinearOperator.apply_adjoint`), so dense matrices, FFT-backed
circulants and composed preconditioned systems are interchangeable.
"""

import numpy as np

from .linalg import as_matrix, as_vector, unitary_dft

__all__ = [
    "LinearOperator",
    "DenseOperator",
    "CirculantOperator",
    "SingularSymbolError",
    "dense_operator",
    "circulant_operator",
    "compose",
    "identity_operator",
]


class SingularSymbolError(ValueError):
    """A circulant symbol is too close to zero to be inverted."""

    def __init__(self, index, ratio):
        super().__init__(
            f"circulant symbol is numerically singular at frequency {index} "
            f"(|d_i|/max|d| = {ratio:.3e})")
        self.index = index


class LinearOperator:
    """A map ``C^dim_in -> C^dim_out`` given by callables.

    Parameters
    ----------
    shape : (int, int)
        ``(dim_out, dim_in)``.
    matvec : callable
        ``v -> A v``.
    rmatvec : callable, optional
        ``w -> A^* w``. Operators without it report ``has_adjoint == False``.
    kind : str
        One of ``dense``, ``circulant``, ``composite``, ``arnoldi_lowrank``,
        ``identity_minus_projection``.
    scale : float, optional
        A norm-like magnitude used for relative tolerances.
    """

    def __init__(self, shape, matvec, rmatvec=None, kind="composite", scale=None):
        dim_out, dim_in = (int(s) for s in shape)
        if dim_out < 1 or dim_in < 1:
            raise ValueError(f"invalid operator shape {shape}")
        self.shape = (dim_out, dim_in)
        self._matvec = matvec
        self._rmatvec = rmatvec
        self.kind = kind
        self._scale = scale

    @property
    def dim_out(self):
        return self.shape[0]

    @property
    def dim_in(self):
        return self.shape[1]

    @property
    def has_adjoint(self):
        return self._rmatvec is not None

    @property
    def scale(self):
        if self._scale is None:
            self._scale = _estimate_scale(self)
        return self._scale

    def apply(self, v):
        v = np.asarray(v)
        if v.shape != (self.dim_in,):
            raise ValueError(f"operator expects a vector of length {self.dim_in}, got {v.shape}")
        return self._matvec(v)

    def apply_adjoint(self, w):
        if self._rmatvec is None:
            raise TypeError(f"{self.kind} operator has no adjoint")
        w = np.asarray(w)
        if w.shape != (self.dim_out,):
            raise ValueError(f"adjoint expects a vector of length {self.dim_out}, got {w.shape}")
        return self._rmatvec(w)

    def __matmul__(self, v):
        if isinstance(v, LinearOperator):
            return compose(self, v)
        return self.apply(v)

    def to_dense(self):
        """Materialize the operator column by column (desk-scale checks only)."""
        cols = [self.apply(e) for e in np.eye(self.dim_in)]
        return np.column_stack(cols)

    def __repr__(self):
        return f"<{type(self).__name__} kind={self.kind} shape={self.shape}>"


def _estimate_scale(op):
    # a few power-iteration steps give a cheap lower estimate of ||A||_2
    rng = np.random.default_rng(0)
    v = rng.standard_normal(op.dim_in)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(3):
        w = op.apply(v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            break
        if op.has_adjoint:
            v = op.apply_adjoint(w)
            v = v / np.linalg.norm(v)
        else:
            break
    return est if est > 0 else 1.0


class DenseOperator(LinearOperator):
    """Matrix-backed operator; the matrix is exposed as ``.matrix``."""

    def __init__(self, A):
        A = as_matrix(A, "A")
        self.matrix = A
        super().__init__(A.shape, A.__matmul__, lambda w: A.conj().T @ w,
                         kind="dense", scale=float(np.linalg.norm(A)))


class CirculantOperator(LinearOperator):
    """Circulant ``C = W diag(d) W^*`` applied through the FFT.

    ``symbol`` holds the eigenvalues ``d`` of ``C``; for a circulant with first
    column ``c`` this is ``numpy.fft.fft(c)``.
    """

    def __init__(self, symbol):
        d = as_vector(symbol, "symbol").astype(complex)
        self.symbol = d
        super().__init__((d.size, d.size), self._mv, self._rmv, kind="circulant",
                         scale=float(np.abs(d).max()))

    def _mv(self, v):
        return unitary_dft(self.symbol * unitary_dft(v), inverse=True)

    def _rmv(self, w):
        return unitary_dft(np.conj(self.symbol) * unitary_dft(w), inverse=True)

    def inverse(self, rtol=1e-14):
        """The circulant with reciprocal symbol."""
        mag = np.abs(self.symbol)
        dmax = mag.max()
        bad = np.flatnonzero(mag <= rtol * dmax)
        if dmax == 0 or bad.size:
            i = int(bad[0]) if bad.size else 0
            raise SingularSymbolError(i, mag[i] / dmax if dmax else 0.0)
        return CirculantOperator(1.0 / self.symbol)

    def first_column(self):
        return np.fft.ifft(self.symbol)

    def to_dense(self):
        c = self.first_column()
        m = c.size
        idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
        return c[idx]


def dense_operator(A):
    return DenseOperator(A)


def circulant_operator(d):
    return CirculantOperator(d)


def identity_operator(m):
    return LinearOperator((m, m), lambda v: v.copy(), lambda w: w.copy(),
                          kind="dense", scale=float(np.sqrt(m)))


def compose(outer, inner):
    """The operator ``outer @ inner``."""
    if inner.dim_out != outer.dim_in:
        raise ValueError(
            f"cannot compose: inner maps to {inner.dim_out}, outer expects {outer.dim_in}")
    rmv = None
    if outer.has_adjoint and inner.has_adjoint:
        def rmv(w):
            return inner.apply_adjoint(outer.apply_adjoint(w))
    scale = None
    if outer._scale is not None and inner._scale is not None:
        scale = outer._scale * inner._scale
    return LinearOperator((outer.dim_out, inner.dim_in),
                          lambda v: outer.apply(inner.apply(v)), rmv,
                          kind="composite", scale=scale)
