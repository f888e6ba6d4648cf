"""Arnoldi process with modified Gram-Schmidt and optional reorthogonalization.

The j-shifted (range-restricted) variant returns a decomposition
``A @ Vhat_k = V_{k+j} @ H_{k+j,k}`` whose solution basis ``Vhat_k`` spans
``K_k(A, A^{j-1} b)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import as_vector

__all__ = [
    "ArnoldiIteration",
    "ArnoldiDecomposition",
    "arnoldi_process",
    "krylov_membership",
]

BREAKDOWN_RTOL = 1e-14


class ArnoldiIteration:
    """Incremental Arnoldi recursion for ``K_k(A, b)``.

    Each call to :meth:`step` performs one matrix-vector product with ``A``.
    After ``k`` steps ``A @ V[:, :k] == V[:, :k+1] @ H[:k+1, :k]``. On
    breakdown ``h_{k+1,k}`` is stored as an exact zero and ``V[:, k]`` stays
    zero.
    """

    def __init__(self, A, b, maxiter, reorth=True, breakdown_tol=None):
        b = as_vector(b, "b")
        if A.dim_in != A.dim_out:
            raise ValueError("Arnoldi needs a square operator")
        if b.shape[0] != A.dim_in:
            raise ValueError(f"b has length {b.shape[0]}, operator dimension is {A.dim_in}")
        bnorm = float(np.linalg.norm(b))
        if bnorm == 0.0:
            raise ValueError("Arnoldi needs a nonzero starting vector")
        if maxiter < 1 or maxiter > A.dim_in:
            raise ValueError(f"maxiter must lie in [1, {A.dim_in}], got {maxiter}")
        self.A = A
        self.bnorm = bnorm
        self.reorth = reorth
        self.maxiter = maxiter
        # v_j are unit vectors, so only the operator scale enters the threshold
        self.breakdown_tol = (BREAKDOWN_RTOL * A.scale if breakdown_tol is None
                              else breakdown_tol)
        m = A.dim_in
        dtype = np.result_type(b.dtype, float)
        self.V = np.zeros((m, maxiter + 1), dtype=dtype)
        self.H = np.zeros((maxiter + 1, maxiter), dtype=dtype)
        self.V[:, 0] = b / bnorm
        self.k = 0
        self.breakdown = None
        self.subdiag_raw = []

    @property
    def done(self):
        return self.breakdown is not None or self.k >= self.maxiter

    def step(self):
        """Run one Arnoldi step; return False if no step could be taken."""
        if self.done:
            return False
        j = self.k
        w = self.A.apply(self.V[:, j])
        if np.iscomplexobj(w) and not np.iscomplexobj(self.V):
            self.V = self.V.astype(complex)
            self.H = self.H.astype(complex)
        passes = 2 if self.reorth else 1
        for _ in range(passes):
            for i in range(j + 1):
                h = np.vdot(self.V[:, i], w)
                self.H[i, j] += h
                w = w - h * self.V[:, i]
        hnext = float(np.linalg.norm(w))
        self.subdiag_raw.append(hnext)
        self.k = j + 1
        if hnext <= self.breakdown_tol:
            self.H[j + 1, j] = 0.0
            self.breakdown = j + 1
        else:
            self.H[j + 1, j] = hnext
            self.V[:, j + 1] = w / hnext
        return True

    def run(self, steps=None):
        target = self.maxiter if steps is None else min(self.maxiter, steps)
        while self.k < target and self.step():
            pass
        return self

    def decomposition(self, k=None, shift=1):
        """The decomposition after ``k`` solution-space steps (default: all)."""
        k_avail = self.k - shift + 1
        if k is None:
            k = k_avail
        if k < 1 or k > k_avail:
            raise ValueError(
                f"{self.k} Arnoldi steps cannot provide k={k} with shift {shift}")
        n = k + shift - 1
        bd = self.breakdown if (self.breakdown is not None and self.breakdown <= n) else None
        return ArnoldiDecomposition.from_standard(
            self.V[:, :n + 1], self.H[:n + 1, :n], k, shift, bd, self.bnorm)


@dataclass(frozen=True)
class ArnoldiDecomposition:
    """Partial Arnoldi decomposition ``A @ Vhat = V @ H``.

    Attributes
    ----------
    V : ndarray, shape (m, k+j)
        Orthonormal basis of ``K_{k+j}(A, b)`` with ``V[:, 0] = b/||b||``.
        After a breakdown the trailing column is zero.
    H : ndarray, shape (k+j, k)
        Banded Hessenberg matrix, zero below the j-th subdiagonal.
    k : int
        Dimension of the solution space.
    j : int
        Shift; ``j == 1`` is the standard decomposition.
    breakdown : int or None
        Arnoldi step at which ``h_{i+1,i}`` vanished.
    bnorm : float
        ``||b||``.
    Vhat : ndarray, shape (m, k)
        Orthonormal basis of the solution space ``K_k(A, A^{j-1} b)``.
    """

    V: np.ndarray
    H: np.ndarray
    k: int
    j: int
    breakdown: Optional[int]
    bnorm: float
    Vhat: np.ndarray

    @classmethod
    def from_standard(cls, V, Hs, k, j, breakdown, bnorm):
        if j == 1:
            return cls(V, Hs[:k + 1, :k].copy(), k, 1, breakdown, bnorm, V[:, :k])
        # A^{j-1} V_k = V_{k+j-1} P with P a product of j-1 Hessenberg blocks
        P = Hs[:k + 1, :k]
        for level in range(k + 1, k + j - 1):
            P = Hs[:level + 1, :level] @ P
        Q, R = np.linalg.qr(P)
        phases = np.diag(R) / np.abs(np.diag(R))
        Q = Q * phases
        # the product is banded up to roundoff; store exact zeros outside the band
        H = np.triu(Hs[:k + j, :k + j - 1] @ Q, -j)
        Vhat = V[:, :k + j - 1] @ Q
        return cls(V, H, k, j, breakdown, bnorm, Vhat)

    @property
    def m(self):
        return self.V.shape[0]

    @property
    def subdiagonal(self):
        return np.real(np.diagonal(self.H, -self.j)).copy()

    @property
    def basis(self):
        """The columns of ``V`` that are actual basis vectors."""
        if self.breakdown is not None:
            return self.V[:, :-1]
        return self.V

    def leading(self, k):
        """The decomposition truncated to ``k`` solution-space steps."""
        if k > self.k:
            raise ValueError(f"decomposition has only {self.k} steps, asked for {k}")
        if self.j != 1:
            raise ValueError("truncation is only supported for the standard decomposition")
        bd = self.breakdown if (self.breakdown is not None and self.breakdown <= k) else None
        return ArnoldiDecomposition(self.V[:, :k + 1], self.H[:k + 1, :k].copy(), k, 1,
                                    bd, self.bnorm, self.V[:, :k])

    def residual(self, A):
        """``||A Vhat - V H||_F``."""
        AV = np.column_stack([A.apply(self.Vhat[:, i]) for i in range(self.k)])
        return float(np.linalg.norm(AV - self.V @ self.H))

    def orthogonality_loss(self):
        """``||V^* V - I||_F`` over the valid basis columns plus ``Vhat``."""
        B = self.basis
        loss = np.linalg.norm(B.conj().T @ B - np.eye(B.shape[1]))
        lh = np.linalg.norm(self.Vhat.conj().T @ self.Vhat - np.eye(self.k))
        return float(max(loss, lh))

    def check(self, A, rtol=1e-10):
        """Raise AssertionError if the decomposition invariants are violated."""
        res = self.residual(A)
        if res > rtol * A.scale:
            raise AssertionError(f"Arnoldi relation violated: {res:.3e} > {rtol:.1e} * {A.scale:.3e}")
        orth = self.orthogonality_loss()
        if orth > rtol:
            raise AssertionError(f"Arnoldi basis lost orthogonality: {orth:.3e}")
        below = np.tril(self.H, -(self.j + 1))
        if np.any(below != 0):
            raise AssertionError("H has entries below its j-th subdiagonal")
        if np.any(self.subdiagonal < 0):
            raise AssertionError("negative entry on the outer subdiagonal of H")
        return res, orth


def arnoldi_process(A, b, kmax, shift=1, reorth=True, breakdown_tol=None):
    """Run ``kmax + shift - 1`` Arnoldi steps (fewer on breakdown).

    Returns the decomposition for the largest solution-space dimension that
    the completed steps support.
    """
    if shift < 1:
        raise ValueError("shift must be >= 1")
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    if kmax + shift > A.dim_in:
        raise ValueError(f"kmax + shift = {kmax + shift} exceeds the dimension {A.dim_in}")
    it = ArnoldiIteration(A, b, kmax + shift - 1, reorth=reorth, breakdown_tol=breakdown_tol)
    it.run()
    k = it.k - shift + 1
    if k < 1:
        raise ValueError(f"Arnoldi broke down at step {it.breakdown}, before the shift {shift} was reached")
    return it.decomposition(k, shift)


def krylov_membership(decomp, x, dim=None):
    """Relative distance ``||x - V V^* x|| / ||x||`` from the basis span.

    ``dim`` restricts the basis to its first ``dim`` columns, i.e. to
    ``K_dim(A, b)``.
    """
    x = np.asarray(x)
    xn = np.linalg.norm(x)
    if xn == 0:
        return 0.0
    B = decomp.basis
    if dim is not None:
        if dim > B.shape[1]:
            raise ValueError(f"basis has {B.shape[1]} columns, asked for {dim}")
        B = B[:, :dim]
    r = x - B @ (B.conj().T @ x)
    return float(np.linalg.norm(r) / xn)
