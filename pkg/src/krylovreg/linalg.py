"""Dense kernels shared by the solvers.

Vectors and matrices are plain :class:`numpy.ndarray` objects. Real input is
accepted everywhere and promoted to complex only where the arithmetic needs it.
"""

import numpy as np

__all__ = [
    "as_vector",
    "as_matrix",
    "unitary_dft",
    "svd_small",
    "hermitian_eig",
    "hessenberg_lstsq",
    "jacobi_svd",
    "jacobi_eigh",
]


def as_vector(v, name="vector"):
    v = np.asarray(v)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_matrix(B, name="matrix"):
    B = np.asarray(B)
    if B.ndim != 2 or B.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-d array, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError(f"{name} has non-finite entries")
    return B


def unitary_dft(v, inverse=False, axis=0):
    """Apply the unitary DFT matrix ``W`` along ``axis``.

    The forward transform returns ``W^* v`` and the inverse ``W v``, both with
    the symmetric ``1/sqrt(m)`` scaling, so ``unitary_dft`` preserves norms.
    """
    v = np.asarray(v)
    if inverse:
        return np.fft.ifft(v, axis=axis, norm="ortho")
    return np.fft.fft(v, axis=axis, norm="ortho")


def svd_small(B, method="lapack", full=False):
    """SVD ``B = U diag(sigma) W^*`` with ``sigma`` nonincreasing.

    The thin factorization is returned unless ``full`` is set, in which case
    ``U`` is square. ``method="jacobi"`` selects the one-sided Jacobi routine
    :func:`jacobi_svd`; the default calls LAPACK.
    """
    B = as_matrix(B)
    if method == "jacobi":
        U, sigma, W = jacobi_svd(B)
        if full and U.shape[1] < U.shape[0]:
            Q, _ = np.linalg.qr(np.hstack([U, np.eye(U.shape[0], dtype=U.dtype)]))
            # the first columns of Q span range(U); keep U itself for those
            U = np.hstack([U, Q[:, U.shape[1]:U.shape[0]]])
        return U, sigma, W
    if method != "lapack":
        raise ValueError(f"unknown SVD method {method!r}")
    U, sigma, Wh = np.linalg.svd(B, full_matrices=full)
    return U, sigma, Wh.conj().T


def hermitian_eig(B, method="lapack"):
    """Eigenvalues (nonincreasing) and eigenvectors of a Hermitian matrix."""
    B = as_matrix(B)
    if B.shape[0] != B.shape[1]:
        raise ValueError("hermitian_eig needs a square matrix")
    scale = np.linalg.norm(B)
    if np.linalg.norm(B - B.conj().T) > 1e-12 * max(scale, np.finfo(float).tiny):
        raise ValueError("hermitian_eig received a non-Hermitian matrix")
    if method == "jacobi":
        return jacobi_eigh(B)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    lam, U = np.linalg.eigh(B)
    return lam[::-1].copy(), U[:, ::-1].copy()


def jacobi_svd(B, tol=1e-15, max_sweeps=60):
    """One-sided (Hestenes) Jacobi SVD for complex matrices.

    Columns of a working copy are rotated pairwise until mutually orthogonal;
    their norms are the singular values.
    """
    B = as_matrix(B).astype(complex)
    rows, cols = B.shape
    if rows < cols:
        U, sigma, W = jacobi_svd(B.conj().T, tol, max_sweeps)
        return W, sigma, U
    G = B.copy()
    W = np.eye(cols, dtype=complex)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = np.vdot(G[:, p], G[:, p]).real
                beta = np.vdot(G[:, q], G[:, q]).real
                gamma = np.vdot(G[:, p], G[:, q])
                agam = abs(gamma)
                if agam <= tol * np.sqrt(alpha * beta) or agam == 0.0:
                    continue
                rotated = True
                phase = gamma / agam
                zeta = (beta - alpha) / (2.0 * agam)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                for X in (G, W):
                    xp = X[:, p].copy()
                    xq = X[:, q] * np.conj(phase)
                    X[:, p] = c * xp - s * xq
                    X[:, q] = s * xp + c * xq
        if not rotated:
            break
    sigma = np.linalg.norm(G, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    G = G[:, order]
    W = W[:, order]
    U = np.zeros_like(G)
    nz = sigma > 0
    U[:, nz] = G[:, nz] / sigma[nz]
    if not np.all(nz):
        # complete the null columns to an orthonormal set
        Q, _ = np.linalg.qr(np.hstack([U[:, nz], np.eye(rows, dtype=complex)]))
        U[:, ~nz] = Q[:, nz.sum():nz.sum() + (~nz).sum()]
    return U, sigma, W


def jacobi_eigh(B, max_sweeps=30):
    """Cyclic Jacobi eigensolver for Hermitian ``B``.

    Sweeps stop once the off-diagonal mass falls below ``1e-14 * ||B||_F``.
    """
    A = as_matrix(B).astype(complex)
    A = (A + A.conj().T) / 2
    n = A.shape[0]
    U = np.eye(n, dtype=complex)
    thresh = 1e-14 * np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.linalg.norm(A) ** 2 - np.sum(np.abs(np.diag(A)) ** 2), 0.0))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                e = apq / mag
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                # G = diag(1, conj(e)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * np.conj(e), c * np.conj(e)]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ g
                A[idx, :] = g.conj().T @ A[idx, :]
                U[:, idx] = U[:, idx] @ g
    lam = np.diag(A).real.copy()
    order = np.argsort(-lam, kind="stable")
    return lam[order], U[:, order]


def _lower_bandwidth(H):
    rows, cols = H.shape
    band = 0
    for i in range(1, rows):
        if np.any(np.diagonal(H, -i) != 0):
            band = i
    return band


def hessenberg_lstsq(H, beta):
    """Solve ``min_y ||H y - beta e_1||`` for a banded upper Hessenberg ``H``.

    Givens rotations reduce ``H`` to triangular form column by column; entries
    below the diagonal are eliminated up to the detected lower bandwidth, so
    the routine also covers the banded matrices of range-restricted Arnoldi
    and the bidiagonal matrices of LSQR.

    Returns
    -------
    y : ndarray
        The minimizer (minimum-norm one when ``H`` is rank deficient).
    resnorm : float
        ``||H y - beta e_1||``.
    deficient : bool
        True when the triangular factor was numerically singular and the
        minimum-norm least-squares solution was returned instead.
    """
    H = as_matrix(H)
    rows, cols = H.shape
    if rows < cols:
        raise ValueError("hessenberg_lstsq needs rows >= cols")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    band = _lower_bandwidth(H)
    R = H.astype(complex)
    g = np.zeros(rows, dtype=complex)
    g[0] = beta
    for j in range(cols):
        for i in range(j + 1, min(rows, j + band + 1)):
            a, b = R[j, j], R[i, j]
            if b == 0:
                continue
            r = np.hypot(abs(a), abs(b))
            c = abs(a) / r
            s = (a / abs(a)) * np.conj(b) / r if a != 0 else np.conj(b) / abs(b)
            rj = R[j, j:].copy()
            R[j, j:] = c * rj + s * R[i, j:]
            R[i, j:] = -np.conj(s) * rj + c * R[i, j:]
            R[i, j] = 0.0
            gj = g[j]
            g[j] = c * gj + s * g[i]
            g[i] = -np.conj(s) * gj + c * g[i]
    diag = np.abs(np.diag(R[:cols, :cols]))
    tiny = np.finfo(float).eps * max(rows, cols) * max(diag.max(initial=0.0), 1e-300)
    if cols and diag.min() > tiny:
        y = np.empty(cols, dtype=complex)
        for j in range(cols - 1, -1, -1):
            y[j] = (g[j] - R[j, j + 1:cols] @ y[j + 1:]) / R[j, j]
        return _real_if(y, H), float(np.linalg.norm(g[cols:])), False
    rhs = np.zeros(rows, dtype=complex)
    rhs[0] = beta
    y = np.linalg.lstsq(H.astype(complex), rhs, rcond=None)[0]
    return _real_if(y, H), float(np.linalg.norm(H @ y - rhs)), True


def _real_if(y, H):
    if np.isrealobj(H):
        return y.real.copy()
    return y
