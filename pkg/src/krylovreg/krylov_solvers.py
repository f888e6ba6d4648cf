"""GMRES and LSQR with discrepancy-principle monitoring."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .arnoldi import BREAKDOWN_RTOL, ArnoldiIteration
from .linalg import as_vector, hessenberg_lstsq

__all__ = ["DiscrepancyRule", "SolveHistory", "gmres", "lsqr"]


@dataclass(frozen=True)
class DiscrepancyRule:
    """Fires once the residual norm drops to ``tau * delta``."""

    delta: float
    tau: float = 1.01

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")

    @property
    def threshold(self):
        return self.tau * self.delta

    def satisfied(self, resnorm):
        return resnorm <= self.threshold


@dataclass
class SolveHistory:
    """Per-iteration record of an iterative solve.

    Index ``i`` of each list refers to iterate ``k = i + 1``.
    """

    relres: List[float] = field(default_factory=list)
    relerr: List[float] = field(default_factory=list)
    relres_true: List[float] = field(default_factory=list)
    params: List[Optional[float]] = field(default_factory=list)
    stop_index: int = 0
    stop_reason: str = "kmax"
    discrepancy_index: Optional[int] = None
    x_final: Optional[np.ndarray] = None
    x_best: Optional[np.ndarray] = None
    best_index: Optional[int] = None
    iterates: Optional[list] = None
    converged: List[bool] = field(default_factory=list)

    @property
    def best_relerr(self):
        if not self.relerr:
            return None
        return min(self.relerr)

    def record(self, k, x, relres, x_exact=None, relres_true=None, param=None,
               converged=True):
        self.relres.append(float(relres))
        self.params.append(param)
        self.converged.append(bool(converged))
        if relres_true is not None:
            self.relres_true.append(float(relres_true))
        if x_exact is not None:
            err = float(np.linalg.norm(x - x_exact) / np.linalg.norm(x_exact))
            self.relerr.append(err)
            if self.best_index is None or err < self.relerr[self.best_index - 1]:
                self.best_index = k
                self.x_best = x
        if self.iterates is not None:
            self.iterates.append(x)
        self.x_final = x
        self.stop_index = k


def _stagnated(relres, window):
    if window is None or len(relres) <= window:
        return False
    return relres[-window - 1] - relres[-1] < 1e-14


def gmres(A, b, rule=None, kmax=None, x_exact=None, precond=None, shift=1,
          reorth=True, stop_on_discrepancy=True, stagnation_window=5,
          keep_iterates=False, true_residual=False):
    """GMRES with ``x_0 = 0``.

    Parameters
    ----------
    A : LinearOperator
        The (possibly preconditioned) square operator.
    b : array
        Right-hand side.
    rule : DiscrepancyRule, optional
        Stopping rule; ``None`` runs to ``kmax``.
    kmax : int, optional
        Maximum number of iterations; defaults to ``m - shift + 1``.
    x_exact : array, optional
        Used only for relative-error bookkeeping.
    precond : LinearOperator, optional
        Right preconditioner ``M``; iterates are mapped through ``x = M y``.
    shift : int
        Range-restricted variant: the solution space is ``K_k(A, A^{shift-1} b)``.
    stop_on_discrepancy : bool
        If False the discrepancy index is recorded but iteration continues.
    stagnation_window : int or None
        Stop when the relative residual decreased by less than ``1e-14`` over
        this many steps. ``None`` disables the guard.
    true_residual : bool
        Also record ``||A y_k - b|| / ||b||`` with a fresh product.

    Returns
    -------
    SolveHistory
    """
    b = as_vector(b, "b")
    m = A.dim_in
    if b.shape[0] != A.dim_out or A.dim_in != A.dim_out:
        raise ValueError(f"operator of shape {A.shape} does not match b of length {b.shape[0]}")
    if kmax is None:
        kmax = m - shift + 1
    if kmax < 1 or kmax + shift > m + 1:
        raise ValueError(f"kmax={kmax} is not admissible for m={m}, shift={shift}")
    it = ArnoldiIteration(A, b, min(kmax + shift - 1, m), reorth=reorth)
    bnorm = it.bnorm
    hist = SolveHistory(iterates=[] if keep_iterates else None)
    while not it.done:
        it.step()
        k = it.k - shift + 1
        if k < 1:
            continue
        dec = it.decomposition(k, shift)
        y, res, _ = hessenberg_lstsq(dec.H, bnorm)
        ysol = dec.Vhat @ y
        x = precond.apply(ysol) if precond is not None else ysol
        rt = None
        if true_residual:
            rt = np.linalg.norm(A.apply(ysol) - b) / bnorm
        hist.record(k, x, res / bnorm, x_exact, rt, None)
        if rule is not None and hist.discrepancy_index is None and rule.satisfied(res):
            hist.discrepancy_index = k
            if stop_on_discrepancy:
                hist.stop_reason = "discrepancy"
                return hist
        if it.breakdown is not None:
            hist.stop_reason = "breakdown"
            return hist
        if _stagnated(hist.relres, stagnation_window):
            hist.stop_reason = "stagnation"
            return hist
    hist.stop_reason = "kmax"
    return hist


def lsqr(A, b, rule=None, kmax=None, x_exact=None, stop_on_discrepancy=True,
         keep_iterates=False, true_residual=False):
    """LSQR via Golub-Kahan bidiagonalization with full reorthogonalization.

    Iterate ``k`` minimizes ``||A x - b||`` over ``K_k(A^* A, A^* b)``. The
    projected problem ``min ||B_{k+1,k} y - ||b|| e_1||`` is solved with the
    same Givens routine as GMRES.
    """
    if not A.has_adjoint:
        raise TypeError("LSQR needs an operator with an adjoint")
    b = as_vector(b, "b")
    m, n = A.shape
    if b.shape[0] != m:
        raise ValueError(f"operator of shape {A.shape} does not match b of length {b.shape[0]}")
    if kmax is None:
        kmax = min(m, n)
    kmax = min(kmax, n)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0:
        raise ValueError("LSQR needs a nonzero right-hand side")
    tol = BREAKDOWN_RTOL * A.scale
    dtype = np.result_type(b.dtype, float)
    U = np.zeros((m, kmax + 1), dtype=dtype)
    V = np.zeros((n, kmax), dtype=dtype)
    B = np.zeros((kmax + 1, kmax))
    U[:, 0] = b / bnorm
    v = A.apply_adjoint(U[:, 0])
    hist = SolveHistory(iterates=[] if keep_iterates else None)

    def _orth(w, Q):
        for _ in range(2):
            w = w - Q @ (Q.conj().T @ w)
        return w

    alpha = float(np.linalg.norm(v))
    if alpha <= tol:
        raise ValueError("A^* b vanishes; the least-squares solution is zero")
    for k in range(1, kmax + 1):
        if np.iscomplexobj(v) and not np.iscomplexobj(V):
            U, V = U.astype(complex), V.astype(complex)
        V[:, k - 1] = v / alpha
        B[k - 1, k - 1] = alpha
        u = A.apply(V[:, k - 1]) - alpha * U[:, k - 1]
        u = _orth(u, U[:, :k])
        beta = float(np.linalg.norm(u))
        if np.iscomplexobj(u) and not np.iscomplexobj(U):
            U, V = U.astype(complex), V.astype(complex)
        lucky = beta <= tol
        if not lucky:
            U[:, k] = u / beta
            B[k, k - 1] = beta
        y, res, _ = hessenberg_lstsq(B[:k + 1, :k], bnorm)
        x = V[:, :k] @ y
        rt = np.linalg.norm(A.apply(x) - b) / bnorm if true_residual else None
        hist.record(k, x, res / bnorm, x_exact, rt, None)
        if rule is not None and hist.discrepancy_index is None and rule.satisfied(res):
            hist.discrepancy_index = k
            if stop_on_discrepancy:
                hist.stop_reason = "discrepancy"
                return hist
        if lucky:
            hist.stop_reason = "breakdown"
            return hist
        if k == kmax:
            break
        v = A.apply_adjoint(U[:, k]) - beta * V[:, k - 1]
        v = _orth(v, V[:, :k])
        alpha = float(np.linalg.norm(v))
        if alpha <= tol:
            hist.stop_reason = "breakdown"
            return hist
    hist.stop_reason = "kmax"
    return hist
