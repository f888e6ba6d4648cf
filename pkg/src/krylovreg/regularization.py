"""Arnoldi-Tikhonov and Arnoldi-TSVD hybrid methods.

After ``k`` Arnoldi steps on the (preconditioned) operator ``AM`` the
regularized problem is solved in the projected space
``min ||H z - ||b|| e_1||`` using the SVD of the small Hessenberg matrix.
The regularization parameter (``mu`` or the truncation index ``j``) is set
with the discrepancy principle on the projected residual.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .arnoldi import ArnoldiIteration
from .krylov_solvers import DiscrepancyRule, SolveHistory
from .linalg import as_vector, hessenberg_lstsq, svd_small

__all__ = [
    "TikhonovSolution",
    "TsvdSolution",
    "ProjectedSvd",
    "arnoldi_tikhonov",
    "arnoldi_tsvd",
    "tikhonov_mu",
    "hybrid_solve",
    "REGULARIZERS",
]

REGULARIZERS = ("none", "tikhonov", "tsvd")
RANK_RTOL = 1e-14
MU_BRACKET = (1e-16, 1e16)


class ProjectedSvd:
    """SVD data of ``H`` and the coefficients of ``beta e_1``.

    ``coef[i] = u_i^* beta e_1`` for all ``k + 1`` columns of the full ``U``,
    so residual norms are sums of squares without cancellation.
    """

    def __init__(self, H, beta):
        U, sigma, W = svd_small(H, full=True)
        self.H = H
        self.beta = float(beta)
        self.sigma = sigma
        self.W = W
        self.coef = self.beta * np.conj(U[0, :])
        k = sigma.size
        self.sig_ext = np.concatenate([sigma, np.zeros(U.shape[1] - k)])

    def phi2(self, mu):
        """Squared projected Tikhonov residual."""
        s2 = self.sig_ext ** 2
        f = mu / (s2 + mu)
        return float(np.sum(f ** 2 * np.abs(self.coef) ** 2))

    def dphi2_dlogmu(self, mu):
        s2 = self.sig_ext ** 2
        c2 = np.abs(self.coef) ** 2
        return float(np.sum(2 * mu ** 2 * s2 / (s2 + mu) ** 3 * c2))

    def z_tikhonov(self, mu):
        k = self.sigma.size
        s = self.sigma
        return self.W @ (s / (s ** 2 + mu) * self.coef[:k])

    def tsvd_residual2(self, j):
        """Squared residual of the rank-``j`` truncated solution."""
        return float(np.sum(np.abs(self.coef[j:]) ** 2))

    def z_tsvd(self, j):
        return self.W[:, :j] @ (self.coef[:j] / self.sigma[:j])

    @property
    def numerical_rank(self):
        if self.sigma.size == 0 or self.sigma[0] == 0:
            return 0
        return int(np.sum(self.sigma > RANK_RTOL * self.sigma[0]))


@dataclass
class TikhonovSolution:
    """Arnoldi-Tikhonov iterate.

    ``discrepancy`` is the projected residual ``||H z_mu - ||b|| e_1||``,
    evaluated from the SVD filter factors.
    """

    x_mu: np.ndarray
    mu: float
    discrepancy: float
    converged_mu_search: bool
    z: np.ndarray
    iterations: int = 0


@dataclass
class TsvdSolution:
    """Arnoldi-TSVD iterate with truncation index ``j``."""

    x_j: np.ndarray
    j: int
    discrepancy: float
    attained: bool
    z: np.ndarray


def tikhonov_mu(psvd, target, max_newton=60, max_bisect=200, rtol=1e-12):
    """Solve ``phi(mu) = target`` on ``[1e-16 sigma_min^2, 1e16 sigma_1^2]``.

    ``sigma_min`` is the smallest positive singular value of ``H``; below
    ``sigma_min^2`` the function ``phi`` is flat, so the bracket holds every
    attainable root.

    ``phi`` is increasing in ``mu``. Newton steps are taken on
    ``phi(mu)^2 - target^2`` as a function of ``log mu`` and replaced by
    bisection whenever they leave the current bracket.

    Returns ``(mu, converged, iterations)``. When ``target`` lies outside
    ``(phi(lo), phi(hi))`` the nearer bracket end is returned with
    ``converged=False``.
    """
    pos = psvd.sigma[psvd.sigma > 0]
    s1, smin = (pos[0], pos[-1]) if pos.size else (1.0, 1.0)
    lo, hi = np.log(MU_BRACKET[0] * smin ** 2), np.log(MU_BRACKET[1] * s1 ** 2)
    t2 = target ** 2

    def f(t):
        return psvd.phi2(np.exp(t)) - t2

    flo, fhi = f(lo), f(hi)
    if flo >= 0:
        return float(np.exp(lo)), False, 0
    if fhi <= 0:
        return float(np.exp(hi)), False, 0
    # start from the geometric middle of the bracket
    t = 0.5 * (lo + hi)
    for it in range(1, max_newton + max_bisect + 1):
        ft = f(t)
        if abs(np.sqrt(max(ft + t2, 0.0)) - target) <= rtol * target:
            return float(np.exp(t)), True, it
        if ft < 0:
            lo = t
        else:
            hi = t
        step = None
        if it <= max_newton:
            d = psvd.dphi2_dlogmu(np.exp(t))
            if d > 0:
                step = t - ft / d
        if step is None or not (lo < step < hi):
            step = 0.5 * (lo + hi)
        if hi - lo < 1e-15 * max(1.0, abs(t)):
            t = step
            break
        t = step
    mu = float(np.exp(t))
    phi = np.sqrt(psvd.phi2(mu))
    return mu, bool(abs(phi - target) <= 1e-8 * target), max_newton + max_bisect


def _basis_map(decomp, z, M):
    y = decomp.Vhat @ z
    return M.apply(y) if M is not None else y


def _check(decomp, rule):
    if decomp.k < 1:
        raise ValueError("empty decomposition")
    if not isinstance(rule, DiscrepancyRule):
        raise TypeError("rule must be a DiscrepancyRule")
    if rule.delta <= 0:
        raise ValueError("the discrepancy principle needs delta > 0")


def arnoldi_tikhonov(decomp, M, rule, psvd=None):
    """Arnoldi-Tikhonov solution with ``mu`` from the discrepancy principle.

    Parameters
    ----------
    decomp : ArnoldiDecomposition
        Decomposition of ``AM`` started from ``b``.
    M : LinearOperator or None
        Right preconditioner; ``None`` means the identity.
    rule : DiscrepancyRule
    """
    _check(decomp, rule)
    if psvd is None:
        psvd = ProjectedSvd(decomp.H, decomp.bnorm)
    mu, ok, its = tikhonov_mu(psvd, rule.threshold)
    z = psvd.z_tikhonov(mu)
    if np.isrealobj(decomp.H):
        z = z.real
    # the filter-factor sum avoids the cancellation in ||H z - beta e_1|| when ||z|| is huge
    res = np.sqrt(psvd.phi2(mu))
    return TikhonovSolution(_basis_map(decomp, z, M), mu, float(res), ok, z, its)


def arnoldi_tsvd(decomp, M, rule, psvd=None):
    """Arnoldi-TSVD solution with the smallest ``j`` meeting the discrepancy principle."""
    _check(decomp, rule)
    if psvd is None:
        psvd = ProjectedSvd(decomp.H, decomp.bnorm)
    r = psvd.numerical_rank
    if r == 0:
        raise ValueError("projected matrix is numerically zero")
    thr2 = rule.threshold ** 2
    j, attained = r, False
    for cand in range(1, r + 1):
        if psvd.tsvd_residual2(cand) <= thr2:
            j, attained = cand, True
            break
    z = psvd.z_tsvd(j)
    if np.isrealobj(decomp.H):
        z = z.real
    res = float(np.sqrt(psvd.tsvd_residual2(j)))
    return TsvdSolution(_basis_map(decomp, z, M), j, res, attained, z)


def hybrid_solve(A, b, regularizer="tsvd", precond=None, rule=None, kmax=60,
                 x_exact=None, reorth=True, keep_iterates=False, check_every=0):
    """Run ``kmax`` Arnoldi steps on ``AM`` and regularize every iterate.

    Parameters
    ----------
    A : LinearOperator
        The original operator (true residuals are measured with it).
    regularizer : {"none", "tikhonov", "tsvd"}
        ``"none"`` gives (preconditioned) GMRES.
    precond : Preconditioner or None
    rule : DiscrepancyRule
        Needed by the regularized variants; for GMRES it only marks the
        discrepancy index.
    check_every : int
        If positive, verify the Arnoldi invariants of ``AM`` every that many
        steps (and at the end).

    Returns
    -------
    SolveHistory
        ``params`` holds ``mu`` (Tikhonov), ``j`` (TSVD) or ``None``;
        ``converged`` flags whether the parameter rule could be met.
    """
    if regularizer not in REGULARIZERS:
        raise ValueError(f"unknown regularizer {regularizer!r}")
    if regularizer != "none" and rule is None:
        raise ValueError(f"{regularizer} needs a DiscrepancyRule")
    b = as_vector(b, "b")
    op = precond.AM_op if precond is not None else A
    M = precond.M_op if precond is not None else None
    kmax = min(kmax, op.dim_in)
    it = ArnoldiIteration(op, b, kmax, reorth=reorth)
    bnorm = it.bnorm
    hist = SolveHistory(iterates=[] if keep_iterates else None)
    dec = None
    while not it.done:
        it.step()
        k = it.k
        dec = it.decomposition(k)
        if check_every and k % check_every == 0:
            dec.check(op)
        param, ok = None, True
        if regularizer == "none":
            z, res, _ = hessenberg_lstsq(dec.H, bnorm)
            x = _basis_map(dec, z, M)
            ok = rule is None or rule.satisfied(res)
        elif regularizer == "tikhonov":
            sol = arnoldi_tikhonov(dec, M, rule)
            x, res, param, ok = sol.x_mu, sol.discrepancy, sol.mu, sol.converged_mu_search
        else:
            sol = arnoldi_tsvd(dec, M, rule)
            x, res, param, ok = sol.x_j, sol.discrepancy, sol.j, sol.attained
        rt = float(np.linalg.norm(A.apply(x) - b) / bnorm)
        hist.record(k, x, res / bnorm, x_exact, rt, param, ok)
        if rule is not None and hist.discrepancy_index is None and ok:
            hist.discrepancy_index = k
    if check_every and dec is not None:
        dec.check(op)
    hist.stop_reason = "breakdown" if it.breakdown is not None else "kmax"
    return hist
