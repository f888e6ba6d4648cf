"""Right preconditioners for Krylov regularization.

Circulant preconditioners ``C1`` (nearest circulant), ``C2`` (optimal for
``||I - C^{-1} A||_F``) and ``C3`` (single random probe) are applied through
the inverse symbol. Arnoldi preconditioners ``M1``-``M4`` are built from a
short Arnoldi decomposition of ``A`` and expose both ``M`` and ``AM`` as
operators; ``AM`` is assembled from the decomposition where possible so no
extra products with ``A`` are spent.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .arnoldi import ArnoldiDecomposition, ArnoldiIteration
from .linalg import as_vector, svd_small, unitary_dft
from .operator import (CirculantOperator, DenseOperator, LinearOperator,
                       SingularSymbolError, compose)

__all__ = [
    "Preconditioner",
    "KpSelection",
    "NearZeroProbeError",
    "nearest_circulant",
    "tyrt_circulant",
    "probe_circulant",
    "circulant_preconditioner",
    "arnoldi_preconditioner",
    "build_preconditioner",
    "p_sigma",
    "select_kp",
    "CIRCULANT_VARIANTS",
    "ARNOLDI_VARIANTS",
]

CIRCULANT_VARIANTS = ("C1", "C2", "C3")
ARNOLDI_VARIANTS = ("M1", "M2", "M3", "M4")


class NearZeroProbeError(ValueError):
    """The probe vector has a (numerically) vanishing Fourier coefficient."""


@dataclass(frozen=True)
class Preconditioner:
    """A right preconditioner ``M`` together with the operator ``AM``."""

    variant: str
    M_op: LinearOperator
    AM_op: LinearOperator
    kp: Optional[int] = None
    source_decomp: Optional[ArnoldiDecomposition] = field(default=None, repr=False)
    circulant: Optional[CirculantOperator] = field(default=None, repr=False)

    def consistency_error(self, A, probes=3, seed=0):
        """Largest ``||AM v - A (M v)|| / (||A|| ||v||)`` over random unit probes."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(probes):
            v = rng.standard_normal(A.dim_in)
            v /= np.linalg.norm(v)
            direct = A.apply(self.M_op.apply(v))
            err = np.linalg.norm(self.AM_op.apply(v) - direct)
            ref = A.scale * max(self.M_op.scale, 1.0)
            worst = max(worst, float(err / ref))
        return worst


def _dense_matrix(A):
    if isinstance(A, DenseOperator):
        return A.matrix
    if isinstance(A, np.ndarray):
        return A
    raise TypeError(
        f"this circulant construction needs dense matrix access, got a {getattr(A, 'kind', type(A))} operator")


def nearest_circulant(A):
    """Circulant ``C_A`` minimizing ``||C - A||_F``.

    Its eigenvalues are the diagonal of ``W^* A W``; equivalently each wrapped
    diagonal of ``A`` is replaced by its mean.
    """
    A = _dense_matrix(A)
    m = A.shape[0]
    if A.shape != (m, m):
        raise ValueError("nearest_circulant needs a square matrix")
    i = np.arange(m)
    rows = (i[None, :] + i[:, None]) % m
    c = A[rows, i[None, :]].mean(axis=1)
    return CirculantOperator(np.fft.fft(c))


def _symbol_aastar(A):
    # diag(W^* A A^* W)_k is the squared norm of row k of W^* A
    FA = unitary_dft(A, axis=0)
    return np.sum(np.abs(FA) ** 2, axis=1)


def tyrt_circulant(A, rtol=1e-14):
    """Circulant ``C = C_{AA^*} C_{A^*}^{-1}``, which minimizes ``||I - C^{-1} A||_F``.

    Raises
    ------
    SingularSymbolError
        If ``C_{A^*}`` is numerically singular.
    """
    Ad = _dense_matrix(A)
    d_adj = np.conj(nearest_circulant(Ad).symbol)
    mag = np.abs(d_adj)
    bad = np.flatnonzero(mag <= rtol * mag.max())
    if mag.max() == 0 or bad.size:
        i = int(bad[0]) if bad.size else 0
        raise SingularSymbolError(i, mag[i] / mag.max() if mag.max() else 0.0)
    return CirculantOperator(_symbol_aastar(Ad) / d_adj)


def probe_circulant(A, rng):
    """Circulant matching ``A`` on one Gaussian probe ``x``: ``C x = A x``.

    ``rng`` is any object with a ``standard_normal(n)`` method; the experiment
    generator is passed here so whole runs stay reproducible.
    """
    m = A.dim_in
    x = np.asarray(rng.standard_normal(m), dtype=float)
    fx = unitary_dft(x)
    floor = 1e-12 * np.linalg.norm(x) / np.sqrt(m)
    bad = np.flatnonzero(np.abs(fx) < floor)
    if bad.size:
        raise NearZeroProbeError(
            f"probe has a vanishing Fourier coefficient at index {int(bad[0])}; retry with another seed")
    return CirculantOperator(unitary_dft(A.apply(x)) / fx)


def circulant_preconditioner(A, variant, rng=None):
    """``M = C^{-1}`` for the circulant of the requested variant."""
    variant = variant.upper()
    if variant == "C1":
        C = nearest_circulant(A)
    elif variant == "C2":
        C = tyrt_circulant(A)
    elif variant == "C3":
        if rng is None:
            raise ValueError("C3 needs a random generator for its probe")
        C = probe_circulant(A, rng)
    else:
        raise ValueError(f"unknown circulant variant {variant!r}")
    M = C.inverse()
    Aop = A if isinstance(A, LinearOperator) else DenseOperator(A)
    return Preconditioner(variant, M, compose(Aop, M), circulant=C)


def arnoldi_preconditioner(decomp, variant, A, kp=None):
    """Arnoldi-based preconditioner of the requested variant.

    Parameters
    ----------
    decomp : ArnoldiDecomposition
        Standard decomposition of ``A`` started from ``b``; ``M3`` and ``M4``
        need one step more than ``kp``.
    variant : {"M1", "M2", "M3", "M4"}
    A : LinearOperator
        Used for ``AM`` by ``M2``/``M4`` only.
    kp : int, optional
        Defaults to the largest value the decomposition supports.
    """
    variant = variant.upper()
    if variant not in ARNOLDI_VARIANTS:
        raise ValueError(f"unknown Arnoldi variant {variant!r}")
    if decomp.j != 1:
        raise ValueError("Arnoldi preconditioners need a standard (unshifted) decomposition")
    extra = 1 if variant in ("M3", "M4") else 0
    if kp is None:
        kp = decomp.k - extra
    if kp < 1 or kp + extra > decomp.k:
        raise ValueError(
            f"{variant} with kp={kp} needs {kp + extra} Arnoldi steps, decomposition has {decomp.k}")
    if decomp.breakdown is not None and decomp.breakdown < kp:
        raise ValueError(f"Arnoldi broke down at step {decomp.breakdown} < kp={kp}")
    V, H = decomp.V, decomp.H
    m = V.shape[0]
    Vk = V[:, :kp]
    Vk1 = V[:, :kp + 1]
    Hk = H[:kp + 1, :kp]

    def proj_out(v):
        return v - Vk @ (Vk.conj().T @ v)

    if variant in ("M1", "M2"):
        C = Vk1 @ Hk                                  # A V_k = C
        low = LinearOperator((m, m), lambda v: Vk @ (Hk.conj().T @ (Vk1.conj().T @ v)),
                             lambda w: Vk1 @ (Hk @ (Vk.conj().T @ w)),
                             kind="arnoldi_lowrank", scale=float(np.linalg.norm(Hk)))
        CC = LinearOperator((m, m), lambda v: C @ (C.conj().T @ v),
                            lambda w: C @ (C.conj().T @ w), kind="arnoldi_lowrank",
                            scale=float(np.linalg.norm(Hk @ Hk.conj().T)))
    else:
        G = V[:, :kp + 2] @ (H[:kp + 2, :kp + 1] @ Hk)   # A V_{k+1} H_{k+1,k}
        low = LinearOperator((m, m), lambda v: Vk1 @ (Hk @ (Vk.conj().T @ v)),
                             lambda w: Vk @ (Hk.conj().T @ (Vk1.conj().T @ w)),
                             kind="arnoldi_lowrank", scale=float(np.linalg.norm(Hk)))
        CC = LinearOperator((m, m), lambda v: G @ (Vk.conj().T @ v),
                            lambda w: Vk @ (G.conj().T @ w), kind="arnoldi_lowrank",
                            scale=float(np.linalg.norm(G)))

    if variant in ("M1", "M3"):
        return Preconditioner(variant, low, CC, kp=kp, source_decomp=decomp)

    # M2 / M4: add the complementary projector; AM needs fresh products with A
    def m_full(v):
        return low.apply(v) + proj_out(v)

    def m_full_adj(w):
        return low.apply_adjoint(w) + proj_out(w)

    def am_full(v):
        return CC.apply(v) + A.apply(proj_out(v))

    am_adj = None
    if A.has_adjoint:
        def am_adj(w):
            return CC.apply_adjoint(w) + proj_out(A.apply_adjoint(w))

    M = LinearOperator((m, m), m_full, m_full_adj, kind="composite",
                       scale=low.scale + float(np.sqrt(max(m - kp, 0))))
    AM = LinearOperator((m, m), am_full, am_adj, kind="composite",
                        scale=CC.scale + A.scale)
    return Preconditioner(variant, M, AM, kp=kp, source_decomp=decomp)


def build_preconditioner(A, b, variant, kp=None, rng=None, reorth=True):
    """Construct any supported preconditioner from ``A`` and ``b``.

    ``variant`` ``"none"`` returns ``None``. Arnoldi variants run the initial
    Arnoldi process on ``A`` with start ``b`` for as many steps as needed.
    """
    if variant is None or str(variant).lower() == "none":
        return None
    v = str(variant).upper()
    if v in CIRCULANT_VARIANTS:
        return circulant_preconditioner(A, v, rng=rng)
    if v not in ARNOLDI_VARIANTS:
        raise ValueError(f"unknown preconditioner {variant!r}")
    if kp is None or kp < 1:
        raise ValueError("Arnoldi preconditioners need kp >= 1")
    steps = kp + (1 if v in ("M3", "M4") else 0)
    if steps > A.dim_in:
        raise ValueError(f"kp={kp} is too large for dimension {A.dim_in}")
    it = ArnoldiIteration(A, b, steps, reorth=reorth).run()
    if it.breakdown is not None and it.breakdown < steps:
        if v in ("M3", "M4") or it.breakdown < kp:
            raise ValueError(f"Arnoldi broke down at step {it.breakdown}; {v} needs {steps} steps")
    return arnoldi_preconditioner(it.decomposition(it.k), v, A, kp=kp)


def p_sigma(H_small, H_next):
    """``sigma_1(H_{k+1,k}) * sigma_{k+1}(H_{k+2,k+1})``."""
    s1 = svd_small(H_small)[1][0]
    s_last = svd_small(H_next)[1][-1]
    return float(s1 * s_last)


@dataclass
class KpSelection:
    """Result of the kP selection.

    ``trace[i]`` holds ``(h_{i+2,i+1}, p_sigma^{(i+1)})``; the second entry is
    NaN where ``p_sigma`` could not be formed.
    """

    kp: int
    rule: str
    trace: List[Tuple[float, float]]
    fired: bool
    breakdown: Optional[int] = None


def _stop1(h, k, tau1p, tau1pp):
    # h[i] = h_{i+2,i+1}; the test at index k compares h_{k+1,k} with h_{k,k-1}
    if k < 2:
        return False
    cur, prev = h[k - 1], h[k - 2]
    return cur < tau1p and prev > 0 and abs(cur - prev) / prev > tau1pp


def select_kp(A, b, kmax, taus=(1e-4, 0.9, 1e-10), rule="stop2", reorth=True,
              full_trace=False):
    """Choose the number ``kP`` of initial Arnoldi steps.

    Parameters
    ----------
    taus : (tau1', tau1'', tau2)
    rule : {"stop1", "stop2"}
    full_trace : bool
        Keep iterating to ``kmax`` to record the whole trace; the selected
        ``kP`` does not change.
    """
    if rule not in ("stop1", "stop2"):
        raise ValueError(f"unknown kP rule {rule!r}")
    m = A.dim_in
    if kmax < 1 or kmax > m - 2:
        raise ValueError(f"kmax must lie in [1, {m - 2}], got {kmax}")
    tau1p, tau1pp, tau2 = taus
    it = ArnoldiIteration(A, as_vector(b, "b"), kmax + 1, reorth=reorth)
    it.step()
    h = [float(np.real(it.H[1, 0]))]
    trace = []
    chosen = None
    k = 1
    while k <= kmax:
        psig = np.nan
        if it.breakdown is None or it.breakdown > k:
            it.step()
            if it.k == k + 1:
                h.append(float(np.real(it.H[k + 1, k])))
                psig = p_sigma(it.H[:k + 1, :k], it.H[:k + 2, :k + 1])
        trace.append((h[k - 1], psig))
        if chosen is None:
            if rule == "stop1" and _stop1(h, k, tau1p, tau1pp):
                chosen = k
            elif rule == "stop2" and not np.isnan(psig) and psig < tau2:
                chosen = k
        if it.breakdown is not None and it.breakdown <= k:
            break
        if chosen is not None and not full_trace:
            break
        k += 1
    bd = it.breakdown
    if chosen is not None:
        return KpSelection(chosen, rule, trace, True, bd)
    if bd is not None:
        return KpSelection(min(bd, kmax), "manual", trace, False, bd)
    return KpSelection(kmax, "manual", trace, False, None)
