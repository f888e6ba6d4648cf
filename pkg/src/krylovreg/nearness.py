"""Frobenius-norm distances to structured matrix classes.

Classes covered: Hermitian, skew-Hermitian, Hermitian positive/negative
semidefinite, generalized Hermitian ``e^{i phi} B + alpha I`` (``B``
Hermitian) and its positive semidefinite counterpart. The distance to the
normal matrices is reported only through the nearest-circulant upper bound.
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .linalg import as_matrix, hermitian_eig

__all__ = [
    "NearnessReport",
    "DegenerateFamilyError",
    "hermitian_split",
    "dist_to_psd",
    "closest_generalized_hermitian",
    "generalized_hermitian_candidate",
    "closest_generalized_psd",
    "nearest_circulant_matrix",
    "nearness_report",
    "verify_downshift_distances",
]


class DegenerateFamilyError(ValueError):
    """The closest generalized Hermitian matrix is not unique."""


def _square(A):
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def hermitian_split(A):
    """Return ``(A_H, A_A)`` with ``A = A_H + A_A``."""
    A = _square(A)
    Ah = A.conj().T
    return (A + Ah) / 2, (A - Ah) / 2


def dist_to_psd(A, sign="plus"):
    """Distance to the Hermitian positive (``plus``) or negative semidefinite cone.

    Returns ``(dist, projection)`` where ``projection`` is the closest matrix
    in the cone, obtained by clipping the eigenvalues of the Hermitian part.
    """
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    AH, AA = hermitian_split(A)
    lam, U = hermitian_eig(AH)
    if sign == "plus":
        wrong = lam[lam < 0]
        kept = np.maximum(lam, 0.0)
    else:
        wrong = lam[lam > 0]
        kept = np.minimum(lam, 0.0)
    dist = np.sqrt(np.sum(wrong ** 2) + np.linalg.norm(AA) ** 2)
    proj = (U * kept) @ U.conj().T
    return float(dist), proj


def _traces(A):
    w1 = np.sum(A * A.T)            # sum_ij a_ij a_ji = Trace(A^2)
    w2 = np.trace(A)
    return w1, w2


def _is_degenerate(A, w1, w2):
    m = A.shape[0]
    return abs(m * w1 - w2 ** 2) <= 1e-12 * m * np.linalg.norm(A) ** 2


def generalized_hermitian_candidate(A, theta, gamma):
    """The matrix ``Z(theta, gamma)`` closest to ``A`` for fixed parameters."""
    A = _square(A)
    rot = np.exp(1j * theta)
    Z = (A + rot * A.conj().T) / 2
    Z = Z + np.eye(A.shape[0]) * (gamma * np.exp(1j * (theta + np.pi) / 2) / 2)
    return Z


def _gamma_of(theta, w2, m):
    return 2.0 / m * np.imag(np.exp(-0.5j * theta) * w2)


def closest_generalized_hermitian(A, theta_override=None):
    """Closest generalized Hermitian matrix in the Frobenius norm.

    Returns
    -------
    A_hat : ndarray
    theta_hat : float
        Rotation angle in ``(-pi, pi]``.
    gamma_hat : float
        Real shift parameter.
    dist : float
    degenerate : bool
        True when every angle gives the same distance; ``theta_override``
        (default 0) then selects the member of the family returned.
    """
    A = _square(A)
    m = A.shape[0]
    w1, w2 = _traces(A)
    degenerate = _is_degenerate(A, w1, w2)
    if degenerate:
        theta = 0.0 if theta_override is None else float(theta_override)
    else:
        theta = float(np.angle(w1 - w2 ** 2 / m))
        if theta == -np.pi:
            theta = np.pi
    gamma = float(_gamma_of(theta, w2, m))
    A_hat = generalized_hermitian_candidate(A, theta, gamma)
    # the closed-form distance cancels badly near the set; measure it directly
    return A_hat, theta, gamma, float(np.linalg.norm(A - A_hat)), bool(degenerate)


def closest_generalized_psd(A):
    """Generalized Hermitian PSD matrix built from the generalized Hermitian optimum.

    The rotation and shift are fixed at the values returned by
    :func:`closest_generalized_hermitian`; the Hermitian part of the rotated
    matrix is then projected onto the PSD cone.

    Returns ``(A_hat_plus, dist)``.
    """
    A = _square(A)
    m = A.shape[0]
    _, theta, gamma, _, degenerate = closest_generalized_hermitian(A)
    if degenerate:
        raise DegenerateFamilyError(
            "closest generalized Hermitian matrix is not unique; no rotation to project with")
    half = np.exp(0.5j * theta)
    rotated = A / half
    _, Atilde_plus = dist_to_psd(rotated, "plus")
    A_hat_plus = half * Atilde_plus + np.eye(m) * (gamma / 2 * np.exp(1j * (theta + np.pi) / 2))
    return A_hat_plus, float(np.linalg.norm(A - A_hat_plus))


def nearest_circulant_matrix(A):
    """Dense nearest circulant: each wrapped diagonal replaced by its mean."""
    A = _square(A)
    m = A.shape[0]
    i = np.arange(m)
    c = np.array([A[(i + s) % m, i].mean() for s in range(m)])
    idx = (i[:, None] - i[None, :]) % m
    return c[idx]


@dataclass
class NearnessReport:
    """Absolute Frobenius distances of a matrix to the structured classes."""

    frobenius_norm: float
    dist_H: float
    dist_A: float
    dist_Hplus: float
    dist_Hminus: float
    dist_G: float
    dist_Gplus: Optional[float]
    theta_hat: float
    gamma_hat: float
    degenerate_G: bool
    circulant_gap: float

    def normalized(self):
        """JSON-ready mapping with distances divided by ``||A||_F``."""
        f = self.frobenius_norm if self.frobenius_norm > 0 else 1.0
        return {
            "frobenius_norm": self.frobenius_norm,
            "dist_h": self.dist_H / f,
            "dist_skew": self.dist_A / f,
            "dist_hpsd": self.dist_Hplus / f,
            "dist_hnsd": self.dist_Hminus / f,
            "dist_g": self.dist_G / f,
            "dist_gplus": None if self.dist_Gplus is None else self.dist_Gplus / f,
            "theta_hat": self.theta_hat,
            "gamma_hat": self.gamma_hat / f,
            "degenerate": self.degenerate_G,
            "circulant_gap": self.circulant_gap / f,
        }

    def as_dict(self):
        return asdict(self)


def nearness_report(A):
    A = _square(A)
    AH, AA = hermitian_split(A)
    dplus, _ = dist_to_psd(A, "plus")
    dminus, _ = dist_to_psd(A, "minus")
    _, theta, gamma, dG, degenerate = closest_generalized_hermitian(A)
    dGplus = None if degenerate else closest_generalized_psd(A)[1]
    gap = float(np.linalg.norm(nearest_circulant_matrix(A) - A))
    return NearnessReport(
        frobenius_norm=float(np.linalg.norm(A)),
        dist_H=float(np.linalg.norm(AA)),
        dist_A=float(np.linalg.norm(AH)),
        dist_Hplus=dplus,
        dist_Hminus=dminus,
        dist_G=dG,
        dist_Gplus=dGplus,
        theta_hat=theta,
        gamma_hat=gamma,
        degenerate_G=degenerate,
        circulant_gap=gap,
    )


def verify_downshift_distances(m):
    """Nearness report of the ``m x m`` downshift matrix."""
    if m < 2:
        raise ValueError("m must be >= 2")
    return nearness_report(np.eye(m, k=-1))
