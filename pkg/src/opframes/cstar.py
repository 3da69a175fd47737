"""Matrix C*-algebra kernel.

Elements of the algebra are plain ``d x d`` complex numpy arrays.  Every
comparison that can be spoiled by round-off goes through a :class:`Tolerance`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, DimensionMismatch, NotPositive

AlgebraElement = np.ndarray


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-9
    abs_floor: float = 1e-12

    def __post_init__(self):
        if not (self.rel > 0 and self.abs_floor > 0):
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class PencilResult:
    """Extremal ratio of two PSD quadratic forms.

    ``value`` is ``math.inf`` when the numerator has mass on the kernel of the
    denominator; ``effective_rank`` is the number of denominator eigen-directions
    that were kept.
    """

    value: float
    effective_rank: int
    vector: np.ndarray | None = None

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.value)

    def __float__(self):
        return float(self.value)


def as_element(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def hermitian_part(a) -> np.ndarray:
    a = as_element(a)
    return (a + a.conj().T) / 2


def adjoint_elem(a) -> np.ndarray:
    return as_element(a).conj().T


def op_norm(a) -> float:
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermitian_eigenvalues(a) -> np.ndarray:
    """Ascending eigenvalues of ``(a + a*) / 2``."""
    return np.linalg.eigvalsh(hermitian_part(a))


def _positive_given(a, w, t: Tolerance) -> bool:
    """Positivity test for ``a`` given the ascending eigenvalues ``w`` of its Hermitian part."""
    if not w.size:
        return True
    diff = a - a.conj().T
    skew = math.sqrt(np.vdot(diff, diff).real)
    # Frobenius >= spectral and ||a|| >= max|w|, so this shortcut never accepts wrongly
    if skew > t.rel * max(1.0, -float(w[0]), float(w[-1])):
        if op_norm(a - a.conj().T) > t.rel * max(1.0, op_norm(a)):
            return False
    return bool(w[0] >= -t.rel * max(1.0, w[-1]))


def is_positive(a, t: Tolerance = DEFAULT_TOL) -> bool:
    a = as_element(a)
    return _positive_given(a, hermitian_eigenvalues(a), t)


def loewner_leq(a, b, t: Tolerance = DEFAULT_TOL) -> bool:
    a, b = as_element(a), as_element(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return is_positive(b - a, t)


def psd_sqrt(a, t: Tolerance = DEFAULT_TOL) -> np.ndarray:
    if not is_positive(a, t):
        raise NotPositive("psd_sqrt needs a positive element")
    w, u = np.linalg.eigh(hermitian_part(a))
    s = (u * np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T
    return (s + s.conj().T) / 2


def abs_elem(a) -> np.ndarray:
    a = as_element(a)
    return psd_sqrt(a.conj().T @ a)


def _whiten(w, u, t: Tolerance):
    top = max(float(w[-1]), 0.0)
    keep = w > t.rel * top if top > t.abs_floor else np.zeros(w.shape, bool)
    W = u[:, keep] / np.sqrt(w[keep])
    return W, u[:, ~keep], int(keep.sum())


def _prepare(P, Q, t):
    """Validate a pencil; returns the Hermitian part of P, ||P|| and the whitening of Q."""
    P, Q = as_element(P), as_element(Q)
    if P.shape != Q.shape:
        raise DimensionMismatch(f"{P.shape} vs {Q.shape}")
    Ph, Qh = (P + P.conj().T) / 2, (Q + Q.conj().T) / 2
    wp = np.linalg.eigvalsh(Ph)
    if not _positive_given(P, wp, t):
        raise NotPositive("pencil numerator is not positive")
    wq, uq = np.linalg.eigh(Qh)
    if not _positive_given(Q, wq, t):
        raise NotPositive("pencil denominator is not positive")
    return Ph, max(-float(wp[0]), float(wp[-1])), _whiten(wq, uq, t)


def pencil_sup(P, Q, t: Tolerance = DEFAULT_TOL) -> PencilResult:
    """sup of v*Pv / v*Qv over v outside ker(Q)."""
    P, norm_P, (W, kernel, rank) = _prepare(P, Q, t)
    if kernel.shape[1]:
        leak = kernel.conj().T @ P @ kernel
        if float(np.abs(np.linalg.eigvalsh(leak)).max()) > t.rel * max(1.0, norm_P):
            return PencilResult(math.inf, rank)
    if rank == 0:
        return PencilResult(0.0, 0)
    S = W.conj().T @ P @ W
    w, v = np.linalg.eigh((S + S.conj().T) / 2)
    vec = W @ v[:, -1]
    return PencilResult(max(float(w[-1]), 0.0), rank, vec / np.linalg.norm(vec))


def pencil_inf(P, Q, t: Tolerance = DEFAULT_TOL) -> PencilResult:
    """inf of v*Pv / v*Qv over v outside ker(Q)."""
    P, _, (W, kernel, rank) = _prepare(P, Q, t)
    if rank == 0:
        raise DegenerateDenominator("pencil denominator vanishes")
    S = W.conj().T @ P @ W
    lift = np.zeros((kernel.shape[1], rank), complex)
    if kernel.shape[1]:
        # components in ker(Q) are free: minimize over them (Schur complement)
        P_kk = kernel.conj().T @ P @ kernel
        P_kr = kernel.conj().T @ P @ W
        w, u = np.linalg.eigh((P_kk + P_kk.conj().T) / 2)
        keep = w > t.rel * max(float(w[-1]), t.abs_floor)
        lift = -(u[:, keep] / w[keep]) @ (u[:, keep].conj().T @ P_kr)
        S = S + P_kr.conj().T @ lift
    w, v = np.linalg.eigh((S + S.conj().T) / 2)
    vec = W @ v[:, 0] + kernel @ (lift @ v[:, 0])
    return PencilResult(max(float(w[0]), 0.0), rank, vec / np.linalg.norm(vec))
