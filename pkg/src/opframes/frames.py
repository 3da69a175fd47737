"""Operator frames and K-operator frames over a finite measure space.

A family ``{M_j}`` with weights ``mu_j`` has Gram matrix
``G = sum_j mu_j M_j M_j^H`` and ``sum_j mu_j <M_j x, M_j x> = X G X^H``, so
every frame inequality reduces to a Loewner comparison against ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cstar import DEFAULT_TOL, Tolerance, hermitian_part, op_norm, pencil_inf
from .errors import DimensionMismatch, MeasureMismatch, NotAFrame, ZeroK
from .module import L2Family, ModuleOperator, ModuleVector, operator_norm


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise ValueError("a measure space needs at least one point")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("measure weights must be finite and strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def point_count(self) -> int:
        return self.weights.size

    def same_as(self, other: MeasureSpace) -> bool:
        return self.point_count == other.point_count and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True, eq=False)
class OperatorFrame:
    """Weighted family of module operators, stored as an ``(m, N, N)`` stack."""

    measure: MeasureSpace
    stack: np.ndarray
    algebra_dim: int
    module_rank: int

    def __post_init__(self):
        s = np.asarray(self.stack, dtype=complex)
        N = self.algebra_dim * self.module_rank
        if s.ndim != 3 or s.shape[1:] != (N, N):
            raise DimensionMismatch(f"operator stack of shape {s.shape}, expected (m, {N}, {N})")
        if s.shape[0] != self.measure.point_count:
            raise DimensionMismatch("one operator per measure point is required")
        object.__setattr__(self, "stack", s)

    @classmethod
    def from_operators(cls, weights, operators, d: int = 1) -> OperatorFrame:
        mats = [op.matrix if isinstance(op, ModuleOperator) else np.asarray(op, complex) for op in operators]
        if not mats:
            raise DimensionMismatch("empty operator list")
        side = mats[0].shape[0]
        if side % d:
            raise DimensionMismatch(f"operator side {side} is not a multiple of d={d}")
        return cls(MeasureSpace(weights), np.stack(mats), d, side // d)

    @property
    def shape(self):
        return self.algebra_dim, self.module_rank

    @property
    def size(self) -> int:
        return self.algebra_dim * self.module_rank

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights

    @property
    def operators(self) -> list[ModuleOperator]:
        return [ModuleOperator(m, *self.shape) for m in self.stack]

    def with_stack(self, stack) -> OperatorFrame:
        return OperatorFrame(self.measure, stack, *self.shape)

    def scaled(self, s) -> OperatorFrame:
        return self.with_stack(s * self.stack)

    def __add__(self, other):
        check_compatible(self, other)
        return self.with_stack(self.stack + other.stack)

    def __sub__(self, other):
        check_compatible(self, other)
        return self.with_stack(self.stack - other.stack)


def check_compatible(*families: OperatorFrame):
    first = families[0]
    for f in families[1:]:
        if f.shape != first.shape:
            raise DimensionMismatch(f"(d, n) = {first.shape} vs {f.shape}")
        if not first.measure.same_as(f.measure):
            raise MeasureMismatch("families live on different measure spaces")


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float


@dataclass(frozen=True)
class FrameClassification:
    is_bessel: bool
    is_frame: bool
    is_tight: bool
    is_parseval: bool
    bounds: FrameBounds


@dataclass(frozen=True, eq=False)
class KOperator:
    op: ModuleOperator

    @classmethod
    def from_matrix(cls, matrix, d: int = 1) -> KOperator:
        return cls(ModuleOperator.from_matrix(matrix, d))

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    def gram(self) -> np.ndarray:
        """``K^H K``: the matrix of ``x -> <K* x, K* x>``."""
        return self.matrix.conj().T @ self.matrix


def frame_gram(F: OperatorFrame) -> np.ndarray:
    G = np.einsum("j,jab,jcb->ac", F.weights, F.stack, F.stack.conj())
    return hermitian_part(G)


def gram_bounds(G) -> FrameBounds:
    w = np.linalg.eigvalsh(hermitian_part(G))
    return FrameBounds(max(float(w[0]), 0.0), max(float(w[-1]), 0.0))


def optimal_bounds(F: OperatorFrame) -> FrameBounds:
    return gram_bounds(frame_gram(F))


def classify(F: OperatorFrame, t: Tolerance = DEFAULT_TOL) -> FrameClassification:
    b = optimal_bounds(F)
    is_frame = b.lower > t.rel * max(1.0, b.upper)
    is_tight = is_frame and b.upper - b.lower <= t.rel * b.upper
    is_parseval = is_tight and abs(b.upper - 1.0) <= t.rel
    return FrameClassification(True, is_frame, is_tight, is_parseval, b)


def frame_operator(F: OperatorFrame) -> ModuleOperator:
    return ModuleOperator(frame_gram(F), *F.shape)


def _check_vector(F, x):
    if F.shape != x.shape:
        raise DimensionMismatch(f"frame (d, n) = {F.shape}, vector {x.shape}")


def analysis(F: OperatorFrame, x: ModuleVector) -> L2Family:
    _check_vector(F, x)
    return L2Family(np.einsum("ab,jbc->jac", x.entries, F.stack), *F.shape)


def synthesis(F: OperatorFrame, f: L2Family) -> ModuleVector:
    if F.shape != f.shape:
        raise DimensionMismatch(f"frame (d, n) = {F.shape}, family {f.shape}")
    if f.point_count != F.measure.point_count:
        raise DimensionMismatch("family and frame disagree on the number of points")
    X = np.einsum("j,jab,jcb->ac", F.weights, f.stack, F.stack.conj())
    return ModuleVector(X, *F.shape)


def s_k(F: OperatorFrame) -> ModuleOperator:
    """Composite synthesis-after-analysis operator; its matrix is the frame Gram."""
    return frame_operator(F)


def k_bounds_from_gram(G, K: KOperator, t: Tolerance = DEFAULT_TOL) -> tuple[FrameBounds, bool]:
    upper = gram_bounds(G).upper
    lower = pencil_inf(G, K.gram(), t).value
    return FrameBounds(lower, upper), bool(lower > t.rel * max(1.0, upper))


def k_frame_bounds(F: OperatorFrame, K: KOperator, t: Tolerance = DEFAULT_TOL) -> tuple[FrameBounds, bool]:
    if K.op.shape != F.shape:
        raise DimensionMismatch(f"K acts on {K.op.shape}, frame on {F.shape}")
    return k_bounds_from_gram(frame_gram(F), K, t)


def remark_bound(F: OperatorFrame, K: KOperator, t: Tolerance = DEFAULT_TOL) -> float:
    """Lower K-frame bound obtained from the ordinary lower bound: ``A / ||K||^2``."""
    c = classify(F, t)
    if not c.is_frame:
        raise NotAFrame("remark bound needs a frame")
    nk = operator_norm(K.op)
    if nk <= t.abs_floor:
        raise ZeroK("K vanishes")
    return c.bounds.lower / nk**2


def gram_quadratic(X, G) -> np.ndarray:
    """``X G X^H`` for one module vector or a batch ``(s, d, N)``."""
    X = np.asarray(X)
    return X @ G @ np.swapaxes(X.conj(), -1, -2)


def batch_norms(X, G) -> np.ndarray:
    """``||X G X^H||`` for a batch of module vectors."""
    Y = gram_quadratic(X, G)
    if Y.ndim == 2:
        return np.asarray(op_norm(Y))
    return np.linalg.norm(Y, 2, axis=(-2, -1))
