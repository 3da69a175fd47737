"""The free Hilbert module A^n over A = M_d(C), in coordinates.

A vector is a ``d x (n*d)`` matrix ``X`` with ``<x, y> = X Y^H``; the algebra
acts on the left, adjointable operators act on the right by an
``(n*d) x (n*d)`` matrix.  Families indexed by a finite measure space are
stacked along a leading axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cstar import DEFAULT_TOL, Tolerance, as_element, op_norm
from .errors import DimensionMismatch


def _shape_of(entries, d):
    if entries.ndim != 2 or entries.shape[0] != d or entries.shape[1] % d:
        raise DimensionMismatch(f"vector entries of shape {entries.shape} do not fit d={d}")
    return entries.shape[1] // d


@dataclass(frozen=True, eq=False)
class ModuleVector:
    entries: np.ndarray
    algebra_dim: int
    module_rank: int

    @classmethod
    def from_entries(cls, entries, d: int | None = None) -> ModuleVector:
        entries = np.atleast_2d(np.asarray(entries, dtype=complex))
        d = entries.shape[0] if d is None else d
        return cls(entries, d, _shape_of(entries, d))

    @classmethod
    def zeros(cls, d: int, n: int) -> ModuleVector:
        return cls(np.zeros((d, n * d), complex), d, n)

    @property
    def shape(self):
        return self.algebra_dim, self.module_rank

    def __add__(self, other):
        _same(self, other)
        return ModuleVector(self.entries + other.entries, *self.shape)

    def __sub__(self, other):
        _same(self, other)
        return ModuleVector(self.entries - other.entries, *self.shape)

    def __mul__(self, scalar):
        return ModuleVector(scalar * self.entries, *self.shape)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ModuleOperator:
    matrix: np.ndarray
    algebra_dim: int
    module_rank: int

    @classmethod
    def from_matrix(cls, matrix, d: int = 1) -> ModuleOperator:
        matrix = as_element(matrix)
        if matrix.shape[0] % d:
            raise DimensionMismatch(f"operator side {matrix.shape[0]} is not a multiple of d={d}")
        return cls(matrix, d, matrix.shape[0] // d)

    @classmethod
    def identity(cls, d: int, n: int) -> ModuleOperator:
        return cls(np.eye(n * d, dtype=complex), d, n)

    @property
    def shape(self):
        return self.algebra_dim, self.module_rank


def _same(x, y):
    if x.shape != y.shape:
        raise DimensionMismatch(f"(d, n) = {x.shape} vs {y.shape}")


def inner_product(x: ModuleVector, y: ModuleVector) -> np.ndarray:
    _same(x, y)
    return x.entries @ y.entries.conj().T


def module_action(a, x: ModuleVector) -> ModuleVector:
    a = as_element(a)
    if a.shape[0] != x.algebra_dim:
        raise DimensionMismatch(f"algebra element of side {a.shape[0]} acting on d={x.algebra_dim}")
    return ModuleVector(a @ x.entries, *x.shape)


def vec_norm(x: ModuleVector) -> float:
    return op_norm(x.entries)


def apply(T: ModuleOperator, x: ModuleVector) -> ModuleVector:
    _same(T, x)
    return ModuleVector(x.entries @ T.matrix, *x.shape)


def adjoint_op(T: ModuleOperator) -> ModuleOperator:
    return ModuleOperator(T.matrix.conj().T, *T.shape)


def operator_norm(T: ModuleOperator) -> float:
    return op_norm(T.matrix)


def lower_bound_constant(T: ModuleOperator) -> float:
    """Smallest singular value: ``||T* x|| >= sigma_min ||x||`` for every x."""
    return float(np.linalg.svd(T.matrix, compute_uv=False)[-1])


def is_surjective(T: ModuleOperator, t: Tolerance = DEFAULT_TOL) -> bool:
    return lower_bound_constant(T) > t.rel * operator_norm(T) + t.abs_floor


@dataclass(frozen=True, eq=False)
class L2Family:
    """One module vector per measure point, stacked as ``(m, d, n*d)``."""

    stack: np.ndarray
    algebra_dim: int
    module_rank: int

    @classmethod
    def from_members(cls, members) -> L2Family:
        members = list(members)
        if not members:
            raise DimensionMismatch("a family needs at least one member")
        for x in members[1:]:
            _same(members[0], x)
        return cls(np.stack([x.entries for x in members]), *members[0].shape)

    @classmethod
    def zeros(cls, m: int, d: int, n: int) -> L2Family:
        return cls(np.zeros((m, d, n * d), complex), d, n)

    @property
    def point_count(self) -> int:
        return self.stack.shape[0]

    @property
    def shape(self):
        return self.algebra_dim, self.module_rank

    @property
    def members(self) -> list[ModuleVector]:
        return [ModuleVector(e, *self.shape) for e in self.stack]


def l2_inner(f: L2Family, g: L2Family, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    _same(f, g)
    if not (f.point_count == g.point_count == weights.shape[0]):
        raise DimensionMismatch("families and weights disagree on the number of points")
    return np.einsum("j,jab,jcb->ac", weights, f.stack, g.stack.conj())


def weighted_sum(f: L2Family, weights) -> ModuleVector:
    """The finite integral sum_j w_j f_j."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != f.point_count:
        raise DimensionMismatch("weights length differs from point count")
    return ModuleVector(np.tensordot(weights, f.stack, axes=1), *f.shape)


def random_vector(rng: np.random.Generator, d: int, n: int, scale: float = 1.0) -> ModuleVector:
    e = rng.standard_normal((d, n * d)) + 1j * rng.standard_normal((d, n * d))
    return ModuleVector(scale * e, d, n)
