"""Truncated Rawnsley coherent states in the Hermite-in-log basis.

The orthonormal family is ``phi_i(a) = prod_k h_{i_k}(log a_k)`` with ``h_m``
the Hermite functions; it is orthonormal for ``weighted_inner_product``.
Coherent vectors, kernels and reproducing checks all live on the span of the
first ``N`` functions per axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, TrivializationVanishes
from .orbit import GroupElement, coadjoint_action, matrix_to_state
from .quantization import Section, act_on_section
from .toda_core import lax_matrix, make_state

TRIVIALIZATION_FLOOR = 1e-12


def hermite_functions(count: int, x) -> np.ndarray:
    """Orthonormal Hermite functions ``h_0 .. h_{count-1}`` at ``x``; shape ``(count, *x.shape)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((count,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x**2)
    if count > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for m in range(1, count - 1):
        out[m + 1] = math.sqrt(2.0 / (m + 1)) * x * out[m] - math.sqrt(m / (m + 1)) * out[m - 1]
    return out


@dataclass(frozen=True)
class BasisSpec:
    n: int
    degree: int
    family: str = "hermite-log"

    def __post_init__(self):
        if self.n < 2:
            raise DimensionMismatch("n must be >= 2")
        if self.degree < 1:
            raise ValueError("truncation degree must be >= 1")
        if self.family != "hermite-log":
            raise ValueError(f"unknown basis family {self.family!r}")

    @property
    def axes(self) -> int:
        return self.n - 1

    @property
    def dimension(self) -> int:
        return self.degree ** self.axes

    def indices(self) -> list[tuple[int, ...]]:
        return list(itertools.product(range(self.degree), repeat=self.axes))


def _check_points(spec: BasisSpec, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != spec.axes:
        raise DimensionMismatch(f"points need {spec.axes} coordinates, got {a.shape[-1]}")
    if np.any(a <= 0):
        raise ValueError("coordinates a_i must be positive")
    return a


def basis_matrix(spec: BasisSpec, a) -> np.ndarray:
    """``phi_i(a)`` for all basis indices; shape ``(*a.shape[:-1], dimension)``."""
    a = _check_points(spec, a)
    per_axis = [hermite_functions(spec.degree, np.log(a[..., k])) for k in range(spec.axes)]
    out = per_axis[0]
    for h in per_axis[1:]:
        # out: (D, ...) ; h: (N, ...) -> (D * N, ...), last axis fastest as in itertools.product
        out = (out[:, None] * h[None, :]).reshape((-1,) + h.shape[1:])
    return np.moveaxis(out, 0, -1)


def basis_function(spec: BasisSpec, index, a) -> np.ndarray:
    index = tuple(int(i) for i in np.atleast_1d(index))
    if len(index) != spec.axes or any(i < 0 or i >= spec.degree for i in index):
        raise IndexOutOfRange(f"index {index} outside truncation degree {spec.degree} on {spec.axes} axes")
    a = _check_points(spec, a)
    value = np.ones(a.shape[:-1])
    for k, m in enumerate(index):
        value = value * hermite_functions(m + 1, np.log(a[..., k]))[m]
    return value


def basis_section(spec: BasisSpec, index) -> Section:
    return Section(spec.n, lambda a: basis_function(spec, index, a), f"phi{tuple(index)}")


def section_from_coefficients(spec: BasisSpec, coeffs) -> Section:
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (spec.dimension,):
        raise DimensionMismatch(f"need {spec.dimension} coefficients, got {coeffs.shape}")
    return Section(spec.n, lambda a: basis_matrix(spec, a) @ coeffs, "span")


@dataclass(frozen=True)
class CoherentVector:
    spec: BasisSpec
    base_point: np.ndarray
    coefficients: np.ndarray

    def as_section(self) -> Section:
        return section_from_coefficients(self.spec, self.coefficients)

    def pair(self, coeffs) -> complex:
        """``<f_x, s>`` for ``s`` given by coefficients in the same basis."""
        return complex(np.vdot(self.coefficients, np.asarray(coeffs)))

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))


def coherent_vector(spec: BasisSpec, x) -> CoherentVector:
    """``f_x = sum_i phi_i(x) phi_i`` on the degree-``N`` span."""
    x = _check_points(spec, np.atleast_1d(np.asarray(x, dtype=float)))
    coeffs = basis_matrix(spec, x)
    coeffs.setflags(write=False)
    return CoherentVector(spec, x, coeffs)


def kernel(spec: BasisSpec, x, y) -> float:
    """``K(x, y) = sum_i phi_i(x) phi_i(y)``."""
    return float(basis_matrix(spec, x) @ basis_matrix(spec, y))


def kernel_matrix(spec: BasisSpec, xs, ys=None) -> np.ndarray:
    bx = basis_matrix(spec, xs)
    by = bx if ys is None else basis_matrix(spec, ys)
    return bx @ by.T


def random_points(n: int, count: int, rng: np.random.Generator, lo: float = 0.2, hi: float = 5.0) -> np.ndarray:
    """Points with each ``a_i`` log-uniform in ``[lo, hi]``."""
    return np.exp(rng.uniform(math.log(lo), math.log(hi), (count, n - 1)))


def _orbit_point(a: np.ndarray):
    # b does not enter the a-action; any trace works
    return make_state(a, np.zeros(a.size + 1))


def move_point(g: GroupElement, a: np.ndarray) -> np.ndarray:
    """``a``-coordinates of ``g . x`` through the matrix coadjoint action."""
    s = _orbit_point(np.asarray(a, dtype=float))
    return matrix_to_state(coadjoint_action(g, lax_matrix(s))).a


def group_coherent_check(g: GroupElement, x, spec: BasisSpec, sections=None,
                         trivializing: Section | None = None, rng: np.random.Generator | None = None,
                         count: int = 5) -> float:
    """Max relative residual of ``s1(gx)/s(gx) = (g^-1 s1)(x)/s(x)`` (constant ``c = 1``).

    The left side moves the point with the dense coadjoint action; the right
    side moves the section with ``act_on_section``.  ``s`` defaults to the
    constant trivializing section.  Test sections default to ``count`` random
    elements of the truncated span.
    """
    x = np.atleast_2d(_check_points(spec, np.asarray(x, dtype=float)))
    if sections is None:
        rng = rng or np.random.default_rng(0)
        sections = [section_from_coefficients(spec, rng.standard_normal(spec.dimension)) for _ in range(count)]
    if trivializing is None:
        trivializing = Section(spec.n, lambda a: np.ones(np.shape(a)[:-1]), "one")
    g_inv = g.inverse()

    worst = 0.0
    for point in x:
        gx = move_point(g, point)
        s_x = trivializing(point)
        s_gx = trivializing(gx)
        if abs(s_x) < TRIVIALIZATION_FLOOR or abs(s_gx) < TRIVIALIZATION_FLOOR:
            raise TrivializationVanishes(f"trivializing section vanishes near {point.tolist()}")
        for s1 in sections:
            lhs = s1(gx) / s_gx
            rhs = act_on_section(g_inv, s1)(point) / s_x
            scale = max(abs(lhs), abs(rhs))
            if scale > 0:
                worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)
