"""Finite-dimensional representations on ``(a_1 ... a_{n-1}) * P_m(a)``.

The group moves ``a`` by the diagonal rescaling ``a_i -> (L_ii/L_{i+1,i+1}) a_i``,
so every monomial is an eigenvector of ``s -> s(g^-1 .)`` and the
representation matrices are diagonal in the monomial basis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, WitnessNotFound
from .orbit import GroupElement, diagonal_element, identity
from .quantization import composite_legendre


@dataclass(frozen=True)
class FinRepSpace:
    """Span of ``(a_1 ... a_{n-1}) a^alpha`` with ``|alpha| <= m`` (or ``== m``)."""

    n: int
    m: int
    homogeneous: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise DimensionMismatch("n must be >= 2")
        if self.m < 0:
            raise ValueError("degree must be >= 0")

    @property
    def exponents(self) -> list[tuple[int, ...]]:
        """Multi-indices ``alpha`` in graded-lexicographic order."""
        degrees = [self.m] if self.homogeneous else range(self.m + 1)
        out = []
        for d in degrees:
            block = [alpha for alpha in itertools.product(range(d + 1), repeat=self.n - 1) if sum(alpha) == d]
            out.extend(sorted(block, reverse=True))
        return out

    @property
    def dimension(self) -> int:
        return len(self.exponents)

    def evaluate(self, a) -> np.ndarray:
        """Basis monomials at points ``a``; shape ``(*a.shape[:-1], dimension)``."""
        a = np.asarray(a, dtype=float)
        powers = np.array(self.exponents, dtype=float) + 1.0
        return np.prod(a[..., None, :] ** powers, axis=-1)

    def labels(self) -> list[str]:
        out = []
        for alpha in self.exponents:
            out.append("*".join(f"a{i + 1}^{k + 1}" for i, k in enumerate(alpha)))
        return out


@dataclass(frozen=True)
class RepMatrix:
    matrix: np.ndarray
    g: GroupElement

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix)


def _scalars(g: GroupElement, space: FinRepSpace) -> np.ndarray:
    if g.n != space.n:
        raise DimensionMismatch(f"group element n={g.n} but space n={space.n}")
    inv_ratio = 1.0 / g.dilation_ratios()  # (g^-1 a)_i = inv_ratio_i a_i
    powers = np.array(space.exponents, dtype=float) + 1.0
    return np.prod(inv_ratio[None, :] ** powers, axis=1)


def rep_matrix(g: GroupElement, space: FinRepSpace) -> RepMatrix:
    """Matrix of ``s -> s(g^-1 .)``: ``diag(prod_i (L_{i+1,i+1}/L_ii)^(1 + alpha_i))``."""
    return RepMatrix(np.diag(_scalars(g, space)), g)


def homomorphism_check(g1: GroupElement, g2: GroupElement, space: FinRepSpace) -> float:
    """Max-entry residual of ``rho(g1 g2) - rho(g1) rho(g2)``, each entry relative to ``max(1, |entry|)``.

    Entries grow like ``ratio^(m+1)`` so an absolute residual would only
    measure floating-point spacing at large magnitudes.
    """
    lhs = rep_matrix(g1 @ g2, space).matrix
    rhs = rep_matrix(g1, space).matrix @ rep_matrix(g2, space).matrix
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))))


def determinant_identity(g: GroupElement, space: FinRepSpace) -> float:
    """``|det rho(g) - prod of diagonal scalars|`` relative to the product."""
    scalars = _scalars(g, space)
    prod = float(np.prod(scalars))
    det = float(np.linalg.det(rep_matrix(g, space).matrix))
    return abs(det - prod) / max(abs(prod), 1e-300)


def gaussian_gram(space: FinRepSpace, box: float = 10.0, panels: int = 40) -> np.ndarray:
    """``<u_j, u_k> = int u_j u_k exp(-sum a_i^2) prod da_i`` over ``(0, box)^(n-1)``.

    Each one-dimensional factor is a composite Gauss-Legendre sum; the
    integrand factorises over axes, so the Gram matrix is a product of 1-D
    moments.
    """
    t, w = composite_legendre(0.0, box, panels)
    powers = np.array(space.exponents, dtype=int) + 1
    top = 2 * int(powers.max())
    moments = np.array([np.sum(w * t**k * np.exp(-t**2)) for k in range(top + 1)])
    gram = np.ones((space.dimension, space.dimension))
    for i in range(space.n - 1):
        gram *= moments[powers[:, i][:, None] + powers[:, i][None, :]]
    return gram


def gaussian_norm_ratio(g: GroupElement, space: FinRepSpace, coeffs) -> float:
    """``||rho(g) s|| / ||s||`` for ``s = sum coeffs_j u_j`` under the Gaussian-weighted product."""
    gram = gaussian_gram(space)
    c = np.asarray(coeffs, dtype=float)
    moved = rep_matrix(g, space).matrix @ c
    return math.sqrt((moved @ gram @ moved) / (c @ gram @ c))


@dataclass
class Witness:
    g: GroupElement
    basis_index: int
    ratio: float


def nonunitarity_witness(space: FinRepSpace, dilations=(2.0, 4.0), threshold: float = 0.1) -> Witness:
    """Find a diagonal ``g`` and basis vector with ``| ||rho(g) s|| / ||s|| - 1 | > threshold``.

    Searches ``g = diag(1, .., d, 1/d, .., 1)`` over ``d`` in ``dilations`` and
    all adjacent positions.
    """
    n = space.n
    for d in dilations:
        for pos in range(n - 1):
            diag = np.ones(n)
            diag[pos] = d
            diag[pos + 1] = 1.0 / d
            g = diagonal_element(diag)
            for j in range(space.dimension):
                e = np.zeros(space.dimension)
                e[j] = 1.0
                ratio = gaussian_norm_ratio(g, space, e)
                if abs(ratio - 1.0) > threshold:
                    return Witness(g, j, ratio)
    raise WitnessNotFound(f"no diagonal element among dilations {dilations} breaks unitarity")


def identity_ratio(space: FinRepSpace) -> float:
    e = np.zeros(space.dimension)
    e[0] = 1.0
    return gaussian_norm_ratio(identity(space.n), space, e)
