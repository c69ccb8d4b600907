"""Coadjoint orbit of the lower-triangular group through the Toda matrices.

Group elements are lower-triangular matrices with positive diagonal and unit
determinant; they act on upper-triangular matrices by ``u -> [g u g^-1]_+``
where ``[.]_+`` keeps the upper triangle.  Tangent vectors in coordinates
are pairs ``(da, dp)`` of length ``n - 1`` each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import orth

from .errors import DimensionMismatch, InvalidGroupElement, SingularGroupElement
from .toda_core import TodaPhasePoint, diagonal_from_momenta, lax_matrix, make_state, random_state

DET_TOL = 1e-12
RANK_RTOL = 1e-10
FD_REL_STEP = 1e-6

ScalarField = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class GroupElement:
    L: np.ndarray

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] < 2:
            raise DimensionMismatch(f"group element must be square with n >= 2, got {L.shape}")
        if np.any(np.triu(L, 1) != 0.0):
            raise InvalidGroupElement("group element must be lower triangular")
        d = np.diag(L)
        if np.any(d <= 0):
            raise InvalidGroupElement(f"diagonal must be positive, got {d.tolist()}")
        if abs(np.prod(d) - 1.0) > DET_TOL:
            raise InvalidGroupElement(f"determinant {np.prod(d)!r} is not 1")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.L)

    def inverse(self) -> "GroupElement":
        return GroupElement(_normalize_det(np.tril(np.linalg.inv(self.L))))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(_normalize_det(np.tril(self.L @ other.L)))

    def dilation_ratios(self) -> np.ndarray:
        """``L_ii / L_{i+1,i+1}``: the factor multiplying ``a_i`` under the action."""
        d = self.diagonal
        return d[:-1] / d[1:]

    def shear_ratios(self) -> np.ndarray:
        """``L_{i+1,i} / L_{i+1,i+1}``: the shift coefficient of ``p_i``."""
        return np.diag(self.L, -1) / self.diagonal[1:]


def _normalize_det(L: np.ndarray) -> np.ndarray:
    # products and inverses drift off det = 1 by rounding; renormalize the diagonal only
    d = np.diag(L)
    scale = np.prod(d) ** (1.0 / L.shape[0])
    out = L.copy()
    np.fill_diagonal(out, d / scale)
    return out


def make_group_element(L) -> GroupElement:
    """Build a group element, rescaling a positive diagonal to unit determinant."""
    L = np.tril(np.array(L, dtype=float))
    d = np.diag(L)
    if np.any(d <= 0):
        raise InvalidGroupElement(f"diagonal must be positive, got {d.tolist()}")
    return GroupElement(_normalize_det(L))


def identity(n: int) -> GroupElement:
    return GroupElement(np.eye(n))


def diagonal_element(d) -> GroupElement:
    return make_group_element(np.diag(np.asarray(d, dtype=float)))


def random_group_element(n: int, rng: np.random.Generator, bound: float = 2.0,
                         min_diagonal: float = 0.1) -> GroupElement:
    """Strictly-lower entries uniform in ``[-bound, bound]``, diagonal uniform in
    ``[min_diagonal, bound]`` and then rescaled to determinant one."""
    L = np.tril(rng.uniform(-bound, bound, (n, n)), -1)
    np.fill_diagonal(L, rng.uniform(min_diagonal, bound, n))
    return make_group_element(L)


def upper_projection(m: np.ndarray) -> np.ndarray:
    return np.triu(m)


def coadjoint_action(g: GroupElement, u: np.ndarray) -> np.ndarray:
    """``[g u g^-1]_+``."""
    u = np.asarray(u, dtype=float)
    if u.shape != g.L.shape:
        raise DimensionMismatch(f"matrix {u.shape} does not match group element {g.L.shape}")
    det = np.prod(g.diagonal)
    if not np.isfinite(det) or det == 0.0:
        raise SingularGroupElement("group element is singular")
    # solve instead of forming the inverse: (g u) g^-1 = solve(g^T, (g u)^T)^T
    gu = g.L @ u
    return upper_projection(np.linalg.solve(g.L.T, gu.T).T)


def matrix_to_state(m: np.ndarray, trace_c: float | None = None) -> TodaPhasePoint:
    """Read ``(a, b)`` off an upper-bidiagonal matrix."""
    return make_state(np.diag(m, 1), np.diag(m), trace_c)


def action_on_coordinates(g: GroupElement, s: TodaPhasePoint) -> TodaPhasePoint:
    """Closed-form action on Flaschka variables.

    ``a_i -> (L_ii / L_{i+1,i+1}) a_i`` and
    ``b_i -> b_i + (L_{i,i-1} / L_ii) a_{i-1} - (L_{i+1,i} / L_{i+1,i+1}) a_i``,
    terms with undefined indices dropped.
    """
    if g.n != s.n:
        raise DimensionMismatch(f"group element n={g.n} but state n={s.n}")
    shift = g.shear_ratios() * s.a  # (L_{i+1,i}/L_{i+1,i+1}) a_i, i = 1..n-1
    b = s.b.copy()
    b[:-1] -= shift
    b[1:] += shift
    return make_state(g.dilation_ratios() * s.a, b, s.trace_c)


def action_on_momenta(g: GroupElement, a: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Same action in ``(a, p)``: ``p_i -> p_i - (L_{i+1,i}/L_{i+1,i+1}) a_i``."""
    return g.dilation_ratios() * a, p - g.shear_ratios() * a


def action_jacobian(g: GroupElement, s: TodaPhasePoint) -> np.ndarray:
    """Exact Jacobian of the action in ``(a, p)`` coordinates, block order ``[a, p]``."""
    m = s.n - 1
    jac = np.zeros((2 * m, 2 * m))
    jac[:m, :m] = np.diag(g.dilation_ratios())
    jac[m:, :m] = -np.diag(g.shear_ratios())
    jac[m:, m:] = np.eye(m)
    return jac


# -- Lie algebra -------------------------------------------------------------


@dataclass(frozen=True)
class LieAlgebraElement:
    l: np.ndarray

    def __post_init__(self):
        l = np.array(self.l, dtype=complex if np.iscomplexobj(self.l) else float)
        if l.ndim != 2 or l.shape[0] != l.shape[1]:
            raise DimensionMismatch("Lie algebra element must be square")
        if np.any(np.triu(l, 1) != 0):
            raise ValueError("Lie algebra element must be lower triangular")
        if abs(np.trace(l)) > DET_TOL * max(1.0, float(np.max(np.abs(l)))):
            raise ValueError("Lie algebra element must be traceless")
        l.setflags(write=False)
        object.__setattr__(self, "l", l)

    @property
    def is_strictly_lower(self) -> bool:
        return not np.any(np.diag(self.l) != 0)


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def _unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n))
    e[i, j] = 1.0
    return e


def lie_algebra_basis(n: int) -> list[np.ndarray]:
    """Basis of traceless lower-triangular matrices: ``E_ij`` (i > j) and ``E_ii - E_nn``."""
    basis = [_unit(n, i, j) for i in range(n) for j in range(i)]
    basis += [_unit(n, i, i) - _unit(n, n - 1, n - 1) for i in range(n - 1)]
    return basis


def strictly_lower_basis(n: int) -> list[np.ndarray]:
    return [_unit(n, i, j) for i in range(n) for j in range(i)]


def _as_matrix(s_or_matrix) -> np.ndarray:
    if isinstance(s_or_matrix, TodaPhasePoint):
        return lax_matrix(s_or_matrix)
    return np.asarray(s_or_matrix, dtype=float)


def orbit_tangent_rank(s, rtol: float = RANK_RTOL) -> int:
    """Numerical rank of ``{[A, l]_+ : l in the traceless lower-triangular algebra}``.

    Accepts a state or a raw upper-triangular matrix (to probe degenerate points).
    """
    A = _as_matrix(s)
    n = A.shape[0]
    iu = np.triu_indices(n)
    rows = np.array([upper_projection(commutator(A, l))[iu] for l in lie_algebra_basis(n)])
    sv = np.linalg.svd(rows, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def tangent_from_algebra(s: TodaPhasePoint, l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates ``(da, dp)`` of the orbit tangent vector ``[A, l]_+``."""
    dA = upper_projection(commutator(lax_matrix(s), np.asarray(l)))
    db = np.diag(dA)
    return np.diag(dA, 1).copy(), np.cumsum(db)[:-1]


def kk_form_matrix(s: TodaPhasePoint, l1: np.ndarray, l2: np.ndarray) -> float:
    """Kostant-Kirillov form on ``[A, l1]_+, [A, l2]_+``: ``Tr(A [l1, l2])``."""
    return float(np.trace(lax_matrix(s) @ commutator(np.asarray(l1), np.asarray(l2))).real)


def kk_form_coords(s: TodaPhasePoint, d1, d2) -> float:
    """``sum_i (1/a_i) (d1a_i d2p_i - d2a_i d1p_i)``."""
    da1, dp1 = (np.asarray(v, dtype=float) for v in d1)
    da2, dp2 = (np.asarray(v, dtype=float) for v in d2)
    return float(np.sum((da1 * dp2 - da2 * dp1) / s.a))


def omega_matrix(s: TodaPhasePoint) -> np.ndarray:
    """Matrix of the symplectic form in ``(a, p)`` coordinates, block order ``[a, p]``."""
    m = s.n - 1
    om = np.zeros((2 * m, 2 * m))
    om[:m, m:] = np.diag(1.0 / s.a)
    om[m:, :m] = -np.diag(1.0 / s.a)
    return om


# -- Poisson brackets ----------------------------------------------------------


def _central_gradient(f: Callable[[np.ndarray], float], z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    grad = np.empty_like(z)
    for j in range(z.size):
        h = FD_REL_STEP * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        grad[j] = (f(zp) - f(zm)) / (2.0 * h)
    return grad


def flaschka_partials(f: ScalarField, s: TodaPhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference partials ``(f_a, f_b)`` treating all ``b_i`` as independent."""
    m = s.n - 1
    grad = _central_gradient(lambda z: f(z[:m], z[m:]), np.concatenate([s.a, s.b]))
    return grad[:m], grad[m:]


def adler_bracket_from_partials(a, fa, fb, ha, hb) -> float:
    """``sum (a_{i-1} h_{a_{i-1}} - a_i h_{a_i}) f_{b_i} + sum a_i (h_{b_i} - h_{b_{i+1}}) f_{a_i}``."""
    n = len(fb)
    ah = np.zeros(n + 1)  # ah[i] = a_i h_{a_i} for i = 1..n-1, zero at i = 0 and n
    ah[1:n] = a * ha
    first = np.sum((ah[:-1] - ah[1:]) * fb)
    second = np.sum(a * (hb[:-1] - hb[1:]) * fa)
    return float(first + second)


def poisson_bracket(f: ScalarField, h: ScalarField, s: TodaPhasePoint) -> float:
    """Adler's bracket ``{f, h}`` on functions of ``(a, b)`` at ``s``."""
    fa, fb = flaschka_partials(f, s)
    ha, hb = flaschka_partials(h, s)
    return adler_bracket_from_partials(s.a, fa, fb, ha, hb)


def _pullback_to_ap(f: ScalarField, s: TodaPhasePoint):
    m = s.n - 1

    def F(z):
        return f(z[:m], diagonal_from_momenta(z[m:], s.trace_c))

    return F


def _omega_bracket_unsigned(f: ScalarField, h: ScalarField, s: TodaPhasePoint) -> float:
    z = np.concatenate([s.a, np.cumsum(s.b)[:-1]])
    gf = _central_gradient(_pullback_to_ap(f, s), z)
    gh = _central_gradient(_pullback_to_ap(h, s), z)
    return float(gf @ np.linalg.inv(omega_matrix(s)) @ gh)


@lru_cache(maxsize=None)
def bracket_sign() -> float:
    """Global sign making the form-induced bracket satisfy ``{q_1, p_1} = +1``."""
    s = make_state([1.3], [0.2, -0.7])
    q1 = lambda a, b: float(np.log(a[0]))  # noqa: E731
    p1 = lambda a, b: float(b[0])  # noqa: E731
    return float(np.sign(_omega_bracket_unsigned(q1, p1, s)))


def omega_bracket(f: ScalarField, h: ScalarField, s: TodaPhasePoint) -> float:
    """Bracket induced by the Kostant-Kirillov form, sign-calibrated once."""
    return bracket_sign() * _omega_bracket_unsigned(f, h, s)


# -- polarization --------------------------------------------------------------


def _span_residual(basis: np.ndarray, vectors: np.ndarray) -> float:
    """Max relative distance of ``vectors`` (rows) from the row span of ``basis``."""
    if len(vectors) == 0:
        return 0.0
    q = orth(basis.T)
    proj = vectors @ q.conj() @ q.T
    norms = np.maximum(np.linalg.norm(vectors, axis=1), 1.0)
    return float(np.max(np.linalg.norm(vectors - proj, axis=1) / norms))


def _bracket_closure(mats: list[np.ndarray]) -> float:
    flat = np.array([m.ravel() for m in mats])
    brackets = [commutator(x, y).ravel() for i, x in enumerate(mats) for y in mats[i + 1:]]
    return _span_residual(flat, np.array(brackets))


@dataclass
class PolarizationReport:
    n: int
    closed_under_bracket: bool
    codimension: int
    codimension_ok: bool
    isotropic: bool
    max_pairing: float
    conjugate_sum_closed: bool
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.closed_under_bracket and self.codimension_ok and self.isotropic and self.conjugate_sum_closed

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "closure": self.closed_under_bracket,
            "codimension": self.codimension,
            "codimension_ok": self.codimension_ok,
            "isotropic": self.isotropic,
            "max_pairing": self.max_pairing,
            "conjugate_sum_closed": self.conjugate_sum_closed,
            "pass": self.passed,
        }


def verify_polarization(n: int, basis: list[np.ndarray] | None = None, samples: int = 5,
                        seed: int = 0, tol: float = 1e-12) -> PolarizationReport:
    """Check the four polarization conditions for a subalgebra of the complexified algebra.

    Default subspace is the strictly-lower matrices.  Conditions: closure under
    the bracket; complex codimension ``n - 1`` in the traceless lower-triangular
    algebra; ``Tr(A [h1, h2]) = 0`` at sampled Toda points ``A``; and closure of
    ``h + conj(h)``.
    """
    if n < 2:
        raise DimensionMismatch("n must be >= 2")
    if basis is None:
        basis = strictly_lower_basis(n)
    mats = [np.asarray(b, dtype=complex) for b in basis]
    flat = np.array([m.ravel() for m in mats])

    closure_res = _bracket_closure(mats)

    g_flat = np.array([m.ravel() for m in lie_algebra_basis(n)], dtype=complex)
    dim_g = np.linalg.matrix_rank(g_flat)
    dim_h = np.linalg.matrix_rank(flat)
    contained = np.linalg.matrix_rank(np.vstack([g_flat, flat])) == dim_g
    codim = int(dim_g - dim_h)

    rng = np.random.default_rng(seed)
    max_pair = 0.0
    for _ in range(samples):
        A = lax_matrix(random_state(n, rng))
        for i, x in enumerate(mats):
            for y in mats[i + 1:]:
                max_pair = max(max_pair, abs(np.trace(A @ commutator(x, y))))

    sum_res = _bracket_closure(mats + [m.conj() for m in mats])

    return PolarizationReport(
        n=n,
        closed_under_bracket=bool(closure_res < tol),
        codimension=codim,
        codimension_ok=bool(contained and codim == n - 1),
        isotropic=bool(max_pair < tol),
        max_pairing=float(max_pair),
        conjugate_sum_closed=bool(sum_res < tol),
        details={"closure_residual": closure_res, "conjugate_residual": sum_res,
                 "contained_in_algebra": bool(contained), "dim_h": int(dim_h), "dim_g": int(dim_g)},
    )
