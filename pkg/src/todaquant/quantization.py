"""Polarized sections, the weighted Hilbert space, and the quantum Toda Hamiltonian.

Sections of the (trivial) prequantum bundle that are constant along the
``p`` directions are functions of ``a`` alone.  Their inner product uses the
Liouville volume damped by ``exp(-sum p_i^2)``; integrating the ``p``
variables out leaves ``c * int conj(s1) s2 prod da_i / a_i`` with
``c = pi^((n-1)/2)``.  ``weighted_inner_product`` returns the integral
normalised by ``c`` (so Hermite functions of ``log a`` are orthonormal);
``phase_space_inner_product`` keeps the ``p`` integrals explicit.

Spectral problems discretise

    H = -2 d_{q1}^2 - 2 sum_{i>=2} (d_{qi} - d_{q(i-1)})^2 + 4 sum exp(2 q_i)

or its ``z``-chart form on a Dirichlet box with second-order central
differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, DimensionMismatch, GridTooCoarse, NonConvergentQuadrature
from .orbit import FD_REL_STEP, GroupElement, _central_gradient
from .toda_core import TodaPhasePoint

DEFAULT_NODES = 160
DEFAULT_HALF_WIDTH = 12.0
QUADRATURE_RTOL = 1e-8
MIN_GRID = 8
RESIDUAL_TOL = 1e-8

PhaseFunction = Callable[[np.ndarray, np.ndarray], complex]


@dataclass(frozen=True)
class WeightedMeasure:
    """``exp(-sum p_i^2) prod da_i/a_i dp_i`` on the orbit of size ``n``."""

    n: int

    @property
    def c(self) -> float:
        """Value of the Gaussian ``p`` integrals, ``pi^((n-1)/2)``."""
        return math.pi ** ((self.n - 1) / 2)

    def weight(self, p: np.ndarray) -> np.ndarray:
        return np.exp(-np.sum(np.asarray(p) ** 2, axis=-1))


@dataclass(frozen=True)
class Section:
    """A polarized section: a function of ``a`` (shape ``(..., n-1)``) only."""

    n: int
    func: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.shape[-1] != self.n - 1:
            raise DimensionMismatch(f"section on n={self.n} needs {self.n - 1} coordinates, got {a.shape[-1]}")
        return self.func(a)

    def in_log_coordinates(self, x: np.ndarray) -> np.ndarray:
        return self(np.exp(x))


def gaussian_section(n: int, centre=0.0, width=1.0) -> Section:
    """Normalised Gaussian in ``log a``: ``prod_i exp(-(log a_i - m_i)^2 / (2 w_i^2)) / (pi w_i^2)^(1/4)``."""
    m = np.broadcast_to(np.asarray(centre, dtype=float), (n - 1,)).copy()
    w = np.broadcast_to(np.asarray(width, dtype=float), (n - 1,)).copy()
    norm = np.prod((math.pi * w**2) ** -0.25)

    def f(a):
        x = np.log(a)
        return norm * np.exp(-np.sum((x - m) ** 2 / (2 * w**2), axis=-1))

    return Section(n, f, f"gaussian(centre={m.tolist()}, width={w.tolist()})")


@lru_cache(maxsize=64)
def _legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def log_quadrature(dim: int, nodes: int = DEFAULT_NODES, half_width: float = DEFAULT_HALF_WIDTH):
    """Tensor Gauss-Legendre rule on ``[-X, X]^dim`` in ``x = log a``.

    Returns ``(points, weights)`` with points of shape ``(nodes**dim, dim)``.
    """
    t, w = _legendre(nodes)
    x = half_width * t
    w = half_width * w
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.ones(1)
    for _ in range(dim):
        wts = np.multiply.outer(wts, w).ravel()
    return pts, wts


def _reduced_integral(s1: Section, s2: Section, nodes: int, half_width: float) -> complex:
    x, w = log_quadrature(s1.n - 1, nodes, half_width)
    a = np.exp(x)
    return complex(np.sum(w * np.conj(s1(a)) * s2(a)))


def weighted_inner_product(s1: Section, s2: Section, nodes: int = DEFAULT_NODES,
                           half_width: float = DEFAULT_HALF_WIDTH, check: bool = True) -> complex:
    """``int conj(s1) s2 prod da_i/a_i`` over ``(0, inf)^(n-1)``.

    Computed in ``x = log a`` with tensor Gauss-Legendre on ``[-X, X]``.  With
    ``check`` the rule is repeated with 1.5x the nodes and
    ``NonConvergentQuadrature`` is raised if the two differ by more than
    ``1e-8`` relative to ``||s1|| ||s2||``.
    """
    if s1.n != s2.n:
        raise DimensionMismatch(f"sections live on n={s1.n} and n={s2.n}")
    value = _reduced_integral(s1, s2, nodes, half_width)
    if check:
        finer = _reduced_integral(s1, s2, nodes + nodes // 2, half_width)
        scale = math.sqrt(abs(_reduced_integral(s1, s1, nodes, half_width))
                          * abs(_reduced_integral(s2, s2, nodes, half_width)))
        if abs(finer - value) > QUADRATURE_RTOL * max(scale, 1e-300):
            raise NonConvergentQuadrature(
                f"quadrature with {nodes} and {nodes + nodes // 2} nodes differs by {abs(finer - value):.3e}")
    return value


def section_norm(s: Section, **kw) -> float:
    return math.sqrt(weighted_inner_product(s, s, **kw).real)


def act_on_section(g: GroupElement, s: Section) -> Section:
    """``(g s)(a) = s(g^-1 a)`` with ``(g^-1 a)_i = (L_{i+1,i+1} / L_ii) a_i``."""
    if g.n != s.n:
        raise DimensionMismatch(f"group element n={g.n} but section n={s.n}")
    inv_ratio = 1.0 / g.dilation_ratios()

    def moved(a):
        return s.func(np.asarray(a) * inv_ratio)

    return Section(s.n, moved, f"g.{s.label}")


def composite_legendre(lo: float, hi: float, panels: int, per_panel: int = 12):
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    t, w = _legendre(per_panel)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def phase_space_inner_product(s1: Section, s2: Section, g: GroupElement | None = None,
                              nodes: int = DEFAULT_NODES, half_width: float = DEFAULT_HALF_WIDTH,
                              p_box: float = 30.0) -> complex:
    """``int conj(s1) s2 exp(-sum (p_i - m_i a_i)^2) prod da_i/a_i dp_i`` with explicit p quadrature.

    ``m_i = L_{i+1,i} / L_{i+1,i+1}`` for ``g`` (zero when ``g`` is None): the
    damping factor pulled back by the group action.  Each ``p_i`` runs over the
    fixed box ``[-p_box, p_box]`` (composite Gauss-Legendre, unit panels), so
    mass shifted outside the box is lost rather than chased.
    """
    dim = s1.n - 1
    x, w = log_quadrature(dim, nodes, half_width)
    a = np.exp(x)
    f = np.conj(s1(a)) * s2(a)
    shear = np.zeros(dim) if g is None else g.shear_ratios()
    shifts = a * shear
    p, pw = composite_legendre(-p_box, p_box, int(math.ceil(2 * p_box)))
    p_factor = np.ones(len(a))
    for i in range(dim):
        p_factor *= np.exp(-(p[None, :] - shifts[:, i : i + 1]) ** 2) @ pw
    return complex(np.sum(w * f * p_factor))


# -- geometric data on the orbit ---------------------------------------------


def symplectic_potential(s: TodaPhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """Components of ``theta = sum p_i da_i / a_i`` in ``(a, p)``: ``(p / a, 0)``."""
    p = np.cumsum(s.b)[:-1]
    return p / s.a, np.zeros_like(p)


def _potential_components(z: np.ndarray) -> np.ndarray:
    m = z.size // 2
    a, p = z[:m], z[m:]
    return np.concatenate([p / a, np.zeros(m)])


def potential_exterior_derivative(s: TodaPhasePoint) -> np.ndarray:
    """Finite-difference ``d theta`` as an antisymmetric matrix in ``(a, p)``.

    ``M[j, k] = d_j theta_k - d_k theta_j`` so ``d theta(u, v) = u @ M @ v``.
    """
    z = np.concatenate([s.a, np.cumsum(s.b)[:-1]])
    jac = np.empty((z.size, z.size))
    for j in range(z.size):
        h = FD_REL_STEP * max(1.0, abs(z[j]))
        e = np.zeros_like(z)
        e[j] = h
        jac[j] = (_potential_components(z + e) - _potential_components(z - e)) / (2 * h)
    return jac - jac.T


def hamiltonian_function(l: np.ndarray, s: TodaPhasePoint) -> float:
    """``Tr(l A)`` for strictly-lower ``l``: ``sum_i l_{i+1,i} a_i``."""
    l = np.asarray(getattr(l, "l", l))
    return float(np.sum(np.diag(l, -1).real * s.a))


def polarization_field(l: np.ndarray, s: TodaPhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """Hamiltonian field of ``hamiltonian_function(l, .)``: ``sum a_i l_{i+1,i} d/dp_i``."""
    l = np.asarray(getattr(l, "l", l))
    return np.zeros_like(s.a), s.a * np.diag(l, -1).real


def hamiltonian_field(f: PhaseFunction, a: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Field ``X_f`` with ``omega(X_f, .) = -df`` for ``omega = sum da_i/a_i ^ dp_i``.

    Components ``(-a f_p, a f_a)``; partials by central differences.
    """
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    m = a.size
    grad = _central_gradient(lambda z: float(np.real(f(z[:m], z[m:]))), np.concatenate([a, p]))
    return -a * grad[m:], a * grad[:m]


@dataclass(frozen=True)
class PrequantumOperator:
    """``f^ s = grad_{X_f} s + 2 pi i f s`` with ``grad_X s = X(s) + 2 pi i theta(X) s``.

    Acts on functions ``s(a, p)`` of the chart; polarized sections are the
    ones independent of ``p``.
    """

    f: PhaseFunction
    step: float = 1e-5

    def field(self, a, p):
        return hamiltonian_field(self.f, a, p)

    def apply(self, s: PhaseFunction, a, p) -> complex:
        a = np.asarray(a, dtype=float)
        p = np.asarray(p, dtype=float)
        xa, xp = self.field(a, p)
        h = self.step
        deriv = (s(a + h * xa, p + h * xp) - s(a - h * xa, p - h * xp)) / (2 * h)
        theta = float(np.sum(p * xa / a))
        return complex(deriv + 2j * math.pi * theta * s(a, p) + 2j * math.pi * self.f(a, p) * s(a, p))

    def preserves_polarization(self, a, p, tol: float = 1e-6) -> bool:
        """Whether ``[d/dp_i, X_f]`` stays in the span of the ``d/dp`` fields."""
        a = np.asarray(a, dtype=float)
        p = np.asarray(p, dtype=float)
        h = 1e-4
        for i in range(p.size):
            e = np.zeros_like(p)
            e[i] = h
            xa_plus, _ = self.field(a, p + e)
            xa_minus, _ = self.field(a, p - e)
            if np.max(np.abs(xa_plus - xa_minus)) / (2 * h) > tol * max(1.0, float(np.max(np.abs(a)))):
                return False
        return True


def prequantum_operator(f: PhaseFunction) -> PrequantumOperator:
    return PrequantumOperator(f)


@dataclass(frozen=True)
class PhysicistOperators:
    """``p_i = -i d/dq_i`` and ``q_i`` (multiplication) on functions of ``q``."""

    n: int
    step: float = 1e-5

    def momentum(self, i: int):
        h = self.step

        def op(psi):
            def out(q):
                q = np.asarray(q, dtype=float)
                e = np.zeros(q.shape[-1])
                e[i] = h
                return -1j * (psi(q + e) - psi(q - e)) / (2 * h)

            return out

        return op

    def position(self, i: int):
        def op(psi):
            return lambda q: np.asarray(q, dtype=float)[..., i] * psi(q)

        return op


def physicist_operators(n: int) -> PhysicistOperators:
    return PhysicistOperators(n)


# -- spectral problems -----------------------------------------------------------

Chart = Literal["q", "z"]


@dataclass(frozen=True)
class SpectralProblem:
    """Dirichlet box discretisation of the quantum Toda Hamiltonian.

    ``bounds`` and ``grid`` (number of intervals) are per axis of the chart.
    With ``chart="z"`` and ``region="q-box"`` the bounds are read in the
    ``q`` chart and the ``z`` operator is restricted to their preimage, so the
    two charts discretise the same domain on the same lattice.
    """

    n: int
    chart: Chart = "q"
    bounds: tuple[tuple[float, float], ...] = ((-12.0, 4.0),)
    grid: tuple[int, ...] = (2000,)
    boundary: str = "dirichlet"
    region: str = "box"

    def __post_init__(self):
        dim = self.n - 1
        if self.n < 2:
            raise DimensionMismatch("n must be >= 2")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        grid = tuple(int(g) for g in self.grid)
        if len(bounds) == 1 and dim > 1:
            bounds = bounds * dim
        if len(grid) == 1 and dim > 1:
            grid = grid * dim
        if len(bounds) != dim or len(grid) != dim:
            raise DimensionMismatch(f"need {dim} bounds and grid counts")
        for lo, hi in bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bad bounds {(lo, hi)}")
        if min(grid) < MIN_GRID:
            raise GridTooCoarse(f"grid counts {grid} below {MIN_GRID}")
        if self.chart not in ("q", "z"):
            raise ValueError(f"unknown chart {self.chart!r}")
        if self.region not in ("box", "q-box"):
            raise ValueError(f"unknown region {self.region!r}")
        if self.region == "q-box" and self.chart != "z":
            raise ValueError("region 'q-box' only applies to the z chart")
        if self.boundary != "dirichlet":
            raise ValueError("only Dirichlet walls are supported")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "grid", grid)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / g for (lo, hi), g in zip(self.bounds, self.grid))

    def refined(self, factor: int = 2) -> "SpectralProblem":
        return SpectralProblem(self.n, self.chart, self.bounds, tuple(g * factor for g in self.grid),
                               self.boundary, self.region)

    def to_json(self) -> dict:
        return {"n": self.n, "chart": self.chart, "box": [list(b) for b in self.bounds],
                "grid": list(self.grid), "boundary": self.boundary, "region": self.region}


def _second_difference(m: int, h: float) -> sp.csr_matrix:
    return sp.diags([np.ones(m - 1), -2.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="csr") / h**2


def _first_difference(m: int, h: float) -> sp.csr_matrix:
    return sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], format="csr") / (2.0 * h)


def _embed(ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return sp.csr_matrix(out)


def _axis_operator(sizes, axis, op) -> sp.csr_matrix:
    return _embed([op if k == axis else sp.identity(m, format="csr") for k, m in enumerate(sizes)])


def _toda_potential_q(q: np.ndarray) -> np.ndarray:
    return 4.0 * np.sum(np.exp(2.0 * q), axis=-1)


def z_to_q(z: np.ndarray) -> np.ndarray:
    """``q_i = z_i - z_{i+1}`` for ``i < n-1`` and ``q_{n-1} = z_{n-1}``."""
    z = np.asarray(z, dtype=float)
    q = z.copy()
    q[..., :-1] -= z[..., 1:]
    return q


def q_to_z(q: np.ndarray) -> np.ndarray:
    """Inverse of ``z_to_q``: ``z_i = q_i + ... + q_{n-1}``."""
    q = np.asarray(q, dtype=float)
    return np.flip(np.cumsum(np.flip(q, -1), -1), -1)


@dataclass
class Discretization:
    problem: SpectralProblem
    matrix: sp.csr_matrix
    points: np.ndarray  # chart coordinates of the unknowns, shape (N, n-1)
    q_points: np.ndarray  # same nodes in the q chart
    meta: dict = field(default_factory=dict)


def _tensor_nodes(bounds, grid):
    axes = [lo + (hi - lo) / g * np.arange(1, g) for (lo, hi), g in zip(bounds, grid)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _q_chart(problem: SpectralProblem) -> Discretization:
    sizes = [g - 1 for g in problem.grid]
    hs = problem.spacing
    d2 = [_axis_operator(sizes, i, _second_difference(m, h)) for i, (m, h) in enumerate(zip(sizes, hs))]
    d1 = [_axis_operator(sizes, i, _first_difference(m, h)) for i, (m, h) in enumerate(zip(sizes, hs))]
    kinetic = -2.0 * d2[0]
    for i in range(1, len(sizes)):
        kinetic = kinetic - 2.0 * (d2[i] - 2.0 * (d1[i] @ d1[i - 1]) + d2[i - 1])
    pts = _tensor_nodes(problem.bounds, problem.grid)
    H = kinetic + sp.diags(_toda_potential_q(pts))
    return Discretization(problem, sp.csr_matrix(H), pts, pts)


def _z_laplacian(sizes, hs) -> sp.csr_matrix:
    lap = None
    for i, (m, h) in enumerate(zip(sizes, hs)):
        term = _axis_operator(sizes, i, _second_difference(m, h))
        lap = term if lap is None else lap + term
    return lap


def _z_chart(problem: SpectralProblem) -> Discretization:
    if problem.region == "box":
        sizes = [g - 1 for g in problem.grid]
        pts = _tensor_nodes(problem.bounds, problem.grid)
        q = z_to_q(pts)
        H = -2.0 * _z_laplacian(sizes, problem.spacing) + sp.diags(_toda_potential_q(q))
        return Discretization(problem, sp.csr_matrix(H), pts, q)

    hs = problem.spacing
    h = hs[0]
    if not np.allclose(hs, h, rtol=1e-12, atol=0):
        raise ValueError("region 'q-box' needs equal spacing on every axis")
    lo = np.array([b[0] for b in problem.bounds])
    hi = np.array([b[1] for b in problem.bounds])
    z_lo = q_to_z(lo)
    z_grid = [int(sum(problem.grid[i:])) for i in range(len(problem.grid))]
    z_bounds = [(z_lo[i], z_lo[i] + h * z_grid[i]) for i in range(len(z_grid))]
    pts = _tensor_nodes(z_bounds, z_grid)
    q = z_to_q(pts)
    inside = np.all((q > lo + 0.5 * h) & (q < hi - 0.5 * h), axis=-1)
    sizes = [g - 1 for g in z_grid]
    H = -2.0 * _z_laplacian(sizes, [h] * len(sizes)) + sp.diags(_toda_potential_q(q))
    idx = np.flatnonzero(inside)
    H = sp.csr_matrix(H)[idx][:, idx]
    return Discretization(problem, sp.csr_matrix(H), pts[idx], q[idx], {"z_bounds": z_bounds, "z_grid": z_grid})


def discretize(problem: SpectralProblem) -> Discretization:
    if problem.chart == "q":
        return _q_chart(problem)
    return _z_chart(problem)


def build_hamiltonian(problem: SpectralProblem) -> sp.csr_matrix:
    """Sparse symmetric finite-difference matrix of the quantum Toda Hamiltonian."""
    return discretize(problem).matrix


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)


def _gershgorin_lower(M) -> float:
    M = sp.csr_matrix(M)
    diag = M.diagonal()
    off = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - off))


def eigen_solve(M, k: int, method: str = "auto", dense_limit: int = 256,
                residual_tol: float = RESIDUAL_TOL, sigma: float | None = None) -> EigenResult:
    """``k`` smallest eigenpairs of a real symmetric matrix, ascending.

    Sparse path: ARPACK shift-invert about ``sigma`` (default: just below a
    Gershgorin lower bound) with a fixed start vector, so repeated calls agree.  Raises
    ``ConvergenceFailure`` if ARPACK stalls or any residual
    ``||Mv - lambda v|| / ||v||`` exceeds ``residual_tol``.
    """
    dim = M.shape[0]
    if M.shape != (dim, dim):
        raise DimensionMismatch("matrix must be square")
    if not 1 <= k <= dim:
        raise ValueError(f"k={k} outside 1..{dim}")
    if method == "auto":
        method = "dense" if (k >= dim - 1 or dim <= dense_limit) else "sparse"

    diagnostics: dict = {"dim": dim, "k": k}
    if method == "dense":
        dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        Ms = sp.csc_matrix(M, dtype=float)
        if sigma is None:
            lower = _gershgorin_lower(Ms)
            sigma = lower - 1e-3 * max(1.0, abs(lower))
        v0 = np.full(dim, 1.0 / math.sqrt(dim))
        diagnostics["sigma"] = sigma
        try:
            vals, vecs = spla.eigsh(Ms, k=k, sigma=sigma, which="LM", v0=v0, tol=0.0,
                                    maxiter=max(1000, 20 * dim))
        except spla.ArpackNoConvergence as exc:
            diagnostics["converged"] = len(exc.eigenvalues)
            raise ConvergenceFailure(f"ARPACK converged {len(exc.eigenvalues)} of {k} eigenpairs",
                                     diagnostics) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    # fix the sign of each eigenvector so output is reproducible
    for j in range(vecs.shape[1]):
        pivot = np.argmax(np.abs(vecs[:, j]))
        if vecs[pivot, j] < 0:
            vecs[:, j] = -vecs[:, j]
    residuals = np.array([
        np.linalg.norm(M @ vecs[:, j] - vals[j] * vecs[:, j]) / np.linalg.norm(vecs[:, j])
        for j in range(vecs.shape[1])
    ])
    diagnostics["max_residual"] = float(np.max(residuals))
    if np.max(residuals) > residual_tol:
        raise ConvergenceFailure(f"residual {np.max(residuals):.3e} above {residual_tol:.1e}", diagnostics)
    return EigenResult(vals, vecs, residuals, method, diagnostics)


def lowest_eigenvalues(problem: SpectralProblem, k: int = 1) -> EigenResult:
    # the discrete operator is positive definite (kinetic part is PSD, potential > 0)
    return eigen_solve(build_hamiltonian(problem), k, sigma=0.0)


def richardson(values: Sequence[float], ratio: float = 2.0) -> tuple[float, float]:
    """Observed order and extrapolated limit from three values on grids refined by ``ratio``."""
    e1, e2, e3 = values[-3:]
    order = math.log(abs((e1 - e2) / (e2 - e3))) / math.log(ratio)
    limit = e3 + (e3 - e2) / (ratio**order - 1.0)
    return order, limit
