"""Phase space of the open Toda chain: Flaschka variables, canonical chart, Lax matrices.

A point of the orbit is stored in Flaschka variables ``(a, b)`` with
``a_i > 0`` (``n - 1`` entries) and ``b`` of length ``n`` whose sum is the
conserved trace ``trace_c``.  The Darboux chart is

    q_i = log a_i,    p_i = b_1 + ... + b_i,    i = 1 .. n-1.

Everything here is the open (non-periodic) chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadOrder, DimensionMismatch, HamiltonianOverflow, NonPositiveOffDiagonal, TraceMismatch

TRACE_TOL = 1e-12

# exp(2q) overflows float64 beyond this
_MAX_EXPONENT = 354.0


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TodaPhasePoint:
    """Orbit point ``(a, b)`` with fixed trace ``trace_c``."""

    a: np.ndarray
    b: np.ndarray
    trace_c: float

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def to_json(self) -> dict:
        return {"n": self.n, "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "TodaPhasePoint":
        state = make_state(data["a"], data["b"])
        if "n" in data and int(data["n"]) != state.n:
            raise DimensionMismatch(f"n={data['n']} but b has {state.n} entries")
        return state


@dataclass(frozen=True)
class CanonicalPoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _as_vector(self.q, "q"))
        object.__setattr__(self, "p", _as_vector(self.p, "p"))
        if self.q.shape != self.p.shape:
            raise DimensionMismatch(f"q has {self.q.size} entries, p has {self.p.size}")
        if self.q.size < 1:
            raise DimensionMismatch("canonical point needs n - 1 >= 1 coordinates")

    @property
    def n(self) -> int:
        return self.q.shape[0] + 1

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, z) -> "CanonicalPoint":
        z = np.asarray(z, dtype=float)
        m = z.shape[0] // 2
        return cls(z[:m], z[m:])


@dataclass(frozen=True)
class PhysicalPoint:
    """Particle positions ``x`` and momenta ``y`` of the chain."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_vector(self.x, "x"))
        object.__setattr__(self, "y", _as_vector(self.y, "y"))
        if self.x.shape != self.y.shape:
            raise DimensionMismatch("x and y must have the same length")
        if self.x.size < 2:
            raise DimensionMismatch("need at least two particles")

    @property
    def n(self) -> int:
        return self.x.shape[0]


def make_state(a, b, trace_c: float | None = None) -> TodaPhasePoint:
    """Validate Flaschka variables and fix the trace.

    ``trace_c`` defaults to ``sum(b)``; an explicit value must agree with it
    to ``TRACE_TOL`` and is then stored verbatim, so a trace fixed upstream
    survives rounding in ``b``.
    """
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    if b.size < 2 or a.size != b.size - 1:
        raise DimensionMismatch(f"need len(b) = len(a) + 1 >= 2, got len(a)={a.size}, len(b)={b.size}")
    if np.any(a <= 0):
        raise NonPositiveOffDiagonal(f"off-diagonal entries must be positive, got {a.tolist()}")
    total = float(np.sum(b))
    if trace_c is None:
        trace_c = total
    elif abs(total - trace_c) > TRACE_TOL * max(1.0, abs(trace_c), float(np.max(np.abs(b)))):
        raise TraceMismatch(f"sum(b) = {total!r} differs from trace {trace_c!r}")
    return TodaPhasePoint(a=a, b=b, trace_c=float(trace_c))


def physical_to_orbit(pt: PhysicalPoint) -> TodaPhasePoint:
    """Flaschka map ``a_i = exp((x_i - x_{i+1})/2) / 2``, ``b_i = y_i / 2``."""
    a = 0.5 * np.exp(0.5 * (pt.x[:-1] - pt.x[1:]))
    return make_state(a, 0.5 * pt.y)


def orbit_to_physical(s: TodaPhasePoint) -> PhysicalPoint:
    """Inverse Flaschka map in the centre-of-mass gauge ``sum(x) = 0``."""
    gaps = 2.0 * np.log(2.0 * s.a)  # x_i - x_{i+1}
    x = np.concatenate([[0.0], -np.cumsum(gaps)])
    x -= x.mean()
    return PhysicalPoint(x, 2.0 * s.b)


def to_canonical(s: TodaPhasePoint) -> CanonicalPoint:
    return CanonicalPoint(np.log(s.a), np.cumsum(s.b)[:-1])


def diagonal_from_momenta(p: np.ndarray, trace_c: float) -> np.ndarray:
    """Recover ``b`` (length n) from partial sums ``p`` (length n-1)."""
    return np.diff(np.concatenate([[0.0], p, [trace_c]]))


def from_canonical(c: CanonicalPoint, trace_c: float) -> TodaPhasePoint:
    return make_state(np.exp(c.q), diagonal_from_momenta(c.p, float(trace_c)), float(trace_c))


def lax_matrix(s: TodaPhasePoint) -> np.ndarray:
    """Upper-bidiagonal orbit representative: diagonal ``b``, superdiagonal ``a``."""
    return np.diag(s.b) + np.diag(s.a, 1)


def symmetric_lax_matrix(s: TodaPhasePoint) -> np.ndarray:
    """Tridiagonal Flaschka matrix whose spectrum the Toda flow conserves.

    The upper-bidiagonal representative has eigenvalues ``b`` and is not
    isospectral along the flow; the conserved quantities are the traces of
    powers of this symmetric matrix.
    """
    return np.diag(s.b) + np.diag(s.a, 1) + np.diag(s.a, -1)


def _potential_terms(q: np.ndarray) -> np.ndarray:
    if np.any(2.0 * q > _MAX_EXPONENT):
        raise HamiltonianOverflow(f"exp(2 q) overflows for q = {q.tolist()}")
    return np.exp(2.0 * q)


def classical_hamiltonian(c: CanonicalPoint) -> float:
    """``2 sum_{i<n} (p_i - p_{i-1})^2 + 4 sum_{i<n} exp(2 q_i)`` with ``p_0 = 0``."""
    b = np.diff(np.concatenate([[0.0], c.p]))
    return float(2.0 * np.sum(b**2) + 4.0 * np.sum(_potential_terms(c.q)))


def toda_hamiltonian(c: CanonicalPoint, trace_c: float) -> float:
    """Full open-chain energy in canonical variables.

    Adds the kinetic term of the last site, ``2 b_n^2`` with
    ``b_n = trace_c - p_{n-1}``, which ``classical_hamiltonian`` omits.
    Equals ``sum y_i^2 / 2 + sum_{i<n} exp(x_i - x_{i+1})`` under the Flaschka map.
    """
    return classical_hamiltonian(c) + 2.0 * (trace_c - c.p[-1]) ** 2


def integral_of_motion(s: TodaPhasePoint, k: int) -> float:
    """``Tr(L^k)`` for the symmetric Flaschka matrix ``L``, ``1 <= k <= n``.

    ``k = 1`` is the Casimir ``trace_c`` and is returned exactly.
    """
    if not 1 <= k <= s.n:
        raise BadOrder(f"order k={k} outside 1..{s.n}")
    if k == 1:
        return s.trace_c
    return float(np.trace(np.linalg.matrix_power(symmetric_lax_matrix(s), k)))


def random_physical_point(n: int, rng: np.random.Generator) -> PhysicalPoint:
    """Standard-normal positions and momenta, centred so both sums vanish."""
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    return PhysicalPoint(x - x.mean(), y - y.mean())


def random_state(n: int, rng: np.random.Generator, trace_c: float | None = None) -> TodaPhasePoint:
    """Random orbit point with ``a_i`` log-uniform in [0.2, 5] and ``b_i`` in [-1, 1]."""
    a = np.exp(rng.uniform(np.log(0.2), np.log(5.0), n - 1))
    b = rng.uniform(-1.0, 1.0, n)
    if trace_c is not None:
        b = b - b.mean() + trace_c / n
    return make_state(a, b)
