"""Hamiltonian flow in the canonical chart and conservation diagnostics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import HamiltonianOverflow, NonFiniteState
from .toda_core import (
    CanonicalPoint,
    _potential_terms,
    classical_hamiltonian,
    from_canonical,
    integral_of_motion,
    symmetric_lax_matrix,
    toda_hamiltonian,
)

HamiltonianKind = Literal["toda", "printed"]


def _kinetic_gradient(p: np.ndarray, trace_c: float | None) -> np.ndarray:
    # dT/dp_i = 4 (b_i - b_{i+1}); b_n is absent from the printed Hamiltonian
    b_last = 0.0 if trace_c is None else trace_c - p[-1]
    b = np.diff(np.concatenate([[0.0], p, [0.0]]))
    b[-1] = b_last
    return 4.0 * (b[:-1] - b[1:])


def _potential_gradient(q: np.ndarray) -> np.ndarray:
    return 8.0 * _potential_terms(q)


def hamiltonian_vector_field(c: CanonicalPoint, trace_c: float | None = None):
    """Return ``(dq, dp) = (dH/dp, -dH/dq)``.

    With ``trace_c=None`` the Hamiltonian is ``classical_hamiltonian``;
    otherwise it is ``toda_hamiltonian(c, trace_c)``.
    """
    return _kinetic_gradient(c.p, trace_c), -_potential_gradient(c.q)


def energy(c: CanonicalPoint, trace_c: float, hamiltonian: HamiltonianKind = "toda") -> float:
    if hamiltonian == "toda":
        return toda_hamiltonian(c, trace_c)
    return classical_hamiltonian(c)


def verlet_step(q: np.ndarray, p: np.ndarray, dt: float, trace_c: float | None):
    """One kick-drift-kick Stormer-Verlet step for the separable Hamiltonian."""
    p_half = p - 0.5 * dt * _potential_gradient(q)
    q_new = q + dt * _kinetic_gradient(p_half, trace_c)
    p_new = p_half - 0.5 * dt * _potential_gradient(q_new)
    return q_new, p_new


@dataclass
class Trajectory:
    times: np.ndarray
    points: list[CanonicalPoint]
    trace_c: float
    step: float
    integrator_name: str = "stormer-verlet"
    hamiltonian: str = "toda"
    aborted: bool = False
    abort_reason: str = ""

    def __len__(self) -> int:
        return len(self.points)

    @property
    def final(self) -> CanonicalPoint:
        return self.points[-1]

    def energies(self) -> np.ndarray:
        return np.array([energy(c, self.trace_c, self.hamiltonian) for c in self.points])

    def table(self, stride: int = 1) -> tuple[list[str], list[list[float]]]:
        """Header and rows: t, q_1.., p_1.., H, TrL2..TrLn."""
        m = self.points[0].q.size
        n = m + 1
        header = (
            ["t"]
            + [f"q_{i + 1}" for i in range(m)]
            + [f"p_{i + 1}" for i in range(m)]
            + ["H"]
            + [f"TrL{k}" for k in range(2, n + 1)]
        )
        rows = []
        for t, c in zip(self.times[::stride], self.points[::stride]):
            s = from_canonical(c, self.trace_c)
            row = [t, *c.q, *c.p, energy(c, self.trace_c, self.hamiltonian)]
            row += [integral_of_motion(s, k) for k in range(2, n + 1)]
            rows.append([float(v) for v in row])
        return header, rows

    def write_csv(self, path, stride: int = 1) -> None:
        header, rows = self.table(stride)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(v) for v in row])


def integrate(
    c0: CanonicalPoint,
    t_end: float,
    dt: float,
    trace_c: float = 0.0,
    hamiltonian: HamiltonianKind = "toda",
) -> Trajectory:
    """Stormer-Verlet trajectory on ``[0, t_end]`` with fixed step ``dt``.

    ``hamiltonian="toda"`` integrates the full open-chain energy (isospectral
    flow of the Flaschka matrix); ``"printed"`` drops the last-site kinetic
    term.  A non-finite state stops the run and returns the partial
    trajectory with ``aborted=True``.
    """
    if not (dt > 0 and t_end > 0):
        raise ValueError("dt and t_end must be positive")
    if hamiltonian not in ("toda", "printed"):
        raise ValueError(f"unknown hamiltonian {hamiltonian!r}")
    steps = int(round(t_end / dt))
    if steps < 1:
        raise ValueError("t_end shorter than one step")
    gauge = trace_c if hamiltonian == "toda" else None

    q, p = c0.q.copy(), c0.p.copy()
    points = [c0]
    aborted, reason = False, ""
    with np.errstate(over="raise", invalid="raise"):
        for _ in range(steps):
            try:
                q, p = verlet_step(q, p, dt, gauge)
            except (FloatingPointError, HamiltonianOverflow) as exc:
                aborted, reason = True, f"non-finite state: {exc}"
                break
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
                aborted, reason = True, "non-finite state"
                break
            points.append(CanonicalPoint(q, p))
    times = dt * np.arange(len(points))
    return Trajectory(times, points, float(trace_c), float(dt), hamiltonian=hamiltonian,
                      aborted=aborted, abort_reason=reason)


def integrate_strict(c0, t_end, dt, trace_c=0.0, hamiltonian: HamiltonianKind = "toda") -> Trajectory:
    """Like ``integrate`` but raises ``NonFiniteState`` instead of returning a partial run."""
    tr = integrate(c0, t_end, dt, trace_c, hamiltonian)
    if tr.aborted:
        raise NonFiniteState(tr.abort_reason)
    return tr


@dataclass
class ConservationReport:
    trace_power_drift: dict[int, float]
    eigenvalue_drift: float
    energy_drift: float
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "trace_power_drift": {str(k): v for k, v in self.trace_power_drift.items()},
            "eigenvalue_drift": self.eigenvalue_drift,
            "energy_drift": self.energy_drift,
        }


def conservation_report(tr: Trajectory) -> ConservationReport:
    """Maximal relative drifts along ``tr``.

    Trace powers use ``|I_k(t) - I_k(0)| / max(1, |I_k(0)|)``; eigenvalues of
    the Flaschka matrix use the sup-norm change over ``max(1, max |lambda(0)|)``.
    """
    if len(tr) == 0:
        raise ValueError("empty trajectory")
    states = [from_canonical(c, tr.trace_c) for c in tr.points]
    n = states[0].n
    drifts = {}
    for k in range(1, n + 1):
        values = np.array([integral_of_motion(s, k) for s in states])
        drifts[k] = float(np.max(np.abs(values - values[0])) / max(1.0, abs(values[0])))
    spectra = np.array([np.linalg.eigvalsh(symmetric_lax_matrix(s)) for s in states])
    scale = max(1.0, float(np.max(np.abs(spectra[0]))))
    eig_drift = float(np.max(np.abs(spectra - spectra[0])) / scale)
    e = tr.energies()
    e_drift = float(np.max(np.abs(e - e[0])) / max(1.0, abs(e[0])))
    return ConservationReport(drifts, eig_drift, e_drift)


def reversed_momenta(c: CanonicalPoint, trace_c: float):
    """Time-reversal ``b -> -b``; returns the flipped point and flipped trace."""
    return CanonicalPoint(c.q, -c.p), -trace_c


def flow_jacobian(c: CanonicalPoint, dt: float, trace_c: float | None, step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of one Verlet step in ``(q, p)``."""
    z = c.as_array()
    m = z.size // 2
    jac = np.empty((z.size, z.size))
    for j in range(z.size):
        e = np.zeros_like(z)
        e[j] = step * max(1.0, abs(z[j]))
        plus = np.concatenate(verlet_step((z + e)[:m], (z + e)[m:], dt, trace_c))
        minus = np.concatenate(verlet_step((z - e)[:m], (z - e)[m:], dt, trace_c))
        jac[:, j] = (plus - minus) / (2.0 * e[j])
    return jac


def standard_symplectic_matrix(m: int) -> np.ndarray:
    eye = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, eye], [-eye, zero]])
