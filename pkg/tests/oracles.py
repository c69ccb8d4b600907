"""Independent reference computations used by the tests."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def _shoot(E: float, lo: float, hi: float) -> float:
    """psi(hi) for -2 psi'' + 4 e^{2q} psi = E psi with psi(lo)=0, psi'(lo)=1."""

    def rhs(q, y):
        return [y[1], (4.0 * math.exp(2.0 * q) - E) * y[0] / 2.0]

    sol = solve_ivp(rhs, (lo, hi), [0.0, 1.0], method="DOP853", rtol=1e-12, atol=1e-14)
    return float(sol.y[0, -1])


def shooting_ground_state(lo: float = -12.0, hi: float = 4.0, bracket=(0.05, 0.3)) -> float:
    """Lowest Dirichlet eigenvalue of -2 d^2/dq^2 + 4 e^{2q} on [lo, hi] by shooting."""
    return brentq(_shoot, *bracket, args=(lo, hi), xtol=1e-14, rtol=1e-14)


def dirichlet_laplacian_spectrum(m: int, h: float) -> np.ndarray:
    """Eigenvalues of -D2 on m interior nodes: (2 - 2 cos(j pi / (m+1))) / h^2."""
    j = np.arange(1, m + 1)
    return (2.0 - 2.0 * np.cos(j * math.pi / (m + 1))) / h**2


def physical_hamiltonian(x: np.ndarray, y: np.ndarray) -> float:
    """Open-chain H = 1/2 sum y^2 + sum_{i<n} exp(x_i - x_{i+1})."""
    return 0.5 * float(np.sum(y**2)) + float(np.sum(np.exp(x[:-1] - x[1:])))


def dense_trace_power(a: np.ndarray, b: np.ndarray, k: int) -> float:
    A = np.diag(b) + np.diag(a, 1)
    return float(np.trace(np.linalg.matrix_power(A, k)))
