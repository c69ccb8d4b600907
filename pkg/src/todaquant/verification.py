"""Seeded invariant suites shared by the command line and the acceptance tests.

Each suite returns a plain dict with a boolean ``pass`` and the measured
quantities, ready for JSON output.
"""

from __future__ import annotations

import numpy as np

from . import coherent, dynamics, finrep, orbit, quantization
from .toda_core import (
    lax_matrix,
    physical_to_orbit,
    random_physical_point,
    random_state,
    to_canonical,
)


def _worst(values) -> float:
    values = list(values)
    return float(max(values)) if values else 0.0


def action_suite(n_values, samples: int, rng: np.random.Generator, tol: float = 1e-10) -> dict:
    """Closed-form action against the dense coadjoint action, plus identity and composition."""
    match, ident, comp = [], [], []
    for n in n_values:
        for _ in range(samples):
            s = random_state(n, rng)
            g1 = orbit.random_group_element(n, rng)
            g2 = orbit.random_group_element(n, rng)
            dense = orbit.coadjoint_action(g1, lax_matrix(s))
            closed = lax_matrix(orbit.action_on_coordinates(g1, s))
            match.append(np.max(np.abs(dense - closed)))
            fixed = orbit.action_on_coordinates(orbit.identity(n), s)
            ident.append(max(np.max(np.abs(fixed.a - s.a)), np.max(np.abs(fixed.b - s.b))))
            one = orbit.action_on_coordinates(g1 @ g2, s)
            two = orbit.action_on_coordinates(g1, orbit.action_on_coordinates(g2, s))
            comp.append(max(np.max(np.abs(one.a - two.a)), np.max(np.abs(one.b - two.b))))
    out = {"matrix_vs_closed_form": _worst(match), "identity": _worst(ident), "composition": _worst(comp),
           "tolerance": tol}
    out["pass"] = all(out[k] < tol for k in ("matrix_vs_closed_form", "identity", "composition"))
    return out


def rank_suite(n_values, samples: int, rng: np.random.Generator) -> dict:
    ranks = {}
    ok = True
    for n in n_values:
        found = sorted({orbit.orbit_tangent_rank(random_state(n, rng)) for _ in range(samples)})
        ranks[str(n)] = found
        ok = ok and found == [2 * (n - 1)]
    return {"ranks": ranks, "pass": ok}


def symplectic_suite(n: int, samples: int, rng: np.random.Generator, form_tol: float = 1e-8,
                     pullback_tol: float = 1e-12, bracket_rtol: float = 1e-6) -> dict:
    """Form agreement (algebra vs coordinates), pullback invariance, Adler vs form bracket."""
    basis = orbit.lie_algebra_basis(n)
    form_err = []
    for _ in range(samples):
        s = random_state(n, rng)
        l1 = sum(c * b for c, b in zip(rng.standard_normal(len(basis)), basis))
        l2 = sum(c * b for c, b in zip(rng.standard_normal(len(basis)), basis))
        via_matrix = orbit.kk_form_matrix(s, l1, l2)
        via_coords = orbit.kk_form_coords(s, orbit.tangent_from_algebra(s, l1), orbit.tangent_from_algebra(s, l2))
        form_err.append(abs(via_matrix - via_coords) / max(1.0, abs(via_matrix)))

    pull_err = []
    m = n - 1
    for _ in range(samples):
        s = random_state(n, rng)
        g = orbit.random_group_element(n, rng)
        jac = orbit.action_jacobian(g, s)
        moved = orbit.action_on_coordinates(g, s)
        u, v = rng.standard_normal(2 * m), rng.standard_normal(2 * m)
        before = orbit.kk_form_coords(s, (u[:m], u[m:]), (v[:m], v[m:]))
        ju, jv = jac @ u, jac @ v
        after = orbit.kk_form_coords(moved, (ju[:m], ju[m:]), (jv[:m], jv[m:]))
        pull_err.append(abs(after - before) / max(1.0, abs(before)))

    bracket_err = []
    for _ in range(samples):
        s = random_state(n, rng)
        f, h = random_polynomial(n, rng), random_polynomial(n, rng)
        adler = orbit.poisson_bracket(f, h, s)
        form = orbit.omega_bracket(f, h, s)
        bracket_err.append(abs(adler - form) / max(1.0, abs(adler)))

    out = {
        "form_agreement": _worst(form_err),
        "pullback_invariance": _worst(pull_err),
        "bracket_agreement": _worst(bracket_err),
        "bracket_sign": orbit.bracket_sign(),
        "tolerances": {"form": form_tol, "pullback": pullback_tol, "bracket": bracket_rtol},
    }
    out["pass"] = (out["form_agreement"] < form_tol and out["pullback_invariance"] < pullback_tol
                   and out["bracket_agreement"] < bracket_rtol)
    return out


def random_polynomial(n: int, rng: np.random.Generator, degree: int = 2):
    """Random polynomial in ``(a, b)`` of total degree <= ``degree``, as a callable."""
    terms = []
    for _ in range(4):
        exps = np.zeros(2 * n - 1, dtype=int)
        for _ in range(rng.integers(1, degree + 1)):
            exps[rng.integers(0, 2 * n - 1)] += 1
        terms.append((rng.uniform(-1, 1), exps))

    def f(a, b):
        z = np.concatenate([a, b])
        return float(sum(c * np.prod(z**e) for c, e in terms))

    return f


def polarization_suite(n_values) -> dict:
    reports = {str(n): orbit.verify_polarization(n).to_json() for n in n_values}
    n_neg = max(n_values)
    perturbed = orbit.strictly_lower_basis(n_neg) + [np.diag([1.0, -1.0] + [0.0] * (n_neg - 2))]
    negative = orbit.verify_polarization(n_neg, perturbed).to_json()
    ok = all(r["pass"] for r in reports.values()) and not negative["isotropic"]
    return {"reports": reports, "negative_control": negative, "pass": ok}


def isospectral_suite(n: int, rng: np.random.Generator, t_end: float = 10.0, dt: float = 1e-3,
                      tol: float = 1e-6) -> dict:
    s0 = physical_to_orbit(random_physical_point(n, rng))
    tr = dynamics.integrate(to_canonical(s0), t_end, dt, s0.trace_c)
    rep = dynamics.conservation_report(tr)
    return {
        "initial_state": s0.to_json(),
        "t_end": t_end,
        "dt": dt,
        "report": rep.to_json(),
        "tolerance": tol,
        "aborted": tr.aborted,
        "pass": (not tr.aborted) and rep.eigenvalue_drift < tol and rep.trace_power_drift[1] == 0.0,
    }


def unitarity_suite(n_values, group_samples: int, rng: np.random.Generator, tol: float = 1e-4,
                    nodes=(24, 48, quantization.DEFAULT_NODES)) -> dict:
    """Relative norm defect of ``g s`` on Gaussian-type sections at increasing quadrature sizes."""
    defects = {str(k): 0.0 for k in nodes}
    for n in n_values:
        sections = [quantization.gaussian_section(n, rng.uniform(-1, 1, n - 1), rng.uniform(0.7, 1.3, n - 1))
                    for _ in range(5)]
        for _ in range(group_samples):
            g = orbit.random_group_element(n, rng)
            for s in sections:
                gs = quantization.act_on_section(g, s)
                for k in nodes:
                    before = quantization.weighted_inner_product(s, s, nodes=k, check=False).real
                    after = quantization.weighted_inner_product(gs, gs, nodes=k, check=False).real
                    defects[str(k)] = max(defects[str(k)], abs(after - before) / before)
    finest = defects[str(nodes[-1])]
    coarsest = defects[str(nodes[0])]
    return {"defect_by_nodes": defects, "tolerance": tol,
            "pass": finest < tol and finest <= coarsest}


def reproducing_suite(rng: np.random.Generator, degree: int = 12, points: int = 20, tol: float = 1e-8) -> dict:
    spec = coherent.BasisSpec(2, degree)
    xs = coherent.random_points(2, points, rng)
    coeffs = rng.standard_normal(spec.dimension)
    s = coherent.section_from_coefficients(spec, coeffs)
    errors = []
    for x in xs:
        fx = coherent.coherent_vector(spec, x).as_section()
        pairing = quantization.weighted_inner_product(fx, s).real
        errors.append(abs(pairing - float(s(x))))
    gram = coherent.kernel_matrix(spec, xs)
    min_eig = float(np.min(np.linalg.eigvalsh(gram)))
    return {"degree": degree, "max_error": _worst(errors), "min_gram_eigenvalue": min_eig, "tolerance": tol,
            "pass": _worst(errors) < tol and min_eig >= -1e-10}


def coherent_group_suite(n_values, samples: int, rng: np.random.Generator, tol: float = 1e-6) -> dict:
    worst = 0.0
    for n in n_values:
        spec = coherent.BasisSpec(n, 4)
        for _ in range(samples):
            g = orbit.random_group_element(n, rng)
            xs = coherent.random_points(n, 3, rng)
            worst = max(worst, coherent.group_coherent_check(g, xs, spec, rng=rng))
    return {"max_residual": worst, "tolerance": tol, "pass": worst < tol}


def finrep_suite(rng: np.random.Generator, pairs: int = 100, tol: float = 1e-12) -> dict:
    worst = 0.0
    for _ in range(pairs):
        n = int(rng.integers(2, 5))
        space = finrep.FinRepSpace(n, int(rng.integers(0, 4)))
        g1 = orbit.random_group_element(n, rng)
        g2 = orbit.random_group_element(n, rng)
        worst = max(worst, finrep.homomorphism_check(g1, g2, space))
    witness = finrep.nonunitarity_witness(finrep.FinRepSpace(2, 0))
    return {"homomorphism_residual": worst, "witness_ratio": witness.ratio,
            "witness_diagonal": witness.g.diagonal.tolist(), "tolerance": tol,
            "pass": worst < tol and abs(witness.ratio - 1.0) > 0.1}


def spectrum_suite(grids=(500, 1000, 2000), box=(-12.0, 4.0), k: int = 1) -> dict:
    values = []
    for N in grids:
        res = quantization.lowest_eigenvalues(quantization.SpectralProblem(2, "q", (box,), (N,)), k)
        values.append(float(res.values[0]))
    order, limit = quantization.richardson(values)
    return {"grids": list(grids), "box": list(box), "lowest": values, "observed_order": order,
            "extrapolated": limit, "pass": 1.7 <= order <= 2.3}


def chart_suite(grid: int = 200, box=(-8.0, 3.0), tol: float = 1e-3) -> dict:
    q_val = quantization.lowest_eigenvalues(quantization.SpectralProblem(3, "q", (box,), (grid,))).values[0]
    z_val = quantization.lowest_eigenvalues(
        quantization.SpectralProblem(3, "z", (box,), (grid,), region="q-box")).values[0]
    rel = abs(q_val - z_val) / abs(q_val)
    return {"q_chart": float(q_val), "z_chart": float(z_val), "relative_difference": float(rel),
            "grid": grid, "box": list(box), "tolerance": tol, "pass": bool(rel < tol)}
