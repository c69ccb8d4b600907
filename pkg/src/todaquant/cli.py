"""Command-line entry point: ``todaquant <subcommand> [flags]``.

Every subcommand accepts ``--config FILE`` (JSON whose keys mirror the flag
names; explicit flags win), ``--seed``, ``--output`` and ``--format``.
Output is canonical JSON (sorted keys, floats with 17 significant digits) or
CSV preceded by ``#`` metadata lines.  Exit codes: 0 success, 1 failed
invariant, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, coherent, dynamics, finrep, orbit, quantization, verification
from .errors import ConvergenceFailure, TodaError
from .toda_core import make_state, physical_to_orbit, random_physical_point, to_canonical

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

# flags whose values may start with '-' (e.g. --box -12:4)
_RANGE_FLAGS = ("--box", "--range")


# ---------------------------------------------------------------- serialization

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _encode(obj, out: list[str]) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, list):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _encode(v, out)
        out.append("]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    else:
        out.append(json.dumps(str(obj)))


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, floats at 17 significant digits."""
    out: list[str] = []
    _encode(_plain(obj), out)
    return "".join(out) + "\n"


def canonical_csv(header, rows, meta: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# todaquant {__version__}\n")
    buf.write(f"# seed {meta['seed']}\n")
    buf.write("# config " + canonical_json(meta["config"]))
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------- configuration

@dataclass
class RunConfig:
    subcommand: str
    n: int
    seed: int
    output: str | None
    format: str
    options: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"subcommand": self.subcommand, "n": self.n, "seed": self.seed, "format": self.format,
                **self.options}


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in str(text).split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"need lo < hi in {text!r}")
    return lo, hi


def _positive_float(text) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be > 0")
    return value


def _seed(text) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be a non-negative integer")
    return value


def _n(text) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("n must be >= 2")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values for the flags")
    common.add_argument("--n", type=_n, default=3, help="lattice size")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="todaquant", description="Toda lattice orbit and quantization numerics")
    parser.add_argument("--version", action="version", version=f"todaquant {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", parents=[common], help="integrate the classical flow")
    p.add_argument("--t-end", type=_positive_float, default=10.0)
    p.add_argument("--dt", type=_positive_float, default=1e-3)
    p.add_argument("--hamiltonian", choices=("toda", "printed"), default="toda")
    p.add_argument("--stride", type=int, default=100, help="CSV row stride")
    p.add_argument("--drift-tol", type=_positive_float, default=1e-6)
    p.add_argument("--a", type=float, nargs="+", help="initial off-diagonals (default: random)")
    p.add_argument("--b", type=float, nargs="+", help="initial diagonals (default: random)")

    p = sub.add_parser("verify-orbit", parents=[common], help="orbit action, rank, form and bracket checks")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--action-tol", type=_positive_float, default=1e-10)
    p.add_argument("--form-tol", type=_positive_float, default=1e-8)
    p.add_argument("--pullback-tol", type=_positive_float, default=1e-12)
    p.add_argument("--bracket-tol", type=_positive_float, default=1e-6)

    p = sub.add_parser("quantize-spectrum", parents=[common], help="box-regularized quantum spectrum")
    p.add_argument("--chart", choices=("q", "z"), default="q")
    p.add_argument("--region", choices=("box", "q-box"), default="box")
    p.add_argument("--box", type=_range, action="append", help="lo:hi, once or once per axis")
    p.add_argument("--grid", type=int, nargs="+", default=[2000], help="intervals per axis")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--residual-tol", type=_positive_float, default=1e-8)
    p.add_argument("--csv", help="also write eigenfunction samples to this CSV file")

    p = sub.add_parser("coherent-kernel", parents=[common], help="truncated reproducing kernel")
    p.add_argument("--degree", type=int, default=12)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--range", type=_range, default=(0.2, 5.0), help="lo:hi of the a-grid")
    p.add_argument("--grid", type=int, default=41)
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--csv", help="also write the kernel grid to this CSV file")

    p = sub.add_parser("rep-matrix", parents=[common], help="finite-dimensional representation matrix")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--homogeneous", action="store_true")
    p.add_argument("--g", help="group element as a JSON list of rows (default: random)")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--tol", type=_positive_float, default=1e-12)

    p = sub.add_parser("verify-all", parents=[common], help="run every invariant suite")
    p.add_argument("--drift-tol", type=_positive_float, default=1e-6)
    return parser


def _join_range_flags(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def _config_to_argv(values: dict) -> list[str]:
    argv = []
    for key, value in values.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, list) and flag in _RANGE_FLAGS:
            for item in value:
                argv.append(f"{flag}={item if isinstance(item, str) else ':'.join(map(str, item))}")
        elif isinstance(value, list) and flag == "--g":
            argv.append(f"{flag}={json.dumps(value)}")
        elif isinstance(value, list):
            argv.append(flag)
            argv.extend(str(v) for v in value)
        else:
            argv.append(f"{flag}={value}")
    return argv


def parse_config(argv: list[str]) -> RunConfig:
    """Parse flags, layering an optional JSON config underneath them.

    Raises ``SystemExit(2)`` on usage errors, like argparse itself.
    """
    parser = build_parser()
    argv = _join_range_flags(list(argv))
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(values, dict):
            parser.error("config file must hold a JSON object")
        values.pop("subcommand", None)
        values.pop("config", None)
        given = {tok.split("=", 1)[0] for tok in argv if tok.startswith("--")}
        values = {k: v for k, v in values.items() if "--" + str(k).replace("_", "-") not in given}
        # config first, then the command line so explicit flags override
        args = parser.parse_args([argv[0]] + _config_to_argv(values) + argv[1:])
    opts = {k: v for k, v in vars(args).items()
            if k not in ("subcommand", "n", "seed", "output", "format", "config")}
    return RunConfig(args.subcommand, args.n, args.seed, args.output, args.format, opts)


# ---------------------------------------------------------------- subcommands

def _envelope(cfg: RunConfig, body: dict) -> dict:
    return {"version": __version__, "seed": cfg.seed, "config": cfg.to_json(), **body}


def _meta(cfg: RunConfig) -> dict:
    return {"seed": cfg.seed, "config": cfg.to_json()}


def _simulate(cfg: RunConfig):
    o = cfg.options
    rng = np.random.default_rng(cfg.seed)
    if o["a"] is not None or o["b"] is not None:
        if o["a"] is None or o["b"] is None:
            raise ValueError("--a and --b must be given together")
        s0 = make_state(o["a"], o["b"])
    else:
        s0 = physical_to_orbit(random_physical_point(cfg.n, rng))
    tr = dynamics.integrate(to_canonical(s0), o["t_end"], o["dt"], s0.trace_c, o["hamiltonian"])
    rep = dynamics.conservation_report(tr)
    ok = (not tr.aborted) and rep.eigenvalue_drift < o["drift_tol"] and rep.trace_power_drift[1] == 0.0
    body = {
        "initial_state": s0.to_json(),
        "steps": len(tr) - 1,
        "aborted": tr.aborted,
        "abort_reason": tr.abort_reason,
        "integrator": tr.integrator_name,
        "hamiltonian": tr.hamiltonian,
        "final": {"q": tr.final.q, "p": tr.final.p},
        "conservation": rep.to_json(),
        "pass": ok,
    }
    header, rows = tr.table(max(1, o["stride"]))
    return body, (header, rows), ok


def _verify_orbit(cfg: RunConfig):
    o = cfg.options
    n = cfg.n
    suites = {
        "action": verification.action_suite([n], o["samples"], np.random.default_rng(cfg.seed), o["action_tol"]),
        "orbit_rank": verification.rank_suite([n], min(o["samples"], 20), np.random.default_rng(cfg.seed)),
        "symplectic": verification.symplectic_suite(n, min(o["samples"], 50), np.random.default_rng(cfg.seed),
                                                    o["form_tol"], o["pullback_tol"], o["bracket_tol"]),
        "polarization": verification.polarization_suite([n]),
    }
    ok = all(s["pass"] for s in suites.values())
    return {"suites": suites, "pass": ok}, None, ok


def _sample_table(disc: quantization.Discretization, res: quantization.EigenResult):
    dim = disc.points.shape[1]
    chart = disc.problem.chart
    header = [f"{chart}_{i + 1}" for i in range(dim)]
    if chart != "q":
        header += [f"q_{i + 1}" for i in range(dim)]
    header += [f"psi_{j}" for j in range(res.vectors.shape[1])]
    cols = [disc.points] if chart == "q" else [disc.points, disc.q_points]
    table = np.hstack(cols + [res.vectors])
    return header, table.tolist()


def _quantize_spectrum(cfg: RunConfig):
    o = cfg.options
    boxes = tuple(o["box"]) if o["box"] else ((-12.0, 4.0),)
    problem = quantization.SpectralProblem(cfg.n, o["chart"], boxes, tuple(o["grid"]), region=o["region"])
    disc = quantization.discretize(problem)
    try:
        res = quantization.eigen_solve(disc.matrix, o["k"], residual_tol=o["residual_tol"], sigma=0.0)
    except ConvergenceFailure as exc:
        body = {**problem.to_json(), "error": str(exc), "diagnostics": exc.diagnostics, "pass": False}
        return body, None, False
    body = {
        **problem.to_json(),
        "unknowns": int(disc.matrix.shape[0]),
        "eigenvalues": res.values,
        "residuals": res.residuals,
        "method": res.method,
        "pass": bool(np.all(res.residuals < o["residual_tol"])),
    }
    return body, _sample_table(disc, res), body["pass"]


def _coherent_kernel(cfg: RunConfig):
    o = cfg.options
    rng = np.random.default_rng(cfg.seed)
    spec = coherent.BasisSpec(cfg.n, o["degree"])
    xs = coherent.random_points(cfg.n, o["points"], rng)
    section = coherent.section_from_coefficients(spec, rng.standard_normal(spec.dimension))
    errors = []
    for x in xs:
        fx = coherent.coherent_vector(spec, x).as_section()
        errors.append(abs(quantization.weighted_inner_product(fx, section).real - float(section(x))))
    gram_min = float(np.min(np.linalg.eigvalsh(coherent.kernel_matrix(spec, xs))))
    ok = max(errors) < o["tol"] and gram_min >= -1e-10

    lo, hi = o["range"]
    axis = np.exp(np.linspace(math.log(lo), math.log(hi), o["grid"]))
    # vary the first coordinate of x and y, remaining coordinates fixed at 1
    pts = np.ones((axis.size, cfg.n - 1))
    pts[:, 0] = axis
    K = coherent.kernel_matrix(spec, pts)
    rows = [[axis[i], axis[j], K[i, j]] for i in range(axis.size) for j in range(axis.size)]
    body = {
        "degree": o["degree"],
        "basis": spec.family,
        "dimension": spec.dimension,
        "reproducing": {"points": xs, "errors": errors, "max_error": max(errors), "tolerance": o["tol"]},
        "min_gram_eigenvalue": gram_min,
        "kernel_grid": {"axis": "a_1", "others_fixed_at": 1.0, "range": [lo, hi], "size": o["grid"]},
        "pass": ok,
    }
    return body, (["x_a1", "y_a1", "K"], rows), ok


def _rep_matrix(cfg: RunConfig):
    o = cfg.options
    rng = np.random.default_rng(cfg.seed)
    space = finrep.FinRepSpace(cfg.n, o["m"], o["homogeneous"])
    if o["g"]:
        try:
            g = orbit.make_group_element(np.array(json.loads(o["g"]), dtype=float))
        except json.JSONDecodeError as exc:
            raise ValueError(f"--g is not valid JSON: {exc}") from None
    else:
        g = orbit.random_group_element(cfg.n, rng)
    rho = finrep.rep_matrix(g, space)
    worst = 0.0
    for _ in range(o["pairs"]):
        worst = max(worst, finrep.homomorphism_check(orbit.random_group_element(cfg.n, rng),
                                                     orbit.random_group_element(cfg.n, rng), space))
    witness = finrep.nonunitarity_witness(space)
    ok = worst < o["tol"] and abs(witness.ratio - 1.0) > 0.1
    body = {
        "basis": space.labels(),
        "dimension": space.dimension,
        "g": g.L,
        "matrix": rho.matrix,
        "homomorphism": {"pairs": o["pairs"], "max_residual": worst, "tolerance": o["tol"]},
        "determinant_identity": finrep.determinant_identity(g, space),
        "nonunitarity": {"g": witness.g.L, "basis_index": witness.basis_index,
                         "basis_label": space.labels()[witness.basis_index], "ratio": witness.ratio},
        "pass": ok,
    }
    rows = [list(r) for r in rho.matrix]
    return body, (space.labels(), rows), ok


def _verify_all(cfg: RunConfig):
    # each suite draws from its own generator seeded with --seed
    def rng():
        return np.random.default_rng(cfg.seed)

    n = cfg.n
    top = max(n, 6)
    suites = {
        "isospectral_flow": verification.isospectral_suite(n, rng(), tol=cfg.options["drift_tol"]),
        "action": verification.action_suite(range(2, max(n, 5) + 1), 100, rng()),
        "orbit_rank": verification.rank_suite(range(2, top + 1), 20, rng()),
        "symplectic": verification.symplectic_suite(n, 50, rng()),
        "polarization": verification.polarization_suite(list(range(2, top + 1))),
        "unitarity": verification.unitarity_suite([2, 3], 20, rng()),
        "reproducing_kernel": verification.reproducing_suite(rng()),
        "coherent_equivalence": verification.coherent_group_suite([2, 3, 4], 10, rng()),
        "finite_representation": verification.finrep_suite(rng()),
        "spectrum_convergence": verification.spectrum_suite(),
        "chart_agreement": verification.chart_suite(),
    }
    ok = all(s["pass"] for s in suites.values())
    return {"suites": suites, "summary": {k: s["pass"] for k, s in suites.items()}, "pass": ok}, None, ok


_DISPATCH = {
    "simulate": _simulate,
    "verify-orbit": _verify_orbit,
    "quantize-spectrum": _quantize_spectrum,
    "coherent-kernel": _coherent_kernel,
    "rep-matrix": _rep_matrix,
    "verify-all": _verify_all,
}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    try:
        body, table, ok = _DISPATCH[cfg.subcommand](cfg)
    except ValueError as exc:
        # bad input values (dimension, positivity, grid size, ...)
        print(f"todaquant {cfg.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TodaError as exc:
        # numerical failure: non-finite state, stalled solver, missing witness
        print(f"todaquant {cfg.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED

    if cfg.format == "csv":
        if table is None:
            print(f"todaquant {cfg.subcommand}: no CSV output for this subcommand", file=sys.stderr)
            return EXIT_USAGE
        _emit(canonical_csv(*table, _meta(cfg)), cfg.output)
    else:
        _emit(canonical_json(_envelope(cfg, body)), cfg.output)
    extra_csv = cfg.options.get("csv")
    if extra_csv and table is not None:
        _emit(canonical_csv(*table, _meta(cfg)), extra_csv)
    return EXIT_OK if ok else EXIT_FAILED


def main() -> int:
    return run()
