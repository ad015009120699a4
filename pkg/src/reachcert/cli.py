"""Command-line front end.

Exit codes: 0 Proved/Certified, 1 Disproved/Infeasible, 2 Unknown/Unresolved,
3 usage or input errors, 4 internal failures.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import sys
import time
import traceback
from pathlib import Path
from typing import Sequence

from . import __version__
from .certify import (
    BOUND_KIND, CertifyError, Certificate, EmbeddingError, PropositionId, check_certificate, embed_p2,
    embed_zero_w, read_certificate_file, certificate_from_dict, save_certificate, certificate_to_dict,
)
from .expectation import ExpectationError
from .model import ProblemError, load_problem
from .outcome import Status
from .poly import PolyError
from .regioncheck import DEFAULT_DEPTH, DEFAULT_MARGIN

SCHEMA_VERSION = 1
EXIT_OK, EXIT_NEGATIVE, EXIT_UNDECIDED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3, 4
STATUS_EXIT = {Status.PROVED: EXIT_OK, Status.DISPROVED: EXIT_NEGATIVE, Status.UNKNOWN: EXIT_UNDECIDED}
SYNTH_EXIT = {"Certified": EXIT_OK, "Infeasible": EXIT_NEGATIVE, "Unresolved": EXIT_UNDECIDED}

# flag name -> certificate parameter name
PARAM_FLAGS = {
    "lambda": "lambda", "alpha_tilde": "alpha_tilde", "beta_tilde": "beta_tilde", "k": "k", "c": "c",
    "delta": "delta", "N": "N", "alpha": "alpha", "eps1": "eps1", "eps2": "eps2",
    "eps1_prime": "eps1_prime", "eps2_prime": "eps2_prime",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def emit_report(report: dict, path: str | Path | None) -> str:
    """Serialize with sorted keys; write to ``path`` or stdout."""
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise UsageError(f"{path}: {exc.strerror}") from None
    return text


def _report(args, argv, payload: dict, started: float, problem: Path | None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "reachcert",
        "tool_version": __version__,
        "command": list(argv),
        "problem_sha256": _sha256(problem) if problem is not None else None,
        "payload": payload,
        "timing": {"wall_seconds": round(time.perf_counter() - started, 6)},
    }


def _add_common(p: argparse.ArgumentParser, problem_required: bool = True) -> None:
    p.add_argument("--problem", required=problem_required, help="problem file (.prob, JSON)")
    p.add_argument("--out", default=None, help="report path; stdout when omitted")
    p.add_argument("--workers", type=int, default=1)


def _add_check_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)


def _add_param_flags(p: argparse.ArgumentParser, multi: bool = False) -> None:
    kind = str if multi else float
    for flag in ("lambda", "alpha-tilde", "beta-tilde", "c", "delta", "alpha",
                 "eps1", "eps2", "eps1-prime", "eps2-prime"):
        p.add_argument(f"--{flag}", type=kind, default=None, dest=flag.replace("-", "_"))
    p.add_argument("--k", type=str if multi else int, default=None)
    p.add_argument("--N", type=str if multi else int, default=None, dest="N")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reachcert", description="Check and synthesize reachability certificates.")
    parser.add_argument("--version", action="version", version=f"reachcert {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("check", help="check a certificate against a proposition")
    _add_common(p, problem_required=False)
    _add_check_flags(p)
    p.add_argument("--certificate", required=True)
    p.add_argument("--prop", default=None, help="proposition id; defaults to the certificate's")
    _add_param_flags(p)

    p = sub.add_parser("synthesize", help="CEGIS synthesis of a template certificate")
    _add_common(p)
    _add_check_flags(p)
    p.add_argument("--prop", default=None)
    p.add_argument("--degree-v", type=int, default=None)
    p.add_argument("--degree-w", type=int, default=None)
    p.add_argument("--use-w", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--objective", choices=("maximize", "minimize"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--time-budget", type=float, default=60.0)
    p.add_argument("--save-certificate", default=None)
    _add_param_flags(p, multi=True)

    p = sub.add_parser("simulate", help="Monte-Carlo estimates from X0 points")
    _add_common(p)
    p.add_argument("--x0", action="append", default=None, help="comma-separated start point; repeatable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--semantics", choices=("reach-invariant", "reach-avoid"), default=None)
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--csv", default=None, help="per-trial outcomes of the first start point")

    p = sub.add_parser("oracle", help="exact absorption probabilities on a lattice")
    _add_common(p)
    p.add_argument("--step", required=True, help="comma-separated lattice step")
    p.add_argument("--origin", default=None)
    p.add_argument("--semantics", choices=("reach-invariant", "reach-avoid"), default=None)
    p.add_argument("--x0", action="append", default=None)
    p.add_argument("--all-states", action="store_true")

    p = sub.add_parser("compare", help="check one certificate under several propositions")
    _add_common(p, problem_required=False)
    _add_check_flags(p)
    p.add_argument("--certificate", required=True)
    p.add_argument("--props", required=True, help="comma-separated proposition list")
    _add_param_flags(p)
    return parser


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _param_overrides(args) -> dict[str, float]:
    out = {}
    for flag, name in PARAM_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            out[name] = val
    return out


def _load_cert(args):
    raw = read_certificate_file(args.certificate)
    problem = args.problem
    if problem is None:
        ref = raw.get("problem")
        if ref is None:
            raise UsageError("--problem is required when the certificate names no problem")
        problem = str(Path(args.certificate).parent / ref)
    spec = load_problem(problem)
    cert = certificate_from_dict(raw, spec.state_vars)
    return Path(problem), spec, cert


def _cmd_check(args, argv, started):
    problem, spec, cert = _load_cert(args)
    prop = PropositionId.parse(args.prop) if args.prop else cert.prop
    cert = cert.for_prop(prop).with_params(**_param_overrides(args))
    report = check_certificate(prop, cert, spec, args.depth, args.margin, workers=args.workers)
    payload = {"kind": "check", "certificate": certificate_to_dict(cert, spec.state_vars),
               "report": report.to_dict(spec.state_vars)}
    return _report(args, argv, payload, started, problem), STATUS_EXIT[report.status]


def _embedded(source: Certificate, prop: PropositionId, spec, depth: int) -> tuple[Certificate, str]:
    if prop is source.prop:
        return source, "identity"
    if source.prop is PropositionId.P1 and prop in (PropositionId.P7, PropositionId.P8):
        return embed_zero_w(source, spec, depth).for_prop(prop), "w = 0"
    if source.prop is PropositionId.P2 and prop in (PropositionId.P6, PropositionId.P6_XHAT):
        return embed_p2(source, spec, depth).for_prop(prop), "u = 1 - v, w = M u"
    return source.for_prop(prop), "same v, w and parameters"


def _cmd_compare(args, argv, started):
    problem, spec, cert = _load_cert(args)
    cert = cert.with_params(**_param_overrides(args))
    props = [PropositionId.parse(t.strip()) for t in args.props.split(",") if t.strip()]
    rows = []
    worst_code = EXIT_OK
    for prop in props:
        try:
            derived, how = _embedded(cert, prop, spec, args.depth)
            report = check_certificate(prop, derived, spec, args.depth, args.margin, workers=args.workers)
        except (EmbeddingError, CertifyError) as exc:
            rows.append({"prop": prop.value, "status": "Not applicable", "bound": None, "derived_by": None,
                         "message": str(exc)})
            worst_code = max(worst_code, EXIT_UNDECIDED)
            continue
        rows.append({
            "prop": prop.value,
            "status": report.status.value,
            "bound_kind": BOUND_KIND[prop],
            "bound": None if report.bound is None else report.bound.value,
            "horizon": None if report.bound is None else report.bound.horizon,
            "derived_by": how,
            "certificate": certificate_to_dict(derived, spec.state_vars),
        })
        worst_code = max(worst_code, STATUS_EXIT[report.status])
    payload = {"kind": "compare", "source": certificate_to_dict(cert, spec.state_vars), "table": rows}
    return _report(args, argv, payload, started, problem), worst_code


def _sweep_values(args, defaults: dict) -> list[dict[str, float]]:
    axes = []
    for flag, name in PARAM_FLAGS.items():
        raw = getattr(args, flag, None)
        if raw is None:
            continue
        vals = _floats(str(raw), f"--{flag}")
        if not vals:
            raise UsageError(f"--{flag}: no values")
        axes.append([(name, v) for v in vals])
    combos = []
    for combo in itertools.product(*axes):
        params = dict(defaults)
        params.update(dict(combo))
        combos.append(params)
    return combos


def _cmd_synthesize(args, argv, started):
    from .synth import TemplateSpec, synthesize_cegis
    from .synth.cegis import Budget

    problem = Path(args.problem)
    spec = load_problem(problem)
    cfg = dict(spec.synthesis or {})
    prop = PropositionId.parse(args.prop or cfg.get("prop") or "")
    degree_v = args.degree_v if args.degree_v is not None else int(cfg.get("degree_v", 2))
    degree_w = args.degree_w if args.degree_w is not None else int(cfg.get("degree_w", 0))
    use_w = args.use_w if args.use_w is not None else bool(cfg.get("use_w", degree_w > 0))
    objective = args.objective or cfg.get("objective")
    budget = Budget(args.iterations, args.time_budget)
    runs = []
    best = None
    for params in _sweep_values(args, cfg.get("fixed_params", {})):
        template = TemplateSpec(degree_v, degree_w, use_w, params, objective, seed=args.seed)
        res = synthesize_cegis(prop, template, spec, budget, args.depth, args.workers)
        runs.append({"fixed_params": dict(sorted(params.items())), "status": res.status.value,
                     "bound": res.report.bound.value if res.report and res.report.bound else None,
                     "iterations": res.iterations})
        if res.status.value == "Certified":
            better = best is None or best.status.value != "Certified"
            if not better:
                upper = BOUND_KIND[prop] in ("upper",)
                a, b = res.report.bound.value, best.report.bound.value
                better = a < b if upper else a > b
            if better:
                best = res
        elif best is None or (best.status.value == "Infeasible" and res.status.value == "Unresolved"):
            best = res
    if args.save_certificate and best.certificate is not None and best.status.value == "Certified":
        save_certificate(best.certificate, spec, args.save_certificate)
    payload = {"kind": "synthesize", "prop": prop.value, "degree_v": degree_v, "degree_w": degree_w,
               "use_w": use_w, "result": best.to_dict(spec.state_vars), "sweep": runs}
    return _report(args, argv, payload, started, problem), SYNTH_EXIT[best.status.value]


def _start_points(args, spec) -> list[tuple[float, ...]]:
    from .sim import x0_grid
    if args.x0:
        pts = [tuple(_floats(t, "--x0")) for t in args.x0]
        for p in pts:
            if len(p) != spec.n:
                raise UsageError(f"--x0 needs {spec.n} coordinates")
        return pts
    return x0_grid(spec.X0)


def _default_semantics(spec) -> str:
    return "reach-avoid" if spec.mode == "xhat" else "reach-invariant"


def _cmd_simulate(args, argv, started):
    from .sim import TrialConfig, estimate_probability
    problem = Path(args.problem)
    spec = load_problem(problem)
    try:
        config = TrialConfig(args.seed, args.horizon, args.trials, args.semantics or _default_semantics(spec),
                             args.workers, args.level)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    estimates = []
    for i, x0 in enumerate(_start_points(args, spec)):
        est = estimate_probability(spec, x0, config, args.csv if i == 0 else None)
        estimates.append(est.to_dict())
    payload = {"kind": "simulate", "seed": config.seed, "estimates": estimates}
    return _report(args, argv, payload, started, problem), EXIT_OK


def _cmd_oracle(args, argv, started):
    from .sim import exact_chain_probability
    problem = Path(args.problem)
    spec = load_problem(problem)
    step = _floats(args.step, "--step")
    origin = _floats(args.origin, "--origin") if args.origin else None
    sol = exact_chain_probability(spec, step, origin, args.semantics or _default_semantics(spec))
    rows = []
    if args.all_states:
        coords = [tuple(o + h * i for i, h, o in zip(s, sol.step, sol.origin)) for s in sorted(sol.probabilities)]
    elif args.x0:
        coords = _start_points(args, spec)
    else:
        coords = [tuple(o + h * i for i, h, o in zip(s, sol.step, sol.origin))
                  for s in sorted(sol.probabilities)]
        coords = [c for c in coords if spec.X0.contains_point(c)]
    for c in coords:
        rows.append({"x": list(c), "probability": sol.at(c)})
    payload = {"kind": "oracle", "semantics": sol.semantics, "method": sol.method, "step": list(sol.step),
               "origin": list(sol.origin), "states": len(sol.probabilities), "values": rows}
    return _report(args, argv, payload, started, problem), EXIT_OK


COMMANDS = {"check": _cmd_check, "synthesize": _cmd_synthesize, "simulate": _cmd_simulate,
            "oracle": _cmd_oracle, "compare": _cmd_compare}


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("reachcert: a subcommand is required (check, synthesize, simulate, oracle, compare)")
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be at least 1")
        report, code = COMMANDS[args.command](args, argv, started)
        emit_report(report, args.out)
        return code
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (CertifyError, ProblemError, PolyError, ExpectationError, EmbeddingError) as exc:
        print(f"reachcert: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
