"""Command-line experiment harness.

Subcommands:

* ``solve``      -- run one solver on one problem, write its trace (and the
  certificate when the solver is bisec-bio);
* ``bench``      -- run several solvers on the same problem and write one
  trace CSV per solver, a JSON report, and optionally an SVG gap plot;
* ``verify``     -- re-check a certificate file written by solve/bench;
* ``prox-test``  -- run the projection oracle-equivalence suite.

Configuration is flat JSON; command-line flags override file values.  With
the default settings all outputs are byte-identical across runs for a fixed
seed: trace wall-clock columns are written as 0.0 unless ``--wall-clock``
is passed (real timings are inherently non-reproducible).

Exit codes: 0 success, 2 verification failure, 1 error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .apg import FistaConfig, fista_solve
from .baselines import AirgConfig, BigSamConfig, airg_run, bigsam_run
from .bilevel import BisectionConfig, VerificationReport, bisection_solve, verify_certificate
from .core import CompositeFunction, SolutionCertificate, evaluate_composite
from .oracle_checks import run_prox_suite
from .problems import ProblemSpec, from_config
from .trace import PlotSpec, TraceRecord, emit_svg_plot, emit_trace_csv

__all__ = ["ExperimentConfig", "run_experiment", "main"]

SOLVER_IDS = ("bisec-bio", "airg", "bigsam")
CERT_SCHEMA = "bisectbio-certificate/1"


@dataclass
class ExperimentConfig:
    problem: str
    data: dict | None = None
    params: dict = field(default_factory=dict)
    eps_f: float = 1e-5
    eps_g: float = 1e-6
    solvers: list[str] = field(default_factory=lambda: ["bisec-bio"])
    solver_configs: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "results"
    plot: bool = False
    wall_clock: bool = False

    def __post_init__(self):
        if self.eps_f <= 0 or self.eps_g <= 0:
            raise ValueError("eps_f and eps_g must be positive")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        for s in self.solvers:
            if s not in SOLVER_IDS:
                raise ValueError(f"unknown solver {s!r}")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        return cls(**raw)

    def descriptor(self) -> dict:
        return {
            "problem": self.problem,
            "data": self.data,
            "params": self.params,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# reference optima
# ---------------------------------------------------------------------------


def _reference_g_star(spec: ProblemSpec, eps_g: float) -> float:
    cfg = FistaConfig(
        mode="greedy",
        max_iters=400_000,
        residual_stop=eps_g / 2000.0,
    )
    res = fista_solve(spec.problem.lower, np.zeros(spec.problem.dimension), eps_g / 100.0, cfg)
    return res.objective


def _penalty_continuation_p_star(spec: ProblemSpec, eps_f: float) -> float:
    """Reference bilevel optimum via a vanishing-penalty path on g + lam * f.

    Each stage runs a capped-iteration solve that in practice terminates on
    its residual threshold; the warm-started path converges to the solution
    the bilevel problem selects among the lower-level minimizers.
    """
    problem = spec.problem
    upper, lower = problem.upper, problem.lower
    x = np.zeros(problem.dimension)
    stage_iters = 200_000
    lam = 1e-1
    while lam >= 1e-7:
        lam_now = lam
        if spec.upper_smooth:
            nonsmooth_value = lower.nonsmooth_value
            prox_fn = lower.prox
        else:
            # all non-smooth-upper families here have a prox-free lower part
            nonsmooth_value = lambda z, _l=lam_now: _l * float(upper.nonsmooth_value(z))
            prox_fn = lambda y, s, _l=lam_now: upper.prox(y, s * _l)
        lip = lower.lipschitz + lam_now * upper.lipschitz
        phi = CompositeFunction(
            smooth_value=lambda z, _l=lam_now: float(lower.smooth_value(z))
            + _l * float(upper.smooth_value(z)),
            smooth_gradient=lambda z, _l=lam_now: np.asarray(lower.smooth_gradient(z))
            + _l * np.asarray(upper.smooth_gradient(z)),
            lipschitz=lip,
            nonsmooth_value=nonsmooth_value,
            prox=prox_fn,
        )
        radius = 10.0 + float(np.linalg.norm(x))
        # epsilon sized so the theory budget stays within the stage cap; the
        # residual threshold is what actually stops the stage
        eps_stage = max(2.0 * lip * radius * radius / (stage_iters - 2) ** 2, 1e-300)
        cfg = FistaConfig(
            mode="greedy",
            max_iters=stage_iters,
            radius_bound=radius,
            residual_stop=lam_now * eps_f / 100.0,
        )
        x = fista_solve(phi, x, eps_stage, cfg).point
        lam /= 10.0
    return evaluate_composite(upper, x)


def resolve_references(spec: ProblemSpec, config: ExperimentConfig) -> dict:
    """Reference (g*, p*) for gap traces, with a cross-check flag.

    Closed-form values from the problem construction win.  Otherwise g*
    comes from a long high-precision solve of the lower level, and p* from
    the bisection itself at 100x tighter tolerances, cross-checked against a
    penalty-continuation solve; disagreement beyond 10 * eps_f flags the
    instance rather than failing it.
    """
    g_star = spec.g_star
    if g_star is None:
        g_star = _reference_g_star(spec, config.eps_g)
    p_star = spec.p_star
    flagged = False
    note = "closed-form"
    if p_star is None:
        tight = bisection_solve(
            spec.problem,
            config.eps_f / 100.0,
            config.eps_g / 100.0,
            config=BisectionConfig(),
        )
        p_bisect = tight.upper_bound_u
        p_penalty = _penalty_continuation_p_star(spec, config.eps_f)
        p_star = p_bisect
        note = "tight-bisection vs penalty-continuation"
        if abs(p_bisect - p_penalty) > 10.0 * config.eps_f:
            flagged = True
            warnings.warn(
                f"reference optima disagree: bisection {p_bisect!r} vs "
                f"penalty continuation {p_penalty!r}",
                RuntimeWarning,
            )
    return {
        "g_star": float(g_star),
        "p_star": float(p_star),
        "flagged": flagged,
        "method": note,
    }


# ---------------------------------------------------------------------------
# solver runners
# ---------------------------------------------------------------------------


def _run_bisec(
    spec: ProblemSpec, config: ExperimentConfig, refs: dict
) -> tuple[list[TraceRecord], SolutionCertificate]:
    problem = spec.problem
    records: list[TraceRecord] = []
    timer = time.perf_counter if config.wall_clock else None
    t0 = timer() if timer else 0.0
    counter = {"i": 0}

    def observer(label, point, tally):
        f_val = evaluate_composite(problem.upper, point)
        g_val = evaluate_composite(problem.lower, point)
        records.append(
            TraceRecord(
                solver="bisec-bio",
                iterate_index=counter["i"],
                fn_evals=tally.fn_evals,
                grad_evals=tally.grad_evals,
                prox_calls=tally.prox_calls,
                wall_seconds=(timer() - t0) if timer else 0.0,
                f_gap=f_val - refs["p_star"],
                g_gap=g_val - refs["g_star"],
            )
        )
        counter["i"] += 1

    solver_cfg = _bisec_config(config.solver_configs.get("bisec-bio", {}))
    cert = bisection_solve(
        problem,
        config.eps_f,
        config.eps_g,
        config=solver_cfg,
        observer=observer,
    )
    # final record for the returned incumbent
    f_val = evaluate_composite(problem.upper, cert.point)
    g_val = evaluate_composite(problem.lower, cert.point)
    records.append(
        TraceRecord(
            solver="bisec-bio",
            iterate_index=counter["i"],
            fn_evals=cert.tally.fn_evals,
            grad_evals=cert.tally.grad_evals,
            prox_calls=cert.tally.prox_calls,
            wall_seconds=(timer() - t0) if timer else 0.0,
            f_gap=f_val - refs["p_star"],
            g_gap=g_val - refs["g_star"],
        )
    )
    return records, cert


def _bisec_config(raw: dict) -> BisectionConfig:
    fista_kwargs = dict(raw.get("fista", {}))
    cfg = BisectionConfig(
        fista=FistaConfig(**fista_kwargs) if fista_kwargs else FistaConfig(mode="greedy"),
        warm_start=bool(raw.get("warm_start", True)),
        residual_rule=raw.get("residual_rule", "certified"),
    )
    return cfg


def _run_baseline(
    solver: str, spec: ProblemSpec, config: ExperimentConfig, refs: dict
) -> list[TraceRecord]:
    raw = dict(config.solver_configs.get(solver, {}))
    sample_every = int(raw.pop("sample_every", 100))
    timer = time.perf_counter if config.wall_clock else None
    x0 = np.zeros(spec.problem.dimension)
    pair = (refs["p_star"], refs["g_star"])
    if solver == "airg":
        records, _ = airg_run(spec, x0, AirgConfig(**raw), pair, sample_every, timer)
    else:
        records, _ = bigsam_run(spec, x0, BigSamConfig(**raw), pair, sample_every, timer)
    return records


def run_experiment(config: ExperimentConfig) -> dict:
    """Run every configured solver, write traces/report/plot, return report."""
    spec = from_config(config.problem, config.data, config.params, config.seed)
    refs = resolve_references(spec, config)
    os.makedirs(config.out, exist_ok=True)

    traces: dict[str, list[TraceRecord]] = {}
    report: dict = {
        "problem": config.descriptor(),
        "eps_f": config.eps_f,
        "eps_g": config.eps_g,
        "references": refs,
        "solvers": {},
    }
    verification_ok = True
    for solver in config.solvers:
        if solver == "bisec-bio":
            records, cert = _run_bisec(spec, config, refs)
            ver = verify_certificate(
                spec.problem, cert, g_star_oracle=refs["g_star"], p_star_oracle=refs["p_star"]
            )
            verification_ok = verification_ok and ver.ok
            cert_path = os.path.join(config.out, "certificate_bisec-bio.json")
            with open(cert_path, "w") as fh:
                json.dump(
                    {
                        "schema": CERT_SCHEMA,
                        "problem": config.descriptor(),
                        "certificate": cert.as_dict(),
                        "references": {
                            "g_star": refs["g_star"],
                            "p_star": refs["p_star"],
                        },
                    },
                    fh,
                    indent=2,
                )
                fh.write("\n")
            report["solvers"][solver] = {
                "oracle_calls": cert.tally.total(),
                "bisection_rounds": cert.bisection_rounds,
                "f_hat": cert.upper_bound_u,
                "interval": [cert.lower_bound_l, cert.upper_bound_u],
                "verification": [
                    {
                        "name": c.name,
                        "passed": c.passed,
                        "lhs": c.lhs,
                        "rhs": c.rhs,
                    }
                    for c in ver.checks
                ],
                "certificate_path": cert_path,
            }
        else:
            records = _run_baseline(solver, spec, config, refs)
            last = records[-1]
            report["solvers"][solver] = {
                "oracle_calls": last.fn_evals + last.grad_evals + last.prox_calls,
                "final_f_gap": last.f_gap,
                "final_g_gap": last.g_gap,
            }
        traces[solver] = records
        path = os.path.join(config.out, f"trace_{solver}.csv")
        with open(path, "w") as fh:
            fh.write(emit_trace_csv(records))
        report["solvers"][solver]["trace_path"] = path

    if config.plot:
        svg_path = os.path.join(config.out, "gaps.svg")
        with open(svg_path, "w") as fh:
            fh.write(emit_svg_plot(traces, PlotSpec(title=config.problem)))
        report["plot_path"] = svg_path

    report["verification_ok"] = verification_ok
    report_path = os.path.join(config.out, "report.json")
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    report["report_path"] = report_path
    return report


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--problem", help="problem kind (overrides config)")
    p.add_argument("--eps-f", type=float, dest="eps_f")
    p.add_argument("--eps-g", type=float, dest="eps_g")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--plot", action="store_true", default=None)
    p.add_argument("--wall-clock", action="store_true", default=None, dest="wall_clock")


def _config_from_args(args, default_solvers=None) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        if not args.problem:
            raise ValueError("either --config or --problem is required")
        cfg = ExperimentConfig(problem=args.problem)
    overrides = {}
    for name in ("problem", "eps_f", "eps_g", "seed", "out", "plot", "wall_clock"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if default_solvers is not None:
        overrides["solvers"] = default_solvers
    return replace(cfg, **overrides)


def _print_report(report: dict) -> None:
    refs = report["references"]
    print(f"problem: {report['problem']['problem']}")
    print(
        f"references: g*={refs['g_star']:.12g} p*={refs['p_star']:.12g} "
        f"({refs['method']}{', FLAGGED' if refs['flagged'] else ''})"
    )
    for solver, info in report["solvers"].items():
        line = f"{solver}: oracle_calls={info['oracle_calls']}"
        if "f_hat" in info:
            line += (
                f" rounds={info['bisection_rounds']} f_hat={info['f_hat']:.12g} "
                f"interval=[{info['interval'][0]:.12g}, {info['interval'][1]:.12g}]"
            )
        print(line)
        for check in info.get("verification", []):
            status = "ok" if check["passed"] else "FAIL"
            print(f"  [{status}] {check['name']} (lhs={check['lhs']:.6g}, rhs={check['rhs']:.6g})")
    print(f"verification: {'ok' if report['verification_ok'] else 'FAILED'}")


def _cmd_solve(args) -> int:
    cfg = _config_from_args(args, default_solvers=[args.solver])
    report = run_experiment(cfg)
    _print_report(report)
    return 0 if report["verification_ok"] else 2


def _cmd_bench(args) -> int:
    cfg = _config_from_args(args)
    report = run_experiment(cfg)
    _print_report(report)
    return 0 if report["verification_ok"] else 2


def _cmd_verify(args) -> int:
    with open(args.certificate) as fh:
        payload = json.load(fh)
    if payload.get("schema") != CERT_SCHEMA:
        raise ValueError(f"unrecognized certificate schema {payload.get('schema')!r}")
    desc = payload["problem"]
    spec = from_config(desc["problem"], desc.get("data"), desc.get("params"), desc.get("seed", 0))
    cert = SolutionCertificate.from_dict(payload["certificate"])
    refs = payload.get("references", {})
    report: VerificationReport = verify_certificate(
        spec.problem,
        cert,
        g_star_oracle=refs.get("g_star"),
        p_star_oracle=refs.get("p_star"),
    )
    for c in report.checks:
        status = "ok" if c.passed else "FAIL"
        print(f"[{status}] {c.name} (lhs={c.lhs:.6g}, rhs={c.rhs:.6g})")
    print("verification:", "ok" if report.ok else "FAILED")
    return 0 if report.ok else 2


def _cmd_prox_test(args) -> int:
    results = run_prox_suite(instances=args.instances, seed=args.seed)
    all_ok = True
    for r in results:
        status = "ok" if r.ok else "FAIL"
        print(
            f"[{status}] {r.family}: {r.instances} instances, "
            f"max objective gap {r.max_objective_gap:.3g} (tol {r.tolerance:g})"
        )
        all_ok = all_ok and r.ok
    return 0 if all_ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bisectbio",
        description="Bilevel bisection solver and first-order benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solver on one problem")
    _add_common(p_solve)
    p_solve.add_argument("--solver", choices=SOLVER_IDS, default="bisec-bio")
    p_solve.set_defaults(func=_cmd_solve)

    p_bench = sub.add_parser("bench", help="run a multi-solver comparison")
    _add_common(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_verify = sub.add_parser("verify", help="re-check a certificate file")
    p_verify.add_argument("certificate")
    p_verify.set_defaults(func=_cmd_verify)

    p_prox = sub.add_parser("prox-test", help="projection oracle-equivalence suite")
    p_prox.add_argument("--instances", type=int, default=100)
    p_prox.add_argument("--seed", type=int, default=0)
    p_prox.set_defaults(func=_cmd_prox_test)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
