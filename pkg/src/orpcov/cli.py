"""Command line front end.

Subcommands: ``analytic``, ``simulate``, ``figure``, ``validate``, ``sweep``.
Exit status is 0 on success, 1 when a configuration is rejected or a
validation run finds disagreement, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, analytic, experiments, simulator, validation
from .core import CoverageError, NumericalInstability, Scheme, ToleranceNotMet
from .experiments import ExperimentConfig, _num

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return experiments.parse_values(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    p.add_argument("--config", type=Path, help="INI experiment record; flags override its values")
    p.add_argument("--scheme", action="append", help="orp-sa, orp-as, orp-mpg, orp-as-mpg or stc (repeatable, or comma separated)")
    p.add_argument("--Nt", dest="n_tx", type=int)
    p.add_argument("--Nr", dest="n_rx", type=int)
    p.add_argument("--N", dest="n_beams", type=int)
    p.add_argument("--D", dest="n_slots", type=int)
    t = p.add_mutually_exclusive_group()
    t.add_argument("--T-db", dest="t_db", type=float, help="SINR threshold in dB")
    t.add_argument("--T", dest="t_lin", type=float, help="SINR threshold, linear")
    r = p.add_mutually_exclusive_group()
    r.add_argument("--rho-db", dest="rho_db", type=float, help="transmit SNR in dB")
    r.add_argument("--rho", dest="rho_lin", type=float, help="transmit SNR, linear")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", dest="master_seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--sampler", choices=simulator.SAMPLERS)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="orpcov", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"orpcov {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("analytic", parents=[common], allow_abbrev=False, help="closed-form coverage")
    sub.add_parser("simulate", parents=[common], allow_abbrev=False, help="Monte Carlo coverage estimate")

    fig = sub.add_parser("figure", parents=[common], allow_abbrev=False, help="reproduce one figure as a table")
    fig.add_argument("figure_id", type=int, choices=experiments.FIGURES)
    fig.add_argument("--analytic-only", action="store_true", help="skip the simulated series")

    val = sub.add_parser("validate", parents=[common], allow_abbrev=False, help="closed form against quadrature and Monte Carlo")
    val.add_argument("--beams", type=_float_list, help="beam counts, e.g. 2,3,6,12")
    val.add_argument("--thresholds", type=_float_list, help="linear thresholds")
    val.add_argument("--rhos", type=_float_list, help="linear SNRs")
    val.add_argument("--perturb", metavar="N:T:RHO:REL", help="scale one closed-form value by (1 + REL); harness self-test")

    sw = sub.add_parser("sweep", parents=[common], allow_abbrev=False, help="coverage along one axis")
    sw.add_argument("--axis", choices=experiments.AXES, help="swept parameter")
    sw.add_argument("--values", type=_float_list, help="axis values: a:b, a:b:step or a,b,c")
    sw.add_argument("--analytic-only", action="store_true")
    return parser


def _schemes(raw: list[str] | None) -> tuple[str, ...] | None:
    if not raw:
        return None
    names = tuple(s.strip() for item in raw for s in item.split(",") if s.strip())
    for s in names:
        try:
            Scheme.parse(s)
        except ValueError as err:
            raise UsageError(str(err)) from None
    return names


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.config is not None:
        try:
            base = ExperimentConfig.from_ini(args.config.read_text(encoding="utf-8"))
        except (OSError, ValueError) as err:
            raise UsageError(f"cannot read config {args.config}: {err}") from None
    changes = dict(
        schemes=_schemes(args.scheme),
        n_tx=args.n_tx,
        n_rx=args.n_rx,
        n_beams=args.n_beams,
        n_slots=args.n_slots,
        trials=args.trials,
        master_seed=args.master_seed,
        sampler=args.sampler,
        out=args.out,
        format=args.format,
        axis=getattr(args, "axis", None),
        axis_values=getattr(args, "values", None),
    )
    if args.t_db is not None:
        changes.update(threshold=args.t_db, threshold_unit="db")
    elif args.t_lin is not None:
        changes.update(threshold=args.t_lin, threshold_unit="linear")
    if args.rho_db is not None:
        changes.update(rho=args.rho_db, rho_unit="db")
    elif args.rho_lin is not None:
        changes.update(rho=args.rho_lin, rho_unit="linear")
    try:
        return base.with_overrides(**changes)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _emit(text: str, out: str) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(header: list[str], rows: list[list], meta: dict[str, str], fmt: str) -> str:
    if fmt == "json":
        doc = {"rows": [dict(zip(header, r)) for r in rows], "metadata": dict(sorted(meta.items()))}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_num(v) if isinstance(v, (int, float)) else str(v) for v in r) + "\n")
    for k in sorted(meta):
        buf.write(f"# {k}={meta[k]}\n")
    return buf.getvalue()


def cmd_analytic(exp: ExperimentConfig) -> int:
    cfg = exp.system()
    rows = [[s, analytic.coverage(cfg, Scheme.parse(s))] for s in exp.schemes]
    meta = exp.metadata()
    for k in ("trials", "master_seed", "sampler"):
        meta.pop(k)
    _emit(_table(["scheme", "coverage"], rows, meta, exp.format), exp.out)
    return EXIT_OK


def cmd_simulate(exp: ExperimentConfig, threads: int) -> int:
    cfg = exp.system()
    specs = [(cfg, Scheme.parse(s)) for s in exp.schemes]
    estimates = simulator.estimate_many(specs, exp.trials, exp.master_seed, threads, exp.sampler)
    rows = [[s, e.p_hat, e.ci_half_width, e.trials, e.master_seed] for s, e in zip(exp.schemes, estimates)]
    _emit(_table(["scheme", "p_hat", "ci_half_width", "trials", "master_seed"], rows, exp.metadata(), exp.format), exp.out)
    return EXIT_OK


def cmd_figure(figure_id: int, exp: ExperimentConfig, threads: int, analytic_only: bool, sampler: str | None) -> int:
    result = experiments.run_figure(figure_id, exp.trials, exp.master_seed, threads, sampler, simulate=not analytic_only)
    _emit(result.render(exp.format), exp.out)
    return EXIT_OK


def _parse_perturb(text: str):
    try:
        n, t, rho, rel = text.split(":")
        n, t, rho, rel = int(n), float(t), float(rho), float(rel)
    except ValueError:
        raise UsageError(f"--perturb expects N:T:RHO:REL, got {text!r}") from None

    def perturb(pn, pt, prho, value):
        if pn == n and pt == t and prho == rho:
            return value * (1.0 + rel)
        return value

    return perturb


def cmd_validate(args: argparse.Namespace, exp: ExperimentConfig, threads: int) -> int:
    beams = tuple(int(b) for b in args.beams) if args.beams else validation.GRID_BEAMS
    thresholds = args.thresholds or validation.GRID_THRESHOLDS
    rhos = args.rhos or validation.GRID_RHOS
    perturb = _parse_perturb(args.perturb) if args.perturb else None
    n_tx = args.n_tx or 32
    report = validation.run_grid(beams, thresholds, rhos, n_tx, exp.trials, exp.master_seed, threads, perturb=perturb)
    header = ["N", "T", "rho", "closed_form", "quadrature", "quad_rel_dev", "p_hat", "ci_half_width", "mc_dev", "ok"]
    rows = [
        [p.n_beams, p.threshold, p.rho, p.closed_form, p.quadrature, p.quad_rel_dev,
         p.estimate.p_hat, p.mc_half_width, p.mc_dev, "pass" if p.ok else "FAIL"]
        for p in report.points
    ]
    wq, wm = report.worst_quadrature(), report.worst_monte_carlo()
    meta = {
        "version": f"orpcov-{__version__}",
        "n_tx": str(n_tx),
        "trials": str(exp.trials),
        "master_seed": str(exp.master_seed),
        "worst_quadrature": f"N={wq.n_beams} T={_num(wq.threshold)} rho={_num(wq.rho)} rel_dev={wq.quad_rel_dev:.3e}",
        "worst_monte_carlo": f"N={wm.n_beams} T={_num(wm.threshold)} rho={_num(wm.rho)} dev={wm.mc_dev:.3e} half_width={wm.mc_half_width:.3e}",
        "result": "pass" if report.passed else f"FAIL ({len(report.failures)} of {len(report.points)} points)",
    }
    _emit(_table(header, rows, meta, exp.format), exp.out)
    for p in report.failures:
        print(f"disagreement at N={p.n_beams}, T={_num(p.threshold)}, rho={_num(p.rho)}: "
              f"closed={p.closed_form!r} quadrature={p.quadrature!r} p_hat={p.estimate.p_hat!r}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(exp: ExperimentConfig, threads: int, analytic_only: bool) -> int:
    if not exp.axis or not exp.axis_values:
        raise UsageError("sweep needs --axis and --values (or axis/axis_values in --config)")
    result = experiments.run_sweep(exp, threads, simulate=not analytic_only)
    _emit(result.render(exp.format), exp.out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad usage
    try:
        exp = experiment_from_args(args)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if exp.trials < 1:
            raise UsageError("--trials must be >= 1")
        if args.command == "analytic":
            return cmd_analytic(exp)
        if args.command == "simulate":
            return cmd_simulate(exp, args.threads)
        if args.command == "figure":
            return cmd_figure(args.figure_id, exp, args.threads, args.analytic_only, args.sampler)
        if args.command == "validate":
            return cmd_validate(args, exp, args.threads)
        return cmd_sweep(exp, args.threads, args.analytic_only)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"orpcov: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (CoverageError, NumericalInstability, ToleranceNotMet, ValueError) as err:
        print(f"orpcov: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
