"""Command line entry point: ``specdraft <subcommand> [options]``.

Every subcommand prints a JSON report to stdout (or ``--report PATH``).
Exit codes: 0 success, 1 computation or input error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import cli_io as cio
from .alpha_fit import estimate_alpha
from .draft_optimizer import (
    GridSpec,
    fit_ansatz,
    fit_pooled,
    optimal_draft_size,
    skipped_cells,
    sweep_grid,
)
from .errors import SpecDraftError
from .regression import CurveForm, fit_alpha_plane, fit_draft_curve
from .scaling_models import (
    SpecSystem,
    TrainingBudgets,
    gamma_opt,
    throughput,
    throughput_at_opt,
)
from .specdec_sim import exact_alpha, simulate_tar, synth_pair


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _gamma_list(text: str) -> list[int]:
    """'1..9' or '1,2,4'."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad gamma list {text!r}") from None


def _model_args(p):
    p.add_argument("--plane", default="table3.json", help="plane coefficients JSON")
    p.add_argument("--chinchilla", default="chinchilla.json",
                   help="loss-law constants JSON (used for draft and target)")
    p.add_argument("--chinchilla-target", default=None,
                   help="separate loss-law constants for the target model")


def _budget_args(p):
    p.add_argument("--target-size", type=float, required=True)
    p.add_argument("--draft-tokens", type=float, required=True)
    p.add_argument("--target-tokens", type=float, required=True)
    p.add_argument("--grid", default="table4.toml", help="grid TOML supplying the N range")
    p.add_argument("--n-low", type=float)
    p.add_argument("--n-high", type=float)
    p.add_argument("--n-points", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specdraft", description=__doc__.splitlines()[0])
    parser.add_argument("--report", help="write the JSON report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.set_defaults(_subparsers=sub.choices)

    p = sub.add_parser("fit-plane", help="fit alpha = A x + B y + C")
    p.add_argument("--table", default="tables_1_2.csv")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--plane-out", help="also write fitted coefficients as plane JSON")

    p = sub.add_parser("alpha-estimate", help="estimate alpha from TAR samples")
    p.add_argument("--tar", required=True)

    for name in ("throughput", "gamma-opt"):
        p = sub.add_parser(name)
        p.add_argument("--target-size", type=float, required=True)
        p.add_argument("--draft-size", type=float, required=True)
        p.add_argument("--alpha", type=float, required=True)
        if name == "throughput":
            p.add_argument("--gamma", type=float, help="lookahead; optimal when omitted")

    p = sub.add_parser("optimal-draft", help="grid search for N*")
    _budget_args(p)
    _model_args(p)
    p.add_argument("--polish", action="store_true")

    p = sub.add_parser("sweep", help="N* over the (M, D, D') mesh")
    p.add_argument("--grid", default="table4.toml")
    _model_args(p)
    p.add_argument("--out", help="records CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--polish", action="store_true")

    for name in ("ansatz-fit", "pooled-fit"):
        p = sub.add_parser(name)
        p.add_argument("--records", required=True, help="sweep records CSV")

    p = sub.add_parser("curve-fit", help="alpha vs draft perplexity for one target")
    p.add_argument("--form", choices=[f.value for f in CurveForm], required=True)
    p.add_argument("--target", required=True, help="target_id in the alpha table")
    p.add_argument("--table", default="tables_1_2.csv")

    p = sub.add_parser("simulate", help="Monte-Carlo acceptance simulation")
    p.add_argument("--vocab", type=int, default=1000)
    p.add_argument("--knob", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gammas", type=_gamma_list, default=list(range(1, 10)))
    p.add_argument("--iterations", type=int, default=100_000)
    p.add_argument("--partitions", type=int, default=1)
    p.add_argument("--tar-out", help="write simulated TAR samples CSV")

    p = sub.add_parser("emit-curve", help="throughput vs N as CSV")
    _budget_args(p)
    _model_args(p)
    p.add_argument("--out", help="curve CSV path (stdout when omitted)")

    p = sub.add_parser("latency-report", help="aggregate latency measurements")
    p.add_argument("--latency", required=True)
    p.add_argument("--draft-size", type=float, required=True)
    p.add_argument("--optimal-draft", type=float, required=True)
    p.add_argument("--target-size", type=float, required=True)
    return parser


def _models(args):
    plane = cio.load_plane(args.plane)
    p_draft = cio.load_chinchilla(args.chinchilla)
    p_target = cio.load_chinchilla(args.chinchilla_target) if args.chinchilla_target else p_draft
    return plane, p_draft, p_target


def _n_grid(args) -> np.ndarray:
    lo, hi, pts = args.n_low, args.n_high, args.n_points
    if None in (lo, hi, pts):
        g = cio.load_grid(args.grid)
        lo = g.n_range[0] if lo is None else lo
        hi = g.n_range[1] if hi is None else hi
        pts = g.n_points if pts is None else pts
    spec = GridSpec((lo, hi), pts, (1, 2), 2, (1, 2), 2, (1, 2), 2)
    return spec.n_grid()


def _run(args) -> tuple[cio.Report, str | None, str | None]:
    """Returns (report, extra_text, extra_path)."""
    cmd = args.command
    K = cio.ReportKind
    if cmd == "fit-plane":
        obs = cio.load_alpha_table(cio.resolve_path(args.table))
        plane, res = fit_alpha_plane(obs, weighted=args.weighted)
        coeffs = {"a": plane.a, "b": plane.b, "c": plane.c}
        report = cio.Report(K.PLANE_FIT, {"plane": coeffs, "fit": res.to_dict()})
        if args.plane_out:
            return report, json.dumps(coeffs, indent=2) + "\n", args.plane_out
        return report, None, None

    if cmd == "alpha-estimate":
        est = estimate_alpha(cio.load_tar_samples(args.tar))
        return cio.Report(K.ALPHA_ESTIMATE, vars(est)), None, None

    if cmd in ("throughput", "gamma-opt"):
        system = SpecSystem(args.target_size, args.draft_size)
        g = gamma_opt(system, args.alpha)
        payload = {"target_size": args.target_size, "draft_size": args.draft_size,
                   "alpha": args.alpha, "gamma_opt": g}
        if cmd == "gamma-opt":
            payload["throughput"] = throughput_at_opt(system, args.alpha)
            return cio.Report(K.GAMMA_OPT, payload), None, None
        if args.gamma is None:
            payload.update(gamma=g, throughput=throughput_at_opt(system, args.alpha))
        else:
            payload.update(gamma=args.gamma, throughput=throughput(system, args.alpha, args.gamma))
        return cio.Report(K.THROUGHPUT, payload), None, None

    if cmd == "optimal-draft":
        plane, pd, pt = _models(args)
        rec = optimal_draft_size(args.target_size, TrainingBudgets(args.draft_tokens,
                                 args.target_tokens), plane, pd, pt, _n_grid(args),
                                 polish=args.polish)
        return cio.Report(K.OPTIMAL_DRAFT, rec.to_dict()), None, None

    if cmd == "sweep":
        plane, pd, pt = _models(args)
        grid = cio.load_grid(args.grid)
        records = sweep_grid(grid, plane, pd, pt, workers=args.workers, polish=args.polish)
        skipped = skipped_cells(grid, records)
        payload = {"cells": len(grid.cells()), "records": len(records),
                   "skipped": [list(c) for c in skipped],
                   "n_points": grid.n_points}
        csv_text = cio.records_csv(records)
        if args.out:
            payload["records_csv"] = args.out
        else:
            payload["rows"] = [r.to_dict() for r in records]
        return cio.Report(K.SWEEP, payload), csv_text if args.out else None, args.out

    if cmd in ("ansatz-fit", "pooled-fit"):
        records = cio.load_records(args.records)
        if cmd == "ansatz-fit":
            fit = fit_ansatz(records)
            payload = {"mu": fit.mu, "M0": fit.m0, "gamma": fit.log_draft_data_coef,
                       "gamma_prime": fit.log_target_data_coef,
                       "fit": fit.diagnostics.to_dict()}
            return cio.Report(K.ANSATZ_FIT, payload), None, None
        fit = fit_pooled(records)
        payload = {"mu": fit.mu, "M0": fit.m0, "inverse_mu": 1 / fit.mu,
                   "fit": fit.diagnostics.to_dict()}
        return cio.Report(K.POOLED_FIT, payload), None, None

    if cmd == "curve-fit":
        obs = [o for o in cio.load_alpha_table(cio.resolve_path(args.table))
               if o.target_id == args.target]
        if not obs:
            raise SpecDraftError(f"no rows for target {args.target!r}")
        res = fit_draft_curve(CurveForm(args.form), [(o.draft_ppl, o.alpha) for o in obs])
        return cio.Report(K.CURVE_FIT, {"target": args.target, "form": args.form,
                                        "fit": res.to_dict()}), None, None

    if cmd == "simulate":
        pair = synth_pair(args.vocab, args.knob, args.seed)
        sims = [simulate_tar(pair, g, args.iterations, args.seed + g,
                             partitions=args.partitions) for g in args.gammas]
        obs = [s.to_tar_observation() for s in sims]
        payload = {"vocab": args.vocab, "knob": args.knob, "seed": args.seed,
                   "exact_alpha": exact_alpha(pair),
                   "results": [s.to_dict() for s in sims]}
        if len(obs) >= 2:
            payload["alpha_estimate"] = vars(estimate_alpha(obs))
        text = cio.tar_samples_csv(obs) if args.tar_out else None
        return cio.Report(K.SIMULATION, payload), text, args.tar_out

    if cmd == "emit-curve":
        plane, pd, pt = _models(args)
        budgets = TrainingBudgets(args.draft_tokens, args.target_tokens)
        n = _n_grid(args)
        text = cio.emit_curve(args.target_size, budgets, plane, pd, pt, n)
        rec = optimal_draft_size(args.target_size, budgets, plane, pd, pt, n)
        payload = {"points": len(n), "optimal_draft": rec.optimal_draft,
                   "best_throughput": rec.best_throughput}
        if args.out:
            payload["curve_csv"] = args.out
            return cio.Report(K.CURVE, payload), text, args.out
        sys.stdout.write(text)
        return None, None, None

    if cmd == "latency-report":
        rep = cio.latency_report(cio.load_latency(args.latency), args.draft_size,
                                 args.optimal_draft, args.target_size)
        return cio.Report(K.LATENCY, vars(rep)), None, None

    raise AssertionError(cmd)


def _reject_unknown_flags(parser, argv):
    # argparse reports missing required options first; name stray flags up front
    subs = parser.get_default("_subparsers")
    cmd = next((a for a in argv if a in subs), None)
    if cmd is None:
        return
    sub = subs[cmd]
    known = set(parser._option_string_actions) | set(sub._option_string_actions)
    for tok in argv[argv.index(cmd) + 1:]:
        if tok.startswith("--") and tok.split("=", 1)[0] not in known:
            sub.error(f"unrecognized argument: {tok}")


def run_command(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        _reject_unknown_flags(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, extra, extra_path = _run(args)
    except (SpecDraftError, OSError, ValueError) as exc:
        print(f"specdraft {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if extra is not None and extra_path:
        cio.write_atomic(extra_path, extra)
    if report is not None:
        text = report.to_json() + "\n"
        if args.report:
            cio.write_atomic(args.report, text)
        else:
            sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
