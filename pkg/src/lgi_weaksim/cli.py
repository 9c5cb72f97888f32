"""Command-line harness emitting stable CSV datasets.

Subcommands: sweep (exact estimators over theta), fig2 (paired +/- sign
sweeps), fig3 (correlator vs theta per strength plus the zero-strength
limit curve), gate (PPBS gate figures of merit), mc (seeded Monte Carlo
trials).

Every file starts with a '#'-commented manifest recording the subcommand
and all resolved parameters; re-running the same invocation reproduces the
file byte for byte. Data values are written with 9 significant digits, '.'
decimal separator, ',' field separator and '\\n' line endings. Exit codes:
0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__, experiment, optics, qcore, stats
from .errors import DegenerateConditioningError, UndefinedSignificanceError

MANIFEST_HEADER = "# lgi-weaksim manifest v1"

# K used by the gate subcommand's correlator ceiling column.
GATE_REFERENCE_K = 0.5445

_TWO_PI = 2.0 * math.pi

_SWEEP_COLUMNS = (
    "theta_rad", "k", "mb_sign",
    "p_dd", "p_da", "p_ad", "p_aa",
    "s1", "s2", "s1s2", "b", "wv", "postselect_prob",
)


def _format_real(value: float) -> str:
    return "%.9g" % value


def _manifest_lines(subcommand: str, params: dict[str, object]) -> list[str]:
    lines = [MANIFEST_HEADER, f"# version={__version__}", f"# subcommand={subcommand}"]
    for key in sorted(params):
        value = params[key]
        if isinstance(value, float):
            text = repr(value)
        elif isinstance(value, (list, tuple)):
            text = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        else:
            text = str(value)
        lines.append(f"# {key}={text}")
    return lines


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    handle, tmp_path = tempfile.mkstemp(dir=directory, prefix=".lgi-weaksim-", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as stream:
            stream.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _emit_csv(
    path: str,
    manifest: list[str],
    header: tuple[str, ...] | list[str],
    rows: list[list[str]],
    trailer: list[str] | None = None,
    quiet: bool = False,
) -> None:
    lines = list(manifest)
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    if trailer:
        lines.extend(trailer)
    _write_atomic(path, "\n".join(lines) + "\n")
    if not quiet:
        print(f"wrote {path} ({len(rows)} rows)")


def _check_strength(parser: argparse.ArgumentParser, k: float, flag: str = "--k") -> None:
    if not experiment.MIN_KNOWLEDGE <= k <= 1.0:
        parser.error(f"{flag} must lie in [{experiment.MIN_KNOWLEDGE:g}, 1], got {k:g}")


def _check_steps(parser: argparse.ArgumentParser, steps: int) -> None:
    if steps < 2:
        parser.error(f"--theta-steps must be at least 2, got {steps}")


def _resolve_gate(parser: argparse.ArgumentParser, gate: str, visibility: float | None) -> experiment.GateModel:
    if gate == "ideal":
        if visibility is not None:
            parser.error("--visibility requires --gate ppbs")
        return experiment.IDEAL_GATE
    if visibility is not None and not 0.0 <= visibility <= 1.0:
        parser.error(f"--visibility must lie in [0, 1], got {visibility:g}")
    return experiment.GateModel(kind="ppbs", visibility=visibility)


def _sweep_table(
    k: float,
    mb_sign: int,
    gate_model: experiment.GateModel,
    steps: int,
    degrees: bool,
) -> tuple[list[str], list[list[str]]]:
    header = list(_SWEEP_COLUMNS)
    if degrees:
        header[0] = "theta_deg"
    meter = qcore.from_knowledge(k)
    rows = []
    for theta in np.linspace(0.0, _TWO_PI, steps):
        config = experiment.ExperimentConfig(
            theta=float(theta), meter=meter, mb_sign=mb_sign, gate_model=gate_model
        )
        table = experiment.run(config)
        record = experiment.lg_b(config)
        # the wv column is the S1 weak value; mb_sign affects b only
        try:
            wv = experiment.weak_value(replace(config, mb_sign=+1)).wv
        except DegenerateConditioningError:
            wv = math.nan
        angle = math.degrees(theta) if degrees else float(theta)
        rows.append(
            [_format_real(angle), _format_real(k), str(mb_sign)]
            + [_format_real(p) for p in (table.p_dd, table.p_da, table.p_ad, table.p_aa)]
            + [
                _format_real(record.s1_mean),
                _format_real(record.s2_mean),
                _format_real(record.s1s2_corr),
                _format_real(record.b),
                _format_real(wv),
                _format_real(table.postselect_d),
            ]
        )
    return header, rows


def _sign_value(flag: str) -> int:
    return +1 if flag == "+" else -1


def _cmd_sweep(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _check_strength(parser, args.k)
    _check_steps(parser, args.theta_steps)
    gate_model = _resolve_gate(parser, args.gate, args.visibility)
    mb_sign = _sign_value(args.mb_sign)
    header, rows = _sweep_table(args.k, mb_sign, gate_model, args.theta_steps, args.degrees)
    params = {
        "k": args.k,
        "theta_steps": args.theta_steps,
        "mb_sign": mb_sign,
        "gate": gate_model.kind,
        "degrees": args.degrees,
        "seed": args.seed,
        "out": args.out,
    }
    if gate_model.kind == "ppbs":
        params["visibility"] = gate_model.visibility
    _emit_csv(args.out, _manifest_lines("sweep", params), header, rows, quiet=args.quiet)
    return 0


def _cmd_fig2(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _check_strength(parser, args.k)
    _check_steps(parser, args.theta_steps)
    for mb_sign, suffix in ((+1, "a"), (-1, "b")):
        path = f"{args.out_prefix}_{suffix}.csv"
        header, rows = _sweep_table(args.k, mb_sign, experiment.IDEAL_GATE, args.theta_steps, args.degrees)
        params = {
            "k": args.k,
            "theta_steps": args.theta_steps,
            "mb_sign": mb_sign,
            "gate": "ideal",
            "degrees": args.degrees,
            "seed": args.seed,
            "out": path,
        }
        _emit_csv(path, _manifest_lines("fig2", params), header, rows, quiet=args.quiet)
    return 0


def _interval_comment(label: str, interval: tuple[float, float] | None) -> str:
    if interval is None:
        return f"# violation_interval k={label} none"
    lo, hi = interval
    return (
        f"# violation_interval k={label} lo={_format_real(lo)} "
        f"hi={_format_real(hi)} width={_format_real(hi - lo)}"
    )


def _cmd_fig3(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        k_list = [float(item) for item in args.k_list.split(",") if item.strip()]
    except ValueError:
        parser.error(f"--k-list must be comma-separated reals, got {args.k_list!r}")
    if not k_list:
        parser.error("--k-list must name at least one strength")
    for k in k_list:
        _check_strength(parser, k, flag="--k-list")
    _check_steps(parser, args.theta_steps)
    mb_sign = _sign_value(args.mb_sign)

    grid = experiment.ThetaGrid(0.0, _TWO_PI, args.theta_steps)
    thetas = grid.values()
    header = ["theta_deg" if args.degrees else "theta_rad"]
    columns = [np.degrees(thetas) if args.degrees else thetas]
    trailer = []
    for k in k_list:
        sweep = experiment.theta_sweep(k, mb_sign, experiment.IDEAL_GATE, grid)
        header.append(f"b_k{k:g}")
        columns.append(np.array([record.b for _, record, _ in sweep]))
        trailer.append(_interval_comment(f"{k:g}", experiment.violation_interval(k, mb_sign=mb_sign)))
    # zero-strength limit is analytic; the 1/K calibration forbids simulating K=0
    header.append("b_k0")
    columns.append(mb_sign * np.cos(thetas) - np.sin(thetas))
    if mb_sign > 0:
        trailer.append(_interval_comment("0", (1.5 * math.pi, 2.0 * math.pi)))
    else:
        trailer.append(_interval_comment("0", (math.pi, 1.5 * math.pi)))

    rows = [[_format_real(col[i]) for col in columns] for i in range(len(thetas))]
    params = {
        "k_list": [float(k) for k in k_list],
        "theta_steps": args.theta_steps,
        "mb_sign": mb_sign,
        "degrees": args.degrees,
        "seed": args.seed,
        "out": args.out,
    }
    _emit_csv(args.out, _manifest_lines("fig3", params), header, rows, trailer, quiet=args.quiet)
    return 0


def _cmd_gate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not 0.0 <= args.visibility <= 1.0:
        parser.error(f"--visibility must lie in [0, 1], got {args.visibility:g}")
    emap = optics.effective_map(args.visibility)
    fidelity = optics.process_fidelity_to_cz(emap)
    _, b_star = experiment.b_max(
        GATE_REFERENCE_K, experiment.GateModel(kind="ppbs", visibility=args.visibility)
    )
    header = ("visibility", "success_probability", "process_fidelity", "b_max")
    rows = [[_format_real(v) for v in (args.visibility, emap.success_probability, fidelity, b_star)]]
    params = {
        "visibility": args.visibility,
        "k": GATE_REFERENCE_K,
        "seed": args.seed,
        "out": args.out,
    }
    _emit_csv(args.out, _manifest_lines("gate", params), header, rows, quiet=args.quiet)
    return 0


def _cmd_mc(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _check_strength(parser, args.k)
    if args.pairs < 1:
        parser.error(f"--pairs must be at least 1, got {args.pairs}")
    if args.trials < 1:
        parser.error(f"--trials must be at least 1, got {args.trials}")
    if not math.isfinite(args.theta):
        parser.error(f"--theta must be finite, got {args.theta!r}")

    plan = stats.TrialPlan(n_pairs=args.pairs, n_trials=args.trials, master_seed=args.seed)
    config = experiment.ExperimentConfig(theta=args.theta, meter=qcore.from_knowledge(args.k))
    summary = stats.run_trials(plan, config)

    header = ("trial", "b", "b_sigma", "b_significance", "wv", "wv_sigma")
    rows = []
    for index, (estimate, weak) in enumerate(zip(summary.estimates, summary.weak_values)):
        try:
            b_sig = stats.significance(estimate, bound=1.0)
        except UndefinedSignificanceError:
            b_sig = math.nan
        wv_value, wv_sigma = (weak.value, weak.sigma) if weak is not None else (math.nan, math.nan)
        rows.append(
            [str(index)]
            + [_format_real(v) for v in (estimate.value, estimate.sigma, b_sig, wv_value, wv_sigma)]
        )
    trailer = [
        f"# summary true_b={_format_real(summary.true_b)}",
        f"# summary mean_b={_format_real(summary.mean_b)}",
        f"# summary mean_sigma={_format_real(summary.mean_sigma)}",
        f"# summary spread={_format_real(summary.spread)}",
        f"# summary coverage={_format_real(summary.coverage)}",
    ]
    params = {
        "k": args.k,
        "theta": args.theta,
        "pairs": args.pairs,
        "trials": args.trials,
        "seed": args.seed,
        "out": args.out,
    }
    _emit_csv(args.out, _manifest_lines("mc", params), header, rows, trailer, quiet=args.quiet)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgi-weaksim",
        description="Simulate the variable-strength Leggett-Garg protocol and emit CSV datasets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for sampled data")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")

    sweep = subparsers.add_parser(
        "sweep", parents=[common], help="exact estimator sweep over the preparation angle"
    )
    sweep.add_argument("--k", type=float, default=0.5445, help="measurement strength K")
    sweep.add_argument("--theta-steps", type=int, default=256, help="grid points on [0, 2pi]")
    sweep.add_argument("--mb-sign", choices=("+", "-"), default="+", help="sign convention for Mb")
    sweep.add_argument("--gate", choices=("ideal", "ppbs"), default="ideal", help="gate model")
    sweep.add_argument("--visibility", type=float, default=None, help="PPBS photon visibility")
    sweep.add_argument("--degrees", action="store_true", help="report angles in degrees")
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.set_defaults(handler=_cmd_sweep)

    fig2 = subparsers.add_parser(
        "fig2", parents=[common], help="paired sweeps for Mb = +S1 and Mb = -S1"
    )
    fig2.add_argument("--k", type=float, default=0.5445, help="measurement strength K")
    fig2.add_argument("--theta-steps", type=int, default=256, help="grid points on [0, 2pi]")
    fig2.add_argument("--degrees", action="store_true", help="report angles in degrees")
    fig2.add_argument("--out-prefix", required=True, help="writes <prefix>_a.csv and <prefix>_b.csv")
    fig2.set_defaults(handler=_cmd_fig2)

    fig3 = subparsers.add_parser(
        "fig3", parents=[common], help="correlator vs angle per strength, with the K=0 limit curve"
    )
    fig3.add_argument("--k-list", default="0.5445,0.1598", help="comma-separated strengths")
    fig3.add_argument("--theta-steps", type=int, default=256, help="grid points on [0, 2pi]")
    fig3.add_argument("--mb-sign", choices=("+", "-"), default="+", help="sign convention for Mb")
    fig3.add_argument("--degrees", action="store_true", help="report angles in degrees")
    fig3.add_argument("--out", required=True, help="output CSV path")
    fig3.set_defaults(handler=_cmd_fig3)

    gate = subparsers.add_parser(
        "gate", parents=[common], help="PPBS gate figures of merit at a given visibility"
    )
    gate.add_argument("--visibility", type=float, default=1.0, help="photon visibility in [0, 1]")
    gate.add_argument("--out", required=True, help="output CSV path")
    gate.set_defaults(handler=_cmd_gate)

    mc = subparsers.add_parser(
        "mc", parents=[common], help="seeded Monte Carlo trials with propagated errors"
    )
    mc.add_argument("--k", type=float, default=0.5445, help="measurement strength K")
    mc.add_argument("--theta", type=float, required=True, help="preparation angle in radians")
    mc.add_argument("--pairs", type=int, default=100_000, help="photon pairs per trial")
    mc.add_argument("--trials", type=int, default=300, help="number of trials")
    mc.add_argument("--out", required=True, help="output CSV path")
    mc.set_defaults(handler=_cmd_mc)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, parser)
    except SystemExit:
        raise
    except Exception as exc:  # runtime failures exit 1, never into the CSV
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
