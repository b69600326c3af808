"""Command line entry point: ``bgsub run|synth|bench|compare|suite``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, imaging, synth
from .frame_diff import FrameDiffParams
from .mog import MogParams
from .statistical import StatParams


def _add_algo_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", required=True, choices=sorted(harness.ALGORITHMS))
    g = p.add_argument_group("framediff")
    g.add_argument("--threshold", type=int, default=25)
    g = p.add_argument_group("statistical")
    g.add_argument("--train-frames", type=int, default=10)
    g.add_argument("--tau-delta", type=float, default=10.0)
    g.add_argument("--gamma-lo", type=float, default=0.8)
    g.add_argument("--gamma-hi", type=float, default=1.2)
    g.add_argument("--gamma-min", type=float, default=0.3)
    g = p.add_argument_group("mog")
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--learning-rate", type=float, default=0.05)
    g.add_argument("--bg-portion", type=float, default=0.7)
    g.add_argument("--init-variance", type=float, default=900.0)
    g.add_argument("--init-weight", type=float, default=0.05)


def _runner(args) -> harness.Runner:
    if args.algo == "framediff":
        return harness.FrameDiffRunner(FrameDiffParams(args.threshold))
    if args.algo == "statistical":
        params = StatParams(args.tau_delta, args.gamma_lo, args.gamma_hi, args.gamma_min)
        return harness.StatisticalRunner(params, train_frames=args.train_frames)
    return harness.MogRunner(MogParams(
        k=args.k, learning_rate=args.learning_rate, background_portion=args.bg_portion,
        init_variance=args.init_variance, init_weight=args.init_weight,
    ))


def _scene(args) -> synth.SceneSpec:
    if args.spec:
        return synth.load_spec(args.spec)
    suite = synth.standard_suite()
    if args.scene not in suite:
        raise ValueError(f"unknown scene {args.scene!r} (choose from {', '.join(suite)})")
    return suite[args.scene]


def cmd_run(args) -> None:
    runner = _runner(args)
    frames = imaging.load_sequence(args.input)
    result = harness.benchmark(runner, frames)
    imaging.save_mask_sequence(result.masks, args.output, prefix="mask", start_index=result.first_index)
    print(f"{args.algo}: wrote {len(result.masks)} masks to {args.output}")


def cmd_synth(args) -> None:
    spec = _scene(args)
    frames, truth = synth.generate(spec)
    fdir, tdir = synth.write_sequence(frames, truth, args.out)
    print(f"wrote {len(frames)} frames to {fdir} and ground truth to {tdir}")


def cmd_bench(args) -> None:
    runner = _runner(args)
    frames = imaging.load_sequence(args.input)
    truth = imaging.load_mask_sequence(args.truth)
    result = harness.benchmark(runner, frames, truth)
    rows = harness.metric_rows(result.algo, result.metrics)
    Path(args.report).write_text(harness.rows_to_csv(rows))
    print(harness.format_table(rows), end="")


def cmd_compare(args) -> None:
    spec = _scene(args)
    frames, truth = synth.generate(spec)
    report = harness.compare(frames, truth)
    report_path = Path(args.report)
    report_path.write_text(report.csv())
    report_path.with_suffix(".txt").write_text(report.table())
    print(report.table(), end="")


def cmd_suite(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, spec in synth.standard_suite().items():
        synth.save_spec(spec, out / f"{name}.spec")
        print(out / f"{name}.spec")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bgsub", description="Background subtraction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="write masks for a directory of PPM frames")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_algo_flags(p)
    p.set_defaults(func=cmd_run)

    for name, func, help_ in (("synth", cmd_synth, "render a synthetic scene to PPM/PGM"),
                              ("compare", cmd_compare, "compare all three algorithms on a scene")):
        p = sub.add_parser(name, help=help_)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--spec", help="scene spec file (key = value lines)")
        src.add_argument("--scene", help="name from the built-in suite")
        if name == "synth":
            p.add_argument("--out", required=True)
        else:
            p.add_argument("--report", required=True, help="CSV path; an aligned .txt table is written beside it")
        p.set_defaults(func=func)

    p = sub.add_parser("bench", help="score one algorithm against ground-truth masks")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True)
    _add_algo_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("suite", help="write the built-in scene specs as files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, ZeroDivisionError) as exc:
        print(f"bgsub: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
