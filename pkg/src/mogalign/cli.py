"""Command-line surface for fitting, aligning, sweeping, and plotting."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .align import ALGORITHMS, AlignConfig, align
from .distill import KD_SAMPLING_TEMPER, run_kd, run_sft
from .metrics import evaluate_metrics, starvation_factor
from .models import MoGParams, make_ground_truth, make_target
from .numerics import TrainingDiverged, finite_diff_check, random_check_instance
from .pipeline import PipelineConfig, PipelineFailure, run_pipeline
from .plots import emit_svg
from .reward import PreferencePair, RewardSpec, prefer, shaped_reward
from .sweep import SweepSpec, emit_report, load_results_csv, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as f:
        return json.load(f)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_sft(args) -> int:
    model = run_sft(np.random.default_rng(args.seed))
    out = _out_dir(args) / "sft.json"
    model.save(out)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_kd(args) -> int:
    teacher = MoGParams.load(args.teacher)
    model = run_kd(teacher, args.n_final, np.random.default_rng(args.seed), temper=args.temper)
    out = _out_dir(args) / "kd.json"
    model.save(out)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_align(args) -> int:
    init = MoGParams.load(args.init)
    ref = MoGParams.load(args.ref) if args.ref else init
    cfg = AlignConfig(algorithm=args.algorithm, beta=args.beta, iterations=args.iterations)
    try:
        model, log = align(init, ref, RewardSpec(), cfg, np.random.default_rng(args.seed))
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    out = _out_dir(args)
    model.save(out / "aligned.json")
    log.write_csv(out / "train_log.csv")
    print(f"wrote {out / 'aligned.json'} and {out / 'train_log.csv'}")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = _load_config(args.config)
    if config:
        cfg = PipelineConfig.from_dict(config)
    else:
        cfg = PipelineConfig(
            variant=args.variant,
            align=AlignConfig(
                algorithm=args.algorithm, beta=args.beta, iterations=args.iterations
            ),
            n_final=args.n_final,
            seed=args.seed,
        )
    try:
        result = run_pipeline(cfg, out_dir=_out_dir(args))
    except PipelineFailure as exc:
        print(f"pipeline failed: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    for stage, report in result.reports.items():
        print(f"{stage}: {json.dumps(report.to_dict())}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if args.out is not None:
        config["out_dir"] = args.out
    if "algorithm" not in config and args.algorithm:
        config["algorithm"] = args.algorithm
    if args.seed is not None:
        config.setdefault("base_seed", args.seed)
    spec = SweepSpec.from_dict(config)
    result = run_sweep(spec)
    failed = sum(r.failed for r in result.rows)
    print(f"{len(result.rows)} trials ({failed} failed)")
    if spec.out_dir:
        emit_report(result, spec.out_dir)
        print(f"report written under {spec.out_dir}")
    return EXIT_OK


def _cmd_report(args) -> int:
    result = load_results_csv(args.results)
    for path in emit_report(result, _out_dir(args)):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    result = load_results_csv(args.results) if args.results else None
    model = MoGParams.load(args.model) if args.model else None
    out = Path(args.out or f"{args.kind}.svg")
    emit_svg(result, args.kind, out, model=model, seed=args.seed or 0)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_check_grad(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.n):
        model, p = random_check_instance(rng)
        worst = max(worst, finite_diff_check(model, p, h=1e-5))
    print(f"max relative error over {args.n} instances: {worst:.3e}")
    return EXIT_OK if worst < 1e-5 else EXIT_DIVERGED


def _cmd_diagnose_trap(args) -> int:
    """Quantify the learning trap a reference imposes on target-ward updates."""
    ref = MoGParams.load(args.ref)
    policy = MoGParams.load(args.policy) if args.policy else ref
    spec = RewardSpec()
    target = make_target()
    rng = np.random.default_rng(args.seed)
    from .models import log_density, sample as draw

    on_target = draw(target, 1.0, args.n, rng)
    off_target = draw(make_ground_truth(), 1.0, args.n, rng)
    factors = []
    for w, l in zip(on_target, off_target):
        pair = prefer(w, l, spec)
        factors.append(starvation_factor(ref, policy, pair, args.beta))
    factors = np.asarray(factors)

    r = np.asarray([10.0] * args.n)
    shaped = shaped_reward(
        r, log_density(policy, on_target), log_density(ref, on_target), args.beta
    )
    print(f"median starvation factor sigma(-z): {np.median(factors):.3e}")
    print(f"fraction of pairs with sigma(-z) < 1e-3: {np.mean(factors < 1e-3):.3f}")
    print(f"median shaped reward at target samples: {np.median(shaped):.3f}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="mogalign", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=str, default=None)
    common.add_argument("--config", type=str, default=None, help="JSON config file")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("sft", parents=[common]).set_defaults(func=_cmd_sft)

    p = sub.add_parser("kd", parents=[common])
    p.add_argument("--teacher", required=True)
    p.add_argument("--n-final", type=int, default=4, dest="n_final")
    p.add_argument("--temper", type=float, default=KD_SAMPLING_TEMPER)
    p.set_defaults(func=_cmd_kd)

    p = sub.add_parser("align", parents=[common])
    p.add_argument("--init", required=True)
    p.add_argument("--ref", default=None)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="ppo")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=2200)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("pipeline", parents=[common])
    p.add_argument("--variant", choices=("KA", "AK"), default="AK")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="ppo")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=2200)
    p.add_argument("--n-final", type=int, default=4, dest="n_final")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--algorithm", choices=ALGORITHMS, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", parents=[common])
    p.add_argument("--results", required=True, help="path to results.csv")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("plot", parents=[common])
    p.add_argument("--kind", choices=("boxplot", "scatter", "density"), required=True)
    p.add_argument("--results", default=None, help="results.csv (boxplot)")
    p.add_argument("--model", default=None, help="model JSON (scatter/density)")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("check-grad", parents=[common])
    p.add_argument("--n", type=int, default=100)
    p.set_defaults(func=_cmd_check_grad)

    p = sub.add_parser("diagnose-trap", parents=[common])
    p.add_argument("--ref", required=True, help="reference model JSON")
    p.add_argument("--policy", default=None, help="policy model JSON (default: ref)")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1000)
    p.set_defaults(func=_cmd_diagnose_trap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
