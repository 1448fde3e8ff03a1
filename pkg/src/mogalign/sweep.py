"""Seeded experiment sweeps over both pipeline variants, plus summary statistics."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .align import ALGORITHMS, AlignConfig
from .distill import KD_SAMPLING_TEMPER
from .metrics import DEFAULT_METRIC_SAMPLES, MetricsReport
from .models import InvalidParameterError
from .pipeline import VARIANTS, PipelineConfig, PipelineFailure, run_pipeline
from .reward import RewardSpec

METRIC_NAMES = ("overall_precision", "overall_recall", "target_precision", "final_avg_reward")

CSV_COLUMNS = (
    "variant",
    "algorithm",
    "beta",
    "iterations",
    "n_final",
    "seed",
    "failed",
    "overall_precision",
    "overall_recall",
    "target_precision",
    "final_avg_reward",
    "n_samples",
)


@dataclass(frozen=True)
class SweepSpec:
    algorithm: str
    beta_values: tuple[float, ...] = (1.0,)
    iteration_values: tuple[int, ...] = (2200,)
    n_final_values: tuple[int, ...] = (4,)
    n_trials: int = 20
    metric_samples: int = DEFAULT_METRIC_SAMPLES
    kd_temper: float = KD_SAMPLING_TEMPER
    base_seed: int = 0
    out_dir: str | None = None
    n_workers: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidParameterError(f"unknown algorithm {self.algorithm!r}")
        if not self.beta_values or not self.iteration_values or not self.n_final_values:
            raise InvalidParameterError("sweep value lists must be non-empty")
        if self.n_trials < 1:
            raise InvalidParameterError("n_trials must be >= 1")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "beta_values": list(self.beta_values),
            "iteration_values": list(self.iteration_values),
            "n_final_values": list(self.n_final_values),
            "n_trials": self.n_trials,
            "metric_samples": self.metric_samples,
            "kd_temper": self.kd_temper,
            "base_seed": self.base_seed,
            "out_dir": self.out_dir,
            "n_workers": self.n_workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        for key in ("beta_values", "iteration_values", "n_final_values"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class SweepRow:
    variant: str
    algorithm: str
    beta: float
    iterations: int
    n_final: int
    seed: int
    metrics: MetricsReport | None
    failed: bool


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow] = field(default_factory=list)


@dataclass(frozen=True)
class BoxStats:
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": list(self.outliers),
        }


def boxplot_stats(values) -> BoxStats:
    """Quartiles by linear interpolation; whiskers at the 1.5*IQR convention."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidParameterError("values must be non-empty")
    q1, med, q3 = np.percentile(values, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    outliers = np.sort(values[(values < lo_fence) | (values > hi_fence)])
    return BoxStats(
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=tuple(float(v) for v in outliers),
    )


def _run_cell(args) -> SweepRow:
    spec_dict, variant, beta, iterations, n_final, seed = args
    spec = SweepSpec.from_dict(spec_dict)
    cfg = PipelineConfig(
        variant=variant,
        align=AlignConfig(
            algorithm=spec.algorithm, beta=beta, iterations=iterations
        ),
        n_final=n_final,
        kd_temper=spec.kd_temper,
        seed=seed,
    )
    try:
        result = run_pipeline(cfg, RewardSpec(), metric_samples=spec.metric_samples)
        return SweepRow(
            variant, spec.algorithm, beta, iterations, n_final, seed,
            result.reports["final"], failed=False,
        )
    except PipelineFailure:
        return SweepRow(
            variant, spec.algorithm, beta, iterations, n_final, seed, None, failed=True
        )


def _row_csv(row: SweepRow) -> str:
    if row.metrics is None:
        tail = ",,,,"
    else:
        m = row.metrics
        tail = (
            f"{m.overall_precision!r},{m.overall_recall!r},"
            f"{m.target_precision!r},{m.final_avg_reward!r},{m.n_samples}"
        )
    return (
        f"{row.variant},{row.algorithm},{row.beta!r},{row.iterations},"
        f"{row.n_final},{row.seed},{int(row.failed)},{tail}\n"
    )


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run both variants over the full setting cross-product and all seeds.

    Failed trials are recorded, never aborting the sweep. When out_dir is
    set, rows are appended to results.csv as they complete; task order is
    fixed so reruns produce byte-identical output.
    """
    tasks = [
        (spec.to_dict(), variant, beta, iterations, n_final, spec.base_seed + trial)
        for beta in spec.beta_values
        for iterations in spec.iteration_values
        for n_final in spec.n_final_values
        for trial in range(spec.n_trials)
        for variant in VARIANTS
    ]

    writer = None
    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            writer = open(out / "results.csv", "w")
            writer.write(",".join(CSV_COLUMNS) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write sweep output under {out}: {exc}") from exc

    result = SweepResult(spec=spec)
    try:
        if spec.n_workers > 1:
            with ProcessPoolExecutor(max_workers=spec.n_workers) as pool:
                rows = pool.map(_run_cell, tasks)
                for row in rows:
                    result.rows.append(row)
                    if writer:
                        writer.write(_row_csv(row))
                        writer.flush()
        else:
            for task in tasks:
                row = _run_cell(task)
                result.rows.append(row)
                if writer:
                    writer.write(_row_csv(row))
                    writer.flush()
    finally:
        if writer:
            writer.close()
    return result


def write_results_csv(result: SweepResult, path) -> None:
    with open(path, "w") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        for row in result.rows:
            f.write(_row_csv(row))


def load_results_csv(path, spec: SweepSpec | None = None) -> SweepResult:
    """Read a results.csv back into a SweepResult (figures consume only this)."""
    rows = []
    algorithm = "ppo"
    with open(path) as f:
        header = f.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise OSError(f"unexpected CSV header in {path}")
        for line in f:
            parts = line.rstrip("\n").split(",")
            rec = dict(zip(CSV_COLUMNS, parts))
            algorithm = rec["algorithm"]
            failed = rec["failed"] == "1"
            metrics = None
            if not failed:
                metrics = MetricsReport(
                    overall_precision=float(rec["overall_precision"]),
                    overall_recall=float(rec["overall_recall"]),
                    target_precision=float(rec["target_precision"]),
                    final_avg_reward=float(rec["final_avg_reward"]),
                    n_samples=int(rec["n_samples"]),
                )
            rows.append(
                SweepRow(
                    variant=rec["variant"],
                    algorithm=rec["algorithm"],
                    beta=float(rec["beta"]),
                    iterations=int(rec["iterations"]),
                    n_final=int(rec["n_final"]),
                    seed=int(rec["seed"]),
                    metrics=metrics,
                    failed=failed,
                )
            )
    if spec is None:
        spec = SweepSpec(algorithm=algorithm)
    return SweepResult(spec=spec, rows=rows)


def _setting_key(row: SweepRow) -> str:
    return f"beta={row.beta!r},iterations={row.iterations},n_final={row.n_final}"


def group_rows(result: SweepResult) -> dict[str, dict[str, list[SweepRow]]]:
    """rows grouped by setting key, then by variant; order of first appearance."""
    groups: dict[str, dict[str, list[SweepRow]]] = {}
    for row in result.rows:
        groups.setdefault(_setting_key(row), {}).setdefault(row.variant, []).append(row)
    return groups


def summarize(result: SweepResult) -> dict:
    """BoxStats per setting/variant/metric; failed trials counted, not pooled."""
    summary: dict = {}
    for key, by_variant in group_rows(result).items():
        summary[key] = {}
        for variant, rows in by_variant.items():
            ok = [r.metrics for r in rows if not r.failed]
            entry: dict = {"n_trials": len(rows), "failure_rate": 1.0 - len(ok) / len(rows)}
            for metric in METRIC_NAMES:
                values = [getattr(m, metric) for m in ok]
                entry[metric] = boxplot_stats(values).to_dict() if values else None
            summary[key][variant] = entry
    return summary


def comparison(result: SweepResult) -> dict:
    """Per-setting median deltas, align-first minus distill-first."""
    out: dict = {}
    summary = summarize(result)
    for key, by_variant in summary.items():
        if "AK" not in by_variant or "KA" not in by_variant:
            continue
        deltas = {}
        for metric in METRIC_NAMES:
            ak, ka = by_variant["AK"][metric], by_variant["KA"][metric]
            deltas[metric] = None if (ak is None or ka is None) else ak["median"] - ka["median"]
        out[key] = deltas
    return out


def emit_report(result: SweepResult, out_dir) -> list[Path]:
    """Write results.csv, summary.json, and comparison.json; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "results.csv", out / "summary.json", out / "comparison.json"]
        write_results_csv(result, paths[0])
        with open(paths[1], "w") as f:
            json.dump(summarize(result), f, indent=2, sort_keys=True)
        with open(paths[2], "w") as f:
            json.dump(comparison(result), f, indent=2, sort_keys=True)
    except OSError as exc:
        raise OSError(f"cannot write report under {out}: {exc}") from exc
    return paths
