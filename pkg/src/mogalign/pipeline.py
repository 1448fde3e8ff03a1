"""End-to-end pipeline orchestration: distill-then-align vs align-then-distill."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .align import AlignConfig, TrainLog, align
from .distill import KD_SAMPLING_TEMPER, run_kd, run_sft
from .metrics import DEFAULT_METRIC_SAMPLES, MetricsReport, evaluate_metrics
from .models import InvalidParameterError, MoGParams, make_ground_truth, make_target
from .numerics import TrainingDiverged
from .reward import RewardSpec

VARIANTS = ("KA", "AK")

# Fixed stage order for sub-seed derivation, so both pipeline variants share
# the same SFT artifact (and stage-comparable randomness) for a given seed.
_STAGES = ("sft", "kd", "align", "eval")


class PipelineFailure(RuntimeError):
    """A training stage diverged; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: TrainingDiverged):
        super().__init__(f"stage {stage!r} diverged: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    variant: str
    align: AlignConfig
    n_final: int = 4
    kd_temper: float = KD_SAMPLING_TEMPER
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n_final not in (3, 4):
            raise InvalidParameterError(f"n_final must be 3 or 4, got {self.n_final}")
        if self.kd_temper < 1.0:
            raise InvalidParameterError("kd_temper must be >= 1")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "align": self.align.to_dict(),
            "n_final": self.n_final,
            "kd_temper": self.kd_temper,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(
            variant=d["variant"],
            align=AlignConfig.from_dict(d["align"]),
            n_final=d.get("n_final", 4),
            kd_temper=d.get("kd_temper", KD_SAMPLING_TEMPER),
            seed=d.get("seed", 0),
        )


@dataclass
class PipelineResult:
    config: PipelineConfig
    sft: MoGParams
    intermediate: MoGParams
    final: MoGParams
    reports: dict = field(default_factory=dict)
    train_log: TrainLog | None = None


def stage_rngs(seed: int) -> dict[str, np.random.Generator]:
    """Independent per-stage generators derived deterministically from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(_STAGES))
    return {name: np.random.default_rng(ss) for name, ss in zip(_STAGES, children)}


def run_pipeline(
    cfg: PipelineConfig,
    spec: RewardSpec = RewardSpec(),
    metric_samples: int = DEFAULT_METRIC_SAMPLES,
    out_dir: str | Path | None = None,
) -> PipelineResult:
    """Run one pipeline variant end to end and evaluate every produced model.

    KA: SFT -> KD -> align (anchored to the KD student).
    AK: SFT -> align (anchored to the SFT model) -> KD with identical
    hyperparameters. The alignment policy always starts at its reference.
    """
    rngs = stage_rngs(cfg.seed)
    gt = make_ground_truth()
    target = make_target()

    stage = "sft"
    try:
        sft = run_sft(rngs["sft"])
        if cfg.variant == "KA":
            stage = "kd"
            intermediate = run_kd(sft, cfg.n_final, rngs["kd"], temper=cfg.kd_temper)
            stage = "align"
            final, train_log = align(intermediate, intermediate, spec, cfg.align, rngs["align"])
        else:
            stage = "align"
            intermediate, train_log = align(sft, sft, spec, cfg.align, rngs["align"])
            stage = "kd"
            final = run_kd(intermediate, cfg.n_final, rngs["kd"], temper=cfg.kd_temper)
    except TrainingDiverged as exc:
        raise PipelineFailure(stage, exc) from exc

    eval_rng = rngs["eval"]
    reports = {
        name: evaluate_metrics(model, gt, target, spec, metric_samples, eval_rng)
        for name, model in (("sft", sft), ("intermediate", intermediate), ("final", final))
    }
    result = PipelineResult(
        config=cfg,
        sft=sft,
        intermediate=intermediate,
        final=final,
        reports=reports,
        train_log=train_log,
    )
    if out_dir is not None:
        write_artifacts(result, out_dir)
    return result


def write_artifacts(result: PipelineResult, out_dir: str | Path) -> None:
    """Write stage models, metrics, and the training log under a run directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    result.sft.save(out / "sft.json")
    if cfg.variant == "KA":
        result.intermediate.save(out / "kd.json")
        result.final.save(out / "aligned.json")
    else:
        result.intermediate.save(out / "aligned.json")
        result.final.save(out / "kd.json")
    result.final.save(out / "final.json")
    with open(out / "metrics.json", "w") as f:
        json.dump(
            {
                "config": cfg.to_dict(),
                "reports": {k: v.to_dict() for k, v in result.reports.items()},
            },
            f,
            indent=2,
        )
    if result.train_log is not None:
        result.train_log.write_csv(out / "train_log.csv")
