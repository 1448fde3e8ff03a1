"""Distillation stages: maximum-likelihood fitting and component pruning.

SFT fits a fresh 6-component student to ground-truth samples by stochastic
gradient ascent on the batch log-likelihood. KD shrinks a teacher by
reparameterizing its mixture weights: the highest-weight components under
temperature-sharpened sampling are kept as-is and only the weight logits
are retrained against sharpened teacher samples.

Components are fixed-width throughout fitting: every student keeps its
per-component scale at the known ground-truth value, so a fit only decides
where modes sit and how much mass each one carries. (The alignment
trainers, by contrast, update all parameters.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (
    InvalidParameterError,
    MoGGrad,
    MoGParams,
    make_ground_truth,
    sample,
    tempered_weights,
    weighted_grad_log_density,
)
from .numerics import OptimizerState, sgd_step

SFT_COMPONENTS = 6
SFT_KD_ITERATIONS = 2000
DEFAULT_BATCH_SIZE = 256
DEFAULT_LEARNING_RATE = 1e-2
KD_SAMPLING_TEMPER = 1.25

INIT_MEAN_RANGE = 2.0
INIT_VARIANCE = 0.05

# Parameter groups a fit may update; component scales are never fitted.
TRAIN_WEIGHTS_AND_MEANS = ("weight_logits", "means")
TRAIN_WEIGHTS_ONLY = ("weight_logits",)


@dataclass(frozen=True)
class FitConfig:
    n_components: int
    iterations: int = SFT_KD_ITERATIONS
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    temper: float = 1.0

    def __post_init__(self):
        if self.n_components < 1 or self.iterations < 1 or self.batch_size < 1:
            raise InvalidParameterError("counts must be positive")
        if self.learning_rate <= 0:
            raise InvalidParameterError("learning_rate must be positive")
        if self.temper < 1.0:
            raise InvalidParameterError("temper must be >= 1")


def init_student(n_components: int, rng: np.random.Generator) -> MoGParams:
    """Random student: means uniform on [-2, 2]^2, std at the known GT scale."""
    return MoGParams(
        weight_logits=np.zeros(n_components),
        means=rng.uniform(-INIT_MEAN_RANGE, INIT_MEAN_RANGE, size=(n_components, 2)),
        log_stds=np.full(n_components, 0.5 * np.log(INIT_VARIANCE)),
    )


def _restrict(grad: MoGGrad, trainable: tuple[str, ...]) -> MoGGrad:
    return MoGGrad(
        weight_logits=grad.weight_logits
        if "weight_logits" in trainable
        else np.zeros_like(grad.weight_logits),
        means=grad.means if "means" in trainable else np.zeros_like(grad.means),
        log_stds=np.zeros_like(grad.log_stds),
    )


def fit_mle(
    source: MoGParams,
    cfg: FitConfig,
    rng: np.random.Generator,
    init: MoGParams | None = None,
    trainable: tuple[str, ...] = TRAIN_WEIGHTS_AND_MEANS,
) -> MoGParams:
    """Fit a student to samples from source by batch log-likelihood ascent.

    Starts from a random student unless an explicit init is given. Each
    iteration draws a fresh batch from source at cfg.temper.
    """
    student = init if init is not None else init_student(cfg.n_components, rng)
    if student.n_components != cfg.n_components:
        raise InvalidParameterError(
            f"init has {student.n_components} components, config says {cfg.n_components}"
        )
    state = OptimizerState(learning_rate=cfg.learning_rate)
    ones = np.ones(cfg.batch_size)
    for _ in range(cfg.iterations):
        batch = sample(source, cfg.temper, cfg.batch_size, rng)
        grad = _restrict(weighted_grad_log_density(student, batch, ones), trainable)
        student = sgd_step(student, grad, state, direction="ascend")
    return student


def run_sft(rng: np.random.Generator) -> MoGParams:
    """Fit the high-recall 6-component model to ground-truth samples."""
    return fit_mle(make_ground_truth(), FitConfig(n_components=SFT_COMPONENTS), rng)


def prune_components(teacher: MoGParams, n_final: int, temper: float) -> MoGParams:
    """Keep the teacher's n_final largest components under tempered weights."""
    if not 1 <= n_final <= teacher.n_components:
        raise InvalidParameterError(
            f"n_final must be in [1, {teacher.n_components}], got {n_final}"
        )
    sharpened = tempered_weights(teacher.weights, temper)
    keep = np.sort(np.argsort(-sharpened, kind="stable")[:n_final])
    kept = sharpened[keep]
    return MoGParams(
        weight_logits=np.log(kept / kept.sum()),
        means=teacher.means[keep],
        log_stds=teacher.log_stds[keep],
    )


def run_kd(
    teacher: MoGParams,
    n_final: int,
    rng: np.random.Generator,
    temper: float = KD_SAMPLING_TEMPER,
) -> MoGParams:
    """Distill the teacher by pruning it and refitting the mixture weights.

    The student inherits the teacher's n_final highest-weight components
    (ranked after tempering) and then retrains only its weight logits on
    temperature-sharpened teacher samples; component placement is frozen,
    so any mode outside the kept set is dropped outright rather than
    re-covered.
    """
    student = prune_components(teacher, n_final, temper)
    cfg = FitConfig(n_components=n_final, temper=temper)
    return fit_mle(teacher, cfg, rng, init=student, trainable=TRAIN_WEIGHTS_ONLY)
