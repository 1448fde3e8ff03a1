"""Evaluation metrics: precision/recall in log-density terms, reward, diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .models import InvalidParameterError, MoGParams, log_density, sample
from .reward import PreferencePair, RewardSpec, effective_reward

DEFAULT_METRIC_SAMPLES = 20000

QUAD_DOMAIN = (-4.0, 4.0)
QUAD_NODES = 400


@dataclass(frozen=True)
class MetricsReport:
    """The four headline metrics for one model, all Monte-Carlo estimates.

    overall_precision: mean log ground-truth density of the model's samples.
    overall_recall: mean log model density of ground-truth samples.
    target_precision: mean log target-mode density of the model's samples.
    final_avg_reward: mean oracle reward of the model's samples.
    """

    overall_precision: float
    overall_recall: float
    target_precision: float
    final_avg_reward: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "overall_precision": self.overall_precision,
            "overall_recall": self.overall_recall,
            "target_precision": self.target_precision,
            "final_avg_reward": self.final_avg_reward,
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def evaluate_metrics(
    q: MoGParams,
    gt: MoGParams,
    target: MoGParams,
    spec: RewardSpec,
    n: int = DEFAULT_METRIC_SAMPLES,
    rng: np.random.Generator | None = None,
) -> MetricsReport:
    if n < 1000:
        raise InvalidParameterError(f"n must be >= 1000, got {n}")
    if rng is None:
        rng = np.random.default_rng(0)
    x_q = sample(q, 1.0, n, rng)
    x_gt = sample(gt, 1.0, n, rng)
    return MetricsReport(
        overall_precision=float(np.mean(log_density(gt, x_q))),
        overall_recall=float(np.mean(log_density(q, x_gt))),
        target_precision=float(np.mean(log_density(target, x_q))),
        final_avg_reward=float(np.mean(effective_reward(x_q, spec))),
        n_samples=n,
    )


def high_reward_fraction(
    q: MoGParams,
    spec: RewardSpec,
    threshold_norm: float,
    n: int,
    rng: np.random.Generator,
) -> float:
    """Fraction of samples whose normalized reward (reward/scale) clears the bar."""
    if not (0.0 < threshold_norm < 1.0):
        raise InvalidParameterError(f"threshold_norm must be in (0,1), got {threshold_norm}")
    x = sample(q, 1.0, n, rng)
    r = effective_reward(x, spec)
    return float(np.mean(r / spec.scale >= threshold_norm))


def normalization_check(q: MoGParams) -> float:
    """Midpoint-rule integral of the density over the quadrature box.

    Close to 1 only when the model's mass lies inside the box; a value
    notably below 1 flags a model that wandered out of domain.
    """
    lo, hi = QUAD_DOMAIN
    step = (hi - lo) / QUAD_NODES
    centers = lo + step * (np.arange(QUAD_NODES) + 0.5)
    gx, gy = np.meshgrid(centers, centers)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    dens = np.exp(log_density(q, pts))
    return float(dens.sum() * step * step)


def starvation_factor(
    ref: MoGParams, policy: MoGParams, pair: PreferencePair, beta: float
) -> float:
    """Per-pair DPO gradient coefficient sigma(-z), the starvation diagnostic.

    Near 0 when the reference strongly misprices the pair (vanishing update),
    near 1 for easy pairs the reference already ranks correctly.
    """
    if beta <= 0:
        raise InvalidParameterError(f"beta must be > 0, got {beta}")
    z = beta * (
        (log_density(policy, pair.winner) - log_density(policy, pair.loser))
        + (log_density(ref, pair.loser) - log_density(ref, pair.winner))
    )
    return float(expit(-z))
