"""Alignment trainers: PPO, GRPO, and on/off-policy DPO.

Every trainer is anchored to a frozen reference model and uses
score-function (likelihood-ratio) gradients on the analytic mixture
gradients; there is no autodiff. Policies are updated with one plain SGD
step per sampled batch, so the importance ratio is identically 1 and PPO
clipping is inert.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .models import InvalidParameterError, MoGParams, log_density, sample, weighted_grad_log_density
from .numerics import OptimizerState, ScalarBaseline, baseline_update, sgd_step
from .reward import PreferencePair, RewardSpec, effective_reward

ALGORITHMS = ("ppo", "grpo", "dpo_on", "dpo_off")

DEFAULT_OFFLINE_PAIRS = 25600


@dataclass(frozen=True)
class AlignConfig:
    algorithm: str
    beta: float = 1.0
    iterations: int = 2200
    batch_size: int = 256
    learning_rate: float = 1e-2
    baseline_learning_rate: float = 0.1
    offline_dataset_size: int = DEFAULT_OFFLINE_PAIRS
    dpo_minibatch: int = 32

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidParameterError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        if not np.isfinite(self.beta) or self.beta < 0:
            raise InvalidParameterError("beta must be finite and >= 0")
        if self.iterations < 1 or self.batch_size < 1 or self.offline_dataset_size < 1:
            raise InvalidParameterError("counts must be positive")
        if not 1 <= self.dpo_minibatch <= self.batch_size:
            raise InvalidParameterError("dpo_minibatch must be in [1, batch_size]")
        if self.learning_rate <= 0:
            raise InvalidParameterError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "beta": self.beta,
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "baseline_learning_rate": self.baseline_learning_rate,
            "offline_dataset_size": self.offline_dataset_size,
            "dpo_minibatch": self.dpo_minibatch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlignConfig":
        return cls(**{k: d[k] for k in d if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class LogRecord:
    iteration: int
    mean_reward: float
    std_reward: float
    kl_estimate: float
    loss: float | None = None


@dataclass
class TrainLog:
    records: list[LogRecord] = field(default_factory=list)

    def append(self, rec: LogRecord) -> None:
        self.records.append(rec)

    def write_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("iteration,mean_reward,std_reward,kl_estimate,loss\n")
            for r in self.records:
                loss = "" if r.loss is None else repr(r.loss)
                f.write(
                    f"{r.iteration},{r.mean_reward!r},{r.std_reward!r},"
                    f"{r.kl_estimate!r},{loss}\n"
                )


def ppo_align(
    init: MoGParams,
    ref: MoGParams,
    spec: RewardSpec,
    cfg: AlignConfig,
    rng: np.random.Generator,
) -> tuple[MoGParams, TrainLog]:
    """Actor-critic policy gradient with KL-shaped rewards.

    Advantage = shaped reward minus a learned scalar baseline; the baseline
    tracks the batch mean of the shaped reward.
    """
    policy = init
    baseline = ScalarBaseline(value=0.0, learning_rate=cfg.baseline_learning_rate)
    state = OptimizerState(learning_rate=cfg.learning_rate)
    log = TrainLog()
    for it in range(cfg.iterations):
        x = sample(policy, 1.0, cfg.batch_size, rng)
        r = effective_reward(x, spec)
        log_ratio = log_density(policy, x) - log_density(ref, x)
        shaped = r - cfg.beta * log_ratio
        adv = shaped - baseline.value
        grad = weighted_grad_log_density(policy, x, adv)
        policy = sgd_step(policy, grad, state, direction="ascend")
        baseline = baseline_update(baseline, shaped)
        log.append(
            LogRecord(it, float(r.mean()), float(r.std()), float(log_ratio.mean()))
        )
    return policy, log


def grpo_align(
    init: MoGParams,
    ref: MoGParams,
    spec: RewardSpec,
    cfg: AlignConfig,
    rng: np.random.Generator,
) -> tuple[MoGParams, TrainLog]:
    """Critic-free policy gradient with a batch-mean baseline and explicit KL penalty.

    The KL(policy || ref) gradient uses the unbiased score-function estimator
    mean over the batch of (1 + log policy - log ref) * grad log policy.
    """
    policy = init
    state = OptimizerState(learning_rate=cfg.learning_rate)
    log = TrainLog()
    for it in range(cfg.iterations):
        x = sample(policy, 1.0, cfg.batch_size, rng)
        r = effective_reward(x, spec)
        adv = r - r.mean()
        log_ratio = log_density(policy, x) - log_density(ref, x)
        grad = weighted_grad_log_density(policy, x, adv)
        if cfg.beta > 0:
            kl_grad = weighted_grad_log_density(policy, x, 1.0 + log_ratio)
            grad = grad - cfg.beta * kl_grad
        policy = sgd_step(policy, grad, state, direction="ascend")
        log.append(
            LogRecord(it, float(r.mean()), float(r.std()), float(log_ratio.mean()))
        )
    return policy, log


def _pairs_as_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, tuple) and len(pairs) == 2:
        winners, losers = pairs
        return np.asarray(winners, dtype=float), np.asarray(losers, dtype=float)
    winners = np.stack([p.winner for p in pairs])
    losers = np.stack([p.loser for p in pairs])
    return winners, losers


def dpo_logits(
    policy: MoGParams, ref: MoGParams, winners: np.ndarray, losers: np.ndarray, beta: float
) -> np.ndarray:
    """Per-pair logit: beta * (policy log-ratio + reference log-ratio offset)."""
    model_ratio = log_density(policy, winners) - log_density(policy, losers)
    ref_offset = log_density(ref, losers) - log_density(ref, winners)
    return beta * (np.atleast_1d(model_ratio) + np.atleast_1d(ref_offset))


def dpo_loss(policy: MoGParams, ref: MoGParams, pairs, beta: float):
    """Mean -log sigmoid(z) over pairs, plus its analytic parameter gradient.

    Per pair the gradient weight on grad log policy is -beta*sigmoid(-z) at
    the winner and +beta*sigmoid(-z) at the loser; mispriced pairs with
    large z contribute vanishing gradient.
    """
    winners, losers = _pairs_as_arrays(pairs)
    if winners.shape[0] == 0:
        raise InvalidParameterError("pairs must be non-empty")
    z = dpo_logits(policy, ref, winners, losers, beta)
    loss = float(np.logaddexp(0.0, -z).mean())
    coef = beta * expit(-z)
    grad = weighted_grad_log_density(policy, winners, -coef) + weighted_grad_log_density(
        policy, losers, coef
    )
    return loss, grad


def _label_pairs(
    points: np.ndarray, spec: RewardSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Pair consecutive points and label by reward; ties keep the first point."""
    a, b = points[0::2], points[1::2]
    wins = effective_reward(a, spec) >= effective_reward(b, spec)
    winners = np.where(wins[:, None], a, b)
    losers = np.where(wins[:, None], b, a)
    return winners, losers


def dpo_align(
    init: MoGParams,
    ref: MoGParams,
    spec: RewardSpec,
    cfg: AlignConfig,
    rng: np.random.Generator,
) -> tuple[MoGParams, TrainLog]:
    """DPO training, on-policy (fresh pairs each step) or off-policy (fixed set).

    Each iteration gathers batch_size preference pairs and consumes them in
    minibatches of cfg.dpo_minibatch pairs, taking one gradient step per
    minibatch. Re-evaluating the pair logits between minibatches lets easy
    pairs train quickly within a round while mispriced pairs saturate.
    """
    policy = init
    state = OptimizerState(learning_rate=cfg.learning_rate)
    log = TrainLog()

    if cfg.algorithm == "dpo_off":
        pool = sample(ref, 1.0, 2 * cfg.offline_dataset_size, rng)
        all_winners, all_losers = _label_pairs(pool, spec)
        order = np.arange(cfg.offline_dataset_size)
        cursor = 0
        rng.shuffle(order)

    for it in range(cfg.iterations):
        if cfg.algorithm == "dpo_on":
            batch = sample(policy, 1.0, cfg.batch_size, rng)
            winners, losers = _label_pairs(batch, spec)
        else:
            if cursor + cfg.batch_size > order.size:
                rng.shuffle(order)
                cursor = 0
            idx = order[cursor : cursor + cfg.batch_size]
            cursor += cfg.batch_size
            winners, losers = all_winners[idx], all_losers[idx]

        losses = []
        for lo in range(0, winners.shape[0], cfg.dpo_minibatch):
            hi = lo + cfg.dpo_minibatch
            loss, grad = dpo_loss(
                policy, ref, (winners[lo:hi], losers[lo:hi]), cfg.beta
            )
            policy = sgd_step(policy, grad, state, direction="descend")
            losses.append(loss)

        x = np.concatenate([winners, losers])
        r = effective_reward(x, spec)
        log_ratio = log_density(policy, x) - log_density(ref, x)
        log.append(
            LogRecord(
                it,
                float(r.mean()),
                float(r.std()),
                float(log_ratio.mean()),
                float(np.mean(losses)),
            )
        )
    return policy, log


def align(
    init: MoGParams,
    ref: MoGParams,
    spec: RewardSpec,
    cfg: AlignConfig,
    rng: np.random.Generator,
) -> tuple[MoGParams, TrainLog]:
    """Dispatch to the trainer named by cfg.algorithm."""
    if cfg.algorithm == "ppo":
        return ppo_align(init, ref, spec, cfg, rng)
    if cfg.algorithm == "grpo":
        return grpo_align(init, ref, spec, cfg, rng)
    return dpo_align(init, ref, spec, cfg, rng)
