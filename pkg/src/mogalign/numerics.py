"""Shared optimization utilities: SGD steps, gradient checking, scalar baseline."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .models import InvalidParameterError, MoGGrad, MoGParams, grad_log_density, log_density


class TrainingDiverged(RuntimeError):
    """Raised when parameters or gradients go non-finite during training."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


@dataclass
class OptimizerState:
    learning_rate: float
    step_count: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise InvalidParameterError("learning_rate must be finite and positive")


@dataclass(frozen=True)
class ScalarBaseline:
    """Constant value estimate trained by gradient descent on squared error.

    The PPO critic for this setting: there is a single implicit prompt, so
    the state-dependent value function degenerates to one scalar.
    """

    value: float = 0.0
    learning_rate: float = 0.1


def sgd_step(
    params: MoGParams,
    gradient: MoGGrad,
    state: OptimizerState,
    direction: str = "ascend",
) -> MoGParams:
    """One plain SGD step; returns a new model, mutates only the step count."""
    if direction not in ("ascend", "descend"):
        raise InvalidParameterError(f"direction must be 'ascend' or 'descend', got {direction!r}")
    if not gradient.is_finite():
        raise TrainingDiverged("non-finite gradient", step=state.step_count)
    sign = 1.0 if direction == "ascend" else -1.0
    lr = sign * state.learning_rate
    state.step_count += 1
    try:
        return MoGParams(
            weight_logits=params.weight_logits + lr * gradient.weight_logits,
            means=params.means + lr * gradient.means,
            log_stds=params.log_stds + lr * gradient.log_stds,
        )
    except InvalidParameterError as exc:
        raise TrainingDiverged(str(exc), step=state.step_count - 1) from exc


def finite_diff_check(model: MoGParams, p, h: float = 1e-5) -> float:
    """Worst relative error of the analytic gradient vs central differences.

    Relative error uses denominator max(|analytic|, |numeric|, 1e-8) so
    near-zero coordinates do not blow up the ratio.
    """
    if not (0.0 < h <= 1e-2):
        raise InvalidParameterError(f"h must be in (0, 1e-2], got {h}")
    analytic = grad_log_density(model, p).flat()
    numeric = np.empty_like(analytic)
    flat = np.concatenate(
        [model.weight_logits.ravel(), model.means.ravel(), model.log_stds.ravel()]
    )
    k = model.n_components
    for i in range(flat.size):
        plus, minus = flat.copy(), flat.copy()
        plus[i] += h
        minus[i] -= h
        numeric[i] = (
            log_density(_unflatten(plus, k), p) - log_density(_unflatten(minus, k), p)
        ) / (2.0 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def random_check_instance(
    rng: np.random.Generator, max_components: int = 4
) -> tuple[MoGParams, np.ndarray]:
    """Random (model, point) pair suited to tight finite-difference checks.

    The point is drawn from the model and the components are wide enough to
    overlap it, so every gradient coordinate stays well above the magnitude
    where central differences drown in floating-point cancellation. Checks
    against instances from this family test the gradient code at honest
    tolerances instead of measuring round-off on dead coordinates.
    """
    from .models import sample

    k = int(rng.integers(1, max_components + 1))
    model = MoGParams(
        weight_logits=rng.normal(0.0, 0.5, size=k),
        means=rng.uniform(-1.0, 1.0, size=(k, 2)),
        log_stds=rng.normal(np.log(0.7), 0.1, size=k),
    )
    point = sample(model, 1.0, 1, rng)[0]
    return model, point


def _unflatten(flat: np.ndarray, k: int) -> MoGParams:
    return MoGParams(
        weight_logits=flat[:k],
        means=flat[k : 3 * k].reshape(k, 2),
        log_stds=flat[3 * k :],
    )


def baseline_update(b: ScalarBaseline, rewards) -> ScalarBaseline:
    """Move the baseline toward the batch mean reward.

    One step of gradient descent on (value - mean)^2, i.e.
    value += lr * 2 * (mean - value). lr = 0.5 lands on the mean exactly.
    """
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise InvalidParameterError("rewards must be non-empty")
    if not np.all(np.isfinite(rewards)):
        raise InvalidParameterError("rewards contain non-finite values")
    new_value = b.value + b.learning_rate * 2.0 * (float(rewards.mean()) - b.value)
    return replace(b, value=new_value)
