"""Oracle reward, reward folding, preference labeling, and KL-shaped reward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import TARGET_CENTER, InvalidParameterError


@dataclass(frozen=True)
class RewardSpec:
    """Dense reward peaked at the target mode center.

    reward(x) = scale * exp(-sharpness * ||x - target_center||^2).
    fold_threshold, when set, reflects rewards above the threshold back down
    to discourage over-optimization; disabled by default.
    """

    target_center: tuple[float, float] = TARGET_CENTER
    sharpness: float = 2.0
    scale: float = 10.0
    fold_threshold: float | None = None

    def __post_init__(self):
        if not (self.sharpness > 0 and self.scale > 0):
            raise InvalidParameterError("sharpness and scale must be positive")
        if self.fold_threshold is not None and not self.fold_threshold > 0:
            raise InvalidParameterError("fold_threshold must be positive")

    def to_dict(self) -> dict:
        return {
            "target_center": list(self.target_center),
            "sharpness": self.sharpness,
            "scale": self.scale,
            "fold_threshold": self.fold_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RewardSpec":
        return cls(
            target_center=tuple(d.get("target_center", TARGET_CENTER)),
            sharpness=d.get("sharpness", 2.0),
            scale=d.get("scale", 10.0),
            fold_threshold=d.get("fold_threshold"),
        )


@dataclass(frozen=True)
class PreferencePair:
    """A (winner, loser) pair labeled by the reward oracle."""

    winner: np.ndarray
    loser: np.ndarray


def oracle_reward(p, spec: RewardSpec = RewardSpec()):
    """Base reward in (0, scale]; maximized exactly at the target center."""
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    diff = pts - np.asarray(spec.target_center, dtype=float)[None, :]
    r = spec.scale * np.exp(-spec.sharpness * np.einsum("nd,nd->n", diff, diff))
    return float(r[0]) if single else r


def fold_reward(r_base, threshold: float):
    """Reflect rewards above the threshold: r -> 2*threshold - r."""
    if not threshold > 0:
        raise InvalidParameterError(f"threshold must be positive, got {threshold}")
    r = np.asarray(r_base, dtype=float)
    folded = np.where(r > threshold, 2.0 * threshold - r, r)
    return float(folded) if folded.ndim == 0 else folded


def effective_reward(p, spec: RewardSpec = RewardSpec()):
    """Oracle reward with folding applied when the spec enables it."""
    r = oracle_reward(p, spec)
    if spec.fold_threshold is None:
        return r
    return fold_reward(r, spec.fold_threshold)


def prefer(p1, p2, spec: RewardSpec = RewardSpec()) -> PreferencePair:
    """Label the higher-reward point as winner; ties go to p1."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if effective_reward(p1, spec) >= effective_reward(p2, spec):
        return PreferencePair(winner=p1, loser=p2)
    return PreferencePair(winner=p2, loser=p1)


def shaped_reward(r, log_pi_theta, log_pi_ref, beta: float):
    """Reward with the reverse-KL anchor folded in: r - beta*(log pi - log ref)."""
    if beta < 0:
        raise InvalidParameterError(f"beta must be >= 0, got {beta}")
    out = np.asarray(r, dtype=float) - beta * (
        np.asarray(log_pi_theta, dtype=float) - np.asarray(log_pi_ref, dtype=float)
    )
    return float(out) if out.ndim == 0 else out
