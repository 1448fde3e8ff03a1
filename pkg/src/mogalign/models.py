"""2-D mixture-of-Gaussians models: densities, sampling, analytic gradients.

Components are isotropic; per-component scale is stored as log sigma so the
standard deviation stays positive under unconstrained gradient steps.
Mixture weights are stored as unnormalized logits for the same reason.
Model values are immutable; every operation is pure given an explicit
numpy Generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

LOG_2PI = float(np.log(2.0 * np.pi))

# Ground-truth geometry: a 3x3 grid with the center removed, row-major from
# the top-left corner, so the last mode (index 7) sits at (1.5, -1.5).
GT_GRID_COORDS = (-1.5, 0.0, 1.5)
GT_VARIANCE = 0.05
TARGET_INDEX = 7
TARGET_CENTER = (1.5, -1.5)


class InvalidParameterError(ValueError):
    """Raised when model parameters or operation arguments are invalid."""


@dataclass(frozen=True)
class GroundTruthSpec:
    """Geometry of the data-generating mixture."""

    grid_coords: tuple[float, ...] = GT_GRID_COORDS
    variance: float = GT_VARIANCE
    target_index: int = TARGET_INDEX

    def mode_centers(self) -> np.ndarray:
        centers = [
            (x, y)
            for y in sorted(self.grid_coords, reverse=True)
            for x in sorted(self.grid_coords)
            if not (x == 0.0 and y == 0.0)
        ]
        return np.asarray(centers, dtype=float)


@dataclass(frozen=True)
class MoGParams:
    """Trainable mixture parameters.

    Attributes:
        weight_logits: shape (K,); mixture weights are softmax(weight_logits).
        means: shape (K, 2) component centers.
        log_stds: shape (K,) log of the isotropic per-component std dev.
    """

    weight_logits: np.ndarray
    means: np.ndarray
    log_stds: np.ndarray

    def __post_init__(self):
        logits = np.asarray(self.weight_logits, dtype=float)
        means = np.asarray(self.means, dtype=float)
        log_stds = np.asarray(self.log_stds, dtype=float)
        if logits.ndim != 1 or logits.size < 1:
            raise InvalidParameterError("weight_logits must be a non-empty vector")
        k = logits.size
        if means.shape != (k, 2):
            raise InvalidParameterError(f"means must have shape ({k}, 2), got {means.shape}")
        if log_stds.shape != (k,):
            raise InvalidParameterError(f"log_stds must have shape ({k},), got {log_stds.shape}")
        for name, arr in (("weight_logits", logits), ("means", means), ("log_stds", log_stds)):
            if not np.all(np.isfinite(arr)):
                raise InvalidParameterError(f"{name} contains non-finite values")
        for name, arr in (("weight_logits", logits), ("means", means), ("log_stds", log_stds)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.weight_logits.size

    @property
    def weights(self) -> np.ndarray:
        return weights_of(self.weight_logits)

    @property
    def stds(self) -> np.ndarray:
        return np.exp(self.log_stds)

    def to_dict(self) -> dict:
        return {
            "weight_logits": self.weight_logits.tolist(),
            "means": self.means.tolist(),
            "log_stds": self.log_stds.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MoGParams":
        return cls(
            weight_logits=np.asarray(d["weight_logits"], dtype=float),
            means=np.asarray(d["means"], dtype=float),
            log_stds=np.asarray(d["log_stds"], dtype=float),
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> "MoGParams":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class MoGGrad:
    """Gradient record with the same shape as MoGParams."""

    weight_logits: np.ndarray
    means: np.ndarray
    log_stds: np.ndarray

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.weight_logits))
            and np.all(np.isfinite(self.means))
            and np.all(np.isfinite(self.log_stds))
        )

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [self.weight_logits.ravel(), self.means.ravel(), self.log_stds.ravel()]
        )

    def __add__(self, other: "MoGGrad") -> "MoGGrad":
        return MoGGrad(
            weight_logits=self.weight_logits + other.weight_logits,
            means=self.means + other.means,
            log_stds=self.log_stds + other.log_stds,
        )

    def __sub__(self, other: "MoGGrad") -> "MoGGrad":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "MoGGrad":
        return MoGGrad(
            weight_logits=scalar * self.weight_logits,
            means=scalar * self.means,
            log_stds=scalar * self.log_stds,
        )

    __rmul__ = __mul__


def weights_of(logits: np.ndarray) -> np.ndarray:
    """Softmax with max shift; output sums to 1 to within 1e-12."""
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 1 or logits.size < 1:
        raise InvalidParameterError("logits must be a non-empty vector")
    if not np.all(np.isfinite(logits)):
        raise InvalidParameterError("logits contain non-finite values")
    z = np.exp(logits - logits.max())
    return z / z.sum()


def tempered_weights(weights: np.ndarray, temper: float) -> np.ndarray:
    """Sharpen a simplex vector: w_k^temper, renormalized.

    Entries that are exactly zero stay zero (limit convention). Entropy is
    non-increasing in temper for temper >= 1.
    """
    weights = np.asarray(weights, dtype=float)
    if temper < 1.0:
        raise InvalidParameterError(f"temper must be >= 1, got {temper}")
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    logw = temper * logw
    # max shift keeps exp stable; -inf entries survive as zeros
    z = np.exp(logw - logw.max())
    return z / z.sum()


def _component_log_densities(model: MoGParams, points: np.ndarray) -> np.ndarray:
    """Per-component Gaussian log densities, shape (n, K)."""
    diff = points[:, None, :] - model.means[None, :, :]
    sq = np.einsum("nkd,nkd->nk", diff, diff)
    var = np.exp(2.0 * model.log_stds)
    return -LOG_2PI - 2.0 * model.log_stds[None, :] - sq / (2.0 * var[None, :])


def _as_points(p) -> tuple[np.ndarray, bool]:
    pts = np.asarray(p, dtype=float)
    if pts.ndim == 1:
        return pts[None, :], True
    return pts, False


def log_density(model: MoGParams, p) -> float | np.ndarray:
    """log q(p) via log-sum-exp over components.

    Accepts a single point of shape (2,) or a batch of shape (n, 2).
    """
    pts, single = _as_points(p)
    comp = _component_log_densities(model, pts)
    out = logsumexp(comp + np.log(model.weights)[None, :], axis=1)
    return float(out[0]) if single else out


def responsibilities(model: MoGParams, points: np.ndarray) -> np.ndarray:
    """Posterior component memberships r_{ik}, shape (n, K)."""
    comp = _component_log_densities(model, points) + np.log(model.weights)[None, :]
    comp = comp - comp.max(axis=1, keepdims=True)
    r = np.exp(comp)
    return r / r.sum(axis=1, keepdims=True)


def grad_log_density(model: MoGParams, p) -> MoGGrad:
    """Analytic gradient of log q(p) with respect to all parameters."""
    pts, _ = _as_points(p)
    return weighted_grad_log_density(model, pts, np.ones(pts.shape[0]))


def weighted_grad_log_density(
    model: MoGParams, points: np.ndarray, coeffs: np.ndarray
) -> MoGGrad:
    """Mean over points of coeffs_i * grad log q(x_i).

    This is the workhorse for every trainer: MLE uses coeffs = 1, policy
    gradients use per-sample advantages, DPO uses signed sigmoid weights.
    """
    points = np.asarray(points, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    n = points.shape[0]
    r = responsibilities(model, points)  # (n, K)
    alpha = model.weights
    var = np.exp(2.0 * model.log_stds)

    cr = coeffs @ r / n  # (K,)
    g_logits = cr - coeffs.mean() * alpha

    diff = points[:, None, :] - model.means[None, :, :]  # (n, K, 2)
    wr = (coeffs[:, None] * r) / n  # (n, K)
    g_means = np.einsum("nk,nkd->kd", wr, diff) / var[:, None]

    sq = np.einsum("nkd,nkd->nk", diff, diff)
    g_log_stds = np.einsum("nk,nk->k", wr, sq / var[None, :] - 2.0)

    return MoGGrad(weight_logits=g_logits, means=g_means, log_stds=g_log_stds)


def sample(
    model: MoGParams, temper: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw n points, optionally sharpening the component weights first.

    temper = 1 reproduces the model distribution exactly.
    """
    if temper < 1.0:
        raise InvalidParameterError(f"temper must be >= 1, got {temper}")
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    probs = tempered_weights(model.weights, temper)
    idx = rng.choice(model.n_components, size=n, p=probs)
    noise = rng.standard_normal((n, 2))
    return model.means[idx] + noise * model.stds[idx][:, None]


def make_ground_truth(spec: GroundTruthSpec = GroundTruthSpec()) -> MoGParams:
    """Uniform 8-mode mixture on the 3x3 grid minus the center."""
    centers = spec.mode_centers()
    k = centers.shape[0]
    return MoGParams(
        weight_logits=np.zeros(k),
        means=centers,
        log_stds=np.full(k, 0.5 * np.log(spec.variance)),
    )


def make_target(spec: GroundTruthSpec = GroundTruthSpec()) -> MoGParams:
    """Single Gaussian at the designated target mode."""
    centers = spec.mode_centers()
    return MoGParams(
        weight_logits=np.zeros(1),
        means=centers[spec.target_index][None, :],
        log_stds=np.full(1, 0.5 * np.log(spec.variance)),
    )
