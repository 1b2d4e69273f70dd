"""Euclidean distance and voter-to-candidate utilities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, InvalidValue

DEFAULT_EPSILON = 1e-6
DEFAULT_ALPHA = 50.0


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(a.shape[-1], b.shape[-1])
    return a, b


def norms(diff: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis.

    Summed coordinate by coordinate so every entry is computed with the same
    operation order whatever the batch shape; chunked and unchunked runs then
    agree bit for bit.
    """
    sq = np.zeros(diff.shape[:-1])
    for k in range(diff.shape[-1]):
        sq = sq + diff[..., k] * diff[..., k]
    return np.sqrt(sq)


def distance(a, b) -> float:
    a, b = _pair(a, b)
    return float(norms(a - b))


def pairwise_distances(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Distances between every row of ``points`` (n, d) and of ``targets`` (m, d), shape (n, m)."""
    points, targets = _pair(points, targets)
    return norms(targets[None, :, :] - points[:, None, :])


def inverse_from_distance(dist, epsilon: float = DEFAULT_EPSILON):
    return 1.0 / np.maximum(dist, epsilon)


def repulsive_from_distance(dist, alpha: float = DEFAULT_ALPHA):
    dist = np.asarray(dist, dtype=float)
    # explicit product: ** 2 rounds differently for numpy scalars and arrays
    return (alpha - dist) / ((1.0 + dist) * (1.0 + dist))


def utility_inverse(v, c, epsilon: float = DEFAULT_EPSILON) -> float:
    if not epsilon > 0:
        raise InvalidValue(f"epsilon must be positive, got {epsilon}")
    return float(inverse_from_distance(distance(v, c), epsilon))


def utility_repulsive(v, c, alpha: float = DEFAULT_ALPHA) -> float:
    """Positive inside the ball of radius ``alpha``, negative outside it."""
    if not alpha > 0:
        raise InvalidValue(f"alpha must be positive, got {alpha}")
    return float(repulsive_from_distance(distance(v, c), alpha))


@dataclass(frozen=True)
class UtilityFunction:
    kind: str = "inverse"
    alpha: float = DEFAULT_ALPHA
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.kind not in ("inverse", "repulsive"):
            raise InvalidValue(f"unknown utility kind {self.kind!r}")
        if not self.epsilon > 0:
            raise InvalidValue(f"epsilon must be positive, got {self.epsilon}")
        if self.kind == "repulsive" and not self.alpha > 0:
            raise InvalidValue(f"alpha must be positive, got {self.alpha}")

    @classmethod
    def inverse(cls, epsilon: float = DEFAULT_EPSILON) -> "UtilityFunction":
        return cls("inverse", epsilon=epsilon)

    @classmethod
    def repulsive(cls, alpha: float = DEFAULT_ALPHA) -> "UtilityFunction":
        return cls("repulsive", alpha=alpha)

    def from_distance(self, dist):
        if self.kind == "inverse":
            return inverse_from_distance(dist, self.epsilon)
        return repulsive_from_distance(dist, self.alpha)

    def __call__(self, v, c) -> float:
        return float(self.from_distance(distance(v, c)))
