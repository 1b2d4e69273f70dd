"""Plurality tallies, abstention, polls and poll-based win probabilities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CandidateSet, DimensionMismatch, Electorate, InvalidValue, NoExpressedVotes, PollResult, Tally
from .utility import pairwise_distances


@dataclass(frozen=True)
class AbstentionRule:
    """``alpha=None`` means nobody abstains; otherwise a voter abstains when
    every candidate is strictly farther than ``alpha``."""

    alpha: Optional[float] = None

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise InvalidValue(f"abstention alpha must be positive, got {self.alpha}")

    @classmethod
    def never(cls) -> "AbstentionRule":
        return cls(None)

    @classmethod
    def beyond_alpha(cls, alpha: float) -> "AbstentionRule":
        return cls(alpha)


NEVER = AbstentionRule()


def _require_candidates(candidates: CandidateSet) -> None:
    if len(candidates) == 0:
        raise InvalidValue("empty candidate set")


def nearest_candidate(v, candidates: CandidateSet) -> int:
    _require_candidates(candidates)
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != candidates.dimension:
        raise DimensionMismatch(v.shape[-1], candidates.dimension)
    # argmin returns the first minimum, i.e. the lowest index on ties
    return int(np.argmin(pairwise_distances(v[None, :], candidates.positions)[0]))


def votes(positions: np.ndarray, candidates: CandidateSet, abstention: AbstentionRule = NEVER) -> np.ndarray:
    """Per-voter choice: a candidate index, or -1 for an abstention."""
    _require_candidates(candidates)
    dist = pairwise_distances(positions, candidates.positions)
    choice = np.argmin(dist, axis=1)
    if abstention.alpha is not None:
        choice = np.where(np.all(dist > abstention.alpha, axis=1), -1, choice)
    return choice


def tally_choices(choice: np.ndarray, m: int) -> Tally:
    counts = np.bincount(choice[choice >= 0], minlength=m)
    return Tally(tuple(counts), int(np.sum(choice < 0)))


def plurality_tally(electorate: Electorate, candidates: CandidateSet, abstention: AbstentionRule = NEVER) -> Tally:
    if electorate.dimension != candidates.dimension:
        raise DimensionMismatch(electorate.dimension, candidates.dimension)
    return tally_choices(votes(electorate.positions, candidates, abstention), len(candidates))


def winner(t: Tally) -> int:
    if t.expressed == 0:
        raise NoExpressedVotes("no expressed votes: the winner is undefined")
    return int(np.argmax(t.counts))


def poll_sample_size(n: int, fraction: float) -> int:
    # the 1e-9 slack keeps e.g. 0.1 * 30 = 3.0000000000000004 from rounding up to 4
    return max(1, min(n, math.ceil(fraction * n - 1e-9)))


def conduct_poll(
    electorate: Electorate,
    candidates: CandidateSet,
    fraction: float,
    abstention: AbstentionRule = NEVER,
    rng: Optional[np.random.Generator] = None,
    iteration: int = 0,
) -> PollResult:
    """Tally a uniform sample of ceil(fraction * n) distinct voters."""
    if len(electorate) == 0:
        raise InvalidValue("cannot poll an empty electorate")
    if not 0 < fraction <= 1:
        raise InvalidValue(f"poll fraction must lie in (0, 1], got {fraction}")
    if rng is None:
        rng = np.random.default_rng(0)
    n = len(electorate)
    size = poll_sample_size(n, fraction)
    if size == n:
        sample = electorate.positions
    else:
        idx = np.sort(rng.choice(n, size=size, replace=False))
        sample = electorate.positions[idx]
    t = tally_choices(votes(sample, candidates, abstention), len(candidates))
    return PollResult(t.counts, t.abstentions, size, iteration)


def win_probability(poll) -> np.ndarray:
    """Share of expressed votes per candidate; abstentions are left out."""
    counts = np.asarray(poll.counts, dtype=float)
    total = counts.sum()
    if total < 1:
        raise NoExpressedVotes("no expressed votes in the poll: win probabilities are undefined")
    return counts / total


__all__ = [
    "AbstentionRule",
    "NEVER",
    "conduct_poll",
    "nearest_candidate",
    "plurality_tally",
    "poll_sample_size",
    "tally_choices",
    "votes",
    "win_probability",
    "winner",
]
