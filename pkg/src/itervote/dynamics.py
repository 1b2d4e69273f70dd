"""Voter movement: the three velocity rules, the position update and the run loop.

Each rule has a batched form (``*_velocities``) working on an ``(n, d)``
position array, used by :func:`step`, and a single-voter form that wraps it.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

from .core import (
    CandidateSet,
    DimensionMismatch,
    Electorate,
    InvalidValue,
    IterationRecord,
    NoExpressedVotes,
    PollResult,
    SimulationConfig,
    SimulationTrace,
    VoterState,
)
from .utility import UtilityFunction, norms, pairwise_distances
from .voting import NEVER, AbstentionRule, conduct_poll, plurality_tally, win_probability

UNIT_EPSILON = 1e-9


def unit_vector(a, b, epsilon: float = UNIT_EPSILON) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[-1], b.shape[-1])
    return unit_vectors(a, b, epsilon)


def unit_vectors(a: np.ndarray, b: np.ndarray, epsilon: float = UNIT_EPSILON) -> np.ndarray:
    """Row-wise unit vectors from ``a`` to ``b``; zero where the points are within ``epsilon``."""
    diff = b - a
    n = norms(diff)
    safe = np.where(n > epsilon, n, 1.0)
    return np.where((n > epsilon)[..., None], diff / safe[..., None], 0.0)


def _check_poll(poll: PollResult, candidates: CandidateSet) -> None:
    if len(poll.counts) != len(candidates):
        raise InvalidValue(f"poll has {len(poll.counts)} counts for {len(candidates)} candidates")
    if poll.expressed < 1:
        raise NoExpressedVotes("the poll has no expressed votes; voters have nothing to react to")


def _positions(positions, candidates: CandidateSet) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    if positions.shape[-1] != candidates.dimension:
        raise DimensionMismatch(positions.shape[-1], candidates.dimension)
    return positions


def top_k(poll: PollResult, k: int) -> np.ndarray:
    """Indices of the ``k`` best-polled candidates, ascending index order."""
    if not 1 <= k <= len(poll.counts):
        raise InvalidValue(f"k must lie in [1, {len(poll.counts)}], got {k}")
    return np.array(sorted(poll.order()[:k]), dtype=int)


def k_pragmatist_velocities(positions, poll: PollResult, candidates: CandidateSet, k: int = 3) -> np.ndarray:
    _check_poll(poll, candidates)
    positions = _positions(positions, candidates)
    top = top_k(poll, k)
    dist = pairwise_distances(positions, candidates.positions[top])
    target = top[np.argmin(dist, axis=1)]
    return unit_vectors(positions, candidates.positions[target])


def expected_utilities(positions, poll: PollResult, candidates: CandidateSet, u: UtilityFunction) -> np.ndarray:
    """``u(v, c_j) * p_j`` for every voter row and candidate column."""
    p = win_probability(poll)
    return u.from_distance(pairwise_distances(positions, candidates.positions)) * p


def max_eu_velocities(positions, poll: PollResult, candidates: CandidateSet, u: UtilityFunction) -> np.ndarray:
    _check_poll(poll, candidates)
    positions = _positions(positions, candidates)
    target = np.argmax(expected_utilities(positions, poll, candidates, u), axis=1)
    return unit_vectors(positions, candidates.positions[target])


def opinion_center_velocities(positions, poll: PollResult, candidates: CandidateSet, u: UtilityFunction) -> np.ndarray:
    """Sum over candidates of direction * utility * win probability, left unnormalized.

    A negative utility (repulsive variant, beyond alpha) turns that
    candidate's term into a push away from it.
    """
    _check_poll(poll, candidates)
    return opinion_center_from_shares(_positions(positions, candidates), win_probability(poll), candidates, u)


def opinion_center_from_shares(positions: np.ndarray, shares, candidates: CandidateSet, u: UtilityFunction) -> np.ndarray:
    """Opinion-center velocity with the win probabilities given directly."""
    shares = np.asarray(shares, dtype=float)
    weights = u.from_distance(pairwise_distances(positions, candidates.positions)) * shares
    velocity = np.zeros(positions.shape)
    for j, c in enumerate(candidates.positions):
        velocity = velocity + weights[:, j, None] * unit_vectors(positions, np.broadcast_to(c, positions.shape))
    return velocity


def _single(fn: Callable, v, *args) -> np.ndarray:
    pos = v.position if isinstance(v, VoterState) else np.asarray(v, dtype=float)
    return fn(pos[None, :], *args)[0]


def velocity_k_pragmatist(v, poll: PollResult, candidates: CandidateSet, k: int = 3) -> np.ndarray:
    return _single(k_pragmatist_velocities, v, poll, candidates, k)


def velocity_max_eu(v, poll: PollResult, candidates: CandidateSet, u: UtilityFunction) -> np.ndarray:
    return _single(max_eu_velocities, v, poll, candidates, u)


def velocity_opinion_center(v, poll: PollResult, candidates: CandidateSet, u: UtilityFunction) -> np.ndarray:
    return _single(opinion_center_velocities, v, poll, candidates, u)


def utility_for(config: SimulationConfig) -> UtilityFunction:
    if config.utility == "repulsive":
        return UtilityFunction.repulsive(config.alpha)
    return UtilityFunction.inverse(config.epsilon)


def abstention_for(config: SimulationConfig) -> AbstentionRule:
    if config.utility == "repulsive":
        return AbstentionRule.beyond_alpha(config.alpha)
    return NEVER


def velocities(positions, candidates: CandidateSet, poll: PollResult, config: SimulationConfig) -> np.ndarray:
    if config.rule == "k-pragmatist":
        return k_pragmatist_velocities(positions, poll, candidates, config.k)
    if config.rule == "max-eu":
        return max_eu_velocities(positions, poll, candidates, utility_for(config))
    return opinion_center_velocities(positions, poll, candidates, utility_for(config))


def step(electorate: Electorate, candidates: CandidateSet, poll: PollResult, config: SimulationConfig) -> Electorate:
    """Move every voter by ``step_size`` times its velocity."""
    if electorate.dimension != candidates.dimension:
        raise DimensionMismatch(electorate.dimension, candidates.dimension)
    pos = electorate.positions
    workers = min(config.workers, max(1, len(electorate)))
    if workers == 1:
        vel = velocities(pos, candidates, poll, config)
    else:
        chunks = np.array_split(pos, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: velocities(c, candidates, poll, config), chunks))
        vel = np.concatenate(parts, axis=0)
    return electorate.with_positions(pos + config.step_size * vel)


def run(
    electorate: Electorate,
    candidates: CandidateSet,
    config: SimulationConfig,
    initial_poll: Optional[PollResult] = None,
    snapshot_stride: Optional[int] = 1,
) -> SimulationTrace:
    """Iterate move / tally / poll until the order settles or the budget runs out.

    Iteration 0 takes the initial poll (or uses ``initial_poll``) and tallies
    the starting positions. Each later iteration moves voters against the most
    recent poll, re-tallies the whole electorate and, when the iteration is a
    multiple of ``config.poll_period``, takes a fresh poll. The run stops once
    the tally order has been identical for ``config.stable_window``
    consecutive iterations.

    Positions are kept on records whose iteration is a multiple of
    ``snapshot_stride`` (never, if None) and on the last record.
    """
    problem = config.validate(len(candidates))
    if problem:
        raise InvalidValue(problem)
    if len(electorate) == 0:
        raise InvalidValue("cannot run a simulation on an empty electorate")
    if electorate.dimension != candidates.dimension:
        raise DimensionMismatch(electorate.dimension, candidates.dimension)

    rng = np.random.default_rng(config.seed)
    abstention = abstention_for(config)
    if initial_poll is None:
        poll = conduct_poll(electorate, candidates, config.poll_fraction, abstention, rng, iteration=0)
    else:
        poll = dataclasses.replace(initial_poll, iteration_taken=0)
        if len(poll.counts) != len(candidates):
            raise InvalidValue(f"initial poll has {len(poll.counts)} counts for {len(candidates)} candidates")
    if poll.expressed == 0:
        raise NoExpressedVotes(
            f"the initial poll of {poll.sample_size} voters has no expressed votes "
            f"({poll.abstentions} abstentions); voters have nothing to react to"
        )

    def keep(i):
        return snapshot_stride is not None and i % snapshot_stride == 0

    tally = plurality_tally(electorate, candidates, abstention)
    trace = SimulationTrace(candidates, config)
    trace.records.append(IterationRecord(0, tally, poll, electorate.positions if keep(0) else None))
    order, streak = tally.order(), 1
    if streak >= config.stable_window:
        trace.converged_at = 0

    i = 0
    while trace.converged_at is None and i < config.max_iterations:
        i += 1
        electorate = step(electorate, candidates, poll, config)
        tally = plurality_tally(electorate, candidates, abstention)
        new_poll = None
        if config.poll_period is not None and i % config.poll_period == 0:
            new_poll = conduct_poll(electorate, candidates, config.poll_fraction, abstention, rng, iteration=i)
            # a poll in which every sampled voter abstained carries no signal
            if new_poll.expressed > 0:
                poll = new_poll
        trace.records.append(IterationRecord(i, tally, new_poll, electorate.positions if keep(i) else None))

        new_order = tally.order()
        streak = streak + 1 if new_order == order else 1
        order = new_order
        if streak >= config.stable_window:
            trace.converged_at = i

    last = trace.records[-1]
    if last.positions is None:
        trace.records[-1] = dataclasses.replace(last, positions=electorate.positions)
    trace.final_positions = electorate.positions
    return trace
