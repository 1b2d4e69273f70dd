"""Value types shared across the simulator.

Positions are plain 1-D float arrays; collections of positions are 2-D arrays
with one row per voter (or candidate). Every container freezes its arrays on
construction, so instances can be shared between threads without copying.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class DimensionMismatch(ValueError):
    def __init__(self, left: int, right: int):
        super().__init__(f"dimension mismatch: {left} != {right}")
        self.left = left
        self.right = right


class NoExpressedVotes(ValueError):
    """Raised when a poll or tally carries no expressed vote."""

    def __init__(self, msg: str = "no expressed votes"):
        super().__init__(msg)


class InvalidValue(ValueError):
    pass


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def as_position(coords, dimension: Optional[int] = None) -> np.ndarray:
    """Coerce ``coords`` to a finite 1-D float vector, optionally of length ``dimension``."""
    p = np.asarray(coords, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidValue(f"position must be a non-empty vector, got shape {p.shape}")
    if dimension is not None and p.size != dimension:
        raise DimensionMismatch(p.size, dimension)
    if not np.all(np.isfinite(p)):
        raise InvalidValue("position has non-finite coordinates")
    return p


def check_position(p: np.ndarray, dimension: int) -> Optional[str]:
    if p.ndim != 1 or p.size != dimension:
        return f"position length {p.size} != dimension {dimension}"
    if not np.all(np.isfinite(p)):
        return "position has non-finite coordinates"
    return None


def _raise_if(problem: Optional[str]) -> None:
    if problem is not None:
        raise InvalidValue(problem)


@dataclass(frozen=True)
class VoterState:
    id: str
    position: np.ndarray
    official_vote: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen(self.position))

    def __eq__(self, other):
        if not isinstance(other, VoterState):
            return NotImplemented
        return (
            self.id == other.id
            and self.official_vote == other.official_vote
            and np.array_equal(self.position, other.position)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Electorate:
    """Voters in insertion order, stored column-wise.

    ``positions`` has shape ``(n, d)``; ``ids`` and ``official_votes`` are
    parallel tuples. ``official_votes`` entries are candidate indices or None.
    """

    ids: tuple
    positions: np.ndarray
    official_votes: tuple = ()

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1 and pos.size == 0:
            pos = pos.reshape(0, 1)
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        votes = tuple(self.official_votes) if self.official_votes else (None,) * len(self.ids)
        votes = tuple(None if v is None else int(v) for v in votes)
        object.__setattr__(self, "official_votes", votes)
        _raise_if(self.validate())

    @classmethod
    def from_voters(cls, voters: Sequence[VoterState], dimension: Optional[int] = None) -> "Electorate":
        if not voters:
            if dimension is None:
                raise InvalidValue("an empty electorate needs an explicit dimension")
            return cls((), np.zeros((0, dimension)), ())
        return cls(
            tuple(v.id for v in voters),
            np.vstack([v.position for v in voters]),
            tuple(v.official_vote for v in voters),
        )

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def voters(self) -> list:
        return [VoterState(i, p, o) for i, p, o in zip(self.ids, self.positions, self.official_votes)]

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, idx: int) -> VoterState:
        return VoterState(self.ids[idx], self.positions[idx], self.official_votes[idx])

    def with_positions(self, positions: np.ndarray) -> "Electorate":
        return Electorate(self.ids, positions, self.official_votes)

    def subset(self, indices: Iterable[int]) -> "Electorate":
        idx = list(indices)
        return Electorate(
            tuple(self.ids[i] for i in idx),
            self.positions[idx].reshape(len(idx), self.dimension),
            tuple(self.official_votes[i] for i in idx),
        )

    def validate(self, n_candidates: Optional[int] = None) -> Optional[str]:
        pos = self.positions
        if pos.ndim != 2 or pos.shape[1] < 1:
            return f"positions must be an (n, d) array with d >= 1, got shape {pos.shape}"
        if pos.shape[0] != len(self.ids):
            return f"{pos.shape[0]} positions for {len(self.ids)} ids"
        if len(self.official_votes) != len(self.ids):
            return f"{len(self.official_votes)} official votes for {len(self.ids)} ids"
        if not np.all(np.isfinite(pos)):
            return "voter positions contain non-finite values"
        if len(set(self.ids)) != len(self.ids):
            seen = set()
            for i in self.ids:
                if i in seen:
                    return f"duplicate voter id {i!r}"
                seen.add(i)
        for voter_id, vote in zip(self.ids, self.official_votes):
            if vote is None:
                continue
            if vote < 0 or (n_candidates is not None and vote >= n_candidates):
                return f"voter {voter_id!r} has official vote {vote} outside the candidate range"
        return None

    def __eq__(self, other):
        if not isinstance(other, Electorate):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.official_votes == other.official_votes
            and self.positions.shape == other.positions.shape
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "voters": [
                {"id": i, "position": [float(x) for x in p], "official_vote": o}
                for i, p, o in zip(self.ids, self.positions, self.official_votes)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Electorate":
        voters = data["voters"]
        d = int(data["dimension"])
        return cls(
            tuple(v["id"] for v in voters),
            np.array([v["position"] for v in voters], dtype=float).reshape(len(voters), d),
            tuple(v["official_vote"] for v in voters),
        )


@dataclass(frozen=True, eq=False)
class CandidateSet:
    names: tuple
    positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "positions", _frozen(np.atleast_2d(np.asarray(self.positions, dtype=float))))
        _raise_if(self.validate())

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def validate(self) -> Optional[str]:
        if len(self.names) < 1:
            return "candidate set is empty"
        if self.positions.ndim != 2 or self.positions.shape[0] != len(self.names):
            return f"{self.positions.shape[0]} positions for {len(self.names)} candidate names"
        if len(set(self.names)) != len(self.names):
            return "candidate names are not unique"
        if not np.all(np.isfinite(self.positions)):
            return "candidate positions contain non-finite values"
        return None

    def __eq__(self, other):
        if not isinstance(other, CandidateSet):
            return NotImplemented
        return (
            self.names == other.names
            and self.positions.shape == other.positions.shape
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "positions": [[float(x) for x in p] for p in self.positions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateSet":
        return cls(tuple(data["names"]), np.array(data["positions"], dtype=float))


def _int_tuple(values) -> tuple:
    return tuple(int(v) for v in values)


@dataclass(frozen=True)
class Tally:
    counts: tuple
    abstentions: int = 0

    def __post_init__(self):
        object.__setattr__(self, "counts", _int_tuple(self.counts))
        object.__setattr__(self, "abstentions", int(self.abstentions))
        _raise_if(self.validate())

    @property
    def expressed(self) -> int:
        return sum(self.counts)

    @property
    def total(self) -> int:
        return self.expressed + self.abstentions

    def validate(self, n_voters: Optional[int] = None) -> Optional[str]:
        if any(c < 0 for c in self.counts) or self.abstentions < 0:
            return "tally counts must be non-negative"
        if n_voters is not None and self.total != n_voters:
            return f"tally covers {self.total} voters, expected {n_voters}"
        return None

    def order(self) -> tuple:
        """Candidate indices sorted by descending count, ties by lowest index."""
        return tuple(sorted(range(len(self.counts)), key=lambda j: (-self.counts[j], j)))

    def to_dict(self) -> dict:
        return {"counts": list(self.counts), "abstentions": self.abstentions}

    @classmethod
    def from_dict(cls, data: dict) -> "Tally":
        return cls(tuple(data["counts"]), data["abstentions"])


@dataclass(frozen=True)
class PollResult:
    counts: tuple
    abstentions: int
    sample_size: int
    iteration_taken: int = 0

    def __post_init__(self):
        object.__setattr__(self, "counts", _int_tuple(self.counts))
        for name in ("abstentions", "sample_size", "iteration_taken"):
            object.__setattr__(self, name, int(getattr(self, name)))
        _raise_if(self.validate())

    @property
    def expressed(self) -> int:
        return sum(self.counts)

    def validate(self, n_candidates: Optional[int] = None) -> Optional[str]:
        if any(c < 0 for c in self.counts) or self.abstentions < 0:
            return "poll counts must be non-negative"
        if self.sample_size < 1:
            return "poll sample size must be positive"
        if self.expressed + self.abstentions != self.sample_size:
            return (
                f"poll counts ({self.expressed}) plus abstentions ({self.abstentions}) "
                f"!= sample size {self.sample_size}"
            )
        if n_candidates is not None and len(self.counts) != n_candidates:
            return f"poll has {len(self.counts)} counts for {n_candidates} candidates"
        if self.iteration_taken < 0:
            return "poll iteration must be non-negative"
        return None

    def order(self) -> tuple:
        return tuple(sorted(range(len(self.counts)), key=lambda j: (-self.counts[j], j)))

    @classmethod
    def from_counts(cls, counts: Sequence[int], abstentions: int = 0, iteration_taken: int = 0) -> "PollResult":
        """Build a poll by hand, e.g. to force a given candidate ranking."""
        return cls(tuple(counts), abstentions, sum(counts) + abstentions, iteration_taken)

    def to_dict(self) -> dict:
        return {
            "counts": list(self.counts),
            "abstentions": self.abstentions,
            "sample_size": self.sample_size,
            "iteration_taken": self.iteration_taken,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PollResult":
        return cls(tuple(data["counts"]), data["abstentions"], data["sample_size"], data["iteration_taken"])


RULES = ("k-pragmatist", "max-eu", "opinion-center")
UTILITIES = ("inverse", "repulsive")


@dataclass(frozen=True)
class SimulationConfig:
    """Run parameters.

    ``poll_period=None`` means a single poll taken at iteration 0 and never
    refreshed. ``workers`` only changes how voters are split across threads;
    results do not depend on it.
    """

    rule: str = "opinion-center"
    k: int = 3
    utility: str = "inverse"
    alpha: float = 50.0
    epsilon: float = 1e-6
    step_size: float = 1.0
    poll_period: Optional[int] = None
    poll_fraction: float = 0.1
    max_iterations: int = 500
    stable_window: int = 50
    seed: int = 0
    sample_size: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        _raise_if(self.validate())

    def validate(self, n_candidates: Optional[int] = None) -> Optional[str]:
        if self.rule not in RULES:
            return f"unknown velocity rule {self.rule!r}; expected one of {', '.join(RULES)}"
        if self.utility not in UTILITIES:
            return f"unknown utility {self.utility!r}; expected one of {', '.join(UTILITIES)}"
        if self.rule == "k-pragmatist":
            if self.k < 1:
                return f"k must be >= 1, got {self.k}"
            if n_candidates is not None and self.k > n_candidates:
                return f"k = {self.k} exceeds the number of candidates ({n_candidates})"
        if self.utility == "repulsive" and not (self.alpha > 0 and math.isfinite(self.alpha)):
            return f"alpha must be positive, got {self.alpha}"
        if not self.epsilon > 0:
            return f"epsilon must be positive, got {self.epsilon}"
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            return f"step size must be positive, got {self.step_size}"
        if self.poll_period is not None and self.poll_period < 1:
            return f"poll period must be a positive integer or single, got {self.poll_period}"
        if not 0 < self.poll_fraction <= 1:
            return f"poll fraction must lie in (0, 1], got {self.poll_fraction}"
        if self.max_iterations < 0:
            return f"iteration budget must be non-negative, got {self.max_iterations}"
        if self.stable_window < 1:
            return f"stable window must be >= 1, got {self.stable_window}"
        if not 0 <= self.seed < 2**64:
            return f"seed must be a 64-bit unsigned integer, got {self.seed}"
        if self.sample_size is not None and self.sample_size < 1:
            return f"sample size must be positive, got {self.sample_size}"
        if self.workers < 1:
            return f"workers must be >= 1, got {self.workers}"
        return None

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        return cls(**data)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    tally: Tally
    poll: Optional[PollResult] = None
    positions: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


@dataclass
class SimulationTrace:
    candidates: CandidateSet
    config: SimulationConfig
    records: list = field(default_factory=list)
    converged_at: Optional[int] = None
    final_positions: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def final_tally(self) -> Tally:
        return self.records[-1].tally

    @property
    def final_order(self) -> tuple:
        return self.final_tally.order()

    @property
    def polls(self) -> list:
        return [r.poll for r in self.records if r.poll is not None]

    @property
    def tallies(self) -> list:
        return [r.tally for r in self.records]

    def to_dict(self, positions: bool = True) -> dict:
        def pos(p):
            return None if p is None or not positions else [[float(x) for x in row] for row in p]

        return {
            "candidates": self.candidates.to_dict(),
            "config": self.config.to_dict(),
            "converged_at": self.converged_at,
            "final_order": list(self.final_order),
            "records": [
                {
                    "iteration": r.iteration,
                    "tally": r.tally.to_dict(),
                    "poll": None if r.poll is None else r.poll.to_dict(),
                    "positions": pos(r.positions),
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationTrace":
        records = [
            IterationRecord(
                r["iteration"],
                Tally.from_dict(r["tally"]),
                None if r["poll"] is None else PollResult.from_dict(r["poll"]),
                None if r["positions"] is None else _frozen(r["positions"]),
            )
            for r in data["records"]
        ]
        trace = cls(
            CandidateSet.from_dict(data["candidates"]),
            SimulationConfig.from_dict(data["config"]),
            records,
            data["converged_at"],
        )
        if records and records[-1].positions is not None:
            trace.final_positions = records[-1].positions
        return trace

    def validate(self) -> Optional[str]:
        if len(self.records) > self.config.max_iterations + 1:
            return f"{len(self.records)} records exceed the iteration budget {self.config.max_iterations}"
        if self.converged_at is not None:
            w = self.config.stable_window
            by_iter = {r.iteration: r.tally.order() for r in self.records}
            window = [by_iter.get(t) for t in range(self.converged_at - w + 1, self.converged_at + 1)]
            if None in window or len(set(window)) != 1:
                return f"candidate order is not stable over the {w} iterations ending at {self.converged_at}"
        return None
