"""Ballot files, candidate placement, subsampling and synthetic electorates.

Ballot CSV layout (UTF-8)::

    voter_id,<candidate_1>,...,<candidate_m>,official_vote
    a17,80,12.5,...,3,<candidate name or empty>

Synthetic spec layout, one item per line, ``#`` starts a comment::

    seed = 42
    <candidate>,<x1;x2;...;xd>,<sigma>,<count>

An empty candidate field generates unlabeled voters (no official vote).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .core import CandidateSet, Electorate, InvalidValue

PathLike = Union[str, Path]

SCORE_MIN = 0.0
SCORE_MAX = 100.0


class IngestError(ValueError):
    """A malformed input file; ``line`` is 1-based, counting the header."""

    def __init__(self, msg: str, line: Optional[int] = None, path: Optional[PathLike] = None):
        self.msg = msg
        self.line = line
        self.path = path
        where = "".join(f"{x}:" for x in (path, line) if x is not None)
        super().__init__(f"{where} {msg}" if where else msg)

    def at(self, path: PathLike) -> "IngestError":
        return IngestError(self.msg, self.line, path)


def _parse_score(text: str, line: int, column: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise IngestError(f"score for {column!r} is not a number: {text!r}", line) from None
    if not math.isfinite(x) or not SCORE_MIN <= x <= SCORE_MAX:
        raise IngestError(f"score for {column!r} is outside [0, 100]: {text!r}", line)
    return x


def parse_ballots(text: str) -> tuple:
    """Parse ballot CSV text into ``(Electorate, candidate names)``."""
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise IngestError("empty file: missing header", 1) from None
    if len(header) < 3 or header[0] != "voter_id" or header[-1] != "official_vote":
        raise IngestError("header must read voter_id,<candidate names...>,official_vote", 1)
    names = tuple(header[1:-1])
    if any(not n for n in names):
        raise IngestError("empty candidate name in header", 1)
    if len(set(names)) != len(names):
        raise IngestError("duplicate candidate name in header", 1)
    lookup = {n: j for j, n in enumerate(names)}
    m = len(names)

    ids, positions, labels = [], [], []
    seen = {}
    for row in rows:
        line = rows.line_num
        if not row:
            continue
        if len(row) != m + 2:
            raise IngestError(f"expected {m + 2} fields, got {len(row)}", line)
        voter_id = row[0]
        if not voter_id:
            raise IngestError("empty voter_id", line)
        if voter_id in seen:
            raise IngestError(f"duplicate voter_id {voter_id!r} (first seen on line {seen[voter_id]})", line)
        seen[voter_id] = line
        positions.append([_parse_score(s, line, names[j]) for j, s in enumerate(row[1:-1])])
        vote = row[-1]
        if vote == "":
            labels.append(None)
        elif vote in lookup:
            labels.append(lookup[vote])
        else:
            raise IngestError(f"official_vote {vote!r} is not a candidate", line)
        ids.append(voter_id)
    pos = np.array(positions, dtype=float).reshape(len(ids), m)
    return Electorate(tuple(ids), pos, tuple(labels)), names


def load_ballots(path: PathLike) -> tuple:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"not valid UTF-8: {exc}", path=path) from None
    try:
        return parse_ballots(text)
    except IngestError as exc:
        raise exc.at(path) from None


def format_ballots(electorate: Electorate, names: Sequence[str]) -> str:
    if electorate.dimension != len(names):
        raise InvalidValue(f"{len(names)} candidate names for dimension {electorate.dimension}")
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["voter_id", *names, "official_vote"])
    for voter_id, pos, vote in zip(electorate.ids, electorate.positions, electorate.official_votes):
        out.writerow([voter_id, *(repr(float(x)) for x in pos), "" if vote is None else names[vote]])
    return buf.getvalue()


def save_ballots(electorate: Electorate, names: Sequence[str], path: PathLike) -> None:
    Path(path).write_text(format_ballots(electorate, names), encoding="utf-8")


def label_histogram(electorate: Electorate, names: Sequence[str]) -> dict:
    """Official-vote counts per candidate name (unlabeled voters omitted)."""
    counts = {n: 0 for n in names}
    for vote in electorate.official_votes:
        if vote is not None:
            counts[names[vote]] += 1
    return counts


def place_candidates(electorate: Electorate, names: Sequence[str]) -> CandidateSet:
    """Put each candidate at the mean position of the voters who officially chose it."""
    labels = np.array([-1 if v is None else v for v in electorate.official_votes], dtype=int)
    positions = []
    for j, name in enumerate(names):
        mask = labels == j
        if not mask.any():
            raise InvalidValue(f"candidate {name!r} has no supporters to place it by centroid")
        positions.append(electorate.positions[mask].mean(axis=0))
    return CandidateSet(tuple(names), np.array(positions))


def sample_electorate(electorate: Electorate, n: int, seed: int) -> Electorate:
    """Uniform sample of ``n`` voters without replacement, in original order."""
    size = len(electorate)
    if not 1 <= n <= size:
        raise InvalidValue(f"cannot sample {n} voters from a population of {size}")
    if n == size:
        return electorate
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(size, size=n, replace=False))
    return electorate.subset(idx)


@dataclass(frozen=True)
class Cluster:
    candidate: Optional[str]
    prototype: tuple
    sigma: float
    count: int


@dataclass(frozen=True)
class SyntheticSpec:
    clusters: tuple
    seed: int = 0

    def __post_init__(self):
        if not self.clusters:
            raise InvalidValue("synthetic spec has no clusters")
        d = len(self.clusters[0].prototype)
        named = [c.candidate for c in self.clusters if c.candidate]
        if not named:
            raise InvalidValue("synthetic spec needs at least one labeled cluster")
        if len(set(named)) != len(named):
            raise InvalidValue("each candidate may own at most one cluster")
        for c in self.clusters:
            if len(c.prototype) != d or d < 1:
                raise InvalidValue(f"cluster {c.candidate!r}: prototype length {len(c.prototype)} != {d}")
            if not all(SCORE_MIN <= x <= SCORE_MAX for x in c.prototype):
                raise InvalidValue(f"cluster {c.candidate!r}: prototype outside [0, 100]")
            if not c.sigma > 0:
                raise InvalidValue(f"cluster {c.candidate!r}: sigma must be positive")
            if c.count < 0:
                raise InvalidValue(f"cluster {c.candidate!r}: count must be non-negative")

    @property
    def names(self) -> tuple:
        return tuple(c.candidate for c in self.clusters if c.candidate)

    @property
    def dimension(self) -> int:
        return len(self.clusters[0].prototype)


def parse_synthetic_spec(text: str) -> SyntheticSpec:
    seed = 0
    clusters = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key = line.replace("=", ",", 1).split(",", 1)[0].strip()
        if key == "seed":
            try:
                seed = int(line.replace("=", ",", 1).split(",", 1)[1])
            except (IndexError, ValueError):
                raise IngestError(f"bad seed line {raw!r}", line_no) from None
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise IngestError(f"expected candidate,prototype,sigma,count; got {raw!r}", line_no)
        name, proto, sigma, count = parts
        try:
            cluster = Cluster(name or None, tuple(float(x) for x in proto.split(";")), float(sigma), int(count))
        except ValueError:
            raise IngestError(f"unparseable cluster line {raw!r}", line_no) from None
        clusters.append(cluster)
    try:
        return SyntheticSpec(tuple(clusters), seed)
    except InvalidValue as exc:
        raise IngestError(str(exc)) from None


def load_synthetic_spec(path: PathLike) -> SyntheticSpec:
    try:
        return parse_synthetic_spec(Path(path).read_text(encoding="utf-8"))
    except IngestError as exc:
        raise exc.at(path) from None


def format_synthetic_spec(spec: SyntheticSpec) -> str:
    lines = [f"seed = {spec.seed}"]
    for c in spec.clusters:
        proto = ";".join(repr(float(x)) for x in c.prototype)
        lines.append(f"{c.candidate or ''},{proto},{c.sigma!r},{c.count}")
    return "\n".join(lines) + "\n"


def generate_synthetic(spec: SyntheticSpec) -> tuple:
    """Draw each cluster from an isotropic normal around its prototype, clipped to [0, 100].

    Returns ``(electorate, prototypes)`` where ``prototypes`` is a
    CandidateSet holding the labeled clusters' prototypes.
    """
    rng = np.random.default_rng(spec.seed)
    names = spec.names
    lookup = {n: j for j, n in enumerate(names)}
    blocks, labels = [], []
    for c in spec.clusters:
        draw = rng.normal(loc=c.prototype, scale=c.sigma, size=(c.count, spec.dimension))
        blocks.append(np.clip(draw, SCORE_MIN, SCORE_MAX))
        labels.extend([lookup[c.candidate] if c.candidate else None] * c.count)
    positions = np.vstack(blocks) if blocks else np.zeros((0, spec.dimension))
    width = max(4, len(str(len(labels))))
    ids = tuple(f"s{i:0{width}d}" for i in range(len(labels)))
    electorate = Electorate(ids, positions, tuple(labels))
    prototypes = CandidateSet(names, np.array([c.prototype for c in spec.clusters if c.candidate], dtype=float))
    return electorate, prototypes
