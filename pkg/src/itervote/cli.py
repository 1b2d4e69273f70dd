"""Command-line entry point: ``simulate``, ``compare`` and ``synth``.

Scenario files hold one ``key = value`` per line (``#`` comments allowed).
Relative paths are resolved against the scenario file's directory. Every key
can be overridden by the matching ``--flag`` on the command line.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import CandidateSet, Electorate, InvalidValue, NoExpressedVotes, PollResult, SimulationConfig, SimulationTrace
from .dynamics import abstention_for, run
from .frames import frame_csv, frame_svg
from .ingest import (
    IngestError,
    format_ballots,
    generate_synthetic,
    load_ballots,
    load_synthetic_spec,
    place_candidates,
    sample_electorate,
)
from .projection import fit_pca, project
from .voting import votes

log = logging.getLogger("itervote")


class ScenarioError(ValueError):
    pass


# scenario key -> SimulationConfig field
CONFIG_KEYS = {
    "rule": "rule",
    "k": "k",
    "utility": "utility",
    "alpha": "alpha",
    "epsilon": "epsilon",
    "step_size": "step_size",
    "poll_period": "poll_period",
    "poll_fraction": "poll_fraction",
    "iterations": "max_iterations",
    "max_iterations": "max_iterations",
    "stable_window": "stable_window",
    "seed": "seed",
    "sample_size": "sample_size",
    "workers": "workers",
}
OTHER_KEYS = ("ballots", "synthetic", "out", "frame_stride", "initial_poll")


@dataclass
class Scenario:
    ballots: Optional[Path] = None
    synthetic: Optional[Path] = None
    out: Optional[Path] = None
    frame_stride: int = 10
    initial_poll: Optional[tuple] = None
    config: SimulationConfig = field(default_factory=SimulationConfig)
    source: Optional[Path] = None

    def validate(self) -> None:
        if (self.ballots is None) == (self.synthetic is None):
            raise ScenarioError("a scenario needs exactly one of 'ballots' or 'synthetic'")
        path = self.ballots or self.synthetic
        if not path.is_file():
            raise ScenarioError(f"input file not found: {path}")
        if self.frame_stride < 1:
            raise ScenarioError(f"frame_stride must be >= 1, got {self.frame_stride}")


def _convert(key: str, value: str):
    value = value.strip()
    try:
        if key == "poll_period":
            return None if value.lower() in ("single", "none", "") else int(value)
        if key in ("k", "iterations", "max_iterations", "stable_window", "seed", "workers", "frame_stride"):
            return int(value)
        if key == "sample_size":
            return None if value.lower() in ("none", "") else int(value)
        if key in ("alpha", "epsilon", "step_size", "poll_fraction"):
            return float(value)
        if key == "initial_poll":
            return tuple(int(x) for x in value.split(";"))
    except ValueError:
        raise ScenarioError(f"bad value for {key}: {value!r}") from None
    return value


def _normalize(key: str) -> str:
    return key.strip().replace("-", "_")


def build_scenario(values: dict, base: Path = Path("."), source: Optional[Path] = None) -> Scenario:
    cfg, rest = {}, {}
    for raw_key, raw in values.items():
        key = _normalize(raw_key)
        if key in CONFIG_KEYS:
            cfg[CONFIG_KEYS[key]] = _convert(key, raw) if isinstance(raw, str) else raw
        elif key in OTHER_KEYS:
            rest[key] = _convert(key, raw) if isinstance(raw, str) else raw
        else:
            raise ScenarioError(f"unknown scenario key {raw_key!r}")
    try:
        config = SimulationConfig(**cfg)
    except InvalidValue as exc:
        raise ScenarioError(str(exc)) from None
    sc = Scenario(config=config, source=source)
    for key in ("ballots", "synthetic", "out"):
        if rest.get(key):
            p = Path(rest[key])
            setattr(sc, key, p if p.is_absolute() else base / p)
    if "frame_stride" in rest:
        sc.frame_stride = rest["frame_stride"]
    if "initial_poll" in rest:
        sc.initial_poll = rest["initial_poll"]
    if sc.out is None and source is not None:
        sc.out = base / f"{source.stem}-out"
    return sc


def read_scenario_values(path: Path) -> dict:
    values = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[_normalize(key)] = value.strip()
    return values


def load_scenario(path, overrides: Optional[dict] = None) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    values = read_scenario_values(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[_normalize(key)] = value
    sc = build_scenario(values, base=path.parent, source=path)
    # --out on the command line is relative to the working directory
    if overrides and overrides.get("out") is not None:
        sc.out = Path(overrides["out"])
    sc.validate()
    return sc


def prepare(scenario: Scenario) -> tuple:
    """Load or generate the electorate, place candidates, then subsample."""
    if scenario.ballots is not None:
        electorate, names = load_ballots(scenario.ballots)
    else:
        spec = load_synthetic_spec(scenario.synthetic)
        electorate, prototypes = generate_synthetic(spec)
        names = prototypes.names
    candidates = place_candidates(electorate, names)
    cfg = scenario.config
    if cfg.sample_size is not None:
        electorate = sample_electorate(electorate, cfg.sample_size, cfg.seed)
    return electorate, candidates


def simulate(scenario: Scenario, prepared: Optional[tuple] = None) -> tuple:
    electorate, candidates = prepared or prepare(scenario)
    poll = None
    if scenario.initial_poll is not None:
        if len(scenario.initial_poll) != len(candidates):
            raise ScenarioError(
                f"initial_poll has {len(scenario.initial_poll)} counts for {len(candidates)} candidates"
            )
        poll = PollResult.from_counts(scenario.initial_poll)
    trace = run(electorate, candidates, scenario.config, initial_poll=poll, snapshot_stride=scenario.frame_stride)
    return electorate, candidates, trace


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    out.writerows(rows)
    return buf.getvalue()


def winner_name(counts, names) -> str:
    if sum(counts) == 0:
        return ""
    return names[int(np.argmax(counts))]


def tally_csv(trace: SimulationTrace) -> str:
    names = trace.candidates.names
    rows = [
        [r.iteration, *r.tally.counts, r.tally.abstentions, winner_name(r.tally.counts, names)]
        for r in trace.records
    ]
    return _csv_text(["iteration", *names, "abstentions", "winner"], rows)


def polls_csv(trace: SimulationTrace) -> str:
    names = trace.candidates.names
    rows = [
        [r.iteration, *r.poll.counts, r.poll.abstentions, r.poll.sample_size]
        for r in trace.records
        if r.poll is not None
    ]
    return _csv_text(["iteration", *names, "abstentions", "sample_size"], rows)


def parse_tally_csv(text: str) -> tuple:
    """Inverse of :func:`tally_csv`: ``(names, rows)`` with rows as
    ``(iteration, counts, abstentions, winner)``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[0] != "iteration" or header[-2:] != ["abstentions", "winner"]:
        raise ValueError("not a tally CSV")
    names = tuple(header[1:-2])
    rows = []
    for row in reader:
        counts = tuple(int(x) for x in row[1:-2])
        if len(counts) != len(names):
            raise ValueError("tally row length mismatch")
        rows.append((int(row[0]), counts, int(row[-2]), row[-1]))
    return names, rows


def parse_polls_csv(text: str) -> tuple:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[0] != "iteration" or header[-2:] != ["abstentions", "sample_size"]:
        raise ValueError("not a polls CSV")
    names = tuple(header[1:-2])
    polls = []
    for row in reader:
        counts = tuple(int(x) for x in row[1:-2])
        polls.append(PollResult(counts, int(row[-2]), int(row[-1]), int(row[0])))
    return names, polls


def summary_text(scenario: Scenario, trace: SimulationTrace) -> str:
    names = trace.candidates.names
    final = trace.final_tally
    lines = [
        f"iterations: {trace.records[-1].iteration}",
        f"converged_at: {'none' if trace.converged_at is None else trace.converged_at}",
        f"winner: {winner_name(final.counts, names) or 'none'}",
        "final_order: " + ", ".join(f"{names[j]} ({final.counts[j]})" for j in trace.final_order),
        f"abstentions: {final.abstentions}",
        "",
        "[config]",
    ]
    for key, value in trace.config.to_dict().items():
        if key == "poll_period" and value is None:
            value = "single"
        lines.append(f"{key} = {value}")
    src = scenario.ballots or scenario.synthetic
    lines.append(f"input = {src}")
    lines.append(f"frame_stride = {scenario.frame_stride}")
    if scenario.initial_poll is not None:
        lines.append("initial_poll = " + ";".join(str(c) for c in scenario.initial_poll))
    return "\n".join(lines) + "\n"


def write_outputs(scenario: Scenario, electorate: Electorate, candidates: CandidateSet, trace: SimulationTrace) -> Path:
    out = scenario.out or Path("out")
    frames = out / "frames"
    frames.mkdir(parents=True, exist_ok=True)
    (out / "tally.csv").write_text(tally_csv(trace), encoding="utf-8")
    (out / "polls.csv").write_text(polls_csv(trace), encoding="utf-8")

    basis = fit_pca(electorate.positions)
    cand_xy = project(basis, candidates.positions)
    abstention = abstention_for(trace.config)
    width = max(5, len(str(trace.records[-1].iteration)))
    for rec in trace.records:
        if rec.positions is None:
            continue
        xy = project(basis, rec.positions)
        stem = f"I{rec.iteration:0{width}d}"
        (frames / f"{stem}.csv").write_text(frame_csv(electorate.ids, xy, candidates, cand_xy), encoding="utf-8")
        choice = votes(rec.positions, candidates, abstention)
        svg = frame_svg(xy, choice, candidates, cand_xy, title=f"iteration {rec.iteration}")
        (frames / f"{stem}.svg").write_text(svg, encoding="utf-8")
    (out / "summary.txt").write_text(summary_text(scenario, trace), encoding="utf-8")
    return out


def run_scenario(scenario: Scenario) -> SimulationTrace:
    electorate, candidates, trace = simulate(scenario)
    out = write_outputs(scenario, electorate, candidates, trace)
    log.info("wrote %d iterations to %s", len(trace.records), out)
    return trace


@dataclass
class Comparison:
    names: tuple
    trace_a: SimulationTrace
    trace_b: SimulationTrace
    l1: list

    @property
    def winners(self) -> tuple:
        return (
            winner_name(self.trace_a.final_tally.counts, self.names),
            winner_name(self.trace_b.final_tally.counts, self.names),
        )


def tally_l1(trace_a: SimulationTrace, trace_b: SimulationTrace) -> list:
    """Per-iteration L1 distance between tallies (abstentions included).

    When one run stops earlier, its last tally is carried forward.
    """
    ra, rb = trace_a.records, trace_b.records
    out = []
    for t in range(max(len(ra), len(rb))):
        a = ra[min(t, len(ra) - 1)].tally
        b = rb[min(t, len(rb) - 1)].tally
        dist = sum(abs(x - y) for x, y in zip(a.counts, b.counts)) + abs(a.abstentions - b.abstentions)
        out.append(dist)
    return out


def compare_runs(scenario_a: Scenario, scenario_b: Scenario) -> Comparison:
    elec_a, cand_a = prepare(scenario_a)
    elec_b, cand_b = prepare(scenario_b)
    if elec_a != elec_b or cand_a != cand_b:
        raise ScenarioError("the two scenarios do not share the same electorate and candidates")
    _, _, trace_a = simulate(scenario_a, (elec_a, cand_a))
    _, _, trace_b = simulate(scenario_b, (elec_b, cand_b))
    return Comparison(cand_a.names, trace_a, trace_b, tally_l1(trace_a, trace_b))


def comparison_csv(cmp: Comparison) -> str:
    rows = []
    for t, dist in enumerate(cmp.l1):
        ra = cmp.trace_a.records[min(t, len(cmp.trace_a.records) - 1)]
        rb = cmp.trace_b.records[min(t, len(cmp.trace_b.records) - 1)]
        rows.append([t, dist, winner_name(ra.tally.counts, cmp.names), winner_name(rb.tally.counts, cmp.names)])
    return _csv_text(["iteration", "l1_distance", "winner_a", "winner_b"], rows)


def final_orders_csv(cmp: Comparison) -> str:
    fa, fb = cmp.trace_a.final_tally, cmp.trace_b.final_tally
    rows = []
    for rank, (ja, jb) in enumerate(zip(fa.order(), fb.order()), start=1):
        rows.append([rank, cmp.names[ja], fa.counts[ja], cmp.names[jb], fb.counts[jb]])
    return _csv_text(["rank", "candidate_a", "votes_a", "candidate_b", "votes_b"], rows)


def write_comparison(cmp: Comparison, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(comparison_csv(cmp), encoding="utf-8")
    (out / "final_orders.csv").write_text(final_orders_csv(cmp), encoding="utf-8")


def _add_simulation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--rule", choices=["k-pragmatist", "max-eu", "opinion-center"])
    p.add_argument("--k", type=int)
    p.add_argument("--utility", choices=["inverse", "repulsive"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--step-size", type=float)
    p.add_argument("--poll-period", help="positive integer, or 'single' for one initial poll")
    p.add_argument("--poll-fraction", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--stable-window", type=int)
    p.add_argument("--sample-size", type=int)
    p.add_argument("--frame-stride", type=int)
    p.add_argument("--initial-poll", help="fixed first poll: semicolon-separated counts in candidate order")
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itervote", description="Iterative plurality voting simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write its outputs")
    sim.add_argument("scenario")
    _add_simulation_flags(sim)

    cmp = sub.add_parser("compare", help="run two scenarios on the same electorate and compare them")
    cmp.add_argument("scenario_a")
    cmp.add_argument("scenario_b")
    cmp.add_argument("--out", default="compare-out")

    syn = sub.add_parser("synth", help="generate a ballot CSV from a synthetic spec")
    syn.add_argument("spec")
    syn.add_argument("--out", required=True)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    keys = (
        "out", "seed", "rule", "k", "utility", "alpha", "epsilon", "step_size", "poll_period",
        "poll_fraction", "iterations", "stable_window", "sample_size", "frame_stride",
        "initial_poll", "workers",
    )
    out = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value if key == "out" else str(value)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "simulate":
            scenario = load_scenario(args.scenario, _overrides(args))
            trace = run_scenario(scenario)
            print(summary_text(scenario, trace).split("\n\n", 1)[0])
        elif args.command == "compare":
            cmp = compare_runs(load_scenario(args.scenario_a), load_scenario(args.scenario_b))
            write_comparison(cmp, Path(args.out))
            wa, wb = cmp.winners
            print(f"winner_a: {wa or 'none'}")
            print(f"winner_b: {wb or 'none'}")
            print(f"final_l1: {cmp.l1[-1]}")
            print(f"max_l1: {max(cmp.l1)}")
        else:
            electorate, prototypes = generate_synthetic(load_synthetic_spec(args.spec))
            Path(args.out).write_text(format_ballots(electorate, prototypes.names), encoding="utf-8")
    except (ScenarioError, IngestError, NoExpressedVotes, InvalidValue, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
