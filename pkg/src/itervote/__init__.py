"""Agent-based simulation of iterative plurality voting driven by polls."""
from .core import (
    CandidateSet,
    DimensionMismatch,
    Electorate,
    InvalidValue,
    NoExpressedVotes,
    PollResult,
    SimulationConfig,
    SimulationTrace,
    Tally,
    VoterState,
)
from .dynamics import (
    run,
    step,
    unit_vector,
    velocity_k_pragmatist,
    velocity_max_eu,
    velocity_opinion_center,
)
from .ingest import (
    generate_synthetic,
    load_ballots,
    load_synthetic_spec,
    place_candidates,
    sample_electorate,
    save_ballots,
)
from .projection import PcaBasis, fit_pca, project
from .utility import UtilityFunction, distance, utility_inverse, utility_repulsive
from .voting import AbstentionRule, conduct_poll, nearest_candidate, plurality_tally, win_probability, winner

__version__ = "0.1.0"
