import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itervote.core import CandidateSet, Electorate, InvalidValue, NoExpressedVotes, PollResult, Tally
from itervote.voting import (
    AbstentionRule,
    conduct_poll,
    nearest_candidate,
    plurality_tally,
    poll_sample_size,
    win_probability,
    winner,
)
from scenarios import random_instance


def brute_nearest(v, cands):
    best, best_d = None, None
    for j, c in enumerate(cands):
        d = sum((a - b) ** 2 for a, b in zip(v, c))
        if best_d is None or d < best_d:
            best, best_d = j, d
    return best


def test_nearest_examples():
    cands = CandidateSet(("a", "b", "c"), np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]))
    assert nearest_candidate(np.array([10.0, 0.0]), cands) == 1
    # equidistant between b and c
    assert nearest_candidate(np.array([5.0, 5.0]), cands) == 0
    cands4 = CandidateSet(("a", "b", "c", "d"), np.array([[0.0, 9.0], [-1.0, 0.0], [7.0, 7.0], [1.0, 0.0]]))
    assert nearest_candidate(np.zeros(2), cands4) == 1


def test_nearest_matches_brute_force(rng):
    voters, cands = random_instance(rng)
    for v in voters.positions:
        assert nearest_candidate(v, cands) == brute_nearest(v, cands.positions)


def test_tally_examples():
    cands = CandidateSet(("a", "b"), np.array([[0.0, 0.0], [10.0, 0.0]]))
    one = Electorate(("x",), np.array([[2.0, 0.0]]))
    assert plurality_tally(one, cands) == Tally((1, 0), 0)
    far = Electorate(("x",), np.array([[5.0, 100.0]]))
    assert plurality_tally(far, cands, AbstentionRule.beyond_alpha(50.0)) == Tally((0, 0), 1)
    assert plurality_tally(far, cands, AbstentionRule.never()) == Tally((1, 0), 0)


def test_abstention_requires_every_candidate_beyond_alpha():
    cands = CandidateSet(("a", "b"), np.array([[0.0, 0.0], [10.0, 0.0]]))
    e = Electorate(("x", "y", "z"), np.array([[60.0, 0.0], [61.0, 0.0], [0.0, 50.0]]))
    # x is 50 from b (not strictly beyond), y is 51 from b, z exactly 50 from a
    assert plurality_tally(e, cands, AbstentionRule.beyond_alpha(50.0)) == Tally((1, 1), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 6), st.integers(0, 2**32 - 1), st.sampled_from([None, 20.0, 60.0]))
def test_tally_conservation(n, m, seed, alpha):
    rng = np.random.default_rng(seed)
    e, c = random_instance(rng, n=n, m=m, d=3)
    t = plurality_tally(e, c, AbstentionRule(alpha))
    assert sum(t.counts) + t.abstentions == n


def test_tally_invariant_to_voter_order(rng):
    e, c = random_instance(rng, n=300, m=5, d=4)
    perm = rng.permutation(len(e))
    assert plurality_tally(e.subset(perm), c) == plurality_tally(e, c)


def test_candidate_permutation_moves_winner_consistently(rng):
    e, c = random_instance(rng, n=300, m=6, d=4)
    w = winner(plurality_tally(e, c))
    perm = rng.permutation(len(c))
    shuffled = CandidateSet(tuple(c.names[j] for j in perm), c.positions[perm])
    w2 = winner(plurality_tally(e, shuffled))
    assert perm[w2] == w


def test_winner_examples(rng):
    assert winner(Tally((3, 1, 0))) == 0
    assert winner(Tally((2, 2, 1))) == 0
    with pytest.raises(NoExpressedVotes):
        winner(Tally((0, 0), 5))
    for _ in range(50):
        counts = rng.integers(0, 20, size=7)
        best = 0
        for j, x in enumerate(counts):
            if x > counts[best]:
                best = j
        assert winner(Tally(tuple(counts))) == best


def test_win_probability_examples():
    np.testing.assert_array_equal(win_probability(PollResult.from_counts((2, 1, 1))), [0.5, 0.25, 0.25])
    np.testing.assert_array_equal(win_probability(PollResult.from_counts((5, 0, 0))), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(win_probability(PollResult.from_counts((3, 2), abstentions=5)), [0.6, 0.4], rtol=1e-15)
    with pytest.raises(NoExpressedVotes):
        win_probability(PollResult.from_counts((0, 0), abstentions=3))


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=15).filter(lambda c: sum(c) > 0))
def test_win_probability_is_a_distribution(counts):
    p = win_probability(PollResult.from_counts(counts))
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) <= 1e-12


def test_poll_sample_size_is_a_ceiling():
    assert poll_sample_size(1000, 0.1) == 100
    assert poll_sample_size(30, 0.1) == 3
    assert poll_sample_size(31, 0.1) == 4
    assert poll_sample_size(5, 0.01) == 1


def test_poll_examples(rng):
    e, c = random_instance(rng)
    full = conduct_poll(e, c, 1.0, rng=np.random.default_rng(1))
    assert full.counts == plurality_tally(e, c).counts
    a = conduct_poll(e, c, 0.1, rng=np.random.default_rng(7))
    b = conduct_poll(e, c, 0.1, rng=np.random.default_rng(7))
    assert a.sample_size == 100
    assert a == b
    with pytest.raises(InvalidValue):
        conduct_poll(e, c, 0.0)
    with pytest.raises(InvalidValue):
        conduct_poll(Electorate((), np.zeros((0, 11))), c, 0.1)


def test_poll_draws_distinct_voters():
    # every voter is its own candidate, so a repeated draw would show as a count of 2
    n = 50
    e = Electorate(tuple(str(i) for i in range(n)), np.eye(n) * 10)
    c = CandidateSet(tuple(str(i) for i in range(n)), np.eye(n) * 10)
    poll = conduct_poll(e, c, 0.5, rng=np.random.default_rng(3))
    assert max(poll.counts) == 1
    assert sum(poll.counts) == 25


def test_poll_mean_tracks_full_tally(rng):
    e, c = random_instance(rng, n=1000, m=11)
    target = win_probability(plurality_tally(e, c))
    shares = np.array([win_probability(conduct_poll(e, c, 0.1, rng=np.random.default_rng(s))) for s in range(200)])
    assert np.all(np.abs(shares.mean(axis=0) - target) <= 0.05)
