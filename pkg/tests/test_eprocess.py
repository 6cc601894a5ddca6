"""Streaming trackers: hand replays, validity, and replay equivalence."""

import math
import random

import pytest

from evshape.eprocess import (
    MonotoneTracker,
    UnimodalFamily,
    UnimodalTracker,
    numeraire_eprocess,
    range_value,
)
from evshape.errors import InfiniteRange, MissingTracker, NegativeObservation
from evshape.pmf import ModeInterval, make_pmf, sample


def replay_monotone(obs) -> MonotoneTracker:
    t = MonotoneTracker()
    for x in obs:
        t.update(x)
    return t


def replay_family(obs) -> UnimodalFamily:
    f = UnimodalFamily()
    for x in obs:
        f.update(x)
    return f


# --------------------------------------------------------- MonotoneTracker


def test_fresh_tracker():
    t = MonotoneTracker()
    assert t.mixture_value() == 0.0
    for m in (0, 7, 100):
        assert t.component_value(m) == 0.0
    snap = t.to_snapshot()
    assert snap == {"n": 0, "counts": {}, "log_factors": {}}


def test_first_observation_is_neutral():
    for x in (0, 1, 17):
        t = replay_monotone([x])
        assert t.mixture_value() == pytest.approx(0.0, abs=1e-15)


def test_hand_replay_two_ones():
    t = replay_monotone([1, 1])
    assert t.component_value(0) == pytest.approx(math.log(1.5), abs=1e-15)
    assert t.component_value(1) == 0.0
    assert t.mixture_value() == pytest.approx(math.log(1.25), abs=1e-12)


def test_hand_replay_then_drop():
    t = replay_monotone([1, 1, 0])
    # third step sees the empirical of [1, 1]: lambda at the (0, 1) pair is 1/2
    assert t.component_value(0) == pytest.approx(math.log(0.75), abs=1e-15)


def test_mixture_formula_from_forced_state():
    t = MonotoneTracker()
    t.log_factors = {0: math.log(2.0), 1: math.log(4.0)}
    assert t.mixture_value() == pytest.approx(math.log(2.25), abs=1e-12)


def test_update_rejects_negative():
    with pytest.raises(NegativeObservation):
        MonotoneTracker().update(-1)


def test_monotone_replay_equivalence():
    rng = random.Random(11)
    obs = [rng.randint(0, 6) for _ in range(120)]
    incremental = MonotoneTracker()
    for k, x in enumerate(obs, start=1):
        incremental.update(x)
        fresh = replay_monotone(obs[:k])
        assert incremental.mixture_value() == \
            pytest.approx(fresh.mixture_value(), abs=1e-12)
        for m in range(8):
            assert incremental.component_value(m) == \
                pytest.approx(fresh.component_value(m), abs=1e-12)


def test_one_step_supermartingale_under_uniform_nulls():
    """Exhaustive check over every state reachable in three updates."""
    prefixes = [[]]
    for _ in range(3):
        prefixes += [p + [x] for p in prefixes for x in (0, 1, 2)
                     if len(p) == _]
    for prefix in prefixes:
        base = replay_monotone(prefix)
        base_mix = base.mixture_value()
        base_comp = {m: base.component_value(m) for m in range(5)}
        ratios = {}
        for x in range(7):
            nxt = replay_monotone(prefix + [x])
            ratios[x] = math.exp(nxt.mixture_value() - base_mix)
            for m in range(5):
                factor = math.exp(nxt.component_value(m) - base_comp[m])
                assert factor >= 0.0
        for n in range(6):
            p = make_pmf(0, [1.0 / (n + 1)] * (n + 1))
            mean = sum(p.f(x) * ratios[x] for x in range(n + 1))
            assert mean <= 1.0 + 1e-12, (prefix, n)


# --------------------------------------------------------- UnimodalTracker


def test_fresh_unimodal():
    t = UnimodalTracker(3)
    assert t.unimodal_value() == 0.0


def test_unimodal_hand_replay():
    t = UnimodalTracker(0)
    t.update(1)
    t.update(1)
    # rising pair just above the mode carries weight 1/4
    assert t.unimodal_value() == pytest.approx(math.log(1.125), abs=1e-12)


def test_unimodal_constant_stream_is_neutral():
    t = UnimodalTracker(5)
    for _ in range(40):
        t.update(5)
    assert t.unimodal_value() == pytest.approx(0.0, abs=1e-12)


def test_unimodal_far_theta_is_inert():
    rng = random.Random(3)
    obs = [rng.randint(0, 5) for _ in range(50)]
    theta = max(obs) + 60
    t = UnimodalTracker(theta)
    for x in obs:
        t.update(x)
    assert abs(t.unimodal_value()) < 1e-8


def test_translation_equivariance():
    rng = random.Random(21)
    obs = [rng.randint(-2, 4) for _ in range(200)]
    for shift in (-7, 13):
        a = UnimodalTracker(1)
        b = UnimodalTracker(1 + shift)
        for x in obs:
            a.update(x)
            b.update(x + shift)
        assert a.unimodal_value() == pytest.approx(b.unimodal_value(),
                                                   abs=1e-12)


def test_unimodal_snapshot_shape():
    t = UnimodalTracker(0)
    t.update(1)
    t.update(1)
    snap = t.to_snapshot()
    assert snap["theta"] == 0
    assert snap["n"] == 2
    assert snap["counts"] == {"1": 2}
    assert "log_factors_plus" in snap and "log_factors_minus" in snap


# ---------------------------------------------------------- UnimodalFamily


def test_family_matches_standalone_trackers():
    rng = random.Random(77)
    obs = [rng.randint(-3, 8) for _ in range(300)]
    family = replay_family(obs)
    for theta in range(-10, 15):
        t = UnimodalTracker(theta)
        for x in obs:
            t.update(x)
        # same per-site logs; the mixture reductions round differently
        assert family.value(theta) == pytest.approx(t.unimodal_value(),
                                                    abs=1e-12)


def test_family_values_range_consistent():
    rng = random.Random(5)
    family = replay_family(rng.randint(0, 4) for _ in range(150))
    grid = family.values_range(-6, 10)
    for offset, theta in enumerate(range(-6, 11)):
        assert grid[offset] == family.value(theta)


def test_family_tracker_view():
    obs = [2, 2, 3, 1, 2, 5, 0]
    family = replay_family(obs)
    direct = UnimodalTracker(2)
    for x in obs:
        direct.update(x)
    view = family.tracker_view(2)
    assert view.unimodal_value() == direct.unimodal_value()
    assert view.to_snapshot() == direct.to_snapshot()


def test_family_data_range_and_snapshot():
    family = replay_family([4, -1, 2])
    assert family.data_range() == (-1, 4)
    snap = family.to_snapshot()
    assert snap["n"] == 3
    assert snap["observations"] == [4, -1, 2]


# --------------------------------------------------------------- range min


def test_range_value():
    obs = [0, 0, 1, 1, 1, 2]
    trackers = {}
    for theta in range(-2, 5):
        t = UnimodalTracker(theta)
        for x in obs:
            t.update(x)
        trackers[theta] = t
    lone = range_value(trackers, ModeInterval.bounded(1, 1))
    assert lone == trackers[1].unimodal_value()
    spread = range_value(trackers, ModeInterval.bounded(-2, 4))
    assert spread == min(t.unimodal_value() for t in trackers.values())
    with pytest.raises(MissingTracker):
        range_value(trackers, ModeInterval.empty())
    with pytest.raises(MissingTracker):
        range_value(trackers, ModeInterval.bounded(90, 91))
    with pytest.raises(InfiniteRange):
        range_value(trackers, ModeInterval.all_integers())


# ----------------------------------------------------- numeraire e-process


def test_numeraire_eprocess_examples():
    q = make_pmf(0, [0.1, 0.9])
    assert numeraire_eprocess(q, [1]) == pytest.approx(math.log(1.8))
    assert numeraire_eprocess(q, [0, 1]) == pytest.approx(math.log(0.36))


def test_numeraire_eprocess_null_is_flat():
    q = make_pmf(0, [0.4, 0.3, 0.2, 0.1])
    obs = sample(q, 9, 200)
    assert numeraire_eprocess(q, obs) == pytest.approx(0.0, abs=1e-9)


def test_numeraire_eprocess_guards():
    q = make_pmf(0, [0.1, 0.9])
    with pytest.raises(NegativeObservation):
        numeraire_eprocess(q, [1, -2])
    assert numeraire_eprocess(q, [5]) == -math.inf  # outside the support
