"""Concave majorant, projection, and the log-optimal e-value."""

import math
import random

import pytest

from evshape.errors import NegativeSupport, SubprobabilityInput
from evshape.evalues import epower, is_in_polar_M, wavelet_evalue
from evshape.numeraire import lcm, max_epower, numeraire_evalue, ripr
from evshape.pmf import make_pmf


def hull_oracle(q):
    """Majorant values by chord maximization.

    The smallest concave function above the CDF knots equals, at each
    point, the largest value attained by a chord between two knots that
    straddle it.  Cubic in the support size; fine for oracle duty.
    """
    xs = [-1] + list(range(q.lo, q.hi + 1))
    ys = [0.0] + [q.cdf(n) for n in range(q.lo, q.hi + 1)]
    out = []
    for n in range(q.lo, q.hi + 1):
        best = 0.0
        for i in range(len(xs)):
            if xs[i] > n:
                continue
            for j in range(len(xs)):
                if xs[j] < n:
                    continue
                if xs[i] == xs[j]:
                    val = ys[i]
                else:
                    frac = (n - xs[i]) / (xs[j] - xs[i])
                    val = ys[i] + frac * (ys[j] - ys[i])
                best = max(best, val)
        out.append(best)
    return out


def pava_oracle(masses):
    """Antitonic least-squares fit by pooling adjacent violators."""
    blocks = [[m, 1] for m in masses]  # (sum, count), kept non-increasing
    merged = True
    while merged:
        merged = False
        for i in range(len(blocks) - 1):
            a_sum, a_cnt = blocks[i]
            b_sum, b_cnt = blocks[i + 1]
            if a_sum / a_cnt < b_sum / b_cnt - 1e-15:
                blocks[i] = [a_sum + b_sum, a_cnt + b_cnt]
                del blocks[i + 1]
                merged = True
                break
    out = []
    for total, count in blocks:
        out.extend([total / count] * count)
    return out


def random_pmf(rng, width_range=(1, 10)):
    masses = [rng.uniform(0.01, 1.0) for _ in range(rng.randint(*width_range))]
    total = sum(masses)
    return make_pmf(0, [m / total for m in masses])


# ------------------------------------------------------------- lcm results


def test_lcm_two_point():
    res = lcm(make_pmf(0, [0.1, 0.9]))
    assert res.contacts == (-1, 1)
    assert res.slopes == pytest.approx((0.5,))
    assert res.fitted_masses() == pytest.approx([0.5, 0.5])


def test_lcm_three_point():
    res = lcm(make_pmf(0, [0.2, 0.5, 0.3]))
    assert res.contacts == (-1, 1, 2)
    assert res.slopes == pytest.approx((0.35, 0.3))
    assert res.cdf_value(0) == pytest.approx(0.35)


def test_lcm_strictly_decreasing_input_is_fixed_point():
    q = make_pmf(0, [0.4, 0.3, 0.2, 0.1])
    res = lcm(q)
    assert res.contacts == (-1, 0, 1, 2, 3)
    assert res.slopes == pytest.approx((0.4, 0.3, 0.2, 0.1))


def test_lcm_merges_flat_runs():
    # tied masses collapse to one segment; slopes stay strictly decreasing
    res = lcm(make_pmf(0, [0.25, 0.25, 0.25, 0.25]))
    assert res.contacts == (-1, 3)
    assert res.slopes == pytest.approx((0.25,))


def test_lcm_guards():
    with pytest.raises(NegativeSupport):
        lcm(make_pmf(-1, [0.5, 0.5]))
    with pytest.raises(SubprobabilityInput):
        lcm(make_pmf(0, [0.5], is_sub=True))


def test_lcm_invariants_random():
    rng = random.Random(1600)
    for _ in range(300):
        q = random_pmf(rng)
        res = lcm(q)
        assert all(a < b for a, b in zip(res.contacts, res.contacts[1:]))
        assert all(a > b for a, b in zip(res.slopes, res.slopes[1:]))
        for n in range(q.lo, q.hi + 1):
            assert res.cdf_value(n) >= q.cdf(n) - 1e-12
        for c in res.contacts[1:]:
            assert res.cdf_value(c) == pytest.approx(q.cdf(c), abs=1e-12)
        assert math.fsum(res.fitted_masses()) == pytest.approx(q.total)


def test_lcm_matches_chord_oracle():
    rng = random.Random(88)
    for _ in range(200):
        q = random_pmf(rng, width_range=(1, 8))
        res = lcm(q)
        want = hull_oracle(q)
        for n, value in zip(range(q.lo, q.hi + 1), want):
            assert res.cdf_value(n) == pytest.approx(value, abs=1e-12)


def test_lcm_matches_pava_oracle():
    rng = random.Random(89)
    for _ in range(200):
        q = random_pmf(rng, width_range=(1, 9))
        got = lcm(q).fitted_masses()
        want = pava_oracle(list(q.masses))
        assert got == pytest.approx(want, abs=1e-10)


def test_lcm_idempotent():
    rng = random.Random(90)
    for _ in range(100):
        q = random_pmf(rng)
        first = lcm(q)
        again = lcm(make_pmf(0, first.fitted_masses()))
        assert again.contacts == first.contacts
        assert again.slopes == pytest.approx(first.slopes, abs=1e-12)


# --------------------------------------------------------------- numeraire


def test_numeraire_worked_values():
    e = numeraire_evalue(make_pmf(0, [0.1, 0.9]))
    assert e.values == pytest.approx((0.2, 1.8))
    assert e.right_tail == 0.0

    e = numeraire_evalue(make_pmf(0, [0.2, 0.5, 0.3]))
    assert e.values == pytest.approx((4 / 7, 10 / 7, 1.0))


def test_numeraire_monotone_is_constant_one():
    e = numeraire_evalue(make_pmf(0, [0.4, 0.3, 0.2, 0.1]))
    assert e.values == pytest.approx((1.0, 1.0, 1.0, 1.0))


def test_numeraire_polar_membership():
    rng = random.Random(91)
    for _ in range(300):
        assert is_in_polar_M(numeraire_evalue(random_pmf(rng)))


# -------------------------------------------------------------------- ripr


def test_ripr_examples():
    sub = ripr(make_pmf(0, [0.1, 0.0, 0.9]))
    assert sub.masses == pytest.approx((1 / 3, 0.0, 1 / 3))
    assert sub.is_sub

    full = ripr(make_pmf(0, [0.1, 0.9]))
    assert full.masses == pytest.approx((0.5, 0.5))

    point = ripr(make_pmf(0, [1.0]))
    assert point.masses == pytest.approx((1.0,))


def test_ripr_dominated_by_monotone_fit():
    rng = random.Random(92)
    for _ in range(100):
        q = random_pmf(rng)
        fitted = lcm(q).fitted_masses()
        sub = ripr(q)
        for (x, mass), cap in zip(sub.items(), fitted):
            assert mass <= cap + 1e-15
            if q.f(x) == 0.0:
                assert mass == 0.0


# ------------------------------------------------------------- max e-power


def test_max_epower_worked_values():
    assert max_epower(make_pmf(0, [0.1, 0.9])) == \
        pytest.approx(0.36806420716849717, abs=1e-9)
    assert max_epower(make_pmf(0, [0.2, 0.5, 0.3])) == \
        pytest.approx(0.06641431438228167, abs=1e-9)
    # monotone input: zero up to prefix-sum rounding in the fitted slopes
    assert max_epower(make_pmf(0, [0.5, 0.3, 0.2])) == \
        pytest.approx(0.0, abs=1e-12)


def test_max_epower_is_kl_to_projection():
    rng = random.Random(93)
    for _ in range(150):
        q = random_pmf(rng)
        fitted = lcm(q).fitted_masses()
        kl = math.fsum(
            mass * math.log(mass / fitted[x])
            for x, mass in q.items() if mass > 0.0
        )
        assert max_epower(q) == pytest.approx(kl, abs=1e-12)
        assert max_epower(q) == pytest.approx(
            epower(numeraire_evalue(q), q), abs=1e-12)


def test_max_epower_dominates_wavelets():
    rng = random.Random(94)
    for _ in range(200):
        q = random_pmf(rng)
        best = max_epower(q)
        for m in range(q.hi + 1):
            assert epower(wavelet_evalue(q, m), q) <= best + 1e-12
