"""Least concave majorant, information projection, and optimal e-values.

For a probability ``q`` on the nonnegative integers, the least concave
majorant of its CDF (anchored at the point ``(-1, 0)`` so that the mass
at zero is majorized too) yields the closest non-increasing
distribution in the information sense.  The ratio of ``q`` to that
projection is the log-optimal e-value against the monotone null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NegativeSupport, SubprobabilityInput
from .evalues import EvalFn, epower
from .pmf import PROB_TOL, Pmf, make_pmf


@dataclass(frozen=True)
class LcmResult:
    """Concave majorant of a CDF, stored by contacts and slopes.

    ``contacts`` are the knot indices where the majorant touches the
    CDF, always starting at ``-1``; ``slopes`` holds one strictly
    decreasing value per segment.  ``heights`` caches the majorant at
    the contacts.
    """

    contacts: tuple[int, ...]
    slopes: tuple[float, ...]
    heights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.contacts or self.contacts[0] != -1:
            raise ValueError("contacts must start at -1")
        if len(self.slopes) != len(self.contacts) - 1:
            raise ValueError("need one slope per segment")
        if len(self.heights) != len(self.contacts):
            raise ValueError("need one height per contact")

    @property
    def hi(self) -> int:
        return self.contacts[-1]

    def fitted_mass(self, n: int) -> float:
        """Slope of the majorant over the unit step ending at ``n``."""
        if n < 0 or n > self.hi:
            return 0.0
        for k in range(len(self.slopes)):
            if n <= self.contacts[k + 1]:
                return self.slopes[k]
        raise AssertionError("unreachable")

    def fitted_masses(self) -> list[float]:
        """Fitted mass at every index ``0 .. hi``."""
        out = []
        for k, slope in enumerate(self.slopes):
            out.extend([slope] * (self.contacts[k + 1] - self.contacts[k]))
        return out

    def cdf_value(self, n: int) -> float:
        """Majorant evaluated at the integer ``n``."""
        if n <= -1:
            return 0.0
        if n >= self.hi:
            return self.heights[-1]
        for k in range(len(self.slopes)):
            if n <= self.contacts[k + 1]:
                return self.heights[k] + self.slopes[k] * (n - self.contacts[k])
        raise AssertionError("unreachable")


def _upper_hull(xs: list[int], ys: list[float]) -> tuple[list[int], list[float]]:
    # monotone chain for the upper concave hull; collinear middles are popped
    hx: list[int] = []
    hy: list[float] = []
    for x, y in zip(xs, ys):
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2])
            if cross >= 0.0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(x)
        hy.append(y)
    return hx, hy


def lcm(q: Pmf) -> LcmResult:
    """Least concave majorant of the CDF of a probability ``q``.

    The hull is taken over the knots ``(-1, 0), (0, F(0)), ...,
    (hi, 1)``; anchoring at ``-1`` is what makes the first fitted mass
    dominate ``f_q(0)`` rather than merely match the CDF at zero.
    """
    if q.lo < 0:
        raise NegativeSupport("majorant needs nonnegative support")
    if q.is_sub or abs(q.total - 1.0) > PROB_TOL:
        raise SubprobabilityInput("majorant needs a full probability")
    xs = list(range(-1, q.hi + 1))
    cdf, acc = [0.0], 0.0
    for n in range(0, q.hi + 1):
        acc += q.f(n)
        cdf.append(acc)
    hx, hy = _upper_hull(xs, cdf)
    # merge numerically equal adjacent slopes so contacts are canonical
    contacts = [hx[0]]
    heights = [hy[0]]
    slopes: list[float] = []
    for k in range(1, len(hx)):
        slope = (hy[k] - heights[-1]) / (hx[k] - contacts[-1])
        if slopes and abs(slope - slopes[-1]) <= 1e-12:
            run = hx[k] - contacts[-2]
            slopes[-1] = (hy[k] - heights[-2]) / run
            contacts[-1] = hx[k]
            heights[-1] = hy[k]
        else:
            slopes.append(slope)
            contacts.append(hx[k])
            heights.append(hy[k])
    return LcmResult(tuple(contacts), tuple(slopes), tuple(heights))


def numeraire_evalue(q: Pmf) -> EvalFn:
    """Pointwise ratio of ``q`` to its fitted non-increasing mass.

    Zero tails; indices where ``q`` vanishes get value zero.  This is
    the growth-optimal e-value against the monotone null.
    """
    res = lcm(q)
    fitted = res.fitted_masses()
    values = tuple(
        q.f(n) / fitted[n] if q.f(n) > 0.0 else 0.0 for n in range(0, res.hi + 1)
    )
    return EvalFn(0, values, 0.0, 0.0)


def ripr(q: Pmf) -> Pmf:
    """Fitted mass restricted to the support of ``q`` (a subprobability).

    This is the reverse information projection of ``q`` onto the
    monotone class: the fitted masses where ``q`` has mass, zero
    elsewhere.
    """
    res = lcm(q)
    fitted = res.fitted_masses()
    masses = [fitted[n] if q.f(n) > 0.0 else 0.0 for n in range(0, res.hi + 1)]
    return make_pmf(0, masses, is_sub=True)


def max_epower(q: Pmf) -> float:
    """Best achievable expected log growth against the monotone null."""
    return epower(numeraire_evalue(q), q)
