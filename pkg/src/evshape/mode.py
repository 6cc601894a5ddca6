"""Mode confidence intervals, confidence sequences, and mode tests.

The one-observation interval needs nothing but a single draw and an
anchor integer ``phi``: the uniform-block e-value at distance ``|x -
phi|`` exceeds ``1/alpha`` only outside an explicit open interval.  The
sequential tools build on :class:`~evshape.eprocess.UnimodalFamily`,
whose per-peak mixture values are exact for every integer peak, and use
an analytic scan bound to certify everything outside a finite window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import AlreadyRejected, BadAlpha, ZeroPhi
from .eprocess import UnimodalFamily
from .pmf import ModeInterval

_LOG2_3HALF = math.log2(1.5)


@dataclass(frozen=True)
class CiParams:
    """Level and anchor for one-observation intervals."""

    alpha: float
    phi: int

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        object.__setattr__(self, "phi", int(self.phi))


@dataclass(frozen=True)
class IntSet:
    """A finite set of integers, or the complement of one."""

    members: frozenset[int]
    complement: bool = False

    @classmethod
    def finite(cls, members) -> "IntSet":
        return cls(frozenset(int(m) for m in members), False)

    @classmethod
    def cofinite(cls, excluded) -> "IntSet":
        return cls(frozenset(int(m) for m in excluded), True)

    def contains(self, n: int) -> bool:
        return (n in self.members) != self.complement

    @property
    def is_finite(self) -> bool:
        return not self.complement

    def intersect_range(self, lo: int, hi: int) -> tuple[int, ...]:
        """Sorted members of the set inside ``[lo, hi]``."""
        return tuple(n for n in range(lo, hi + 1) if self.contains(n))

    def invert(self) -> "IntSet":
        return IntSet(self.members, not self.complement)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha {alpha} must lie in (0, 1)")


def one_obs_ci(x: int, alpha: float, phi: int) -> ModeInterval:
    """Mode interval from a single draw, anchored at ``phi``.

    Returns the integers in the open interval ``(x - T d, x + T d)``
    with ``T = 2/alpha + 1`` and ``d = |x - phi|``; all integers when
    ``x == phi``.  Endpoint handling is exact (rational arithmetic), so
    when ``T d`` is an integer the endpoints are correctly excluded.
    """
    _check_alpha(alpha)
    x, phi = int(x), int(phi)
    if x == phi:
        return ModeInterval.all_integers()
    d = abs(x - phi)
    radius = (Fraction(2) / Fraction(alpha) + 1) * d
    lo = math.floor(x - radius) + 1
    hi = math.ceil(x + radius) - 1
    return ModeInterval.bounded(lo, hi)


def one_obs_ci_finite(x: int, alpha: float, phi: int) -> ModeInterval:
    """Always-bounded variant: intersect level-``alpha/2`` intervals
    anchored at ``phi`` and ``-phi`` (so ``phi`` must be nonzero)."""
    _check_alpha(alpha)
    if int(phi) == 0:
        raise ZeroPhi("the finite interval needs a nonzero anchor")
    a = one_obs_ci(x, alpha / 2.0, phi)
    b = one_obs_ci(x, alpha / 2.0, -phi)
    return a.intersect(b)


# ------------------------------------------------------ sequential scan


def scan_halfwidth(n: int, tau: float) -> int | None:
    """Sound scan margin around the data for threshold ``tau``.

    A peak at distance ``d`` past the observed range has mixture value
    at most ``1 + 2**-(d-1) * 1.5**n``, so if that bound stays at or
    below ``tau`` nothing outside the window can be rejected.  Returns
    ``None`` when no peak anywhere can be rejected (``tau`` too high),
    and 0 or more otherwise.  Requires ``tau > 1``; callers special-case
    thresholds at or below one.
    """
    if tau <= 1.0:
        raise ValueError("scan bound needs tau > 1")
    # nothing rejectable iff tau >= 1 + 2 * 1.5**n; compare in log2 space
    if math.log2(tau - 1.0) >= n * _LOG2_3HALF + 1.0:
        return None
    w = math.ceil(n * _LOG2_3HALF + math.log2(1.0 / (tau - 1.0)) + 2.0)
    return max(w, 0)


@dataclass(frozen=True)
class ConfidenceSetResult:
    """Rejected peaks plus the window certifying everything else.

    ``rejected`` is finite and contained in ``window``; every peak
    outside the window satisfies the mixture bound analytically, which
    is the certificate that the weak confidence set is exact.
    """

    rejected: IntSet
    window: tuple[int, int] | None
    threshold: float
    n: int

    @property
    def weak_set(self) -> IntSet:
        return self.rejected.invert()


def confidence_set(family: UnimodalFamily, alpha: float) -> ConfidenceSetResult:
    """Peaks whose mixture value exceeds ``1/alpha``, with certificate."""
    _check_alpha(alpha)
    tau = 1.0 / alpha
    n = family.n
    rng = family.data_range()
    if n == 0 or rng is None or tau <= 1.0:
        return ConfidenceSetResult(IntSet.finite(()), None, tau, n)
    w = scan_halfwidth(n, tau)
    if w is None:
        return ConfidenceSetResult(IntSet.finite(()), None, tau, n)
    lo, hi = rng[0] - w, rng[1] + w
    vals = family.values_range(lo, hi)
    log_tau = math.log(tau)
    rejected = [lo + k for k, v in enumerate(vals) if v > log_tau]
    return ConfidenceSetResult(IntSet.finite(rejected), (lo, hi), tau, n)


def mode_estimate(
    family: UnimodalFamily, clip: tuple[int, int] | None = None
) -> IntSet:
    """Set-valued mode estimate: peaks with mixture value at most ``n**2``.

    The result is cofinite (every peak far from the data is accepted).
    With ``clip = (lo, hi)`` only peaks inside the clip window are
    examined, which is exact for queries restricted to that window.
    """
    n = family.n
    tau = float(n) * float(n)
    rng = family.data_range()
    if n <= 1 or rng is None:
        # a first observation contributes factors of exactly one
        return IntSet.cofinite(())
    w = scan_halfwidth(n, tau)
    if w is None:
        return IntSet.cofinite(())
    lo, hi = rng[0] - w, rng[1] + w
    if clip is not None:
        lo, hi = max(lo, clip[0]), min(hi, clip[1])
        if lo > hi:
            return IntSet.cofinite(())
    vals = family.values_range(lo, hi)
    log_tau = math.log(tau)
    rejected = [lo + k for k, v in enumerate(vals) if v > log_tau]
    return IntSet.cofinite(rejected)


def strong_hull(weak: IntSet) -> ModeInterval:
    """Convex hull of a weak confidence set, as a mode interval."""
    if weak.complement:
        return ModeInterval.all_integers()
    if not weak.members:
        return ModeInterval.empty()
    return ModeInterval.bounded(min(weak.members), max(weak.members))


# ------------------------------------------------- anchor-free mode test


class UnrestrictedTest:
    """Two-step sequential test of unimodality with unknown peak.

    The first observation buys a bounded peak interval (two
    level-``alpha/3`` one-observation intervals anchored at ``phi`` and
    ``-phi``); afterwards a fresh mixture family runs on the remaining
    stream and the test rejects as soon as every peak in the interval
    has mixture value at least ``3/alpha``.
    """

    def __init__(self, alpha: float, phi: int) -> None:
        _check_alpha(alpha)
        if int(phi) == 0:
            raise ZeroPhi("the anchor must be nonzero")
        self.alpha = float(alpha)
        self.phi = int(phi)
        self.phase = "awaiting_first"
        self.n = 0
        self.theta_window: tuple[int, int] | None = None
        self.family: UnimodalFamily | None = None
        self.rejected_at: int | None = None
        self._log_threshold = math.log(3.0 / alpha)
        self._theta0: int | None = None
        self._j0 = 1.0  # linear-space mixture value at _theta0
        self._j0_exp: dict[tuple[str, int], float] = {}

    def _included(self, side: str, site: int) -> bool:
        return site >= self._theta0 if side == "rise" else site <= self._theta0

    def _rebase_theta0(self, theta: int) -> None:
        # rebuild the incremental mixture value around a new cheap peak
        self._theta0 = theta
        fam = self.family_required()
        j = 1.0
        cache = {}
        for side, table in (("rise", fam.log_rise), ("fall", fam.log_fall)):
            for site, lf in table.items():
                if not self._included(side, site):
                    continue
                m = abs(site - theta)
                g = math.exp(min(lf, 700.0))  # cap: stay finite, never NaN
                cache[(side, site)] = g
                j += 2.0 ** (-m - 2) * (g - 1.0)
        self._j0 = j
        self._j0_exp = cache

    def family_required(self) -> UnimodalFamily:
        if self.family is None:
            raise AssertionError("family not initialized")
        return self.family

    def step(self, x: int) -> str:
        """Feed one observation; returns ``"continue"`` or ``"reject"``."""
        if self.phase == "rejected":
            raise AlreadyRejected(f"test stopped at observation {self.rejected_at}")
        x = int(x)
        if self.phase == "awaiting_first":
            window = one_obs_ci_finite(x, 2.0 * self.alpha / 3.0, self.phi)
            # the finite variant halves its level, so this uses alpha/3 per side
            self.theta_window = (window.lo, window.hi)
            self.family = UnimodalFamily()
            self.n = 1
            self.phase = "running"
            self._theta0 = min(max(x, window.lo), window.hi)
            return "continue"
        fam = self.family_required()
        changes = fam.update(x)
        self.n += 1
        # cheap necessary condition: the tracked peak alone stays below
        # the threshold most of the time under the null
        for side, site, _old, new in changes:
            if not self._included(side, site):
                continue
            m = abs(site - self._theta0)
            g_new = math.exp(min(new, 700.0))
            g_old = self._j0_exp.get((side, site), 1.0)
            self._j0 += 2.0 ** (-m - 2) * (g_new - g_old)
            self._j0_exp[(side, site)] = g_new
        if self._j0 < 0.99 * (3.0 / self.alpha):
            return "continue"
        lo, hi = self.theta_window
        vals = fam.values_range(lo, hi)
        k = int(vals.argmin())
        if float(vals[k]) >= self._log_threshold:
            self.phase = "rejected"
            self.rejected_at = self.n
            return "reject"
        self._rebase_theta0(lo + k)
        return "continue"
