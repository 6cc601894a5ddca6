"""Step-function machinery for monotone shapes on the half-line.

Everything here is a finite step function or step density: bumps,
products ``x * q(x)``, least concave majorants of piecewise-linear CDFs,
and their ratios all stay inside that class, so exact arithmetic is a
matter of walking breakpoints.  The single membership oracle checks the
integral condition ``integral of e over [0, x] <= x`` at breakpoints,
which suffices because the integral minus ``x`` is piecewise linear for
step functions and piecewise convex for the ``x * q(x)`` family.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass

from .errors import (
    AtomPresent,
    BadAlpha,
    BadInterval,
    MassSumViolation,
    NegativeValue,
    NonzeroTail,
)
from .numeraire import _upper_hull
from .pmf import MASS_TOL, PROB_TOL, SHAPE_TOL


@dataclass(frozen=True)
class StepFn:
    """Right-closed step function on ``[0, inf)``.

    ``levels[i]`` is the value on ``(breakpoints[i], breakpoints[i+1]]``;
    ``value_at_0`` covers the single point 0 and ``tail_level`` covers
    everything past the last breakpoint.  The piece lookup is
    left-continuous: the value at a breakpoint is the level of the piece
    ending there.
    """

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]
    value_at_0: float = 0.0
    tail_level: float = 0.0

    def __post_init__(self) -> None:
        bps = tuple(float(b) for b in self.breakpoints)
        lvs = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "levels", lvs)
        object.__setattr__(self, "value_at_0", float(self.value_at_0))
        object.__setattr__(self, "tail_level", float(self.tail_level))
        if not bps or bps[0] != 0.0:
            raise BadInterval("breakpoints must start at 0")
        if any(b >= c for b, c in zip(bps, bps[1:])) or not math.isfinite(bps[-1]):
            raise BadInterval("breakpoints must increase strictly and stay finite")
        if len(lvs) != len(bps) - 1:
            raise BadInterval(
                f"{len(bps)} breakpoints need {len(bps) - 1} levels, got {len(lvs)}"
            )
        for v in lvs + (self.value_at_0, self.tail_level):
            if v < 0.0 or math.isnan(v):
                raise NegativeValue(f"step level {v} is negative")

    def at(self, x: float) -> float:
        if x < 0.0:
            return 0.0
        if x == 0.0:
            return self.value_at_0
        if x > self.breakpoints[-1]:
            return self.tail_level
        return self.levels[bisect_left(self.breakpoints, x) - 1]

    def integral_to(self, x: float) -> float:
        """Lebesgue integral over ``[0, x]`` (the point 0 carries none)."""
        if x <= 0.0:
            return 0.0
        parts = []
        bps = self.breakpoints
        for i, lv in enumerate(self.levels):
            left, right = bps[i], min(bps[i + 1], x)
            if right <= left:
                break
            parts.append(lv * (right - left))
        if x > bps[-1]:
            parts.append(self.tail_level * (x - bps[-1]))
        return math.fsum(parts)

    def total_integral(self) -> float:
        if self.tail_level > 0.0:
            return math.inf
        return self.integral_to(self.breakpoints[-1])

    def to_json(self) -> dict:
        return {
            "breakpoints": list(self.breakpoints),
            "levels": list(self.levels),
            "value_at_0": self.value_at_0,
            "tail_level": self.tail_level,
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "StepFn":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            tuple(obj["breakpoints"]),
            tuple(obj["levels"]),
            float(obj.get("value_at_0", 0.0)),
            float(obj.get("tail_level", 0.0)),
        )


@dataclass(frozen=True)
class StepDensity:
    """Step density plus a point mass at 0.

    Direct construction only checks structure (no tail mass, sane atom);
    :func:`make_step_density` additionally enforces the total-mass
    contract the way :func:`~evshape.pmf.make_pmf` does for tables.
    """

    fn: StepFn
    atom0: float = 0.0
    is_sub: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "atom0", float(self.atom0))
        if self.atom0 < 0.0 or math.isnan(self.atom0):
            raise NegativeValue(f"atom {self.atom0} is negative")
        if self.fn.tail_level != 0.0:
            raise NonzeroTail("a density has no mass past its last breakpoint")

    def density(self, x: float) -> float:
        return self.fn.at(x) if x > 0.0 else 0.0

    def cdf(self, x: float) -> float:
        if x < 0.0:
            return 0.0
        return self.atom0 + self.fn.integral_to(x)

    @property
    def total(self) -> float:
        return self.atom0 + self.fn.total_integral()

    def mass_between(self, a: float, b: float) -> float:
        """Mass of ``(a, b]``; includes the atom exactly when a < 0 <= b."""
        if b <= a:
            return 0.0
        return self.cdf(b) - self.cdf(a)

    def to_json(self) -> dict:
        return {
            "atom0": self.atom0,
            "breakpoints": list(self.fn.breakpoints),
            "levels": list(self.fn.levels),
            "is_sub": self.is_sub,
        }


def make_step_density(
    breakpoints, levels, atom0: float = 0.0, is_sub: bool = False
) -> StepDensity:
    """Validate a density spec; total mass must behave like a (sub)probability."""
    fn = StepFn(tuple(breakpoints), tuple(levels), 0.0, 0.0)
    d = StepDensity(fn, atom0, is_sub)
    total = d.total
    if total > 1.0 + MASS_TOL:
        raise MassSumViolation(f"total mass {total} exceeds 1")
    if not is_sub and abs(total - 1.0) > PROB_TOL:
        raise MassSumViolation(f"total mass {total} is not 1 within {PROB_TOL}")
    return d


def step_density_from_json(obj: dict | str) -> StepDensity:
    if isinstance(obj, str):
        obj = json.loads(obj)
    return make_step_density(
        obj["breakpoints"],
        obj["levels"],
        float(obj.get("atom0", 0.0)),
        bool(obj.get("is_sub", False)),
    )


def is_monotone_density(q: StepDensity, tol: float = SHAPE_TOL) -> bool:
    """True iff the density part is non-increasing on ``(0, inf)``."""
    lv = q.fn.levels
    return all(lv[i] >= lv[i + 1] - tol for i in range(len(lv) - 1))


# ------------------------------------------------------------- e-values


def bump_evalue(a: float, b: float) -> StepFn:
    """The flat bump ``b / (b - a)`` on ``(a, b]``, zero elsewhere."""
    a, b = float(a), float(b)
    if not (0.0 < a < b) or not math.isfinite(b):
        raise BadInterval(f"need 0 < a < b, got ({a}, {b})")
    return StepFn((0.0, a, b), (0.0, b / (b - a)), 0.0, 0.0)


@dataclass(frozen=True)
class XqEvalue:
    """The map ``x -> x * q(x)`` for an atom-free step density ``q``.

    Piecewise linear rather than piecewise constant, so it is kept as an
    evaluation interface; the polar check still reduces to breakpoints
    because its running integral is convex on each piece.
    """

    q: StepDensity

    # shared surface with StepFn so the polar oracle stays generic
    value_at_0: float = 0.0
    tail_level: float = 0.0

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.q.fn.breakpoints

    def at(self, x: float) -> float:
        return x * self.q.density(x) if x > 0.0 else 0.0

    def integral_to(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        parts = []
        bps = self.q.fn.breakpoints
        for i, lv in enumerate(self.q.fn.levels):
            left, right = bps[i], min(bps[i + 1], x)
            if right <= left:
                break
            parts.append(lv * (right * right - left * left) / 2.0)
        return math.fsum(parts)


def xq_evalue_cont(q: StepDensity) -> XqEvalue:
    """Package ``x * q(x)``; the density must put no mass on the point 0."""
    if q.atom0 > 0.0:
        raise AtomPresent(f"atom {q.atom0} at 0 breaks the product form")
    return XqEvalue(q)


def bump_mixture_value(q: StepDensity, w: float, x: float) -> float:
    """Width-``w`` bump mixture at ``x``: grid bumps weighted by ``q`` mass.

    Converges pointwise to ``x * q(x)`` as ``w`` shrinks (away from the
    atom); the mixture is itself a convex combination of bump e-values.
    """
    if w <= 0.0:
        raise BadInterval(f"bandwidth {w} must be positive")
    if x <= 0.0:
        return 0.0
    k = math.ceil(x / w) - 1
    a, b = k * w, (k + 1) * w
    return q.mass_between(a, b) * (k + 1)


def is_in_polar_U(e, require_jump_guard: bool = False, tol: float = PROB_TOL) -> bool:
    """Membership oracle for e-values against monotone densities.

    ``e`` is a :class:`StepFn` or :class:`XqEvalue`.  Checks the running
    integral against ``x`` at every breakpoint (sufficient: the gap is
    piecewise linear, or convex piece-by-piece for the product form),
    requires the tail level at most one so the condition persists, and
    with ``require_jump_guard`` also caps the value at 0 by one, which
    extends validity to nulls carrying an atom there.
    """
    if e.tail_level > 1.0 + tol:
        return False
    if require_jump_guard and e.value_at_0 > 1.0 + tol:
        return False
    return all(
        e.integral_to(b) <= b + tol * max(1.0, b) for b in e.breakpoints
    )


# -------------------------------------------------- expectation, e-power


def _refined_pieces(e_bps, p_bps):
    # common refinement of two breakpoint grids, as (left, right] pairs
    cuts = sorted(set(e_bps) | set(p_bps))
    return list(zip(cuts, cuts[1:]))


def expectation_cont(e, p: StepDensity) -> float:
    """Exact ``E_p[e(X)]`` for ``e`` a StepFn or XqEvalue."""
    parts = [p.atom0 * e.value_at_0]
    product_form = isinstance(e, XqEvalue)
    for left, right in _refined_pieces(e.breakpoints, p.fn.breakpoints):
        p_lv = p.fn.at(right)
        if p_lv == 0.0:
            continue
        if product_form:
            q_lv = e.q.fn.at(right)
            parts.append(p_lv * q_lv * (right * right - left * left) / 2.0)
        else:
            parts.append(p_lv * e.at(right) * (right - left))
    return math.fsum(parts)


def epower_cont(e: StepFn, q: StepDensity) -> float:
    """Exact ``E_q[log e(X)]``; ``-inf`` when ``q`` charges a zero of ``e``."""
    parts = []
    if q.atom0 > 0.0:
        if e.value_at_0 <= 0.0:
            return -math.inf
        parts.append(q.atom0 * math.log(e.value_at_0))
    for left, right in _refined_pieces(e.breakpoints, q.fn.breakpoints):
        q_lv = q.fn.at(right)
        if q_lv == 0.0:
            continue
        e_lv = e.at(right)
        if e_lv <= 0.0:
            return -math.inf
        parts.append(q_lv * (right - left) * math.log(e_lv))
    # q has no tail mass, so pieces past its last breakpoint contribute 0
    return math.fsum(parts)


# ------------------------------------------------------- p-value and CIs


def edelman_pvalue(x: float, a: float) -> float:
    """Distance-ratio p-value ``2|x-a| / (|x-a| + |x|)``, clamped to [0, 1].

    Raw values in (1, 2] occur only where the induced rejection region
    is empty, hence the clamp loses nothing.
    """
    d = abs(x - a)
    if d == 0.0:
        return 0.0
    return min(2.0 * d / (d + abs(x)), 1.0)


@dataclass(frozen=True)
class RealInterval:
    """Open interval, single point, or the whole line."""

    kind: str  # "open" | "singleton" | "all"
    lo: float = 0.0
    hi: float = 0.0

    @classmethod
    def open(cls, lo: float, hi: float) -> "RealInterval":
        return cls("open", float(lo), float(hi))

    @classmethod
    def singleton(cls, x: float) -> "RealInterval":
        return cls("singleton", float(x), float(x))

    @classmethod
    def all_reals(cls) -> "RealInterval":
        return cls("all", -math.inf, math.inf)

    def contains(self, y: float) -> bool:
        if self.kind == "all":
            return True
        if self.kind == "singleton":
            return y == self.lo
        return self.lo < y < self.hi

    @property
    def width(self) -> float:
        return 0.0 if self.kind == "singleton" else self.hi - self.lo

    def to_json(self) -> dict:
        if self.kind == "all":
            return {"kind": "all"}
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha {alpha} must lie in (0, 1)")


def edelman_ci(x: float, alpha: float, phi: float) -> RealInterval:
    """Interval ``(x - L|x - phi|, x + L|x - phi|)`` with ``L = 2/alpha - 1``.

    Collapses to the single point ``{x}`` when ``x == phi``.
    """
    _check_alpha(alpha)
    if x == phi:
        return RealInterval.singleton(x)
    radius = (2.0 / alpha - 1.0) * abs(x - phi)
    return RealInterval.open(x - radius, x + radius)


def cont_mode_ci(x: float, alpha: float, phi: float) -> RealInterval:
    """Mode interval with the wider factor ``T = 2/alpha + 1``.

    At ``x == phi`` the event underlying the interval has probability
    zero, so the conservative answer is the whole line.
    """
    _check_alpha(alpha)
    if x == phi:
        return RealInterval.all_reals()
    radius = (2.0 / alpha + 1.0) * abs(x - phi)
    return RealInterval.open(x - radius, x + radius)


# ------------------------------------------------------ concave majorant


def lcm_cont(q: StepDensity) -> StepDensity:
    """Least concave majorant of the CDF, as a step density.

    The jump at 0 is kept as-is; past it the majorant of a
    piecewise-linear CDF is the upper hull of its knots, so the fitted
    density is the hull's slope sequence.
    """
    bps = q.fn.breakpoints
    xs, ys = [0.0], [q.atom0]
    acc = q.atom0
    for i, lv in enumerate(q.fn.levels):
        acc += lv * (bps[i + 1] - bps[i])
        xs.append(bps[i + 1])
        ys.append(acc)
    hx, hy = _upper_hull(xs, ys)
    slopes = tuple(
        (hy[k + 1] - hy[k]) / (hx[k + 1] - hx[k]) for k in range(len(hx) - 1)
    )
    return StepDensity(StepFn(tuple(hx), slopes, 0.0, 0.0), q.atom0, q.is_sub)


def numeraire_cont(q: StepDensity) -> StepFn:
    """Log-optimal e-value for ``q`` against monotone nulls: ``q / fitted``.

    Piecewise-constant on ``q``'s own grid (hull breakpoints are a
    subset), zero off the support of ``q``, and exactly one at 0 when
    the atom survives the projection untouched.
    """
    fitted = lcm_cont(q)
    values = []
    for right in q.fn.breakpoints[1:]:
        q_lv = q.fn.at(right)
        values.append(q_lv / fitted.fn.at(right) if q_lv > 0.0 else 0.0)
    at0 = 1.0 if q.atom0 > 0.0 else 0.0
    return StepFn(q.fn.breakpoints, tuple(values), at0, 0.0)
