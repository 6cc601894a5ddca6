"""Deterministic Monte Carlo experiment runner.

Every replication derives its own generator seed from the master seed
and the replication index through a SplitMix64 mix, so reports are
reproducible byte-for-byte for a given config and identical no matter
how many worker processes share the replications.  Aggregation always
reduces records in replication order.

The ``type1`` scenario is the only hot loop; it runs all replications
side by side as numpy rows, maintaining the mixture sum incrementally
(two touched locations per observation) with a periodic exact resync.
The remaining scenarios drive the ordinary tracker objects.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eprocess import MonotoneTracker, UnimodalFamily, numeraire_eprocess
from .errors import ConfigError, EvshapeError
from .mode import UnrestrictedTest, mode_estimate, one_obs_ci
from .numeraire import lcm, max_epower
from .pmf import Pmf, mode_set, pmf_from_json, sample

SCENARIOS = (
    "type1",
    "growth",
    "ci_coverage",
    "mode_settlement",
    "unrestricted_power",
    "numeraire_compare",
)

_MASK64 = (1 << 64) - 1
# SplitMix64: golden-ratio increment and the two finalizer multipliers
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_RESYNC_EVERY = 256


def derive_seed(master: int, index: int) -> int:
    """Per-replication seed: SplitMix64 output ``index + 1`` steps in."""
    z = (master + (index + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def worker_count() -> int:
    raw = os.environ.get("EVSHAPE_WORKERS", "1")
    try:
        w = int(raw)
    except ValueError:
        raise ConfigError(f"EVSHAPE_WORKERS={raw!r} is not an integer")
    if w < 1:
        raise ConfigError(f"EVSHAPE_WORKERS must be >= 1, got {w}")
    return w


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment: scenario name, distribution, sizes, knobs."""

    scenario: str
    distribution: Pmf
    n: int
    reps: int
    alpha: float
    seed: int = 0
    theta: int | None = None
    phi: int | None = None
    clip: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"scenario {self.scenario!r} not one of {', '.join(SCENARIOS)}"
            )
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")
        if self.distribution.is_sub or self.distribution.is_empty:
            raise ConfigError("distribution must be a full probability")
        if self.clip is not None:
            lo, hi = self.clip
            if lo > hi:
                raise ConfigError(f"clip window ({lo}, {hi}) is empty")
        if self.scenario in ("type1", "growth", "numeraire_compare"):
            if self.distribution.lo < 0:
                raise ConfigError(
                    f"scenario {self.scenario} needs nonnegative support, "
                    f"distribution starts at {self.distribution.lo}"
                )
        if self.scenario == "unrestricted_power" and self.resolved_phi == 0:
            raise ConfigError("unrestricted_power needs a nonzero phi")

    @property
    def resolved_phi(self) -> int:
        if self.phi is not None:
            return self.phi
        return 1 if self.scenario == "unrestricted_power" else 0

    @property
    def resolved_clip(self) -> tuple[int, int]:
        return self.clip if self.clip is not None else (-20, 20)

    def to_json(self) -> dict:
        out = {
            "scenario": self.scenario,
            "distribution": self.distribution.to_json(),
            "n": self.n,
            "reps": self.reps,
            "alpha": self.alpha,
            "seed": self.seed,
        }
        if self.theta is not None:
            out["theta"] = self.theta
        if self.phi is not None:
            out["phi"] = self.phi
        if self.clip is not None:
            out["clip"] = list(self.clip)
        return out


_CONFIG_KEYS = {
    "scenario", "distribution", "n", "reps", "alpha", "seed",
    "theta", "phi", "clip",
}


def config_from_json(obj: dict | str) -> ScenarioConfig:
    if isinstance(obj, str):
        obj = json.loads(obj)
    unknown = sorted(set(obj) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    for key in ("scenario", "distribution", "n", "reps", "alpha"):
        if key not in obj:
            raise ConfigError(f"config is missing required field {key!r}")
    try:
        dist = pmf_from_json(obj["distribution"])
    except (EvshapeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad distribution: {exc}") from exc
    clip = obj.get("clip")
    return ScenarioConfig(
        scenario=str(obj["scenario"]),
        distribution=dist,
        n=int(obj["n"]),
        reps=int(obj["reps"]),
        alpha=float(obj["alpha"]),
        seed=int(obj.get("seed", 0)),
        theta=None if obj.get("theta") is None else int(obj["theta"]),
        phi=None if obj.get("phi") is None else int(obj["phi"]),
        clip=None if clip is None else (int(clip[0]), int(clip[1])),
    )


@dataclass(frozen=True)
class RunReport:
    """Per-replication records plus order-independent aggregates."""

    config: dict
    library_version: str
    records: tuple = ()
    aggregates: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "library_version": self.library_version,
            "records": list(self.records),
            "aggregates": self.aggregates,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def aggregates_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["metric", "value"])
        for key in sorted(self.aggregates):
            writer.writerow([key, self.aggregates[key]])
        return buf.getvalue()


def _binomial_se(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / reps)


def _mean(values) -> float:
    vals = list(values)
    return math.fsum(vals) / len(vals) if vals else 0.0


# ----------------------------------------------------- scenario: type1


def _run_type1(c: ScenarioConfig) -> tuple[list[dict], dict]:
    p = c.distribution
    reps, n = c.reps, c.n
    threshold = 1.0 / c.alpha
    hi = p.hi
    obs = np.empty((reps, n), dtype=np.int64)
    for r in range(reps):
        obs[r] = sample(p, derive_seed(c.seed, r), n)

    counts = np.zeros((reps, hi + 2))
    lf = np.zeros((reps, hi + 1))
    weights = np.exp2(-(np.arange(hi + 1) + 1.0))
    residual = 2.0 ** (-(hi + 1))
    mix_sum = np.full(reps, float(weights.sum()))
    crossed = np.zeros(reps, dtype=bool)
    cross_time = np.full(reps, -1, dtype=np.int64)
    rows = np.arange(reps)

    def resync() -> None:
        mix_sum[:] = (weights[None, :] * np.exp(np.minimum(lf, 700.0))).sum(axis=1)

    for t in range(n):
        x = obs[:, t]
        # location m = x, factor 1 - lam from counts at (x, x+1)
        c_lo = counts[rows, x]
        c_hi = counts[rows, x + 1]
        s = c_lo + c_hi
        lam = np.clip((c_hi - c_lo) / np.where(s > 0.0, 2.0 * s, 1.0), 0.0, 0.5)
        old = lf[rows, x]
        new = old + np.log1p(-lam)
        lf[rows, x] = new
        mix_sum += weights[x] * (
            np.exp(np.minimum(new, 700.0)) - np.exp(np.minimum(old, 700.0))
        )
        # location m = x - 1, factor 1 + lam, absent for x = 0
        mask = x > 0
        if mask.any():
            rr, xr = rows[mask], x[mask]
            c_lo = counts[rr, xr - 1]
            c_hi = counts[rr, xr]
            s = c_lo + c_hi
            lam = np.clip((c_hi - c_lo) / np.where(s > 0.0, 2.0 * s, 1.0), 0.0, 0.5)
            old = lf[rr, xr - 1]
            new = old + np.log1p(lam)
            lf[rr, xr - 1] = new
            mix_sum[rr] += weights[xr - 1] * (
                np.exp(np.minimum(new, 700.0)) - np.exp(np.minimum(old, 700.0))
            )
        counts[rows, x] += 1.0
        if (t + 1) % _RESYNC_EVERY == 0:
            resync()
        value = mix_sum + residual
        newly = ~crossed & (value >= threshold)
        if newly.any():
            cross_time[newly] = t + 1
            crossed |= newly

    resync()
    terminal = np.log(mix_sum + residual)
    records = [
        {
            "rep": r,
            "crossed": bool(crossed[r]),
            "crossing_time": int(cross_time[r]) if crossed[r] else None,
            "terminal_log": float(terminal[r]),
        }
        for r in range(reps)
    ]
    rate = float(crossed.sum()) / reps
    aggregates = {
        "crossing_rate": rate,
        "crossing_rate_se": _binomial_se(rate, reps),
        "threshold": threshold,
        "mean_terminal_log": _mean(rec["terminal_log"] for rec in records),
    }
    return records, aggregates


# ------------------------------------------- per-replication scenarios


def _rep_growth(c: ScenarioConfig, rep: int) -> dict:
    tracker = MonotoneTracker()
    for x in sample(c.distribution, derive_seed(c.seed, rep), c.n):
        tracker.update(x)
    terminal = tracker.mixture_value()
    return {"rep": rep, "terminal_log": terminal, "rate": terminal / c.n}


def _rep_settlement(c: ScenarioConfig, rep: int) -> dict:
    clip = c.resolved_clip
    family = UnimodalFamily()
    current: tuple = ()
    last_change = 0
    for t, x in enumerate(sample(c.distribution, derive_seed(c.seed, rep), c.n)):
        family.update(x)
        got = mode_estimate(family, clip).intersect_range(*clip)
        if got != current:
            current = got
            last_change = t + 1
    target = mode_set(c.distribution)
    target_members = tuple(
        t for t in range(clip[0], clip[1] + 1) if target.contains(t)
    )
    return {
        "rep": rep,
        "final_set": list(current),
        "target_set": list(target_members),
        "matches_target": current == target_members,
        "last_change_n": last_change,
    }


def _rep_unrestricted(c: ScenarioConfig, rep: int) -> dict:
    test = UnrestrictedTest(c.alpha, c.resolved_phi)
    reject_n = None
    for x in sample(c.distribution, derive_seed(c.seed, rep), c.n):
        if test.step(x) == "reject":
            reject_n = test.rejected_at
            break
    return {"rep": rep, "rejected": reject_n is not None, "reject_n": reject_n}


def _rep_numeraire(c: ScenarioConfig, rep: int) -> dict:
    obs = sample(c.distribution, derive_seed(c.seed, rep), c.n)
    log_opt = numeraire_eprocess(c.distribution, obs)
    tracker = MonotoneTracker()
    for x in obs:
        tracker.update(x)
    return {
        "rep": rep,
        "numeraire_rate": log_opt / c.n,
        "mixture_rate": tracker.mixture_value() / c.n,
    }


_REP_FNS = {
    "growth": _rep_growth,
    "mode_settlement": _rep_settlement,
    "unrestricted_power": _rep_unrestricted,
    "numeraire_compare": _rep_numeraire,
}


def _rep_task(packed: tuple) -> dict:
    config_json, rep = packed
    c = config_from_json(config_json)
    return _REP_FNS[c.scenario](c, rep)


def _map_reps(c: ScenarioConfig) -> list[dict]:
    workers = worker_count()
    if workers == 1:
        fn = _REP_FNS[c.scenario]
        return [fn(c, rep) for rep in range(c.reps)]
    tasks = [(c.to_json(), rep) for rep in range(c.reps)]
    chunk = max(1, c.reps // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(_rep_task, tasks, chunksize=chunk))
    records.sort(key=lambda rec: rec["rep"])
    return records


def _run_growth(c: ScenarioConfig) -> tuple[list[dict], dict]:
    records = _map_reps(c)
    rates = [rec["rate"] for rec in records]
    return records, {
        "mean_rate": _mean(rates),
        "min_rate": min(rates),
        "max_rate": max(rates),
    }


def _run_settlement(c: ScenarioConfig) -> tuple[list[dict], dict]:
    records = _map_reps(c)
    return records, {
        "all_match_target": all(rec["matches_target"] for rec in records),
        "max_last_change_n": max(rec["last_change_n"] for rec in records),
    }


def _run_unrestricted(c: ScenarioConfig) -> tuple[list[dict], dict]:
    records = _map_reps(c)
    rate = sum(1 for rec in records if rec["rejected"]) / c.reps
    times = [rec["reject_n"] for rec in records if rec["rejected"]]
    return records, {
        "rejection_rate": rate,
        "rejection_rate_se": _binomial_se(rate, c.reps),
        "max_reject_n": max(times) if times else None,
        "mean_reject_n": _mean(times) if times else None,
    }


def _run_numeraire_compare(c: ScenarioConfig) -> tuple[list[dict], dict]:
    records = _map_reps(c)
    res = lcm(c.distribution)
    return records, {
        "analytic_epower": max_epower(c.distribution),
        "mean_numeraire_rate": _mean(rec["numeraire_rate"] for rec in records),
        "mean_mixture_rate": _mean(rec["mixture_rate"] for rec in records),
        "lcm_contacts": list(res.contacts),
        "lcm_slopes": list(res.slopes),
    }


# ----------------------------------------------- scenario: ci_coverage


def _run_ci_coverage(c: ScenarioConfig) -> tuple[list[dict], dict]:
    p = c.distribution
    phi = c.resolved_phi
    modes = mode_set(p)
    mode_members = (
        [t for t in range(p.lo - 1, p.hi + 2) if modes.contains(t)]
        if not modes.is_all
        else []
    )
    simultaneous = []
    per_theta = {t: [] for t in mode_members}
    for x, mass in p.items():
        if mass == 0.0:
            continue
        ci = one_obs_ci(x, c.alpha, phi)
        if all(ci.contains(t) for t in mode_members):
            simultaneous.append(mass)
        for t in mode_members:
            if ci.contains(t):
                per_theta[t].append(mass)
    coverage = math.fsum(simultaneous)
    theta_cov = {t: math.fsum(ms) for t, ms in per_theta.items()}
    records = [
        {
            "mode_set": modes.to_json(),
            "coverage_all_modes": coverage,
            "coverage_by_mode": {str(t): v for t, v in sorted(theta_cov.items())},
        }
    ]
    aggregates = {
        "coverage_all_modes": coverage,
        "min_mode_coverage": min(theta_cov.values()) if theta_cov else 1.0,
        "target": 1.0 - c.alpha,
    }
    return records, aggregates


_RUNNERS = {
    "type1": _run_type1,
    "growth": _run_growth,
    "ci_coverage": _run_ci_coverage,
    "mode_settlement": _run_settlement,
    "unrestricted_power": _run_unrestricted,
    "numeraire_compare": _run_numeraire_compare,
}


def run_experiment(c: ScenarioConfig) -> RunReport:
    """Execute one scenario; the report is a pure function of the config."""
    from evshape import __version__

    records, aggregates = _RUNNERS[c.scenario](c)
    return RunReport(
        config=c.to_json(),
        library_version=__version__,
        records=tuple(records),
        aggregates=aggregates,
    )
