"""Command-line front end.

Streams arrive as one value per line, or JSONL objects carrying ``x``.
Results go to stdout as JSON; sequential test subcommands signal a
rejected null with exit code 2, everything else exits 0 on success and
1 on error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .continuous import (
    cont_mode_ci,
    edelman_ci,
    edelman_pvalue,
    epower_cont,
    lcm_cont,
    numeraire_cont,
    step_density_from_json,
)
from .eprocess import MonotoneTracker, UnimodalFamily, UnimodalTracker
from .errors import EvshapeError
from .evalues import EvalFn, is_in_polar_D, is_in_polar_M
from .harness import config_from_json, run_experiment
from .mode import (
    UnrestrictedTest,
    confidence_set,
    mode_estimate,
    one_obs_ci,
    one_obs_ci_finite,
)
from .numeraire import lcm, max_epower, numeraire_evalue, ripr
from .pmf import pmf_from_text


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is taken by the rejection signal
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self._usage_exit(message))

    def _usage_exit(self, message) -> int:
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return 1


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _stream_values(fh, as_int: bool):
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("{"):
            raw = json.loads(line)["x"]
        else:
            raw = line
        yield int(raw) if as_int else float(raw)


def _first_value(fh, as_int: bool):
    for v in _stream_values(fh, as_int):
        return v
    raise ValueError("expected one observation on stdin")


# ------------------------------------------------------------- commands


def _cmd_test_monotone(args) -> int:
    log_threshold = math.log(1.0 / args.alpha)
    tracker = MonotoneTracker()
    for x in _stream_values(sys.stdin, as_int=True):
        tracker.update(x)
        value = tracker.mixture_value()
        if value >= log_threshold:
            _emit({"decision": "reject", "n": tracker.n, "log_value": value})
            return 2
    _emit({"decision": "continue", "n": tracker.n,
           "log_value": tracker.mixture_value()})
    return 0


def _cmd_test_unimodal(args) -> int:
    log_threshold = math.log(1.0 / args.alpha)
    tracker = UnimodalTracker(args.theta)
    for x in _stream_values(sys.stdin, as_int=True):
        tracker.update(x)
        value = tracker.unimodal_value()
        if value >= log_threshold:
            _emit({"decision": "reject", "n": tracker.n,
                   "theta": args.theta, "log_value": value})
            return 2
    _emit({"decision": "continue", "n": tracker.n,
           "theta": args.theta, "log_value": tracker.unimodal_value()})
    return 0


def _cmd_test_unimodal_free(args) -> int:
    test = UnrestrictedTest(args.alpha, args.phi)
    for x in _stream_values(sys.stdin, as_int=True):
        if test.step(x) == "reject":
            _emit({"decision": "reject", "n": test.rejected_at,
                   "window": list(test.theta_window)})
            return 2
    out = {"decision": "continue", "n": test.n}
    if test.theta_window is not None:
        out["window"] = list(test.theta_window)
    _emit(out)
    return 0


def _cmd_mode_ci(args) -> int:
    x = _first_value(sys.stdin, as_int=True)
    if args.finite:
        interval = one_obs_ci_finite(x, args.alpha, args.phi)
    else:
        interval = one_obs_ci(x, args.alpha, args.phi)
    _emit({"x": x, "alpha": args.alpha, "phi": args.phi,
           "interval": interval.to_json()})
    return 0


def _cmd_mode_track(args) -> int:
    family = UnimodalFamily()
    for x in _stream_values(sys.stdin, as_int=True):
        family.update(x)
        cs = confidence_set(family, args.alpha)
        estimate = mode_estimate(family)
        line = {
            "n": family.n,
            "rejected": sorted(cs.rejected.members),
            "window": None if cs.window is None else list(cs.window),
            "estimate_excluded": sorted(estimate.members),
        }
        print(json.dumps(line, sort_keys=True), flush=True)
    return 0


def _cmd_check_evalue(args) -> int:
    e = EvalFn.from_json(sys.stdin.read())
    _emit({
        "polar_M": is_in_polar_M(e),
        f"polar_D_{args.theta}": is_in_polar_D(e, args.theta),
    })
    return 0


def _cmd_numeraire(args) -> int:
    q = pmf_from_text(sys.stdin.read())
    res = lcm(q)
    _emit({
        "contacts": list(res.contacts),
        "slopes": res.fitted_masses(),
        "ripr": ripr(q).to_json(),
        "numeraire": numeraire_evalue(q).to_json(),
        "max_epower": max_epower(q),
    })
    return 0


def _cmd_cont_ci(args) -> int:
    x = _first_value(sys.stdin, as_int=False)
    if args.edelman:
        interval = edelman_ci(x, args.alpha, args.phi)
    else:
        interval = cont_mode_ci(x, args.alpha, args.phi)
    _emit({"x": x, "alpha": args.alpha, "phi": args.phi,
           "interval": interval.to_json()})
    return 0


def _cmd_cont_pvalue(args) -> int:
    x = _first_value(sys.stdin, as_int=False)
    _emit({"x": x, "a": args.a, "pvalue": edelman_pvalue(x, args.a)})
    return 0


def _cmd_cont_numeraire(args) -> int:
    q = step_density_from_json(sys.stdin.read())
    fitted = lcm_cont(q)
    e = numeraire_cont(q)
    _emit({
        "lcm": fitted.to_json(),
        "numeraire": e.to_json(),
        "max_epower": epower_cont(e, q),
    })
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config) as fh:
        obj = json.load(fh)
    if args.seed is not None:
        obj["seed"] = args.seed
    report = run_experiment(config_from_json(obj))
    print(report.to_json())
    if args.csv is not None:
        with open(args.csv, "w") as fh:
            fh.write(report.aggregates_csv())
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="evshape")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("test-monotone", _cmd_test_monotone,
            help="sequential test of a non-increasing mass function")
    p.add_argument("--alpha", type=float, required=True)

    p = add("test-unimodal", _cmd_test_unimodal,
            help="sequential test of unimodality with a known peak")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--theta", type=int, required=True)

    p = add("test-unimodal-free", _cmd_test_unimodal_free,
            help="sequential test of unimodality, peak unknown")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--phi", type=int, required=True)

    p = add("mode-ci", _cmd_mode_ci,
            help="mode interval from a single observation")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--phi", type=int, required=True)
    p.add_argument("--finite", action="store_true",
                   help="intersect both anchors for an always-bounded interval")

    p = add("mode-track", _cmd_mode_track,
            help="stream observations; emit the mode confidence sequence")
    p.add_argument("--alpha", type=float, required=True)

    p = add("check-evalue", _cmd_check_evalue,
            help="polar membership of an e-value given as JSON")
    p.add_argument("--theta", type=int, default=0)

    add("numeraire", _cmd_numeraire,
        help="concave majorant, projection, and log-optimal e-value of a pmf")

    p = add("cont-ci", _cmd_cont_ci, help="continuous one-observation interval")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--edelman", action="store_true",
                   help="location interval instead of the wider mode interval")

    p = add("cont-pvalue", _cmd_cont_pvalue,
            help="distance-ratio p-value for monotone densities")
    p.add_argument("--a", type=float, required=True)

    add("cont-numeraire", _cmd_cont_numeraire,
        help="continuous concave majorant and log-optimal e-value")

    p = add("simulate", _cmd_simulate, help="run one experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--csv", default=None,
                   help="also write aggregate metrics to this CSV file")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage error remapped to 1 by _Parser
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except EvshapeError as exc:
        print(f"evshape: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"evshape: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
