"""Command-line front end.

Subcommands: feasible, construct, verify, genericity, simulate, variety.
Every command is deterministic given (args, seed); the seed is echoed in all
machine-readable output.  Exit codes: 0 success/feasible, 2 domain-negative
(infeasible / verification failure / unsupported probe shape), 1 usage or
I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import feasibility, relaysim, variety
from .errors import (
    InconsistentPairwise,
    InfeasibleTuple,
    InvalidInput,
    RelayAlignError,
)
from .feasibility import StrategySpec
from .serialization import atomic_write, dump_strategy, load_strategy, strategy_to_dict

SEED_ENV_VAR = "RELAY_ALIGN_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's default 2
        raise UsageError(message)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {env!r}")
    return 0


def _parse_d(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"-d expects a comma-separated integer list, got {text!r}")


def _spec_from_args(args) -> StrategySpec:
    d = _parse_d(args.d)
    if len(d) != args.K:
        raise UsageError(f"-d lists {len(d)} values but -K is {args.K}")
    try:
        return StrategySpec(K=args.K, N=args.N, d=d)
    except (InvalidInput, InconsistentPairwise) as exc:
        raise UsageError(str(exc))


def _load_pairwise(spec: StrategySpec, path: str) -> StrategySpec:
    with open(path) as fh:
        raw = json.load(fh)
    try:
        pw = {}
        for key, val in raw.items():
            i_s, j_s = key.split("-")
            pw[(int(i_s) - 1, int(j_s) - 1)] = int(val)
    except (ValueError, AttributeError) as exc:
        raise UsageError(f"bad pairwise table in {path}: {exc}")
    return StrategySpec(K=spec.K, N=spec.N, d=spec.d, pairwise=pw)


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_feasible(args) -> int:
    spec = _spec_from_args(args)
    if sum(spec.d) != 2 * spec.N:
        feasible, reason = False, "sum"
    elif max(spec.d) > spec.N:
        feasible, reason = False, "bound"
    else:
        feasible, reason = True, "ok"
    verdict = {
        "feasible": feasible,
        "reason": reason,
        "K": spec.K,
        "N": spec.N,
        "d": list(spec.d),
        "seed": _resolve_seed(args),
    }
    _emit(_json_text(verdict), args.output)
    return 0 if feasible else 2


def cmd_construct(args) -> int:
    spec = _spec_from_args(args)
    seed = _resolve_seed(args)
    if args.dij:
        spec = _load_pairwise(spec, args.dij)
        rng = np.random.default_rng(seed)
        strategy = feasibility.strategy_from_pairwise(spec, rng)
    else:
        strategy = feasibility.construct_strategy(spec)
    if args.output:
        dump_strategy(strategy, args.output)
    else:
        sys.stdout.write(_json_text(strategy_to_dict(strategy)))
    return 0


def cmd_verify(args) -> int:
    strategy = load_strategy(args.strategy_file)
    report = feasibility.verify_strategy(strategy.subspaces, strategy.spec.N)
    doc = {
        "ok": report.ok,
        "dims": list(report.dims),
        "pair_dims": {f"{i + 1}-{j + 1}": v for (i, j), v in sorted(report.pair_dims.items())},
        "per_user_decomposition_ok": list(report.per_user_ok),
        "global_decomposition_ok": report.global_ok,
        "worst_triple_intersection_dim": report.worst_triple_dim,
        "failed_conditions": report.failed_conditions(),
        "seed": _resolve_seed(args),
    }
    _emit(_json_text(doc), args.output)
    return 0 if report.ok else 2


def cmd_genericity(args) -> int:
    spec = _spec_from_args(args)
    seed = _resolve_seed(args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    rng = np.random.default_rng(seed)
    rate = feasibility.generic_feasibility_rate(spec, args.trials, rng)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["K", "N", "d", "trials", "seed", "pass_rate"])
    writer.writerow([spec.K, spec.N, "-".join(map(str, spec.d)), args.trials, seed, f"{rate:.4f}"])
    _emit(buf.getvalue(), args.output)
    return 0


def _snr_db(value: float) -> str:
    if math.isinf(value):
        return "inf"
    if value <= 0:
        return "-inf"
    return f"{10 * math.log10(value):.4f}"


def cmd_simulate(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        for key in ("K", "N", "d", "constellation", "noise_grid", "trials", "seed"):
            if key in cfg and getattr(args, _cfg_attr(key), None) in (None, False):
                setattr(args, _cfg_attr(key), _cfg_value(key, cfg[key]))
    if args.K is None or args.N is None or args.d is None:
        raise UsageError("simulate requires -K, -N and -d (flags or --config)")
    if args.constellation is None:
        args.constellation = "qpsk"
    if args.noise_grid is None:
        args.noise_grid = "1,0.1,0.01,0.001,0.0001"
    spec = _spec_from_args(args)
    seed = _resolve_seed(args)
    if args.trials is None or args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if not feasibility.is_feasible_tuple(spec):
        sys.stderr.write(f"infeasible tuple (K={spec.K}, N={spec.N}, d={spec.d})\n")
        return 2
    constellation = _parse_constellation(args.constellation)
    grid = _parse_grid(args.noise_grid)
    reports = relaysim.run_monte_carlo(spec, constellation, grid, args.trials, seed)
    exact_map = relaysim.relay_map_success(constellation)

    doc = {
        "seed": seed,
        "config": reports[0].config,
        "relay_map_success_exact": [exact_map.numerator, exact_map.denominator],
        "levels": [
            {
                "noise_var": r.noise_var,
                "per_user_ser": r.per_user_ser,
                "per_user_snr_db": [_snr_db(s) for s in r.per_user_snr],
                "relay_map_success_rate": r.relay_map_success_rate,
                "trials": r.trials,
            }
            for r in reports
        ],
    }
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["noise_var", "user", "ser", "snr_db", "relay_map_success"])
    for r in reports:
        for k, (ser, s) in enumerate(zip(r.per_user_ser, r.per_user_snr)):
            writer.writerow([repr(r.noise_var), k + 1, repr(ser), _snr_db(s), repr(r.relay_map_success_rate)])
    if args.output:
        atomic_write(args.output + ".json", _json_text(doc))
        atomic_write(args.output + ".csv", buf.getvalue())
    else:
        sys.stdout.write(_json_text(doc))
        sys.stdout.write(buf.getvalue())
    return 0


def _cfg_attr(key: str) -> str:
    return {"noise_grid": "noise_grid"}.get(key, key)


def _cfg_value(key: str, value):
    if key == "d" and isinstance(value, list):
        return ",".join(map(str, value))
    if key == "noise_grid" and isinstance(value, list):
        return ",".join(map(str, value))
    return value


def _parse_constellation(name: str) -> relaysim.Constellation:
    if name.startswith("["):  # explicit point list, e.g. "[[1,0],[-1,0]]"
        pts = [complex(re, im) for re, im in json.loads(name)]
        return relaysim.Constellation(np.array(pts))
    try:
        return relaysim.Constellation.from_name(name)
    except InvalidInput as exc:
        raise UsageError(str(exc))


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--noise-grid expects comma-separated floats, got {text!r}")
    if not grid or any(v < 0 for v in grid):
        raise UsageError("--noise-grid must be nonempty and nonnegative")
    return grid


def cmd_variety(args) -> int:
    seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    n, d = args.N, args.d_dim
    want_det = args.det_probe or (n == 3 and d == 2)
    if args.det_probe and (n, d) != (3, 2):
        sys.stderr.write("determinant probe requires N=3, d=2\n")
        return 2

    residuals = []
    for _ in range(args.samples):
        s = feasibility.haar_subspace(n, d, rng)
        residuals.append(variety.plucker_residual(variety.plucker(s)))

    doc = {
        "seed": seed,
        "N": n,
        "d": d,
        "plucker_residual_max": max(residuals),
        "samples": args.samples,
    }
    if want_det:
        dets, dims, agree = [], [], 0
        for _ in range(args.samples):
            planes = [feasibility.haar_subspace(3, 2, rng) for _ in range(3)]
            det = variety.determinantal_test(*planes)
            dim = variety.triple_intersection_dim(*planes)
            dets.append(abs(det))
            dims.append(dim)
            if (abs(det) < variety.DET_ZERO_THRESHOLD) == (dim > 0):
                agree += 1
        doc["determinant_abs_min"] = min(dets)
        doc["triple_dims"] = sorted(set(dims))
        doc["det_triple_agreement"] = agree / args.samples
    probe = variety.codim_line_probe(rng, args.lines)
    doc["line_probe"] = {
        "lines": probe.samples,
        "root_counts": probe.root_counts,
        "identically_zero": probe.identically_zero,
        "all_lines_hit": probe.all_lines_hit,
    }
    _emit(_json_text(doc), args.output)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="relay-align", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_spec=True, spec_required=True):
        if need_spec:
            p.add_argument("-K", type=int, required=spec_required, help="number of users")
            p.add_argument("-N", type=int, required=spec_required, help="antennas per user / at relay")
            p.add_argument("-d", type=str, required=spec_required, help="comma list of per-user dims")
        p.add_argument("--seed", type=int, default=None, help=f"RNG seed (fallback: ${SEED_ENV_VAR}, then 0)")
        p.add_argument("-o", "--output", type=str, default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"], default=None, help="output format hint")

    p = sub.add_parser("feasible", help="decide feasibility of a tuple")
    common(p)
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("construct", help="build a strategy (deterministic, or random via --dij)")
    common(p)
    p.add_argument("--dij", type=str, default=None, help="JSON file of pairwise dims keyed 'i-j'")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="verify a strategy file")
    p.add_argument("strategy_file")
    common(p, need_spec=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("genericity", help="pass rate of random strategies")
    common(p)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_genericity)

    p = sub.add_parser("simulate", help="Monte Carlo SER / equivocation sweep")
    common(p, spec_required=False)
    p.add_argument("--config", type=str, default=None, help="JSON config file")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--constellation", type=str, default=None)
    p.add_argument("--noise-grid", dest="noise_grid", type=str, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("variety", help="Plucker / determinant / line probes")
    p.add_argument("-N", type=int, default=3)
    p.add_argument("-d", dest="d_dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--lines", type=int, default=20)
    p.add_argument("--det-probe", action="store_true", help="force the N=3 determinant probe")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", type=str, default=None)
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.set_defaults(func=cmd_variety)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except (InfeasibleTuple, InconsistentPairwise) as exc:
        sys.stderr.write(f"{exc}\n")
        return 2
    except (OSError, InvalidInput) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except RelayAlignError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
