"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 runtime or numeric failure.
Diagnostics go to stderr; data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytics
from .env import Instance
from .harness import (PRESETS, SETTING_IDS, OutputExists, builtin_setting, final_regret_table,
                      load_config, run_experiment, table_csv, write_outputs)
from .policies import check_roster

log = logging.getLogger("aoi_bandits")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _policies(text):
    try:
        return check_roster(p.strip() for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _setting(text):
    if text not in SETTING_IDS:
        raise argparse.ArgumentTypeError(
            f"unknown setting id {text!r}; expected one of {', '.join(SETTING_IDS)}")
    return text


def _experiment_args(p, settings_many=False):
    src = p.add_mutually_exclusive_group()
    if settings_many:
        src.add_argument("--setting", type=str, default=None,
                         help="comma list of setting ids, or 'set1', 'set2', 'all'")
    else:
        src.add_argument("--setting", type=_setting, help="built-in setting id (1.a-1.e, 2.a-2.e)")
    src.add_argument("--config", type=Path, help="JSON or TOML experiment config")
    p.add_argument("--T", type=int, dest="horizon", help="horizon (slots)")
    p.add_argument("--reps", type=int, help="replications")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named replication count")
    p.add_argument("--seed", type=int)
    p.add_argument("--policies", type=_policies, help="comma list of policy names")
    p.add_argument("--thr", type=float, help="AoI threshold for aa-q-ucb / aa-q-ts")
    p.add_argument("--coupling", choices=("coupled", "independent"))
    p.add_argument("--init", choices=("geometric", "unit"), dest="init_mode")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aoi-lab", description="AoI bandit simulation laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one setting and write CSV + manifest")
    _experiment_args(p)
    p.add_argument("--record-all", action="store_true", help="record every slot")

    p = sub.add_parser("table", help="regret at the horizon for several settings")
    _experiment_args(p, settings_many=True)

    p = sub.add_parser("bounds", help="evaluate the regret bounds (JSON to stdout)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--setting", type=_setting)
    src.add_argument("--config", type=Path)
    p.add_argument("--T", type=int, dest="horizon")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--counts", type=float, help="expected number of sub-optimal slots")

    p = sub.add_parser("verify-lemmas", help="randomised check of the schedule-exchange inequalities")
    p.add_argument("--max-T", type=int, default=8)
    p.add_argument("--max-K", type=int, default=4)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("oracle", help="exact expected AoI of a fixed schedule (CSV to stdout)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--setting", type=_setting)
    src.add_argument("--config", type=Path)
    p.add_argument("--schedule", required=True, help="comma list of 1-based channel indices")
    p.add_argument("--pre", type=int, help="1-based channel used before slot 1 (default: best)")
    return parser


def _overrides(args) -> dict:
    reps = args.reps
    if reps is None and args.preset:
        reps = PRESETS[args.preset]
    kw = dict(horizon=args.horizon, replications=reps, seed=args.seed, policies=args.policies,
              thr=args.thr, coupling=args.coupling, init_mode=args.init_mode,
              out=str(args.out) if args.out else None)
    return {k: v for k, v in kw.items() if v is not None}


def _config(args, setting=None):
    kw = _overrides(args)
    setting = setting or args.setting
    if args.config is None and setting is None:
        raise UsageError("one of --setting or --config is required")
    try:
        if args.config is not None:
            return load_config(args.config, **kw)
        return builtin_setting(setting, **kw)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _instance(args) -> Instance:
    try:
        if args.config is not None:
            return load_config(args.config).instance
        return builtin_setting(args.setting).instance
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _cmd_run(args) -> int:
    cfg = _config(args)
    if args.record_all:
        cfg = replace(cfg, record_all=True)
    out = Path(cfg.out or "runs")
    result = run_experiment(cfg)
    csv_path, man_path = write_outputs(result, out, force=args.force)
    print(f"wrote {csv_path} and {man_path}", file=sys.stderr)
    return 0


def _expand_settings(text):
    if text in (None, "all"):
        return list(SETTING_IDS)
    if text == "set1":
        return [s for s in SETTING_IDS if s.startswith("1.")]
    if text == "set2":
        return [s for s in SETTING_IDS if s.startswith("2.")]
    ids = [s.strip() for s in text.split(",") if s.strip()]
    for s in ids:
        _setting_or_usage(s)
    return ids


def _setting_or_usage(s):
    if s not in SETTING_IDS:
        raise UsageError(f"unknown setting id {s!r}; expected one of {', '.join(SETTING_IDS)}")


def _cmd_table(args) -> int:
    if args.config is not None:
        configs = [_config(args)]
    else:
        configs = [_config(args, s) for s in _expand_settings(args.setting)]
    text = table_csv(final_regret_table(configs))
    if args.out:
        path = Path(args.out)
        if path.suffix != ".csv":
            path = path / "final_regret.csv"
        if path.exists() and not args.force:
            raise OutputExists(f"{path} exists; pass --force to overwrite")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_bounds(args) -> int:
    inst = _instance(args)
    horizon = args.horizon or 10_000
    params = analytics.BoundParams(args.alpha, args.C, args.t0)
    report = analytics.eval_bounds(inst, horizon, params, counts=args.counts)
    doc = {"instance": list(inst.mu), **report.to_dict()}
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def verify_lemmas(max_T: int, max_K: int, trials: int, seed: int, tol: float = 1e-9) -> dict:
    """Count violations of the exchange chain and the cumulative-AoI ceiling."""
    rng = np.random.default_rng(seed)
    chain_a = chain_b = ceiling = 0
    for _ in range(trials):
        K = int(rng.integers(1, max_K + 1))
        T = int(rng.integers(1, max_T + 1))
        inst = Instance(tuple(rng.uniform(0.01, 1.0, K)))
        sched = analytics.FixedSchedule(tuple(rng.integers(0, K, T)))
        a = analytics.worsen_suboptimal(sched, inst)
        b = analytics.cluster_worst_first(a, inst)
        v0 = analytics.exact_cumulative_aoi(inst, sched)
        va = analytics.exact_cumulative_aoi(inst, a)
        vb = analytics.exact_cumulative_aoi(inst, b)
        n = analytics.suboptimal_uses(sched, inst)
        chain_a += v0 > va + tol
        chain_b += va > vb + tol
        ceiling += v0 > analytics.lemma5_bound(inst, T, n) + tol
    return {"trials": trials, "max_T": max_T, "max_K": max_K, "seed": seed,
            "violations": {"schedule_vs_worsened": int(chain_a),
                           "worsened_vs_clustered": int(chain_b),
                           "cumulative_ceiling": int(ceiling)},
            "total_violations": int(chain_a + chain_b + ceiling)}


def _cmd_verify(args) -> int:
    if args.max_T < 1 or args.max_K < 1 or args.trials < 1:
        raise UsageError("--max-T, --max-K and --trials must be positive")
    report = verify_lemmas(args.max_T, args.max_K, args.trials, args.seed)
    print(json.dumps(report, indent=2))
    return 0 if report["total_violations"] == 0 else 2


def _cmd_oracle(args) -> int:
    inst = _instance(args)
    try:
        chans = tuple(int(c) - 1 for c in args.schedule.split(",") if c.strip())
    except ValueError:
        raise UsageError(f"malformed schedule {args.schedule!r}") from None
    pre = None if args.pre is None else args.pre - 1
    sched = analytics.FixedSchedule(chans, pre)
    try:
        sched.validate(inst)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = ["t,channel,expected_aoi"]
    for t in range(1, len(sched) + 1):
        out.append(f"{t},{chans[t - 1] + 1},{analytics.exact_expected_aoi(inst, sched, t)!r}")
    out.append(f"total,,{analytics.exact_cumulative_aoi(inst, sched)!r}")
    print("\n".join(out))
    return 0


COMMANDS = {"run": _cmd_run, "table": _cmd_table, "bounds": _cmd_bounds,
            "verify-lemmas": _cmd_verify, "oracle": _cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"aoi-lab: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        print(f"aoi-lab: error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, OutputExists) as exc:
        print(f"aoi-lab: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"aoi-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
