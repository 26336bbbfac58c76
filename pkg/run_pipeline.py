# run_pipeline.py

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from coalition_utils import dynamics, kelly, queue_stability, wardrop
from coalition_utils.oracles import exhaustive_ne_partitions
from coalition_utils.partitions import Partition, SizeCapError, enumerate_partitions, format_coalition
from coalition_utils.queue_stability import PayoffRule, Rule
from coalition_utils.reports import render, write_text
from coalition_utils.scenario import GameKind, Scenario, SweepAxis, build_scenario, load_scenario_data

logger = logging.getLogger("run_pipeline")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SIZE_CAP = 3

QUEUE_COMMANDS = ("we", "dynamics")
KELLY_COMMANDS = ("kelly-ne", "kelly-stability")
KELLY_RULES = ("ustable", "cstable")
EXHAUSTIVE_NE_AGENTS = 4


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"Expected comma-separated numbers, got '{text}'")
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_pipeline",
        description="Equilibria, payoffs and stability verdicts for coalition formation games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("we", "stability", "sweep", "dynamics", "kelly-ne", "kelly-stability", "report"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--scenario", help="JSON scenario file; flags override its values")
        cmd.add_argument("--servers", type=_csv_list(int))
        cmd.add_argument("--lambda", dest="lambda_total", type=float)
        cmd.add_argument("--mu", type=float)
        cmd.add_argument("--influence", type=_csv_list(float))
        cmd.add_argument("--eta", type=float)
        cmd.add_argument("--gamma", type=float)
        cmd.add_argument("--partition")
        cmd.add_argument("--rule", choices=[r.value for r in Rule] + list(KELLY_RULES))
        cmd.add_argument("--payoff", help="proportional, shapley or file:PATH")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--runs", type=int)
        cmd.add_argument("--max-steps", type=int)
        cmd.add_argument("--out", help="output file (directory for dynamics traces goes next to it)")
        cmd.add_argument("--format", choices=["csv", "json"])
        cmd.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        cmd.add_argument("--verbose", "-v", action="store_true")
        cmd.add_argument("--sweep-axis", choices=[a.value for a in SweepAxis])
        cmd.add_argument("--sweep-start", type=float)
        cmd.add_argument("--sweep-stop", type=float)
        cmd.add_argument("--sweep-step", type=float)
        cmd.add_argument("--sweep-points", type=int)
        cmd.add_argument("--log-grid", action="store_true")
        cmd.add_argument("--alpha", type=_csv_list(float))
    return parser


def _overrides(args):
    out: Dict[str, Any] = {}
    queue = {k: v for k, v in (("servers", args.servers), ("lambda", args.lambda_total), ("mu", args.mu)) if v is not None}
    kelly_part = {k: v for k, v in (("influence", args.influence), ("eta", args.eta), ("gamma", args.gamma)) if v is not None}
    if queue:
        out["queue"] = queue
    if kelly_part:
        out["kelly"] = kelly_part
    if args.command in QUEUE_COMMANDS or (queue and not kelly_part):
        out["game"] = GameKind.QUEUE.value
    elif args.command in KELLY_COMMANDS or kelly_part:
        out["game"] = GameKind.KELLY.value
    for key in ("partition", "rule", "payoff", "seed", "runs", "max_steps"):
        value = getattr(args, key)
        if value is not None:
            out[key] = value
    if args.format is not None:
        out["output"] = {"format": args.format}
    sweep = {
        k: v
        for k, v in (
            ("axis", args.sweep_axis), ("start", args.sweep_start), ("stop", args.sweep_stop),
            ("step", args.sweep_step), ("points", args.sweep_points), ("alpha", args.alpha),
        )
        if v is not None
    }
    if args.log_grid:
        sweep["log"] = True
    if sweep:
        out["sweep"] = sweep
    return out


def load_payoff(rule: str) -> Optional[List[float]]:
    if not rule.startswith("file:"):
        return None
    with open(rule[len("file:"):], "r", encoding="utf-8") as f:
        return [float(v) for v in json.load(f)]


def _queue_config(sys_, p, payoff):
    explicit = load_payoff(payoff)
    if explicit is not None:
        return queue_stability.payoff_for(sys_, p, PayoffRule.EXPLICIT, explicit)
    return queue_stability.payoff_for(sys_, p, PayoffRule(payoff))


def _system_dict(sc):
    if sc.game == GameKind.QUEUE:
        return {"servers": sc.queue.servers, "lambda": sc.queue.lambda_total, "mu": sc.queue.mu}
    return {"influence": sc.kelly.influence, "eta": sc.kelly.eta, "gamma": sc.kelly.gamma}


def cmd_we(sc: Scenario) -> Any:
    p = sc.parsed_partition()
    if p is None:
        raise ValueError("The we command needs --partition")
    sys_ = sc.queue_system()
    split = wardrop.solve_we(sys_, p)
    if sc.output.format == "json":
        return {
            "system": _system_dict(sc),
            "partition": str(p),
            "rates": {format_coalition(c): r for c, r in zip(p.coalitions, split.rates)},
            "blocking": split.common_blocking,
        }
    return [
        {"partition": str(p), "coalition": format_coalition(c), "servers": sys_.servers_of(c),
         "rate": r, "blocking": split.common_blocking}
        for c, r in zip(p.coalitions, split.rates)
    ]


def _partitions(sc: Scenario, n: int):
    p = sc.parsed_partition()
    return [p] if p is not None else list(enumerate_partitions(n))


def queue_stability_rows(sc: Scenario, sys_: wardrop.QueueSystem, extra: Dict[str, Any] = None) -> List[tuple]:
    rule = Rule(sc.rule or Rule.RBIA.value)
    rows = []
    for p in _partitions(sc, sys_.n):
        cfg = _queue_config(sys_, p, sc.payoff)
        verdict = queue_stability.check(sys_, cfg, rule)
        row = dict(extra or {})
        row.update({
            "partition": str(p),
            "rule": rule.value,
            "payoff_rule": sc.payoff,
            "stable": verdict.stable,
            "witness": format_coalition(verdict.witness.coalition) if verdict.witness else None,
        })
        if rule == Rule.RBIA:
            row["stable_every_payoff"] = queue_stability.rbia_stable_partition(sys_, p)
        rows.append((row, verdict, cfg))
    return rows


def kelly_stability_rows(sc: Scenario, ksys: kelly.KellySystem, extra: Dict[str, Any] = None) -> List[tuple]:
    rule = sc.rule or "ustable"
    if rule not in KELLY_RULES:
        raise ValueError(f"Rule '{rule}' does not apply to the Kelly game; use ustable or cstable")
    rows = []
    for p in _partitions(sc, ksys.n):
        u = kelly.u_stable(ksys, p)
        row = dict(extra or {})
        row.update({"partition": str(p), "class": kelly.partition_class(ksys, p), "u_stable": u.stable})
        verdict = u
        if rule == "cstable" or extra is not None:
            c = kelly.c_stable(ksys, p)
            row["c_stable"] = c.stable
            if rule == "cstable":
                verdict = c
        row["witness"] = format_coalition(verdict.witness.coalition) if verdict.witness else None
        for i, share in enumerate(kelly.shapley_within(ksys, p), start=1):
            row[f"share_{i}"] = share
        for i, share in enumerate(kelly.spectral_shares(ksys, p), start=1):
            row[f"spectral_{i}"] = share
        rows.append((row, verdict, None))
    return rows


def cmd_stability(sc: Scenario) -> Any:
    if sc.game == GameKind.KELLY:
        rows = kelly_stability_rows(sc, sc.kelly_system())
    else:
        rows = queue_stability_rows(sc, sc.queue_system())
    if sc.output.format == "json":
        reports = []
        for row, verdict, cfg in rows:
            report = {"system": _system_dict(sc), "partition": row["partition"], "payoff_rule": sc.payoff}
            report.update(verdict.to_dict())
            if cfg is not None:
                report["payoffs"] = list(cfg.payoff)
            reports.append(report)
        return reports
    return [row for row, _, _ in rows]


def _sweep_cell(payload):
    data, value = payload
    sc = Scenario.model_validate(data)
    axis = sc.sweep.axis
    label = axis.value
    if sc.game == GameKind.QUEUE:
        sys_ = sc.queue_system()
        if axis == SweepAxis.LAMBDA:
            sys_ = sys_.with_lambda(value)
        elif axis == SweepAxis.LEAD_SERVERS:
            sys_ = wardrop.QueueSystem((int(value),) + sys_.servers[1:], sys_.lambda_total, sys_.mu)
        else:
            raise ValueError(f"Axis '{label}' does not apply to the queue game")
        return [row for row, _, _ in queue_stability_rows(sc, sys_, {label: value})]
    ksys = sc.kelly_system()
    if axis == SweepAxis.ETA:
        ksys = kelly.KellySystem(ksys.influence, ksys.gamma, value)
    elif axis == SweepAxis.DELTA:
        alpha = sc.sweep.alpha
        if len(alpha) != ksys.n:
            raise ValueError(f"alpha has {len(alpha)} entries for {ksys.n} players")
        ksys = kelly.KellySystem(tuple(sc.sweep.base - a * value for a in alpha), ksys.gamma)
    else:
        raise ValueError(f"Axis '{label}' does not apply to the Kelly game")
    return [row for row, _, _ in kelly_stability_rows(sc, ksys, {label: value})]


def cmd_sweep(sc: Scenario, jobs: int = 1) -> List[Dict[str, Any]]:
    if sc.sweep is None:
        raise ValueError("The sweep command needs a sweep axis")
    data = sc.model_dump(by_alias=True, mode="json")
    cells = [(data, v) for v in sc.sweep.values()]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    return [row for rows in results for row in rows]


def cmd_dynamics(sc: Scenario, out: Optional[str]) -> List[Dict[str, Any]]:
    sys_ = sc.queue_system()
    rule = Rule(sc.rule or Rule.RBIA.value)
    start = sc.parsed_partition() or Partition.singletons(sys_.n)
    initial = _queue_config(sys_, start, sc.payoff)
    max_steps = sc.max_steps or dynamics.default_max_steps(sys_.n)
    trace_dir = os.path.join(os.path.dirname(out) or ".", "traces") if out else None
    summary = []
    for seed in range(sc.seed, sc.seed + sc.runs):
        trace = dynamics.run(sys_, initial, dynamics.DynamicsConfig(rule=rule, seed=seed, max_steps=max_steps))
        if trace_dir:
            write_text(trace.to_jsonl(), os.path.join(trace_dir, f"seed_{seed}.jsonl"))
        summary.append({
            "seed": seed,
            "steps": len(trace.steps),
            "absorbed": trace.absorbed,
            "terminal": str(trace.terminal.partition),
        })
    absorbed = sum(1 for row in summary if row["absorbed"])
    logger.info("%d of %d runs absorbed under %s", absorbed, len(summary), rule.value)
    return summary


def cmd_kelly_ne(sc: Scenario) -> List[Dict[str, Any]]:
    ksys = sc.kelly_system()
    p = sc.parsed_partition()
    if p is not None:
        outcome = kelly.rsg_ne(ksys, p)
        rows = [
            {"partition": str(p), "coalition": format_coalition(c), "active_player": kelly.active_player(ksys, c),
             "utility": u, "action": a, "significant": u > 0}
            for c, u, a in zip(p.coalitions, outcome.coalition_utilities, outcome.aggregate_actions)
        ]
        if ksys.has_adamant:
            rows.append({"partition": str(p), "coalition": "adamant", "active_player": 0,
                         "utility": outcome.adamant_utility, "action": outcome.adamant_action,
                         "significant": outcome.adamant_significant})
        return rows
    if ksys.n <= EXHAUSTIVE_NE_AGENTS:
        found = exhaustive_ne_partitions(ksys)
        method = "exhaustive"
    else:
        found = {q for q, verdict in kelly.stable_partition_scan(ksys) if verdict.stable}
        method = "unilateral"
    ordered = [q for q in enumerate_partitions(ksys.n) if q in found]
    return [{"partition": str(q), "class": kelly.partition_class(ksys, q), "method": method} for q in ordered]


def cmd_report(sc: Scenario) -> Dict[str, Any]:
    if sc.game == GameKind.QUEUE:
        sys_ = sc.queue_system()
        gc = queue_stability.gc_stabilizing_payoffs(sys_)
        report = {
            "system": _system_dict(sc),
            "psi": {str(k): wardrop.psi(sys_, k) for k in wardrop.realizable_sizes(sys_)},
            "k_star": sorted(wardrop.k_star(sys_)),
            "c_star": sorted(format_coalition(c) for c in wardrop.c_star_set(sys_)) if sys_.n > 1 else [],
            "stable_duopolies": [str(p) for p in queue_stability.stable_duopolies(sys_)],
            "light_traffic_set": [str(p) for p in queue_stability.light_traffic_stable_set(sys_)],
            "gc_stabilizing_payoff": list(gc) if gc is not None else None,
        }
        if sys_.n <= dynamics.MAX_A1_AGENTS:
            report["assumption_a1"] = dynamics.check_assumption_a1(sys_)
        return report
    ksys = sc.kelly_system()
    so = kelly.so_partition(ksys)
    report = {
        "system": _system_dict(sc),
        "social_optimum": {"class": so.label, "partition": str(so.partition), "value": so.value},
        "poa": kelly.poa(ksys),
        "stable_partitions": [str(p) for p, v in kelly.stable_partition_scan(ksys) if v.stable],
    }
    if not ksys.has_adamant:
        check = kelly.absolute_stability_check(ksys)
        failure = kelly.a2_failure_partition(ksys)
        report.update({
            "moa": kelly.moa(ksys),
            "absolutely_stable": check.stable,
            "assumption": check.assumption,
            "a2_failure_partition": str(failure) if failure is not None else None,
        })
    return report


def run(args: argparse.Namespace) -> int:
    data = load_scenario_data(args.scenario) if args.scenario else None
    sc = build_scenario(data, _overrides(args))
    out = args.out or (sc.output.directory and os.path.join(sc.output.directory, f"{args.command}.{sc.output.format}"))
    fmt = sc.output.format

    # 1. Compute the requested analysis
    if args.command == "we":
        result = cmd_we(sc)
    elif args.command in ("stability", "kelly-stability"):
        result = cmd_stability(sc)
    elif args.command == "sweep":
        result = cmd_sweep(sc, max(1, args.jobs))
    elif args.command == "dynamics":
        result = cmd_dynamics(sc, out)
    elif args.command == "kelly-ne":
        result = cmd_kelly_ne(sc)
    else:
        result = cmd_report(sc)
        fmt = "json"

    # 2. Render and save
    text = render(result, fmt)
    write_text(text, out)
    if out:
        print(f"Results saved to {out}", file=sys.stderr)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except SizeCapError as exc:
        logger.error("%s", exc)
        return EXIT_SIZE_CAP
    except ValidationError as exc:
        if any(isinstance((e.get("ctx") or {}).get("error"), SizeCapError) for e in exc.errors()):
            logger.error("%s", exc)
            return EXIT_SIZE_CAP
        print(f"Invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"Invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
