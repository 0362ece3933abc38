"""Batch experiment runner.

Subcommands: simulate, optimum, compare, adversary, constants, diagnose.
All file outputs are CSV or JSON; passing a figure directory additionally
renders matplotlib companions next to the delimited output. Row-level
parallelism in `compare` is capped by the CAPSCALE_THREADS environment
variable; identical configs produce byte-identical outputs either way.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import adversary as adversary_mod
from . import bounds, offline
from .dynamics import CostWeights, competitive_ratio, cost, simulate
from .policies import (ABCSParams, AdaptiveBalancedScaling, build_policy,
                       confidence_params)
from .presets import WEIGHT_PRESETS
from .workload import (ArrivalFunction, accuracy_eta, load_trace_csv,
                       make_constant, make_prediction, make_sinusoid, make_step)

_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\{([^}]*)\}\s*$")

WORKLOAD_KINDS = {
    "constant": (make_constant, 3),
    "sinusoid": (make_sinusoid, 5),
    "step": (make_step, 5),
}


def parse_workload_spec(spec: str) -> ArrivalFunction:
    """constant{rate,T,delta} | sinusoid{mean,amp,period,T,delta} |
    step{low,high,half_period,T,delta}"""
    match = _SPEC_RE.match(spec)
    if not match:
        raise ValueError(f"bad workload spec {spec!r}")
    name, raw = match.group(1), match.group(2).strip()
    if name not in WORKLOAD_KINDS:
        raise ValueError(f"unknown workload {name!r}, expected one of {tuple(WORKLOAD_KINDS)}")
    builder, arity = WORKLOAD_KINDS[name]
    args = [float(v) for v in raw.split(",")] if raw else []
    if len(args) != arity:
        raise ValueError(f"{name} takes {arity} arguments, got {len(args)}")
    return builder(*args)


def parse_prediction_spec(spec: str, lam: ArrivalFunction) -> ArrivalFunction:
    """zero{} | perfect{} | constant{c} | opposite{cap} | moving_average{w}"""
    match = _SPEC_RE.match(spec)
    if not match:
        raise ValueError(f"bad prediction spec {spec!r}")
    name, raw = match.group(1), match.group(2).strip()
    param = float(raw) if raw else None
    return make_prediction(lam, name, param)


def parse_weights(spec: str, no_wait: bool = False) -> CostWeights:
    if spec in WEIGHT_PRESETS:
        return WEIGHT_PRESETS[spec](no_wait=no_wait)
    parts = [float(v) for v in spec.split(",")]
    if len(parts) != 3:
        raise ValueError(f"weights must be a preset name or 'omega,beta,theta', got {spec!r}")
    return CostWeights(parts[0], parts[1], parts[2], no_wait=no_wait)


def write_instance_csv(lam: ArrivalFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lambda"])
        for i, rate in enumerate(lam.rates):
            writer.writerow([f"{i * lam.delta:.10g}", f"{rate:.10g}"])


def _workload_from_args(args) -> ArrivalFunction:
    if getattr(args, "trace", None):
        return load_trace_csv(args.trace, args.trace_delta)
    if not args.workload:
        raise ValueError("either --workload or --trace is required")
    return parse_workload_spec(args.workload)


def _cmd_simulate(args) -> int:
    lam = _workload_from_args(args)
    weights = parse_weights(args.weights, args.no_wait)
    prediction = parse_prediction_spec(args.prediction, lam) if args.prediction else None
    policy = build_policy(args.policy, prediction, args.lp_delta)
    traj = simulate(policy, lam, weights, args.h)
    breakdown = cost(traj, weights)
    traj.to_csv(args.out)
    if args.figures:
        from .figures import save_trajectory_figure
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        save_trajectory_figure(traj, fig_dir / (Path(args.out).stem + ".png"),
                               title=args.policy)
    print(json.dumps({"flow": breakdown.flow_time, "switch": breakdown.switching,
                      "power": breakdown.power, "total": breakdown.total}))
    return 0


def _cmd_optimum(args) -> int:
    lam = _workload_from_args(args)
    weights = parse_weights(args.weights, args.no_wait)
    solution = offline.solve(lam, weights, args.delta)
    payload = solution.to_json()
    if args.out:
        Path(args.out).write_text(payload + "\n")
    print(payload)
    return 0


def _row_eta(prediction, lam, opt) -> float | None:
    if prediction is None:
        return None
    return accuracy_eta(prediction, lam, opt).eta


def _compare_row(name: str, lam, pred_spec, policy_spec, weights, h, lp_delta):
    prediction = parse_prediction_spec(pred_spec, lam) if pred_spec else None
    policy = build_policy(policy_spec, prediction, lp_delta)
    traj = simulate(policy, lam, weights, h)
    breakdown = cost(traj, weights)
    opt = offline.solve(lam, weights, lp_delta).objective
    return {
        "instance": name,
        "policy": policy_spec,
        "flow": breakdown.flow_time,
        "switch": breakdown.switching,
        "power": breakdown.power,
        "total": breakdown.total,
        "opt": opt,
        "cr": competitive_ratio(breakdown.total, opt),
        "eta": _row_eta(prediction, lam, opt),
    }


def run_experiment(config: dict) -> list[dict]:
    """Execute a compare config and return its rows in config order."""
    workloads = []
    for w in config["workloads"]:
        if w["kind"] == "trace":
            lam = load_trace_csv(w["path"], w["delta"])
        else:
            builder, arity = WORKLOAD_KINDS[w["kind"]]
            lam = builder(*w["args"])
        workloads.append((w.get("name", w["kind"]), lam))

    weights_cfg = config.get("weights", "paper-dc")
    if isinstance(weights_cfg, str):
        weights = parse_weights(weights_cfg)
    else:
        weights = CostWeights(weights_cfg["omega"], weights_cfg["beta"],
                              weights_cfg.get("theta", 0.0),
                              no_wait=weights_cfg.get("no_wait", False))
    pred_cfg = config.get("prediction")
    pred_spec = None
    if pred_cfg:
        param = pred_cfg.get("param")
        pred_spec = f"{pred_cfg['kind']}{{{param if param is not None else ''}}}"
    h = config.get("h", 0.01)
    lp_delta = config.get("lp_delta")

    tasks = [(name, lam, pred_spec, policy_spec, weights, h, lp_delta)
             for name, lam in workloads for policy_spec in config["policies"]]
    max_workers = max(1, int(os.environ.get("CAPSCALE_THREADS", "1")))
    if max_workers == 1:
        return [_compare_row(*task) for task in tasks]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_compare_row, *task) for task in tasks]
        return [f.result() for f in futures]


COMPARE_COLUMNS = ["instance", "policy", "flow", "switch", "power", "total", "opt", "cr", "eta"]


def write_compare_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARE_COLUMNS)
        for row in rows:
            writer.writerow([
                row["instance"], row["policy"],
                *(f"{row[c]:.10g}" for c in ("flow", "switch", "power", "total", "opt", "cr")),
                "" if row["eta"] is None else f"{row['eta']:.10g}",
            ])


def _cmd_compare(args) -> int:
    config = json.loads(Path(args.config).read_text())
    try:
        rows = run_experiment(config)
    except Exception as exc:  # solver failure or unresolvable config
        print(f"compare failed: {exc}", file=sys.stderr)
        return 1
    out = args.out or config.get("output", "results.csv")
    write_compare_csv(rows, out)
    fig_dir = args.figures or config.get("figures")
    if fig_dir:
        from .figures import save_compare_figure
        Path(fig_dir).mkdir(parents=True, exist_ok=True)
        save_compare_figure(rows, Path(fig_dir) / (Path(out).stem + ".png"))
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_adversary(args) -> int:
    if args.attack == "intgap":
        ratio = adversary_mod.integrality_gap(args.epsilon)
        payload = json.dumps({"attack": "intgap", "epsilon": args.epsilon, "ratio": ratio})
        if args.out:
            Path(args.out).write_text(payload + "\n")
        print(payload)
        return 0

    if args.attack in ("online", "tradeoff", "setup") and not args.policy:
        raise ValueError(f"--policy is required for the {args.attack} attack")

    def factory(prediction):
        return build_policy(args.policy, prediction) if args.policy else None

    if args.attack == "online":
        report = adversary_mod.online_lower_bound(factory, h=args.h)
    elif args.attack == "timer":
        weights = parse_weights(args.weights) if args.weights else CostWeights(1, 1, 1)
        policy_factory = factory if args.policy else None
        report = adversary_mod.timer_lower_bound(args.tau, args.horizon, args.epsilon,
                                                 weights, policy_factory)
    elif args.attack == "tradeoff":
        report = adversary_mod.consistency_tradeoff(factory, args.slack, h=args.h)
    elif args.attack == "setup":
        report = adversary_mod.setup_time_lower_bound(factory, args.setup_time,
                                                      args.omega, args.beta)
    else:
        raise ValueError(f"unknown attack {args.attack!r}")

    payload = report.to_json()
    if args.out:
        Path(args.out).write_text(payload + "\n")
    if args.instance_out:
        write_instance_csv(report.instance, args.instance_out)
    if args.figures:
        from .figures import save_instance_figure
        Path(args.figures).mkdir(parents=True, exist_ok=True)
        save_instance_figure(report.instance,
                             Path(args.figures) / f"adversary_{args.attack}.png",
                             title=f"{args.attack}: ratio {report.ratio:.3g}")
    print(payload)
    return 0


def _cmd_constants(args) -> int:
    if args.params:
        values = [float(v) for v in args.params.split(",")]
        if len(values) != 4:
            raise ValueError("--params takes 'r1,r2,R1,R2'")
        params = ABCSParams(*values)
    else:
        params = confidence_params(args.confidence)
    weights = parse_weights(args.weights)
    constants = bounds.guarantee_constants(params, allow_unordered=args.allow_unordered)
    payload = constants.as_dict()
    payload["desiderata"] = bounds.desiderata(constants, weights)
    text = json.dumps(payload)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def _cmd_diagnose(args) -> int:
    from .diagnostics import drift_check

    lam = _workload_from_args(args)
    weights = parse_weights(args.weights, args.no_wait)
    prediction = parse_prediction_spec(args.prediction, lam)
    params = confidence_params(args.confidence)
    constants = bounds.guarantee_constants(params, allow_unordered=True)
    policy = AdaptiveBalancedScaling(prediction, params, args.lp_delta)
    traj = simulate(policy, lam, weights, args.h)
    if args.potential == "ocr":
        ref = policy.advised_trajectory(traj)
        target = constants.ocr
    else:
        solution = offline.solve(lam, weights, args.lp_delta)
        from .policies import FixedSchedule
        ref = simulate(FixedSchedule(offline.lp_schedule(solution)), lam, weights, args.h)
        target = constants.pcr
    series = drift_check(traj, ref, args.potential, target, params, weights)
    series.to_csv(args.out)
    if args.figures:
        from .figures import save_drift_figure
        Path(args.figures).mkdir(parents=True, exist_ok=True)
        save_drift_figure(series, Path(args.figures) / (Path(args.out).stem + ".png"),
                          title=f"{args.potential} drift, target {target:.3g}")
    print(json.dumps({
        "potential": args.potential, "cr_target": target,
        "min_phi": series.min_phi, "max_drift_violation": series.max_drift_violation,
    }))
    return 0


def _add_workload_args(parser):
    parser.add_argument("--workload", help="constant{...} | sinusoid{...} | step{...}")
    parser.add_argument("--trace", help="trace CSV path (timestamp,requests)")
    parser.add_argument("--trace-delta", type=float, default=1.0,
                        help="bucket width in hours for --trace")
    parser.add_argument("--weights", default="paper-dc",
                        help="preset name or 'omega,beta,theta'")
    parser.add_argument("--no-wait", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capscale",
                                     description="capacity-scaling laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="roll one policy over one workload")
    _add_workload_args(p)
    p.add_argument("--policy", required=True,
                   help="bcs{r1,r2} | ap{} | abcs{r} | abcs{r1,r2,R1,R2} | timer{tau} | nowait_bcs{}")
    p.add_argument("--prediction", help="zero{} | perfect{} | constant{c} | opposite{cap} | moving_average{w}")
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--lp-delta", type=float, default=None)
    p.add_argument("--out", required=True, help="trajectory CSV (t,lambda,m,q)")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimum", help="solve the offline LP")
    _add_workload_args(p)
    p.add_argument("--delta", type=float, default=None, help="LP slot width")
    p.add_argument("--out", help="solution JSON path")
    p.set_defaults(func=_cmd_optimum)

    p = sub.add_parser("compare", help="run an experiment config")
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--out", help="results CSV (default from config)")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("adversary", help="run a lower-bound attack")
    p.add_argument("--attack", required=True,
                   choices=["online", "timer", "tradeoff", "setup", "intgap"])
    p.add_argument("--policy", help="policy spec under attack")
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--slack", type=float, default=0.25)
    p.add_argument("--setup-time", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--weights", help="weights for the timer attack")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--instance-out", help="instance CSV path")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=_cmd_adversary)

    p = sub.add_parser("constants", help="guarantee constants for a rate tuple")
    p.add_argument("--params", help="'r1,r2,R1,R2'")
    p.add_argument("--confidence", type=float, default=2.0)
    p.add_argument("--weights", default="paper-dc")
    p.add_argument("--allow-unordered", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("diagnose", help="potential-function drift check")
    _add_workload_args(p)
    p.add_argument("--prediction", required=True)
    p.add_argument("--confidence", type=float, default=3.0)
    p.add_argument("--potential", choices=["pcr", "ocr"], default="pcr")
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--lp-delta", type=float, default=None)
    p.add_argument("--out", required=True, help="series CSV (t,phi,drift)")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, offline.SolverError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
