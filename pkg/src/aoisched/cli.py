"""Command-line front end.

Subcommands: validate, tstar, lb, run, sweep, reproduce, report.
Exit codes: 0 success, 1 validation/usage error, 2 threshold failure in
``reproduce``.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .metrics import CSV_COLUMNS, report_rows
from .model import ScenarioError, load_scenario, validate
from .presets import PRESETS
from .sim import PolicySpec, RunConfig, run, sweep
from .solver import SolverError, compute_t_star, hier_threshold, lower_bound


def _write_csv(path: str | None, header: list[str], rows: list[list[str]]) -> None:
    if path is None:
        out = sys.stdout
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def parse_grid(text: str) -> list[float]:
    """Grid syntax: 'a:b:step' (inclusive within half a step) or 'v1,v2,...'."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"grid must be a:b:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0:
            raise ScenarioError("grid step must be positive")
        n = int(round((b - a) / step))
        values = [round(a + i * step, 12) for i in range(n + 1)]
        return [v for v in values if v <= b + step * 0.5]
    return [float(p) for p in text.split(",") if p.strip()]


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    report = validate(scenario)
    print(f"load = {report.load!r}")
    print(f"zeta = {report.zeta!r}")
    print(f"feasible = {report.feasible}")
    if report.theta_sum is not None:
        print(f"theta_sum = {report.theta_sum!r}")
        print(f"rd_feasible = {report.rd_feasible}")
    return 0


def cmd_tstar(args) -> int:
    scenario = load_scenario(args.scenario)
    report = validate(scenario)
    if not scenario.aoi_ues:
        print("no aoi ues; nothing to solve")
        return 0
    if report.zeta <= 0:
        raise SolverError(f"zeta = {report.zeta!r} <= 0: spacing program infeasible")
    sol = compute_t_star(scenario.aoi_ues, report.zeta)
    rows = []
    for u in scenario.aoi_ues:
        t = sol.t_star[u.id]
        thr = hier_threshold(t, u.q)
        print(f"ue {u.id}: t_star = {t!r}, threshold = {thr}")
        rows.append([str(u.id), _fmt(t), str(thr), _fmt(sol.mu), str(sol.binding)])
    print(f"mu = {sol.mu!r}, binding = {sol.binding}")
    if args.csv:
        _write_csv(args.csv, ["ue_id", "t_star", "threshold", "mu", "binding"], rows)
    return 0


def cmd_lb(args) -> int:
    scenario = load_scenario(args.scenario)
    bound = lower_bound(scenario, horizon=args.horizon, seed=args.seed, seeds=args.seeds)
    print(f"lb_f1 = {bound.lb_f1!r}")
    print(f"lb_f2 = {bound.lb_f2!r}")
    print(f"lb = {bound.lb!r}")
    if args.csv:
        _write_csv(args.csv, ["lb_f1", "lb_f2", "lb"],
                   [[_fmt(bound.lb_f1), _fmt(bound.lb_f2), _fmt(bound.lb)]])
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    config = RunConfig(scenario=scenario,
                       policy=PolicySpec(args.policy, f=args.f, eta=args.eta),
                       horizon=args.horizon, seed=args.seed, warmup=args.warmup)
    report = run(config)
    run_id = f"{report.policy}-h{args.horizon}-s{args.seed}"
    rows = report_rows(report, run_id)
    if args.out:
        _write_csv(args.out, CSV_COLUMNS, rows)
        print(f"wrote {args.out}")
    else:
        _write_csv(None, CSV_COLUMNS, rows)
    return 0


SWEEP_COLUMNS = ["param", "value", "replicate", "seed", "feasible", "zeta",
                 "runnable", "ue_id", "class", "avg_aoi", "avg_latency",
                 "throughput", "t_bar", "delta_sq", "attempts_share",
                 "cost_objective", "f1", "f2", "t_star", "threshold"]


def sweep_rows(points) -> list[list[str]]:
    rows = []
    for pt in points:
        base = [pt.param, _fmt(pt.value), str(pt.replicate), str(pt.seed),
                str(pt.feasibility.feasible), _fmt(pt.feasibility.zeta),
                str(pt.runnable)]
        if pt.report is None:
            rows.append(base + [""] * (len(SWEEP_COLUMNS) - len(base)))
            continue
        tstar = pt.report.extras.get("t_star", {})
        thresholds = pt.report.extras.get("thresholds", {})
        for ue_id in sorted(pt.report.per_ue):
            s = pt.report.per_ue[ue_id]
            rows.append(base + [str(ue_id), s.ue_class.value, _fmt(s.avg_aoi),
                                _fmt(s.avg_latency), _fmt(s.throughput),
                                _fmt(s.t_bar), _fmt(s.delta_sq),
                                _fmt(s.attempts_share),
                                _fmt(pt.report.cost_objective),
                                _fmt(pt.report.f1), _fmt(pt.report.f2),
                                _fmt(tstar.get(ue_id)),
                                _fmt(thresholds.get(ue_id))])
    return rows


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    base = RunConfig(scenario=scenario,
                     policy=PolicySpec(args.policy, f=args.f, eta=args.eta),
                     horizon=args.horizon, seed=args.seed, warmup=args.warmup)
    points = sweep(base, args.param, parse_grid(args.grid), seeds=args.seeds,
                   ue_id=args.ue, jobs=args.jobs)
    rows = sweep_rows(points)
    _write_csv(args.out, SWEEP_COLUMNS, rows)
    if args.out:
        print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


# -- reproduce -------------------------------------------------------------

def _seed_mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


class Checks:
    def __init__(self) -> None:
        self.failed = 0

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        tag = "PASS" if ok else "FAIL"
        if not ok:
            self.failed += 1
        suffix = f" ({detail})" if detail else ""
        print(f"[{tag}] {name}{suffix}")


def _group_by_value(points):
    by_value: dict[float, list] = {}
    for pt in points:
        by_value.setdefault(pt.value, []).append(pt)
    return by_value


def _reproduce_alpha_preset(name: str, args, checks: Checks) -> list[list[str]]:
    preset = PRESETS[name]
    base = RunConfig(scenario=preset.scenario, policy=PolicySpec("hier"),
                     horizon=args.horizon, seed=args.seed)
    points = sweep(base, "alpha", list(preset.grid), seeds=args.seeds, jobs=args.jobs)
    by_value = _group_by_value(points)
    bounds = {v: lower_bound(_with_alpha(preset.scenario, v), args.horizon,
                             args.seed, seeds=min(args.seeds, 2))
              for v in by_value}
    rows = []
    means: dict[float, dict] = {}
    for v in preset.grid:
        pts = by_value[v]
        lb = bounds[v].lb
        agg: dict[int, dict[str, float]] = {}
        cost = _seed_mean(pt.report.cost_objective for pt in pts)
        for ue_id in sorted(pts[0].report.per_ue):
            agg[ue_id] = {
                "throughput": _seed_mean(pt.report.per_ue[ue_id].throughput for pt in pts),
                "avg_aoi": _seed_mean(pt.report.per_ue[ue_id].avg_aoi or 0.0
                                      for pt in pts),
                "avg_latency": _seed_mean(pt.report.per_ue[ue_id].avg_latency or 0.0
                                          for pt in pts),
            }
            tstar = pts[0].report.extras.get("t_star", {}).get(ue_id)
            rows.append([_fmt(v), str(ue_id), _fmt(agg[ue_id]["throughput"]),
                         _fmt(agg[ue_id]["avg_aoi"]), _fmt(agg[ue_id]["avg_latency"]),
                         _fmt(tstar), _fmt(lb), _fmt(cost)])
        means[v] = {"agg": agg, "cost": cost, "lb": lb}

    if name == "fig4":
        for v in preset.grid:
            r2 = means[v]["agg"][2]["throughput"]
            checks.check(f"fig4 alpha={v}: latency-ue rate 0.2 +- 0.01",
                         abs(r2 - 0.2) <= 0.01, f"measured {r2:.4f}")
            r3 = means[v]["agg"][3]["throughput"]
            checks.check(f"fig4 alpha={v}: throughput-ue rate >= alpha - 0.01",
                         r3 >= v - 0.01, f"measured {r3:.4f}")
        r1s = [means[v]["agg"][1]["throughput"] for v in preset.grid]
        checks.check("fig4: aoi-ue rate non-increasing in alpha",
                     all(a >= b - 0.005 for a, b in zip(r1s, r1s[1:])),
                     " ".join(f"{x:.4f}" for x in r1s))
    else:  # fig5_cost
        for v in preset.grid:
            checks.check(f"fig5 alpha={v}: cost >= lb",
                         means[v]["cost"] >= means[v]["lb"],
                         f"cost {means[v]['cost']:.4f} lb {means[v]['lb']:.4f}")
        gaps = {v: (means[v]["cost"] - means[v]["lb"]) / means[v]["lb"] for v in preset.grid}
        checks.check("fig5: relative gap shrinks from first to last alpha",
                     gaps[preset.grid[-1]] < gaps[preset.grid[0]],
                     f"gap@{preset.grid[0]}={gaps[preset.grid[0]]:.3f} "
                     f"gap@{preset.grid[-1]}={gaps[preset.grid[-1]]:.3f}")
    return rows


def _with_alpha(scenario, value):
    from .model import replace_param
    target = scenario.throughput_ues[0].id
    return replace_param(scenario, target, alpha=value)


def _reproduce_fig5_weights(args, checks: Checks) -> list[list[str]]:
    preset = PRESETS["fig5_weights"]
    rows = []
    horizon = args.horizon if args.horizon_set else 2 * 10 ** 6
    for beta in preset.grid:
        scn = _with_beta(preset.scenario, beta)
        config = RunConfig(scenario=scn, policy=PolicySpec("vw"),
                           horizon=horizon, seed=args.seed)
        report = run(config)
        log = report.extras["weight_log"]
        lat_id = scn.latency_ues[0].id
        trajectory = [entry[lat_id] for entry in log]
        for i, rho in enumerate(trajectory, start=1):
            rows.append([_fmt(beta), str(i), _fmt(rho)])
        if beta == 1.0:
            over = next((i for i, r in enumerate(trajectory, 1) if r > 50.0), None)
            checks.check("fig5_weights beta=1: weight exceeds 50 within 200 updates",
                         over is not None and over <= 200,
                         f"max over {len(trajectory)} updates = {max(trajectory):.2f}")
            checks.check("fig5_weights beta=1: weight nondecreasing once latency sits above beta",
                         all(b >= a for a, b in zip(trajectory, trajectory[1:])))
        if beta == 5.0:
            first0 = next((i for i, r in enumerate(trajectory) if r == 0.0), None)
            checks.check("fig5_weights beta=5: weight reaches 0 and stays 0",
                         first0 is not None and all(r == 0.0 for r in trajectory[first0:]),
                         f"first zero at update {None if first0 is None else first0 + 1}")
    return rows


def _with_beta(scenario, value):
    from .model import replace_param
    target = scenario.latency_ues[0].id
    return replace_param(scenario, target, beta=value)


def _reproduce_beta_preset(name: str, args, checks: Checks) -> list[list[str]]:
    preset = PRESETS[name]
    floor = 4.0 / 3.0
    rows = []
    results: dict[str, dict[float, dict]] = {}
    for policy in preset.policies:
        base = RunConfig(scenario=preset.scenario, policy=PolicySpec(policy),
                         horizon=args.horizon, seed=args.seed)
        points = sweep(base, "beta", list(preset.grid), seeds=args.seeds, jobs=args.jobs)
        by_value = _group_by_value(points)
        results[policy] = {}
        for v in preset.grid:
            pts = by_value[v]
            agg = {}
            for ue_id in sorted(pts[0].report.per_ue):
                s = {
                    "throughput": _seed_mean(pt.report.per_ue[ue_id].throughput
                                             for pt in pts),
                    "avg_aoi": _seed_mean(pt.report.per_ue[ue_id].avg_aoi or 0.0
                                          for pt in pts),
                    "avg_latency": _seed_mean(pt.report.per_ue[ue_id].avg_latency or 0.0
                                              for pt in pts),
                }
                agg[ue_id] = s
                rows.append([_fmt(v), policy, str(ue_id), _fmt(s["avg_aoi"]),
                             _fmt(s["avg_latency"]), _fmt(s["throughput"])])
            results[policy][v] = agg

    lat_id = preset.scenario.latency_ues[0].id
    thr_id = preset.scenario.throughput_ues[0].id
    if name == "fig6":
        for v in preset.grid:
            lbar = results["rd"][v][lat_id]["avg_latency"]
            if v < floor:
                checks.check(f"fig6 rd beta={v}: latency pinned at queueing floor +- 3%",
                             abs(lbar - floor) <= 0.03 * floor, f"measured {lbar:.4f}")
            else:
                checks.check(f"fig6 rd beta={v}: latency within 5% of beta",
                             abs(lbar - v) <= 0.05 * v, f"measured {lbar:.4f}")
    else:  # fig8
        for policy in preset.policies:
            for ue_id in (1, lat_id, thr_id):
                vals = [results[policy][v][ue_id]["throughput"] for v in preset.grid]
                checks.check(f"fig8 {policy} ue {ue_id}: throughput spread over beta < 0.01",
                             max(vals) - min(vals) < 0.01,
                             f"spread {max(vals) - min(vals):.4f}")
            r3 = [results[policy][v][thr_id]["throughput"] for v in preset.grid]
            checks.check(f"fig8 {policy}: throughput-ue rate >= 0.19 at all beta",
                         min(r3) >= 0.19, f"min {min(r3):.4f}")
        for v in preset.grid:
            for ue_id in (1, lat_id, thr_id):
                a = results["vw"][v][ue_id]["throughput"]
                b = results["rd"][v][ue_id]["throughput"]
                if abs(a - b) > 0.01:
                    checks.check(f"fig8 beta={v} ue {ue_id}: vw and rd rates agree +- 0.01",
                                 False, f"{a:.4f} vs {b:.4f}")
        checks.check("fig8: vw and rd per-ue rates agree +- 0.01 on the grid", True)
    return rows


REPRODUCE_HEADERS = {
    "fig4": ["alpha", "ue_id", "throughput", "avg_aoi", "avg_latency", "t_star", "lb", "cost"],
    "fig5_cost": ["alpha", "ue_id", "throughput", "avg_aoi", "avg_latency", "t_star",
                  "lb", "cost"],
    "fig5_weights": ["beta", "update_index", "rho"],
    "fig6": ["beta", "policy", "ue_id", "avg_aoi", "avg_latency", "throughput"],
    "fig8": ["beta", "policy", "ue_id", "avg_aoi", "avg_latency", "throughput"],
}


def cmd_reproduce(args) -> int:
    name = args.preset
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    checks = Checks()
    if name in ("fig4", "fig5_cost"):
        rows = _reproduce_alpha_preset(name, args, checks)
    elif name == "fig5_weights":
        rows = _reproduce_fig5_weights(args, checks)
    else:
        rows = _reproduce_beta_preset(name, args, checks)
    out = args.out or f"{name}.csv"
    _write_csv(out, REPRODUCE_HEADERS[name], rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return 2 if checks.failed else 0


# -- report ----------------------------------------------------------------

def cmd_report(args) -> int:
    path = Path(args.csv)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            print(f"# {path.name}\n\n(empty)")
            return 0
        rows = list(reader)
    print(f"# {path.name}\n")
    if not rows:
        print("(no data rows)")
        return 0
    print("| " + " | ".join(header) + " |")
    print("|" + "|".join("---" for _ in header) + "|")
    for row in rows:
        print("| " + " | ".join(row) + " |")
    verdicts = _report_verdicts(header, rows)
    if verdicts:
        print("\n## Checks\n")
        for line in verdicts:
            print(line)
    return 0


def _report_verdicts(header: list[str], rows: list[list[str]]) -> list[str]:
    out = []
    cols = {name: i for i, name in enumerate(header)}
    if {"alpha", "ue_id", "throughput"} <= set(header):
        r2 = [float(r[cols["throughput"]]) for r in rows if r[cols["ue_id"]] == "2"]
        if r2:
            flat = max(r2) - min(r2) < 0.01
            out.append(f"- latency-ue throughput flat across alpha (spread "
                       f"{max(r2) - min(r2):.4f}): {'PASS' if flat else 'FAIL'}")
    if {"beta", "policy", "ue_id", "throughput"} <= set(header):
        by_key: dict[tuple[str, str], list[float]] = {}
        for r in rows:
            by_key.setdefault((r[cols["policy"]], r[cols["ue_id"]]), []).append(
                float(r[cols["throughput"]]))
        worst = max((max(v) - min(v) for v in by_key.values()), default=0.0)
        out.append(f"- max per-ue throughput spread across beta = {worst:.4f}: "
                   f"{'PASS' if worst < 0.01 else 'FAIL'}")
    return out


# -- argument parsing --------------------------------------------------------

def _add_run_args(p: argparse.ArgumentParser, with_policy: bool = True) -> None:
    if with_policy:
        p.add_argument("--policy", choices=["hier", "vw", "rd", "cmu"], default="hier")
        p.add_argument("--f", type=int, default=10000,
                       help="virtual-weight update period (vw)")
        p.add_argument("--eta", type=float, default=0.1,
                       help="virtual-weight step size (vw)")
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--warmup", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoisched",
                                     description="slotted downlink scheduling simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("tstar", help="solve the target-spacing program")
    p.add_argument("scenario")
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_tstar)

    p = sub.add_parser("lb", help="cost lower bound")
    p.add_argument("scenario")
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_lb)

    p = sub.add_parser("run", help="single simulation run")
    p.add_argument("scenario")
    _add_run_args(p)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="parameter sweep")
    p.add_argument("scenario")
    _add_run_args(p)
    p.add_argument("--param", choices=["alpha", "beta"], required=True)
    p.add_argument("--grid", required=True, help="a:b:step or comma list")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--ue", type=int, help="target ue id (if ambiguous)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("reproduce", help="run a pinned experiment preset")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV output path (default: <preset>.csv)")
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("report", help="summarise a CSV produced by this tool")
    p.add_argument("csv")
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.fn is cmd_reproduce:
        args.horizon_set = "--horizon" in (argv if argv is not None else sys.argv[1:])
    try:
        return args.fn(args)
    except (ScenarioError, SolverError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
