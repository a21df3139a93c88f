"""Command-line front end: fit, plan, predict, simulate, compare."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines, calibration, oracle, planner, problem as problem_mod
from .errors import (
    GpuPlannerError,
    OverAllocatedError,
    PlanningError,
)
from .model import predict_gpu, slo_check
from .planner import GpuPlan, Plan
from .simulate import SimConfig, simulate, write_trace_csv

STRATEGIES = ("igniter", "ffd", "bestfit")


def _strategy_fn(name: str):
    return {
        "igniter": planner.plan,
        "ffd": baselines.ffd_plus,
        "bestfit": baselines.bestfit_throughput,
    }[name]


def _plan_with_type(problem, strategy: str, gpu_type: str) -> Plan:
    hw = problem.profile(gpu_type)
    fn = _strategy_fn(strategy)
    return fn(problem.workload_pairs(gpu_type), hw, b_max=problem.b_max)


def _plan_auto(problem, strategy: str) -> Plan:
    if strategy == "igniter":
        return planner.select_gpu_type(
            problem.specs,
            problem.hardware,
            problem.coefs_by_type,
            b_max=problem.b_max,
        )
    best = None
    last_error = None
    for hw in problem.hardware:
        try:
            candidate = _plan_with_type(problem, strategy, hw.gpu_type)
        except PlanningError as exc:
            last_error = exc
            continue
        if best is None or candidate.cost_per_hour < best.cost_per_hour:
            best = candidate
    if best is None:
        raise GpuPlannerError(f"no GPU type can host all workloads ({last_error})")
    return best


def _print_plan(plan: Plan, out=sys.stdout) -> None:
    print(
        f"strategy={plan.strategy} gpu_type={plan.gpu_type} "
        f"gpus={len(plan.gpus)} cost_per_hour=${plan.cost_per_hour:.2f}",
        file=out,
    )
    for gpu in plan.gpus:
        parts = [
            f"{a.workload} ({a.r * 100:.1f}%, b={a.batch})" for a in gpu.allocations
        ]
        print(f"  gpu {gpu.gpu_index}: {', '.join(parts)}", file=out)
    for diag in plan.diagnostics:
        print(f"  ! {diag}", file=out)


def cmd_fit(args) -> int:
    samples_dir = Path(args.samples_dir)
    out_dir = Path(args.out)
    solo_files = sorted(samples_dir.glob("*_solo.csv"))
    if not solo_files:
        print(f"error: no samples (*_solo.csv) found in {samples_dir}", file=sys.stderr)
        return 1

    hw_doc = None
    hw_path = samples_dir / "hardware.json"
    if hw_path.exists():
        hw_doc = json.loads(hw_path.read_text())

    failures = 0
    report: dict = {"workloads": {}, "diagnostics": []}
    for solo_path in solo_files:
        name = solo_path.name[: -len("_solo.csv")]
        try:
            solo = calibration.read_solo_samples(solo_path)
            active = calibration.fit_active_time(solo)
            power_cache = calibration.fit_power_cache(solo)

            meta_path = samples_dir / f"{name}_meta.json"
            if not meta_path.exists():
                raise GpuPlannerError(
                    f"{meta_path} not found (needs n_kernels and k_sch_ms)"
                )
            meta = json.loads(meta_path.read_text())
            n_kernels = int(meta["n_kernels"])
            k_sch_ms = float(meta["k_sch_ms"])

            alpha_cache = 0.0
            interference = None
            colo_path = samples_dir / f"{name}_colo.csv"
            if colo_path.exists():
                colo = calibration.read_colo_samples(colo_path)
                if hw_doc is None:
                    report["diagnostics"].append(
                        f"{name}: no hardware.json; frequency coefficient skipped"
                    )
                    power_max = float("inf")
                    freq_max = 0.0
                else:
                    power_max = float(hw_doc["power_max_w"])
                    freq_max = float(hw_doc["freq_max_mhz"])
                interference = calibration.fit_interference(
                    colo, k_sch_ms, power_max, freq_max
                )
                if interference.alpha_cache is not None:
                    alpha_cache = max(0.0, interference.alpha_cache)

            coef_doc = {
                "workload": name,
                "coefficients": {
                    "n_kernels": n_kernels,
                    "k_sch_ms": k_sch_ms,
                    "k1": active.k1,
                    "k2": active.k2,
                    "k3": active.k3,
                    "k4": active.k4,
                    "k5": active.k5,
                    "alpha_power_w": power_cache.alpha_power_w,
                    "beta_power_w": power_cache.beta_power_w,
                    "alpha_cacheutil": power_cache.alpha_cacheutil,
                    "beta_cacheutil": power_cache.beta_cacheutil,
                    "alpha_cache": alpha_cache,
                },
                "fit_quality": {"active_time_rms_ms": active.rms_error},
            }
            problem_mod.write_json_atomic(
                out_dir / f"{name}_coefficients.json", coef_doc
            )
            entry: dict = {"active_time_rms_ms": active.rms_error}
            if interference is not None:
                entry["interference"] = {
                    "alpha_sch_ms": interference.alpha_sch_ms,
                    "beta_sch_ms": interference.beta_sch_ms,
                    "alpha_cache": interference.alpha_cache,
                    "alpha_f": interference.alpha_f,
                    "errors": interference.errors,
                }
            report["workloads"][name] = entry
            print(f"fitted {name}: active-time RMS {active.rms_error:.3g} ms")
        except (GpuPlannerError, ValueError, KeyError, json.JSONDecodeError) as exc:
            failures += 1
            print(f"error: {name}: {exc}", file=sys.stderr)
            report["diagnostics"].append(f"{name}: {exc}")

    problem_mod.write_json_atomic(out_dir / "fit_report.json", report)
    return 1 if failures else 0


def cmd_plan(args) -> int:
    try:
        problem = problem_mod.load_problem(args.problem)
        if args.gpu_type == "auto":
            plan = _plan_auto(problem, args.strategy)
        else:
            plan = _plan_with_type(problem, args.strategy, args.gpu_type)
    except GpuPlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print_plan(plan)
    if args.out:
        doc = problem_mod.plan_to_document(plan, problem.spec_map())
        problem_mod.write_json_atomic(args.out, doc)
        print(f"wrote {args.out}")
    if args.strategy == "igniter" and plan.diagnostics:
        return 1
    return 0


def _load_plan_doc(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GpuPlannerError(f"{path}: {exc}") from exc


def cmd_predict(args) -> int:
    try:
        problem = problem_mod.load_problem(args.problem)
        doc = _load_plan_doc(args.plan)
        per_gpu = problem_mod.allocations_from_document(doc)
        gpu_type = doc.get("gpu_type", problem.hardware[0].gpu_type)
        hw = problem.profile(gpu_type)
        specs = problem.spec_map()
        coefs = problem.coefs_by_type[gpu_type]

        header = (
            f"{'workload':<20}{'gpu':>4}{'r':>8}{'batch':>6}{'t_inf_ms':>12}"
            f"{'rps':>10}{'lat_ok':>8}{'thr_ok':>8}"
        )
        print(header)
        violations = 0
        for gpu_index, allocations in enumerate(per_gpu):
            for alloc in allocations:
                if alloc.workload not in specs:
                    raise GpuPlannerError(
                        f"plan references unknown workload {alloc.workload!r}"
                    )
            predicted = predict_gpu(allocations, specs, coefs, hw)
            for alloc in allocations:
                bd = predicted[alloc.workload]
                check = slo_check(bd, specs[alloc.workload])
                violations += 0 if check.ok else 1
                print(
                    f"{alloc.workload:<20}{gpu_index:>4}{alloc.r:>8.3f}"
                    f"{alloc.batch:>6}{bd.t_inf_ms:>12.4f}"
                    f"{bd.throughput_rps:>10.1f}"
                    f"{str(check.latency_ok):>8}{str(check.throughput_ok):>8}"
                )
        if violations:
            print(f"{violations} predicted SLO violation(s)")
    except OverAllocatedError as exc:
        print(f"error: over-allocated plan: {exc}", file=sys.stderr)
        return 1
    except GpuPlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_simulate(args) -> int:
    try:
        problem = problem_mod.load_problem(args.problem)
        doc = _load_plan_doc(args.plan)
        per_gpu = problem_mod.allocations_from_document(doc)
        gpu_type = doc.get("gpu_type", problem.hardware[0].gpu_type)
        hw = problem.profile(gpu_type)
        plan = Plan(
            strategy=doc.get("strategy", "unknown"),
            gpu_type=gpu_type,
            gpus=[
                GpuPlan(i, allocs, {}, 0.0) for i, allocs in enumerate(per_gpu)
            ],
            cost_per_hour=len(per_gpu) * hw.price_per_hour,
            per_workload_r_inter={},
        )
        cfg = SimConfig(
            duration_ms=args.duration_ms,
            warmup_ms=args.warmup_ms,
            arrival=args.arrival,
            seed=args.seed,
        )
        result = simulate(
            plan,
            problem.spec_map(),
            problem.coefs_by_type[gpu_type],
            hw,
            cfg,
            collect_trace=bool(args.trace),
        )
        if args.trace:
            report, trace = result
            write_trace_csv(args.trace, trace)
        else:
            report = result

        print(
            f"{'workload':<20}{'offered':>10}{'achieved':>10}{'p50_ms':>10}"
            f"{'p99_ms':>10}{'maxq':>6}{'violation':>10}"
        )
        for w in report.workloads:
            print(
                f"{w.workload:<20}{w.offered_rps:>10.1f}{w.achieved_rps:>10.1f}"
                f"{w.p50_ms:>10.3f}{w.p99_ms:>10.3f}{w.max_queue_depth:>6}"
                f"{str(w.violation):>10}"
            )
        if args.out:
            problem_mod.write_json_atomic(
                args.out, problem_mod.sim_report_to_document(report)
            )
            print(f"wrote {args.out}")
        return 1 if report.violations else 0
    except GpuPlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cmd_compare(args) -> int:
    try:
        problem = problem_mod.load_problem(args.problem)
    except GpuPlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    rows = []
    for strategy in STRATEGIES:
        try:
            plan = _plan_auto(problem, strategy)
            rows.append(
                {
                    "strategy": strategy,
                    "gpu_type": plan.gpu_type,
                    "gpus": len(plan.gpus),
                    "cost_per_hour": plan.cost_per_hour,
                    "violations": len(plan.diagnostics),
                }
            )
        except GpuPlannerError as exc:
            rows.append({"strategy": strategy, "error": str(exc)})

    budget = oracle.OracleBudget()
    if len(problem.specs) <= budget.max_workloads:
        best = None
        last_error: Exception | None = GpuPlannerError("no hardware")
        for hw in problem.hardware:
            try:
                candidate = oracle.exhaustive_plan(
                    problem.workload_pairs(hw.gpu_type),
                    hw,
                    budget=budget,
                    b_max=problem.b_max,
                )
            except GpuPlannerError as exc:
                last_error = exc
                continue
            if best is None or candidate.cost_per_hour < best.cost_per_hour:
                best = candidate
        if best is not None:
            rows.append(
                {
                    "strategy": "oracle",
                    "gpu_type": best.gpu_type,
                    "gpus": len(best.gpus),
                    "cost_per_hour": best.cost_per_hour,
                    "violations": 0,
                }
            )
        else:
            rows.append({"strategy": "oracle", "error": str(last_error)})

    print(
        f"{'strategy':<10}{'gpu_type':<12}{'gpus':>6}{'cost_per_hour':>15}"
        f"{'violations':>12}"
    )
    for row in rows:
        if "error" in row:
            print(f"{row['strategy']:<10}error: {row['error']}")
        else:
            print(
                f"{row['strategy']:<10}{row['gpu_type']:<12}{row['gpus']:>6}"
                f"{row['cost_per_hour']:>15.2f}{row['violations']:>12}"
            )
    if args.out:
        problem_mod.write_json_atomic(args.out, {"rows": rows})
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpuplanner",
        description="SLO-aware GPU provisioning for co-located inference workloads",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit model coefficients from sample CSVs")
    p_fit.add_argument("--samples-dir", required=True)
    p_fit.add_argument("--out", required=True, help="output directory")
    p_fit.set_defaults(fn=cmd_fit)

    p_plan = sub.add_parser("plan", help="compute a provisioning plan")
    p_plan.add_argument("problem")
    p_plan.add_argument("--strategy", choices=STRATEGIES, default="igniter")
    p_plan.add_argument("--gpu-type", default="auto")
    p_plan.add_argument("--out", help="write the plan document here")
    p_plan.set_defaults(fn=cmd_plan)

    p_pred = sub.add_parser("predict", help="re-evaluate a plan through the model")
    p_pred.add_argument("problem")
    p_pred.add_argument("plan")
    p_pred.set_defaults(fn=cmd_predict)

    p_sim = sub.add_parser("simulate", help="request-level replay of a plan")
    p_sim.add_argument("problem")
    p_sim.add_argument("plan")
    p_sim.add_argument("--duration-ms", type=float, default=30000.0)
    p_sim.add_argument("--warmup-ms", type=float, default=0.0)
    p_sim.add_argument("--arrival", choices=("constant", "poisson"), default="constant")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", help="write the report document here")
    p_sim.add_argument("--trace", help="write a per-request trace CSV here")
    p_sim.set_defaults(fn=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="compare strategies on one problem")
    p_cmp.add_argument("problem")
    p_cmp.add_argument("--out", help="write the comparison document here")
    p_cmp.set_defaults(fn=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
