"""Experiment runner over (problem, method, seed) cells, persistence, reporting.

Every cell writes its own directory (out/<problem>/<method>[-tbm]/seed<k>/)
with a deterministic trace stream, the evaluation records, the final fronts
and a summary. Comparisons run all methods under shared seeds in full-capacity
mode, then optionally re-run the baselines under the cost budget reached by
the decoupled optimizer (time-budget mode). Reports aggregate medians and
interquartile ranges across seeds.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .baselines import pal_run, rs_run, sobo_run
from .costs import CostModel
from .metrics import ComparisonSet, DiversityGrid, contribution, diversity, reference_point
from .optimizer import RunResult, SCHEMA_VERSION, flexibo_run
from .pareto import ParetoFront, front_of_points
from .problems import SyntheticProblem, get_problem
from .space import ObjectiveSpec

METHODS = ("flexibo-gp", "flexibo-rf", "pal", "rs", "sobo-1", "sobo-2")


class BenchError(RuntimeError):
    """Bad manifest or unusable results on disk."""


@dataclass(frozen=True)
class RunManifest:
    """One experiment: a method on a problem over a set of seeds."""

    problem: str
    method: str
    T: int = 200
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    mode: str = "fcm"
    init_k: int = 15
    delta: float = 0.05
    epsilon_frac: float = 0.00004
    phi: float = 1.0
    theta: tuple[float, float] | None = None
    noise_std: float | None = None
    surrogate: str = "gp"
    expensive_cap: int | None = None
    budget: float | None = None
    budget_from: str | None = None
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise BenchError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.mode not in ("fcm", "tbm"):
            raise BenchError(f"mode must be 'fcm' or 'tbm', got {self.mode!r}")
        if self.mode == "tbm" and self.budget is None and self.budget_from is None:
            raise BenchError("tbm mode needs a budget or a budget-from reference run")


def _cost_model(problem: SyntheticProblem, manifest: RunManifest) -> CostModel:
    theta = manifest.theta if manifest.theta is not None else problem.theta
    return CostModel(theta=theta, phi=manifest.phi)


def _noise(problem: SyntheticProblem, manifest: RunManifest) -> tuple[float, float]:
    if manifest.noise_std is None:
        return problem.noise_std
    return (manifest.noise_std, manifest.noise_std)


def derive_expensive_cap(
    problem: SyntheticProblem, manifest: RunManifest, seed: int, costs: CostModel
) -> int:
    """Expensive-measurement cap for random search: the count a paired
    decoupled-GP run with the same seed would spend."""
    paired = flexibo_run(
        problem.space,
        problem.objectives,
        problem.oracle(seed, _noise(problem, manifest)),
        costs,
        surrogate="gp",
        T=manifest.T,
        seed=seed,
        init_k=manifest.init_k,
        delta=manifest.delta,
        volume_origin=problem.reference_point(),
    )
    expensive = costs.most_expensive
    return sum(1 for r in paired.records if r.objective == expensive)


def execute_run(
    manifest: RunManifest,
    seed: int,
    cost_budget: float | None = None,
    expensive_cap: int | None = None,
    checkpoint_dir: str | Path | None = None,
) -> RunResult:
    """Run one (problem, method, seed) cell in memory."""
    problem = get_problem(manifest.problem)
    costs = _cost_model(problem, manifest)
    noise = _noise(problem, manifest)
    oracle = problem.oracle(seed, noise)
    hv_reference = problem.reference_point()
    budget = cost_budget if cost_budget is not None else manifest.budget
    T = manifest.T
    if budget is not None:
        # Time-budget runs halt on cost; give cheap-heavy methods enough
        # iterations for the budget to bind (every iteration costs >= 1).
        T = max(T, int(budget) + 2)
    common = dict(
        T=T,
        seed=seed,
        cost_budget=budget,
        hv_reference=hv_reference,
        checkpoint_dir=checkpoint_dir,
    )
    if manifest.method in ("flexibo-gp", "flexibo-rf"):
        return flexibo_run(
            problem.space,
            problem.objectives,
            oracle,
            costs,
            surrogate=manifest.method.split("-")[1],
            init_k=manifest.init_k,
            delta=manifest.delta,
            volume_origin=hv_reference,
            **common,
        )
    if manifest.method == "pal":
        return pal_run(
            problem.space,
            problem.objectives,
            oracle,
            costs,
            surrogate=manifest.surrogate,
            epsilon_frac=manifest.epsilon_frac,
            init_k=manifest.init_k,
            delta=manifest.delta,
            volume_origin=hv_reference,
            **common,
        )
    if manifest.method == "rs":
        cap = expensive_cap if expensive_cap is not None else manifest.expensive_cap
        if cap is None:
            cap = derive_expensive_cap(problem, manifest, seed, costs)
        return rs_run(
            problem.space, problem.objectives, oracle, costs, expensive_cap=cap, **common
        )
    target = int(manifest.method.split("-")[1])
    return sobo_run(
        problem.space,
        problem.objectives,
        oracle,
        costs,
        target=target,
        init_k=manifest.init_k,
        **common,
    )


def _json_line(obj: dict[str, Any]) -> str:
    return json.dumps(obj, allow_nan=True)


def _front_rows(front: ParetoFront | None, objectives) -> list[list[float]] | None:
    """Serialize a front as (flat_id, o1, o2) rows in reported units."""
    if front is None:
        return None
    rows = []
    for fid, o1, o2 in front.as_rows():
        rows.append(
            [fid, objectives[0].to_reported(o1), objectives[1].to_reported(o2)]
        )
    return rows


def persist_run(
    result: RunResult,
    directory: str | Path,
    manifest: RunManifest,
    seed: int,
    wall_time: float,
) -> dict[str, Any]:
    """Write trace.jsonl, records.jsonl, fronts.json and summary.json for one cell."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "trace.jsonl", "w") as fh:
        for row in result.trace:
            fh.write(_json_line(row) + "\n")
    with open(directory / "records.jsonl", "w") as fh:
        for r in result.records:
            fh.write(
                _json_line(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "flat_id": r.flat_id,
                        "objective": r.objective,
                        "value": r.value,
                        "psi": r.psi,
                        "t": r.t,
                        "wall_ts": r.wall_ts,
                    }
                )
                + "\n"
            )
    fronts = {
        "schema_version": SCHEMA_VERSION,
        "units": "reported",
        "actual": _front_rows(result.front_actual, result.objectives),
        "pessimistic": _front_rows(
            result.region.p_pess if result.region else None, result.objectives
        ),
        "optimistic": _front_rows(
            result.region.p_opt if result.region else None, result.objectives
        ),
    }
    (directory / "fronts.json").write_text(json.dumps(fronts, indent=2))
    c1 = sum(1 for r in result.records if r.objective == 1)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "problem": manifest.problem,
        "method": manifest.method,
        "seed": seed,
        "mode": manifest.mode,
        "T": manifest.T,
        "iterations_run": result.iterations_run,
        "termination": result.termination,
        "total_cost": result.total_cost,
        "count_objective_1": c1,
        "count_objective_2": len(result.records) - c1,
        "final_volume": None if result.region is None else result.region.volume,
        "final_hv": result.trace[-1]["hv_actual"] if result.trace else None,
        "best_point": result.best_point,
        "converged": result.converged,
        "objectives": [
            {"name": o.name, "direction": o.direction, "unit": o.unit}
            for o in result.objectives
        ],
        "wall_time": wall_time,
    }
    (directory / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def cell_dir(out_root: str | Path, problem: str, method: str, mode: str, seed: int) -> Path:
    suffix = "" if mode == "fcm" else "-tbm"
    return Path(out_root) / problem / f"{method}{suffix}" / f"seed{seed}"


def _run_cell(args: dict[str, Any]) -> dict[str, Any]:
    """Worker entry: run one cell and persist it (picklable args only)."""
    manifest = RunManifest(**args["manifest"])
    seed = args["seed"]
    directory = Path(args["directory"])
    start = time.time()
    result = execute_run(
        manifest,
        seed,
        cost_budget=args.get("cost_budget"),
        expensive_cap=args.get("expensive_cap"),
        checkpoint_dir=directory,
    )
    return persist_run(result, directory, manifest, seed, wall_time=time.time() - start)


def _manifest_dict(manifest: RunManifest) -> dict[str, Any]:
    return {
        "problem": manifest.problem,
        "method": manifest.method,
        "T": manifest.T,
        "seeds": manifest.seeds,
        "mode": manifest.mode,
        "init_k": manifest.init_k,
        "delta": manifest.delta,
        "epsilon_frac": manifest.epsilon_frac,
        "phi": manifest.phi,
        "theta": manifest.theta,
        "noise_std": manifest.noise_std,
        "surrogate": manifest.surrogate,
        "expensive_cap": manifest.expensive_cap,
        "budget": manifest.budget,
        "budget_from": manifest.budget_from,
        "out_dir": manifest.out_dir,
    }


def _pool_map(jobs: int, tasks: list[dict[str, Any]]) -> list[dict[str, Any]]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, tasks))


def run_experiment(manifest: RunManifest, jobs: int = 1) -> list[dict[str, Any]]:
    """Execute method x seeds, persist every cell, and write an aggregate summary."""
    if manifest.out_dir is None:
        raise BenchError("run_experiment needs an output directory")
    budget = resolve_budget(manifest) if manifest.mode == "tbm" else None
    tasks = []
    for seed in manifest.seeds:
        directory = cell_dir(manifest.out_dir, manifest.problem, manifest.method, manifest.mode, seed)
        tasks.append(
            {
                "manifest": _manifest_dict(manifest),
                "seed": seed,
                "directory": str(directory),
                "cost_budget": budget,
                "expensive_cap": manifest.expensive_cap,
            }
        )
    summaries = _pool_map(jobs, tasks)
    _write_aggregate(manifest.out_dir, manifest.problem, manifest.method, manifest.mode, summaries)
    return summaries


def resolve_budget(manifest: RunManifest) -> float:
    """Cost budget for a time-budget run: explicit, or a referenced run's total."""
    if manifest.budget is not None:
        return manifest.budget
    path = Path(manifest.budget_from)
    if path.is_dir():
        path = path / "summary.json"
    if not path.exists():
        raise BenchError(f"budget reference {manifest.budget_from!r} has no summary.json")
    return float(json.loads(path.read_text())["total_cost"])


def _write_aggregate(
    out_dir: str | Path, problem: str, method: str, mode: str, summaries: list[dict[str, Any]]
) -> None:
    costs = [s["total_cost"] for s in summaries]
    hvs = [s["final_hv"] for s in summaries if s["final_hv"] is not None]
    agg = {
        "schema_version": SCHEMA_VERSION,
        "problem": problem,
        "method": method,
        "mode": mode,
        "seeds": [s["seed"] for s in summaries],
        "median_total_cost": float(np.median(costs)),
        "iqr_total_cost": _iqr(costs),
        "median_final_hv": float(np.median(hvs)) if hvs else None,
    }
    suffix = "" if mode == "fcm" else "-tbm"
    directory = Path(out_dir) / problem / f"{method}{suffix}"
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "aggregate.json").write_text(json.dumps(agg, indent=2))


def _iqr(values: Iterable[float]) -> float:
    arr = np.asarray(list(values), dtype=float)
    return float(np.percentile(arr, 75) - np.percentile(arr, 25))


@dataclass
class CompareOutputs:
    out_root: Path
    fcm_summaries: list[dict[str, Any]] = field(default_factory=list)
    tbm_summaries: list[dict[str, Any]] = field(default_factory=list)


def run_compare(
    base: RunManifest, methods: tuple[str, ...], jobs: int = 1, with_tbm: bool = True
) -> CompareOutputs:
    """Run several methods under shared seeds; add time-budget reruns when possible.

    Random search derives its expensive cap, and time-budget mode its budget,
    from the decoupled-GP run of the same seed, so those cells are staged
    after it. Time-budget reruns cover the coupled baselines only; decoupled
    runs already define the budget.
    """
    if len(set(methods)) != len(methods):
        raise BenchError(f"duplicate method names in {methods}")
    if len(methods) < 2:
        raise BenchError("compare needs at least two methods")
    for m in methods:
        if m not in METHODS:
            raise BenchError(f"unknown method {m!r}; choose from {METHODS}")
    if base.out_dir is None:
        raise BenchError("compare needs an output directory")
    out = CompareOutputs(out_root=Path(base.out_dir))

    phase1 = [m for m in methods if m != "rs"]
    ordered = sorted(phase1, key=lambda m: (m != "flexibo-gp",))  # flexibo-gp first
    for method in ordered:
        manifest = replace(base, method=method, mode="fcm")
        out.fcm_summaries.extend(run_experiment(manifest, jobs=jobs))

    # Per-seed anchors from the decoupled-GP cells, when available.
    anchor: dict[int, dict[str, Any]] = {}
    if "flexibo-gp" in methods:
        for seed in base.seeds:
            path = cell_dir(base.out_dir, base.problem, "flexibo-gp", "fcm", seed) / "summary.json"
            anchor[seed] = json.loads(path.read_text())

    if "rs" in methods:
        tasks = []
        for seed in base.seeds:
            cap = base.expensive_cap
            if cap is None and seed in anchor:
                expensive = _cost_model(get_problem(base.problem), base).most_expensive
                cap = anchor[seed][f"count_objective_{expensive}"]
            directory = cell_dir(base.out_dir, base.problem, "rs", "fcm", seed)
            tasks.append(
                {
                    "manifest": _manifest_dict(replace(base, method="rs", mode="fcm")),
                    "seed": seed,
                    "directory": str(directory),
                    "expensive_cap": cap,
                }
            )
        summaries = _pool_map(jobs, tasks)
        out.fcm_summaries.extend(summaries)
        _write_aggregate(base.out_dir, base.problem, "rs", "fcm", summaries)

    if with_tbm and anchor:
        tbm_methods = [m for m in methods if not m.startswith("flexibo")]
        for method in tbm_methods:
            tasks = []
            for seed in base.seeds:
                directory = cell_dir(base.out_dir, base.problem, method, "tbm", seed)
                cap = base.expensive_cap
                if cap is None and method == "rs":
                    expensive = _cost_model(get_problem(base.problem), base).most_expensive
                    cap = anchor[seed][f"count_objective_{expensive}"]
                budget = anchor[seed]["total_cost"]
                tasks.append(
                    {
                        "manifest": _manifest_dict(
                            replace(base, method=method, mode="tbm", budget=budget)
                        ),
                        "seed": seed,
                        "directory": str(directory),
                        "cost_budget": budget,
                        "expensive_cap": cap,
                    }
                )
            summaries = _pool_map(jobs, tasks)
            out.tbm_summaries.extend(summaries)
            _write_aggregate(base.out_dir, base.problem, method, "tbm", summaries)
    return out


# ---------------------------------------------------------------------------
# Reporting


def _load_cells(paths: list[str | Path]) -> list[dict[str, Any]]:
    """Find every persisted cell below the given paths."""
    cells = []
    for root in paths:
        root = Path(root)
        if (root / "summary.json").exists():
            candidates = [root]
        else:
            candidates = sorted(p.parent for p in root.rglob("summary.json"))
        for directory in candidates:
            summary_path = Path(directory) / "summary.json"
            summary = json.loads(summary_path.read_text())
            with open(Path(directory) / "trace.jsonl") as fh:
                trace = [json.loads(line) for line in fh if line.strip()]
            fronts = json.loads((Path(directory) / "fronts.json").read_text())
            cells.append({"summary": summary, "trace": trace, "fronts": fronts})
    if not cells:
        raise BenchError(f"no run results found under {paths}")
    problems = {c["summary"]["problem"] for c in cells}
    if len(problems) > 1:
        raise BenchError(f"mixed-problem inputs rejected: {sorted(problems)}")
    return cells


def _internal_front(front_rows: list[list[float]] | None, objectives: list[dict]) -> ParetoFront | None:
    if front_rows is None:
        return None
    specs = [ObjectiveSpec(o["name"], o["direction"], o.get("unit", "")) for o in objectives]
    if len(front_rows) == 0:
        return front_of_points(np.empty((0, 2)), np.empty(0, dtype=np.int64))
    owners = np.array([r[0] for r in front_rows], dtype=np.int64)
    values = np.array(
        [[specs[0].to_internal(r[1]), specs[1].to_internal(r[2])] for r in front_rows]
    )
    return front_of_points(values, owners)


def _quality_rows(cells: list[dict[str, Any]], mode: str, divisions: int) -> list[dict[str, Any]]:
    """Per-seed contribution/diversity of every method's fronts in one mode."""
    by_seed: dict[int, list[dict[str, Any]]] = {}
    for cell in cells:
        if cell["summary"]["mode"] != mode:
            continue
        by_seed.setdefault(cell["summary"]["seed"], []).append(cell)
    rows = []
    for seed, seed_cells in sorted(by_seed.items()):
        actual = {}
        extra = {}
        for cell in seed_cells:
            s = cell["summary"]
            objectives = s["objectives"]
            front = _internal_front(cell["fronts"]["actual"], objectives)
            if front is not None and len(front) > 0:
                actual[s["method"]] = (front, s)
            for kind in ("pessimistic", "optimistic"):
                f = _internal_front(cell["fronts"][kind], objectives)
                if f is not None and len(f) > 0 and s["method"].startswith("flexibo"):
                    extra[(s["method"], kind)] = (f, s)
        if not actual:
            continue
        # Every front that gets a row competes in the surrogate true front, so
        # contribution stays within [0, 1] for estimate fronts as well.
        competing = {m: f for m, (f, _) in actual.items()}
        competing.update({f"{m}:{kind}": f for (m, kind), (f, _) in extra.items()})
        cmp = ComparisonSet(fronts=competing, reference=reference_point(list(competing.values())))
        grid = DiversityGrid.from_front(cmp.surrogate_true, divisions=divisions)
        entries = [(m, "actual", f, s) for m, (f, s) in actual.items()]
        entries += [(m, kind, f, s) for (m, kind), (f, s) in extra.items()]
        for method, front_kind, front, s in sorted(entries, key=lambda e: (e[0], e[1])):
            rows.append(
                {
                    "method": method,
                    "problem": s["problem"],
                    "seed": seed,
                    "mode": mode.upper(),
                    "front": front_kind,
                    "contribution": contribution(front, cmp),
                    "diversity": diversity(front, grid),
                    "total_cost": s["total_cost"],
                    "wall_time": s["wall_time"],
                }
            )
    return rows


def _hv_series(cells: list[dict[str, Any]], mode: str) -> list[dict[str, Any]]:
    """Median and interquartile band of actual-front hypervolume per iteration."""
    grouped: dict[str, dict[int, dict[int, float]]] = {}
    for cell in cells:
        s = cell["summary"]
        if s["mode"] != mode:
            continue
        per_t = grouped.setdefault(s["method"], {}).setdefault(s["seed"], {})
        for row in cell["trace"]:
            if row["hv_actual"] is not None:
                per_t[row["t"]] = row["hv_actual"]  # last measurement of the iteration
    series = []
    for method, by_seed in sorted(grouped.items()):
        all_ts = sorted({t for seq in by_seed.values() for t in seq})
        for t in all_ts:
            vals = [seq[t] for seq in by_seed.values() if t in seq]
            series.append(
                {
                    "method": method,
                    "mode": mode.upper(),
                    "iteration": t,
                    "median": float(np.median(vals)),
                    "q25": float(np.percentile(vals, 25)),
                    "q75": float(np.percentile(vals, 75)),
                }
            )
    return series


def _cost_rows(cells: list[dict[str, Any]]) -> list[dict[str, Any]]:
    grouped: dict[tuple[str, str], list[dict[str, Any]]] = {}
    for cell in cells:
        s = cell["summary"]
        grouped.setdefault((s["method"], s["mode"]), []).append(s)
    rows = []
    for (method, mode), summaries in sorted(grouped.items()):
        rows.append(
            {
                "problem": summaries[0]["problem"],
                "method": method,
                "mode": mode.upper(),
                "seeds": len(summaries),
                "median_total_cost": float(np.median([s["total_cost"] for s in summaries])),
                "iqr_total_cost": _iqr([s["total_cost"] for s in summaries]),
                "median_count_objective_1": float(
                    np.median([s["count_objective_1"] for s in summaries])
                ),
                "median_count_objective_2": float(
                    np.median([s["count_objective_2"] for s in summaries])
                ),
                "median_wall_time": float(np.median([s["wall_time"] for s in summaries])),
            }
        )
    return rows


def _write_csv(path: Path, rows: list[dict[str, Any]]) -> None:
    import csv

    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


@dataclass
class ReportTables:
    cost: list[dict[str, Any]]
    quality_fcm: list[dict[str, Any]]
    quality_tbm: list[dict[str, Any]]
    hv_series: list[dict[str, Any]]


def report(paths: list[str | Path], out_dir: str | Path | None = None, divisions: int = 10) -> ReportTables:
    """Aggregate persisted runs into cost/quality tables and hypervolume series."""
    cells = _load_cells(paths)
    tables = ReportTables(
        cost=_cost_rows(cells),
        quality_fcm=_quality_rows(cells, "fcm", divisions),
        quality_tbm=_quality_rows(cells, "tbm", divisions),
        hv_series=_hv_series(cells, "fcm") + _hv_series(cells, "tbm"),
    )
    if out_dir is not None:
        out = Path(out_dir)
        _write_csv(out / "cost_table.csv", tables.cost)
        _write_csv(out / "quality_fcm.csv", tables.quality_fcm)
        _write_csv(out / "quality_tbm.csv", tables.quality_tbm)
        _write_csv(out / "hv_series.csv", tables.hv_series)
        with open(out / "metrics.jsonl", "w") as fh:
            for row in tables.quality_fcm + tables.quality_tbm:
                fh.write(json.dumps(row) + "\n")
    return tables
