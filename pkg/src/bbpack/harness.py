"""Reproducible experiment sweeps over random instances.

A run is fully described by an :class:`ExperimentConfig` (buildable from a
flat ``key=value`` config file). Each (n, replica) cell generates its
instance from ``derive_seed(base_seed, n, replica)``, so any row can be
regenerated in isolation. Row CSVs and aggregate JSONs are deterministic
byte for byte given the config; wall-clock timings are written to a separate
sidecar precisely because they can never be. Replicas are independent and
may be computed by a process pool; rows are always written in (n, replica)
order regardless of completion order.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bb as _bb
from . import geometry as _geo
from . import oracle as _oracle
from .instance import generate, load, mix64
from . import lp as _lp

SCHEMA_VERSION = "v1"


def derive_seed(base_seed: int, n: int, replica: int) -> int:
    """Per-cell seed: base_seed xor a stable 64-bit hash of (n, replica)."""
    return (int(base_seed) ^ mix64((int(n) << 32) ^ int(replica))) & ((1 << 64) - 1)


@dataclass
class ExperimentConfig:
    """Flat description of one experiment; the unit of reproducibility."""

    kind: str
    m: int = 1
    beta: tuple = (0.25,)
    n_list: tuple = (50, 100, 200, 400)
    replicas: int = 20
    base_seed: int = 1
    var_rule: str = "first"
    node_rule: str = "best-bound"
    node_budget: int = _bb.DEFAULT_NODE_BUDGET
    ip_cap: int = _oracle.IP_CAP
    census_cap: int = _oracle.CENSUS_CAP
    trials: int = 10_000     # arrangement sampling draws
    directions: int = 10     # slab grid: directions x widths per instance
    widths: int = 5
    workers: int = 1
    seed: int = 0            # variable-rule seed (random rule)
    instance_path: str | None = None
    rows_out: str | None = None
    json_out: str | None = None

    KINDS = ("solve", "census", "scaling", "slabs", "arrangement")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; one of {self.KINDS}")
        if np.isscalar(self.beta):
            self.beta = (float(self.beta),)
        self.beta = tuple(float(v) for v in self.beta)
        self.n_list = tuple(int(v) for v in self.n_list)
        if len(self.beta) != self.m:
            raise ValueError(
                f"beta has {len(self.beta)} entries, expected one per row (m={self.m})"
            )
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def to_mapping(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(_fmt_num(x) for x in v)
            out[f.name] = v
        return out


def _fmt_num(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


_TUPLE_INT_FIELDS = {"n_list"}
_TUPLE_FLOAT_FIELDS = {"beta"}


def parse_config_file(path) -> dict:
    """Read a flat ``key=value`` file (one pair per line, ``#`` comments)."""
    mapping = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build a config from string values, coercing per-field types."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    kwargs = {}
    for key, value in mapping.items():
        if key not in fields:
            known = ", ".join(sorted(fields))
            raise ValueError(f"unknown config key {key!r} (known: {known})")
        if not isinstance(value, str):
            kwargs[key] = value
            continue
        if key in _TUPLE_INT_FIELDS:
            kwargs[key] = tuple(int(v) for v in value.split(",") if v)
        elif key in _TUPLE_FLOAT_FIELDS:
            kwargs[key] = tuple(float(v) for v in value.split(",") if v)
        elif key in ("instance_path", "rows_out", "json_out", "kind", "var_rule", "node_rule"):
            kwargs[key] = value
        else:
            kwargs[key] = int(value)
    return ExperimentConfig(**kwargs)


@dataclass
class RunOutcome:
    """What a sweep produced: rows, aggregates, and whether every hard
    assertion (tree bound, association, budget) held."""

    kind: str
    ok: bool
    rows: list
    aggregates: dict
    rows_path: str | None = None
    json_path: str | None = None
    timings_path: str | None = None


# Keys that never influence row content; kept out of the rows header so the
# same sweep written to two locations stays byte-identical.
_NON_SEMANTIC_KEYS = ("rows_out", "json_out", "workers")


def _write_rows(path, kind: str, config: ExperimentConfig, header: list, rows: list) -> None:
    lines = [f"# schema=bbpack/{kind}-rows/{SCHEMA_VERSION}"]
    cfg = " ".join(f"{k}={v}" for k, v in config.to_mapping().items()
                   if v is not None and k not in _NON_SEMANTIC_KEYS)
    lines.append(f"# config: {cfg}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt_num(row[h]) for h in header))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_json(path, kind: str, config: ExperimentConfig, aggregates: dict) -> None:
    payload = {
        "schema": f"bbpack/{kind}-aggregates/{SCHEMA_VERSION}",
        "config": config.to_mapping(),
        "aggregates": aggregates,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                          encoding="ascii")


def _scaling_cell(args):
    m, beta, n, replica, base_seed, var_rule, node_rule, rule_seed, budget = args
    seed = derive_seed(base_seed, n, replica)
    inst = generate(m, n, beta, seed)
    t0 = time.perf_counter()
    res = _bb.solve(inst, var_rule=var_rule, node_rule=node_rule, seed=rule_seed,
                    node_budget=budget, keep_solutions=False)
    elapsed = time.perf_counter() - t0
    lp_opt = res.tree[0].lp.value
    row = {
        "n": n,
        "replica": replica,
        "seed": seed,
        "node_count": res.node_count,
        "branched_count": res.branched_count,
        "lp_opt": lp_opt,
        "ip_opt": res.opt_value,
        "ip_gap": lp_opt - res.opt_value,
    }
    return row, elapsed, res.budget_exhausted


def _census_cell(args):
    m, beta, n, replica, base_seed, var_rule, node_rule, rule_seed, budget, census_cap = args
    seed = derive_seed(base_seed, n, replica)
    inst = generate(m, n, beta, seed)
    res = _bb.solve(inst, var_rule=var_rule, node_rule=node_rule, seed=rule_seed,
                    node_budget=budget, keep_solutions=True)
    report = _oracle.good_set(inst, cap=census_cap)
    report = _oracle.verify_tree_bound(inst, res, census=report)
    assoc = _oracle.verify_branch_association(inst, res, census=report)
    row = {
        "n": n,
        "replica": replica,
        "seed": seed,
        "node_count": res.node_count,
        "branched_count": res.branched_count,
        "ip_opt": report.ip_opt,
        "lp_opt": report.lp_opt,
        "ip_gap": report.ip_gap,
        "good_count": report.good_count,
        "theorem_bound": report.theorem_bound,
        "bound_ok": int(bool(report.bound_satisfied)),
        "association_ok": int(assoc),
    }
    return row, 0.0, not (report.bound_satisfied and assoc)


def _map_cells(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def _run_scaling(config: ExperimentConfig) -> RunOutcome:
    tasks = [
        (config.m, config.beta, n, r, config.base_seed, config.var_rule,
         config.node_rule, config.seed, config.node_budget)
        for n in config.n_list
        for r in range(config.replicas)
    ]
    results = _map_cells(_scaling_cell, tasks, config.workers)
    rows = [row for row, _, _ in results]
    timings = [el for _, el, _ in results]
    exhausted = any(flag for _, _, flag in results)

    per_n = {}
    for n in config.n_list:
        sel = [row for row in rows if row["n"] == n]
        nodes = np.array([row["node_count"] for row in sel], dtype=float)
        gaps = np.array([row["ip_gap"] for row in sel], dtype=float)
        scaled = gaps * n / math.log(n) ** 2
        per_n[str(n)] = {
            "median_nodes": float(np.median(nodes)),
            "median_ip_gap": float(np.median(gaps)),
            "median_gap_scaled": float(np.median(scaled)),
        }
    ln_n = np.log(np.array(config.n_list, dtype=float))
    ln_nodes = np.log(np.array([per_n[str(n)]["median_nodes"] for n in config.n_list]))
    slope = float(np.polyfit(ln_n, ln_nodes, 1)[0]) if len(config.n_list) > 1 else 0.0
    scaled_medians = [per_n[str(n)]["median_gap_scaled"] for n in config.n_list]
    ratio = (max(scaled_medians) / min(scaled_medians)) if min(scaled_medians) > 0 else float("inf")
    aggregates = {
        "per_n": per_n,
        "node_growth_slope": slope,
        "gap_scaled_ratio": ratio,
        "budget_exhausted_any": exhausted,
    }
    header = ["n", "replica", "seed", "node_count", "branched_count",
              "lp_opt", "ip_opt", "ip_gap"]
    outcome = RunOutcome(kind="scaling", ok=not exhausted, rows=rows, aggregates=aggregates)
    _finalize(outcome, config, header, timings)
    return outcome


def _run_census(config: ExperimentConfig) -> RunOutcome:
    tasks = [
        (config.m, config.beta, n, r, config.base_seed, config.var_rule,
         config.node_rule, config.seed, config.node_budget, config.census_cap)
        for n in config.n_list
        for r in range(config.replicas)
    ]
    results = _map_cells(_census_cell, tasks, config.workers)
    rows = [row for row, _, _ in results]
    failures = sum(1 for _, _, bad in results if bad)
    aggregates = {
        "runs": len(rows),
        "bound_violations": sum(1 for row in rows if not row["bound_ok"]),
        "association_failures": sum(1 for row in rows if not row["association_ok"]),
        "max_good_count": max(row["good_count"] for row in rows),
        "max_nodes": max(row["node_count"] for row in rows),
    }
    header = ["n", "replica", "seed", "node_count", "branched_count", "ip_opt",
              "lp_opt", "ip_gap", "good_count", "theorem_bound", "bound_ok",
              "association_ok"]
    outcome = RunOutcome(kind="census", ok=failures == 0, rows=rows, aggregates=aggregates)
    _finalize(outcome, config, header, None)
    return outcome


def _run_slabs(config: ExperimentConfig) -> RunOutcome:
    rows = []
    violated_instances = 0
    k = config.m + 1
    for replica in range(config.replicas):
        n = config.n_list[0]
        seed = derive_seed(config.base_seed, n, replica)
        inst = generate(config.m, n, config.beta, seed)
        pts = _geo.column_points(inst)
        rng = np.random.default_rng(seed ^ 0x5150)
        base = math.log(n) / n
        bad = False
        for di in range(config.directions):
            g = rng.standard_normal(k)
            u = g / np.linalg.norm(g)
            for wi in range(config.widths):
                w = base * (2.0 ** wi)
                rep = _geo.slab_count(pts, u, w)
                rows.append({
                    "replica": replica,
                    "seed": seed,
                    "n": n,
                    "k": k,
                    "direction": di,
                    "width_level": wi,
                    "w": w,
                    "count": rep.count,
                    "bound": rep.bound,
                    "within_bound": int(rep.within_bound),
                })
                if not rep.within_bound:
                    bad = True
        if bad:
            violated_instances += 1
    frac = violated_instances / config.replicas
    aggregates = {
        "instances": config.replicas,
        "violated_instances": violated_instances,
        "violation_fraction": frac,
        "grid_per_instance": config.directions * config.widths,
    }
    header = ["replica", "seed", "n", "k", "direction", "width_level", "w",
              "count", "bound", "within_bound"]
    outcome = RunOutcome(kind="slabs", ok=True, rows=rows, aggregates=aggregates)
    _finalize(outcome, config, header, None)
    return outcome


def _run_arrangement(config: ExperimentConfig) -> RunOutcome:
    if config.m != 1:
        raise ValueError("arrangement experiments need m == 1")
    rows = []
    all_ok = True
    for n in config.n_list:
        seed = derive_seed(config.base_seed, n, 0)
        inst = generate(1, n, config.beta, seed)
        cells = _geo.enumerate_cells_1d(inst)
        keys = {cell.assignment.tobytes() for cell in cells}
        sampled = _geo.sample_cells(inst, config.trials, seed=seed ^ 0xA11CE)
        coverage_ok = all(p.assignment.tobytes() in keys for p in sampled)
        limit_ok = len(cells) <= 2 * n + 1
        rows.append({
            "n": n,
            "seed": seed,
            "cell_count": len(cells),
            "cell_limit": 2 * n + 1,
            "sample_trials": config.trials,
            "sampled_cells": len(sampled),
            "coverage_ok": int(coverage_ok),
            "limit_ok": int(limit_ok),
        })
        all_ok = all_ok and coverage_ok and limit_ok
    aggregates = {
        "all_within_limit": all(bool(r["limit_ok"]) for r in rows),
        "all_samples_covered": all(bool(r["coverage_ok"]) for r in rows),
    }
    header = ["n", "seed", "cell_count", "cell_limit", "sample_trials",
              "sampled_cells", "coverage_ok", "limit_ok"]
    outcome = RunOutcome(kind="arrangement", ok=all_ok, rows=rows, aggregates=aggregates)
    _finalize(outcome, config, header, None)
    return outcome


def _run_solve(config: ExperimentConfig) -> RunOutcome:
    if not config.instance_path:
        raise ValueError("solve experiments need instance_path")
    inst = load(config.instance_path)
    res = _bb.solve(inst, var_rule=config.var_rule, node_rule=config.node_rule,
                    seed=config.seed, node_budget=config.node_budget)
    aggregates = solve_result_payload(res)
    outcome = RunOutcome(kind="solve", ok=not res.budget_exhausted, rows=[],
                         aggregates=aggregates)
    if config.json_out:
        _write_json(config.json_out, "solve", config, aggregates)
        outcome.json_path = config.json_out
    return outcome


def solve_result_payload(res) -> dict:
    """JSON-ready summary of one branch-and-bound run."""
    lp_opt = res.tree[0].lp.value if res.tree[0].lp.status == "optimal" else None
    return {
        "opt_value": res.opt_value,
        "opt_solution": None if res.opt_solution is None else [int(v) for v in res.opt_solution],
        "lp_opt": lp_opt,
        "ip_gap": None if (res.opt_value is None or lp_opt is None) else lp_opt - res.opt_value,
        "node_count": res.node_count,
        "branched_count": res.branched_count,
        "prune_counts": dict(res.prune_counts),
        "incumbent_trace": [[int(i), v] for i, v in res.incumbent_trace],
        "budget_exhausted": res.budget_exhausted,
        "var_rule": res.var_rule,
        "node_rule": res.node_rule,
    }


def _finalize(outcome: RunOutcome, config: ExperimentConfig, header: list, timings) -> None:
    if config.rows_out:
        _write_rows(config.rows_out, outcome.kind, config, header, outcome.rows)
        outcome.rows_path = config.rows_out
        if timings is not None:
            tpath = config.rows_out + ".timings"
            lines = ["# wall-clock seconds per row; not covered by determinism",
                     "index,seconds"]
            lines += [f"{i},{format(t, '.6f')}" for i, t in enumerate(timings)]
            Path(tpath).write_text("\n".join(lines) + "\n", encoding="ascii")
            outcome.timings_path = tpath
    if config.json_out:
        _write_json(config.json_out, outcome.kind, config, outcome.aggregates)
        outcome.json_path = config.json_out


_RUNNERS = {
    "scaling": _run_scaling,
    "census": _run_census,
    "slabs": _run_slabs,
    "arrangement": _run_arrangement,
    "solve": _run_solve,
}


def run(config: ExperimentConfig) -> RunOutcome:
    """Execute one experiment; see :class:`RunOutcome` for what comes back."""
    return _RUNNERS[config.kind](config)
