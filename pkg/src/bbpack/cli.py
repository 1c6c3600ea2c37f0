"""Command-line front end.

Subcommands mirror the library surface: ``generate`` and ``solve`` work on
single instance files, ``census`` checks the node-count bound for one
instance, and ``scaling`` / ``slabs`` / ``arrangement`` drive full sweeps
from config files (flags override file values).

Exit codes: 0 success, 1 a checked bound or consistency assertion failed,
2 usage errors and refused over-cap enumerations.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bb as _bb
from . import harness as _harness
from . import oracle as _oracle
from .instance import generate as _generate
from .instance import load as _load
from .instance import save as _save

USAGE_EXIT = 2
ASSERTION_EXIT = 1


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("-m", type=int, dest="m")
    parser.add_argument("--beta", help="comma-separated, one value per row")
    parser.add_argument("--n-list", dest="n_list", help="comma-separated sizes")
    parser.add_argument("--replicas", type=int)
    parser.add_argument("--base-seed", type=int, dest="base_seed")
    parser.add_argument("--var-rule", dest="var_rule", choices=_bb.VAR_RULES)
    parser.add_argument("--node-rule", dest="node_rule", choices=_bb.NODE_RULES)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--directions", type=int)
    parser.add_argument("--widths", type=int)
    parser.add_argument("--census-cap", type=int, dest="census_cap")
    parser.add_argument("--rows-out", dest="rows_out")
    parser.add_argument("--json-out", dest="json_out")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbpack")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random instance file")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--beta", required=True, help="comma-separated, one value per row")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", help="output path (default stdout)")

    p = sub.add_parser("solve", help="solve one instance file to optimality")
    p.add_argument("instance")
    p.add_argument("--var-rule", dest="var_rule", default="first", choices=_bb.VAR_RULES)
    p.add_argument("--node-rule", dest="node_rule", default="best-bound",
                   choices=_bb.NODE_RULES)
    p.add_argument("--seed", type=int, default=0, help="variable-rule seed")
    p.add_argument("--budget", type=int, default=_bb.DEFAULT_NODE_BUDGET)
    p.add_argument("--tree-dump", dest="tree_dump", help="write the node table here")

    p = sub.add_parser("census", help="solve plus full good-solution census")
    p.add_argument("instance")
    p.add_argument("--cap", type=int, default=_oracle.CENSUS_CAP)
    p.add_argument("--var-rule", dest="var_rule", default="first", choices=_bb.VAR_RULES)
    p.add_argument("--seed", type=int, default=0)

    for kind in ("scaling", "slabs", "arrangement"):
        p = sub.add_parser(kind, help=f"run a {kind} sweep")
        _experiment_flags(p)

    return parser


def _config_from_args(kind: str, args: argparse.Namespace) -> _harness.ExperimentConfig:
    mapping: dict = {}
    if args.config:
        mapping.update(_harness.parse_config_file(args.config))
    for key in ("m", "beta", "n_list", "replicas", "base_seed", "var_rule",
                "node_rule", "workers", "trials", "directions", "widths",
                "census_cap", "rows_out", "json_out"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value if isinstance(value, (int, str)) else str(value)
    mapping["kind"] = kind
    return _harness.config_from_mapping(mapping)


def _cmd_generate(args) -> int:
    beta = [float(v) for v in args.beta.split(",") if v]
    inst = _generate(args.m, args.n, beta, args.seed)
    _save(inst, args.output if args.output else sys.stdout)
    return 0


def _cmd_solve(args) -> int:
    inst = _load(args.instance)
    res = _bb.solve(inst, var_rule=args.var_rule, node_rule=args.node_rule,
                    seed=args.seed, node_budget=args.budget)
    if args.tree_dump:
        with open(args.tree_dump, "w", encoding="ascii") as fh:
            res.dump_tree(fh)
    json.dump(_harness.solve_result_payload(res), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return ASSERTION_EXIT if res.budget_exhausted else 0


def _cmd_census(args) -> int:
    inst = _load(args.instance)
    res = _bb.solve(inst, var_rule=args.var_rule, seed=args.seed)
    report = _oracle.good_set(inst, cap=args.cap)
    report = _oracle.verify_tree_bound(inst, res, census=report)
    assoc = _oracle.verify_branch_association(inst, res, census=report)
    payload = json.loads(report.to_json())
    payload["association_ok"] = assoc
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0 if (report.bound_satisfied and assoc) else ASSERTION_EXIT


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "census":
            return _cmd_census(args)
        config = _config_from_args(args.command, args)
        outcome = _harness.run(config)
        summary = {"kind": outcome.kind, "ok": outcome.ok,
                   "rows": len(outcome.rows), "aggregates": outcome.aggregates}
        for key in ("rows_path", "json_path", "timings_path"):
            if getattr(outcome, key):
                summary[key] = getattr(outcome, key)
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return 0 if outcome.ok else ASSERTION_EXIT
    except _bb.BbConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ASSERTION_EXIT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main(argv=None))
