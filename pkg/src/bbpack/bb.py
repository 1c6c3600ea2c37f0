"""Branch and bound for 0/1 packing programs.

The engine follows one fixed scheme: each node is a pair of disjoint index
sets fixing variables to 0 or 1, its relaxation is solved eagerly at
creation, and the next node to process is always an unpruned leaf of maximal
LP value (ties to the lowest id). A selected leaf is pruned when its
relaxation is integral (possibly improving the incumbent), infeasible, or no
better than the incumbent; otherwise a fractional variable is chosen by the
configured rule and two children are created with that variable fixed to 0
and to 1.

The search starts with no incumbent. Only integral leaves ever update it,
and ties keep the earlier solution. After a complete run the engine asserts
the facts the scheme guarantees: every branched node's LP value is at least
the final optimum (up to 1e-7), and the tree is binary with
``node_count == 2 * branched_count + 1``.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

import numpy as np

from . import lp as _lp
from .instance import PackingInstance
from .lp import FixedSets, LpSolution

VALUE_TOL = 1e-9   # incumbent pruning comparison
LEMMA_TOL = 1e-7   # post-run branched-value assertion
DEFAULT_NODE_BUDGET = 10_000_000

NODE_RULES = ("best-bound",)
VAR_RULES = ("first", "most-fractional", "random", "adversarial-replay")


class BbConsistencyError(RuntimeError):
    """A completed search violated an invariant the scheme guarantees."""


class ScriptError(ValueError):
    """An adversarial replay script does not fit the tree it is driving."""


@dataclass
class BbNode:
    id: int
    parent: int | None
    fixed: FixedSets
    lp: LpSolution
    status: str = "open"
    branch_var: int | None = None
    depth: int = 0
    children: tuple | None = None


@dataclass
class BbResult:
    opt_value: float | None
    opt_solution: np.ndarray | None
    tree: list
    node_count: int
    branched_count: int
    prune_counts: dict
    incumbent_trace: list
    branch_sequence: list
    budget_exhausted: bool
    var_rule: str
    node_rule: str

    def dump_tree(self, destination) -> None:
        """Write one line per node: id parent status branch_var lp_value depth.

        Missing parent/branch_var are written as -1, an infeasible LP value
        as -inf. Floats carry 17 significant digits.
        """
        lines = []
        for node in self.tree:
            parent = -1 if node.parent is None else node.parent
            bvar = -1 if node.branch_var is None else node.branch_var
            val = node.lp.value if node.lp.status == "optimal" else float("-inf")
            lines.append(
                f"{node.id} {parent} {node.status} {bvar} {format(val, '.17g')} {node.depth}"
            )
        text = "\n".join(lines) + "\n"
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            with open(destination, "w", encoding="ascii") as fh:
                fh.write(text)


def select_node(open_leaves) -> int:
    """Best-bound selection: the id of maximal LP value, ties to lowest id.

    ``open_leaves`` is an iterable of (id, value) pairs; infeasible leaves
    should be passed with value -inf.
    """
    best_id = None
    best_val = None
    for nid, val in open_leaves:
        if (
            best_id is None
            or val > best_val
            or (val == best_val and nid < best_id)
        ):
            best_id, best_val = nid, val
    if best_id is None:
        raise ValueError("no open leaves")
    return best_id


class _FirstRule:
    name = "first"

    def choose(self, x, fractional):
        return fractional[0]


class _MostFractionalRule:
    name = "most-fractional"

    def choose(self, x, fractional):
        # fractional is ascending, so ties keep the lowest index.
        best = fractional[0]
        best_d = abs(x[best] - 0.5)
        for j in fractional[1:]:
            d = abs(x[j] - 0.5)
            if d < best_d:
                best, best_d = j, d
        return best


class _RandomRule:
    name = "random"

    def __init__(self, seed):
        self._rng = random.Random(seed)

    def choose(self, x, fractional):
        return fractional[self._rng.randrange(len(fractional))]


class _ReplayRule:
    name = "adversarial-replay"

    def __init__(self, script):
        if script is None:
            raise ScriptError("adversarial-replay requires a script of branch indices")
        self._script = [int(j) for j in script]
        self._pos = 0

    def choose(self, x, fractional):
        if self._pos >= len(self._script):
            raise ScriptError(
                f"script exhausted after {self._pos} branchings"
            )
        j = self._script[self._pos]
        if j not in fractional:
            raise ScriptError(
                f"script step {self._pos} names variable {j}, "
                f"not fractional at this node (fractional: {list(fractional)})"
            )
        self._pos += 1
        return j


class _CallableRule:
    """Internal extension point: any callable (x, fractional) -> index."""

    name = "callable"

    def __init__(self, fn):
        self._fn = fn

    def choose(self, x, fractional):
        j = int(self._fn(x, fractional))
        if j not in fractional:
            raise ValueError(f"variable rule returned non-fractional index {j}")
        return j


def make_variable_rule(rule, seed: int = 0, script=None):
    """Build a branching-variable rule from its registered name.

    A callable is accepted as-is (test hook); anything else must be one of
    ``VAR_RULES``.
    """
    if callable(rule):
        return _CallableRule(rule)
    if rule == "first":
        return _FirstRule()
    if rule == "most-fractional":
        return _MostFractionalRule()
    if rule == "random":
        return _RandomRule(seed)
    if rule == "adversarial-replay":
        return _ReplayRule(script)
    raise ValueError(f"unknown variable rule {rule!r}; registered: {VAR_RULES}")


def select_variable(node: BbNode, rule) -> int:
    """Apply a branching rule to a node whose LP has a fractional coordinate."""
    if node.lp.status != "optimal" or not node.lp.fractional:
        raise ValueError("node has no fractional coordinate to branch on")
    return rule.choose(node.lp.x, node.lp.fractional)


def _lighten(sol: LpSolution) -> LpSolution:
    """Drop the vectors of a solution, keeping value/status/fractional."""
    return LpSolution(sol.status, None, sol.value, sol.fractional, None, None)


def solve(
    inst: PackingInstance,
    var_rule="first",
    node_rule: str = "best-bound",
    *,
    seed: int = 0,
    script=None,
    node_budget: int = DEFAULT_NODE_BUDGET,
    keep_solutions: bool = True,
) -> BbResult:
    """Run the search to completion (or to the node budget).

    ``var_rule`` is a registered rule name (or a callable test hook); the
    random rule draws from ``seed``, the replay rule consumes ``script``.
    ``keep_solutions=False`` drops per-node LP vectors to save memory on
    large sweeps; values, statuses and fractional index sets are always kept.
    """
    if node_rule not in NODE_RULES:
        raise ValueError(f"unknown node rule {node_rule!r}; registered: {NODE_RULES}")
    if node_budget < 1:
        raise ValueError("node budget must be at least 1")
    rule = make_variable_rule(var_rule, seed=seed, script=script)

    tree: list[BbNode] = []
    heap: list = []
    full_x: dict = {}  # branching needs x even in light mode; held transiently

    def new_node(parent, fixed, depth):
        sol = _lp.solve_lp(inst, fixed)
        stored = sol if keep_solutions else _lighten(sol)
        node = BbNode(id=len(tree), parent=parent, fixed=fixed, lp=stored, depth=depth)
        tree.append(node)
        key = -sol.value if sol.status == "optimal" else np.inf
        heapq.heappush(heap, (key, node.id))
        if not keep_solutions and sol.status == "optimal":
            full_x[node.id] = sol.x
        return node

    new_node(None, FixedSets.empty(), 0)

    incumbent_value = None
    incumbent_x = None
    incumbent_trace: list = []
    branch_sequence: list = []
    prune_counts = {"integrality": 0, "infeasible": 0, "bound": 0}
    branched_count = 0
    budget_exhausted = False

    while heap:
        _, nid = heapq.heappop(heap)
        node = tree[nid]
        sol = node.lp
        if sol.status == "optimal" and not sol.fractional:
            node.status = "pruned_integrality"
            prune_counts["integrality"] += 1
            if incumbent_value is None or sol.value > incumbent_value:
                incumbent_value = sol.value
                x = full_x.get(nid) if sol.x is None else sol.x
                incumbent_x = np.rint(x).astype(np.int8)
                incumbent_trace.append((nid, sol.value))
            full_x.pop(nid, None)
            continue
        if sol.status != "optimal":
            node.status = "pruned_infeasible"
            prune_counts["infeasible"] += 1
            continue
        if incumbent_value is not None and sol.value <= incumbent_value + VALUE_TOL:
            node.status = "pruned_bound"
            prune_counts["bound"] += 1
            full_x.pop(nid, None)
            continue
        if len(tree) + 2 > node_budget:
            budget_exhausted = True
            break
        x = full_x.pop(nid, None)
        if x is None:
            x = node.lp.x
        j = rule.choose(x, sol.fractional)
        if j not in sol.fractional:
            raise ValueError(f"variable rule chose non-fractional index {j}")
        node.status = "branched"
        node.branch_var = j
        branched_count += 1
        branch_sequence.append((nid, j))
        left = new_node(nid, node.fixed.with_zero(j), node.depth + 1)
        right = new_node(nid, node.fixed.with_one(j), node.depth + 1)
        node.children = (left.id, right.id)

    node_count = len(tree)
    result = BbResult(
        opt_value=incumbent_value,
        opt_solution=incumbent_x,
        tree=tree,
        node_count=node_count,
        branched_count=branched_count,
        prune_counts=prune_counts,
        incumbent_trace=incumbent_trace,
        branch_sequence=branch_sequence,
        budget_exhausted=budget_exhausted,
        var_rule=getattr(rule, "name", "callable"),
        node_rule=node_rule,
    )

    if not budget_exhausted:
        if node_count != 2 * branched_count + 1:
            raise BbConsistencyError(
                f"tree is not binary: {node_count} nodes, {branched_count} branched"
            )
        if incumbent_value is not None:
            for node in tree:
                if node.status == "branched" and node.lp.value < incumbent_value - LEMMA_TOL:
                    raise BbConsistencyError(
                        f"node {node.id} branched at value {node.lp.value} "
                        f"below the optimum {incumbent_value}"
                    )
        if incumbent_x is not None:
            if np.any(inst.A @ incumbent_x > inst.b + 1e-9):
                raise BbConsistencyError("incumbent violates a packing row")
    return result
