"""
Network-design MIP over sampled cascades.

The model maximizes the average reached reward over a set of deterministic
scenarios. Node variables can only be one when a node is purchased and, for
non-sources, when some predecessor is reached, which on acyclic scenarios is
exactly reachability. For a fixed purchase vector the optimal node variables
follow from a graph search, so the exact solver is a branch-and-bound over
the action variables that never solves an LP.
"""

import logging
from collections.abc import Collection, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import networkx as nx
import pulp
from pydantic import BaseModel

from cascada.cascade import CascadeSample, evaluate_on_sample
from cascada.core import Strategy
from cascada.exceptions import CyclicCascadeError, InvalidBudgetError, StrategyError

logger = logging.getLogger(__name__)

SolveStatus = Literal["optimal", "budget_infeasible", "bound_only", "node_limit"]

# Slack on budget comparisons; costs are sums of user floats
BUDGET_EPS = 1e-9


def y_name(action: int) -> str:
    """Column name of the variable of ``action``."""
    return f"Y{action}"


def x_name(scenario: int, node: int) -> str:
    """Column name of the variable of ``node`` in the ``scenario``-th cascade."""
    return f"X{scenario}_{node}"


@dataclass(frozen=True)
class StandardForm:
    """
    Solver-neutral view of a model.

    ``rows`` maps a row name to ``(sense, coefficients, rhs)`` where sense
    follows pulp: -1 for <=, 0 for =, 1 for >=.
    """

    objective: dict[str, float]
    rows: dict[str, tuple[int, dict[str, float], float]]
    integers: frozenset[str]
    bounds: dict[str, tuple[float | None, float | None]]
    maximize: bool = True

    def matches(self, other: "StandardForm", tolerance: float = 1e-9) -> bool:
        """Whether two forms agree up to ``tolerance`` on every number."""

        def close(a: dict[str, float], b: dict[str, float]) -> bool:
            return a.keys() == b.keys() and all(abs(a[k] - b[k]) <= tolerance for k in a)

        if self.maximize != other.maximize or self.integers != other.integers:
            return False
        if not close(self.objective, other.objective):
            return False
        if self.bounds != other.bounds or self.rows.keys() != other.rows.keys():
            return False
        for name, (sense, coefficients, rhs) in self.rows.items():
            other_sense, other_coefficients, other_rhs = other.rows[name]
            if sense != other_sense or abs(rhs - other_rhs) > tolerance:
                return False
            if not close(coefficients, other_coefficients):
                return False
        return True


def _standard_from_problem(problem: pulp.LpProblem) -> StandardForm:
    objective = {
        term["name"]: float(term["value"])
        for term in problem.objective.toDict()
        if term["value"] != 0
    }
    rows: dict[str, tuple[int, dict[str, float], float]] = {}
    for name, constraint in problem.constraints.items():
        data = constraint.toDict()
        coefficients = {
            term["name"]: float(term["value"])
            for term in data["coefficients"]
            if term["value"] != 0
        }
        rows[name] = (int(data["sense"]), coefficients, -float(data["constant"]))
    variables = [v for v in problem.variables() if not v.name.startswith("__dummy")]
    return StandardForm(
        objective=objective,
        rows=rows,
        integers=frozenset(v.name for v in variables if v.cat == pulp.LpInteger),
        bounds={v.name: (v.lowBound, v.upBound) for v in variables},
        maximize=problem.sense == pulp.LpMaximize,
    )


@dataclass(frozen=True)
class MipModel:
    """
    The SAA network-design model.

    Scenario ``k`` is ``cascades[k]``; its node ``v`` has column
    ``X<k>_<v>`` and action ``l`` has column ``Y<l>``.
    """

    cascades: tuple[CascadeSample, ...]
    costs: tuple[float, ...]
    budget: float

    @property
    def n_actions(self) -> int:
        return len(self.costs)

    @property
    def n_scenarios(self) -> int:
        return len(self.cascades)

    @property
    def n_variables(self) -> int:
        return self.n_actions + sum(c.n_nodes for c in self.cascades)

    def purchase_rows(self) -> list[tuple[int, int, frozenset[int]]]:
        """``(k, v, A_k(v))`` for every non-free node."""
        return [
            (k, node, actions)
            for k, cascade in enumerate(self.cascades)
            for node, actions in zip(cascade.nodes, cascade.action_sets, strict=True)
            if actions
        ]

    def flow_rows(self) -> list[tuple[int, int, tuple[int, ...]]]:
        """``(k, v, predecessors)`` for every non-source node."""
        rows = []
        for k, cascade in enumerate(self.cascades):
            for i, node in enumerate(cascade.nodes):
                if node in cascade.sources:
                    continue
                preds = tuple(cascade.nodes[p] for p in cascade.predecessors[i])
                rows.append((k, node, preds))
        return rows

    def evaluate(self, bought: frozenset[int]) -> float:
        """Average reached reward for a set of bought actions."""
        if not self.cascades:
            return 0.0
        return sum(evaluate_on_sample(c, bought) for c in self.cascades) / len(self.cascades)

    def cost_of(self, actions: Collection[int]) -> float:
        return float(sum(self.costs[a - 1] for a in actions))

    def to_pulp(self) -> pulp.LpProblem:
        """Build the model as a pulp problem."""
        problem = pulp.LpProblem("cascada_saa", pulp.LpMaximize)
        y = {
            a: pulp.LpVariable(y_name(a), cat=pulp.LpBinary)
            for a in range(1, self.n_actions + 1)
        }
        x = {
            (k, node): pulp.LpVariable(x_name(k, node), lowBound=0, upBound=1)
            for k, cascade in enumerate(self.cascades)
            for node in cascade.nodes
        }
        scale = 1.0 / self.n_scenarios if self.cascades else 0.0
        problem += (
            pulp.lpSum(
                reward * scale * x[(k, node)]
                for k, cascade in enumerate(self.cascades)
                for node, reward in zip(cascade.nodes, cascade.rewards, strict=True)
            ),
            "OBJ",
        )
        problem += (
            pulp.lpSum(cost * y[a] for a, cost in enumerate(self.costs, start=1))
            <= self.budget,
            "BUDGET",
        )
        for k, node, actions in self.purchase_rows():
            problem += (
                x[(k, node)] <= pulp.lpSum(y[a] for a in sorted(actions)),
                f"P{k}_{node}",
            )
        for k, node, preds in self.flow_rows():
            problem += (
                x[(k, node)] <= pulp.lpSum(x[(k, p)] for p in preds),
                f"F{k}_{node}",
            )
        return problem

    def standard_form(self) -> StandardForm:
        """The model's solver-neutral view."""
        return _standard_from_problem(self.to_pulp())


def build_mip(
    cascades: Sequence[CascadeSample],
    costs: Sequence[float],
    budget: float,
) -> MipModel:
    """
    Build the SAA model over acyclic scenarios.

    Args:
        cascades: Sampled or reduced scenarios
        costs: Cost of every action, ``costs[l - 1]`` for action ``l``
        budget: Purchase budget

    Returns:
        The model

    Raises:
        CyclicCascadeError: If a scenario has a directed cycle
        InvalidBudgetError: If the budget is negative
        StrategyError: If a scenario references an unknown action
    """
    if budget < 0:
        raise InvalidBudgetError(budget)
    n_actions = len(costs)
    for k, cascade in enumerate(cascades):
        graph = nx.DiGraph()
        graph.add_nodes_from(cascade.nodes)
        graph.add_edges_from(cascade.edges)
        if not nx.is_directed_acyclic_graph(graph):
            cycle = [(u, v) for u, v, *_ in nx.find_cycle(graph)]
            raise CyclicCascadeError(k, cycle)
        unknown = [a for a in cascade.referenced_actions if not 1 <= a <= n_actions]
        if unknown:
            raise StrategyError(
                f"Cascade {k} references actions {sorted(unknown)} outside 1..{n_actions}"
            )
    model = MipModel(cascades=tuple(cascades), costs=tuple(float(c) for c in costs), budget=budget)
    logger.debug(
        "Built MIP: %d scenarios, %d variables", model.n_scenarios, model.n_variables
    )
    return model


def fix_y_evaluate(model: MipModel, y: Strategy | Collection[int]) -> float:
    """
    Optimal objective of the model with the action variables fixed.

    Args:
        model: The model
        y: A strategy or a collection of bought action ids

    Returns:
        Average reached reward over the model's scenarios
    """
    bought = y.actions if isinstance(y, Strategy) else frozenset(y)
    return model.evaluate(bought)


class SolveResult(BaseModel):
    """Outcome of a solve; ``best_strategy`` is None when nothing was explored."""

    best_strategy: Strategy | None
    best_value: float | None
    upper_bound: float
    status: SolveStatus
    nodes_explored: int = 0


@dataclass
class _Node:
    bought: frozenset[int]
    undecided: tuple[int, ...]
    bound: float


def solve_exact(
    model: MipModel,
    node_limit: int | None = None,
    tolerance: float = 1e-6,
) -> SolveResult:
    """
    Solve the model by depth-first branch-and-bound over the actions.

    The bound of a search node buys every undecided action that still fits,
    which is valid because the objective is monotone in the bought set. When
    that set fits in the budget it is the subtree optimum. Otherwise the
    search branches on the undecided action whose removal lowers the bound
    most (lowest id on ties), visiting the branch that buys it first.

    Args:
        model: The model
        node_limit: Maximum search nodes to expand (None for no limit)
        tolerance: Absolute tolerance on bound comparisons

    Returns:
        The result; ``upper_bound`` is the largest open bound when the node
        limit stops the search
    """
    if model.budget < 0:
        raise InvalidBudgetError(model.budget)
    costs = model.costs
    budget = model.budget
    values: dict[frozenset[int], float] = {}

    def evaluate(bought: frozenset[int]) -> float:
        value = values.get(bought)
        if value is None:
            value = values[bought] = model.evaluate(bought)
        return value

    def affordable(bought: frozenset[int], undecided: tuple[int, ...]) -> tuple[int, ...]:
        remaining = budget - model.cost_of(bought)
        return tuple(a for a in undecided if costs[a - 1] <= remaining + BUDGET_EPS)

    root_undecided = affordable(frozenset(), tuple(range(1, model.n_actions + 1)))
    root = _Node(frozenset(), root_undecided, evaluate(frozenset(root_undecided)))
    stack = [root]

    best: frozenset[int] | None = None
    best_value = float("-inf")
    explored = 0

    while stack:
        if node_limit is not None and explored >= node_limit:
            break
        node = stack.pop()
        explored += 1
        undecided = affordable(node.bought, node.undecided)
        top = node.bought | frozenset(undecided)
        bound = evaluate(top)
        if bound <= best_value + tolerance:
            continue

        if model.cost_of(top) <= budget + BUDGET_EPS:
            best, best_value = top, bound
            continue

        base = evaluate(node.bought)
        if base > best_value + tolerance or best is None:
            best, best_value = node.bought, base

        branch, branch_bound, largest_drop = undecided[0], bound, -1.0
        for action in undecided:
            without = evaluate(top - {action})
            drop = bound - without
            if drop > largest_drop + tolerance:
                branch, branch_bound, largest_drop = action, without, drop

        rest = tuple(a for a in undecided if a != branch)
        stack.append(_Node(node.bought, rest, branch_bound))
        stack.append(_Node(node.bought | {branch}, rest, bound))

    if stack:
        open_bound = max(n.bound for n in stack)
        status: SolveStatus = "node_limit" if best is not None else "bound_only"
        upper = max(open_bound, best_value)
    else:
        status = "optimal"
        upper = best_value

    logger.debug(
        "Branch-and-bound %s after %d nodes: value %s, bound %.6f",
        status,
        explored,
        best_value if best is not None else None,
        upper,
    )
    return SolveResult(
        best_strategy=Strategy.from_actions(costs, best) if best is not None else None,
        best_value=best_value if best is not None else None,
        upper_bound=upper,
        status=status,
        nodes_explored=explored,
    )


def export_standard(model: MipModel, path: str | Path) -> Path:
    """
    Write the model as an MPS file.

    Columns are named ``Y<l>`` and ``X<k>_<v>``; rows are ``BUDGET``,
    ``P<k>_<v>`` (purchase) and ``F<k>_<v>`` (flow).

    Args:
        model: The model
        path: Target file

    Returns:
        The written path
    """
    target = Path(path)
    model.to_pulp().writeMPS(str(target), with_objsense=True)
    logger.info("Exported model with %d variables to %s", model.n_variables, target)
    return target


def read_standard(path: str | Path) -> StandardForm:
    """
    Read an exported MPS file back.

    Args:
        path: The file

    The objective sense comes from the file's OBJSENSE section.

    Returns:
        Its solver-neutral view
    """
    _, problem = pulp.LpProblem.fromMPS(str(path))
    return _standard_from_problem(problem)


def solve_external(
    model: MipModel,
    time_limit: float | None = None,
    msg: bool = False,
) -> SolveResult:
    """
    Solve the model with pulp's bundled CBC solver.

    Args:
        model: The model
        time_limit: Wallclock limit in seconds
        msg: Show solver output

    Returns:
        The result; the value is recomputed combinatorially from the
        returned purchase vector
    """
    problem = model.to_pulp()
    solver = pulp.PULP_CBC_CMD(msg=msg, timeLimit=time_limit)
    problem.solve(solver)
    outcome = pulp.LpStatus[problem.status]

    if outcome == "Infeasible":
        return SolveResult(
            best_strategy=None, best_value=None, upper_bound=0.0, status="budget_infeasible"
        )

    columns = problem.variablesDict()
    bought = []
    for action in range(1, model.n_actions + 1):
        column = columns.get(y_name(action))
        if column is not None and column.varValue is not None and column.varValue > 0.5:
            bought.append(action)
    strategy = Strategy.from_actions(model.costs, bought)
    value = fix_y_evaluate(model, strategy)
    objective = pulp.value(problem.objective)
    if outcome == "Optimal":
        return SolveResult(
            best_strategy=strategy, best_value=value, upper_bound=value, status="optimal"
        )
    upper = max(value, float(objective)) if objective is not None else value
    return SolveResult(
        best_strategy=strategy, best_value=value, upper_bound=upper, status="node_limit"
    )
