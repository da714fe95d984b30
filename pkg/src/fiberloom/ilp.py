"""Bounded integer maximization of a linear objective.

A small depth-first branch-and-bound solver: pattern problems have a
handful of variables with tight per-variable bounds, so interval pruning
on the constraint rows plus an optimistic objective bound is all that is
needed to prove global optimality.  Values are explored in descending
order and incumbents are only replaced on strict improvement, which makes
the returned optimum the lexicographically greatest one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .errors import InfeasibleError, IntractableError

ENUMERATION_LIMIT = 10_000_000

# absolute tolerance for objective comparisons on non-integral data
FLOAT_TOL = 1e-9

Row = tuple[list[float], float]


def _is_integral(value) -> bool:
    if isinstance(value, (int,)):
        return True
    if isinstance(value, float):
        return value.is_integer()
    return float(value).is_integer()


@dataclass
class IntegerProgram:
    """max objective . x  s.t.  leq rows, geq rows, 0 <= x <= upper_bounds.

    Per-variable upper bounds are derived from the all-non-negative "leq"
    rows as min over rows of floor(bound / coefficient); every variable
    must be bounded by at least one such row.
    """

    objective: list[float]
    leq_rows: list[Row] = field(default_factory=list)
    geq_rows: list[Row] = field(default_factory=list)
    upper_bounds: list[int] = field(init=False)
    integral: bool = field(init=False)
    feasible_bounds: bool = field(init=False)

    def __post_init__(self):
        n = len(self.objective)
        for row, _ in itertools.chain(self.leq_rows, self.geq_rows):
            if len(row) != n:
                raise ValueError("constraint row length does not match objective")
        self.integral = all(
            _is_integral(v)
            for v in itertools.chain(
                self.objective,
                *[list(r) + [b] for r, b in self.leq_rows],
                *[list(r) + [b] for r, b in self.geq_rows]))
        if self.integral:
            self.objective = [int(v) for v in self.objective]
            self.leq_rows = [([int(v) for v in r], int(b)) for r, b in self.leq_rows]
            self.geq_rows = [([int(v) for v in r], int(b)) for r, b in self.geq_rows]
        self.feasible_bounds = True
        bounds = []
        for i in range(n):
            best = None
            for row, b in self.leq_rows:
                if row[i] > 0 and all(a >= 0 for a in row):
                    cap = math.floor(b / row[i])
                    best = cap if best is None else min(best, cap)
            if best is None:
                raise ValueError(
                    f"variable {i} is unbounded (no all-non-negative row caps it)")
            if best < 0:
                self.feasible_bounds = False
                best = 0
            bounds.append(int(best))
        self.upper_bounds = bounds

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def search_space(self) -> int:
        size = 1
        for ub in self.upper_bounds:
            size *= ub + 1
        return size

    def is_feasible(self, x: list[int]) -> bool:
        if not self.feasible_bounds:
            return False
        for row, b in self.leq_rows:
            if sum(a * v for a, v in zip(row, x)) > b:
                return False
        for row, b in self.geq_rows:
            if sum(a * v for a, v in zip(row, x)) < b:
                return False
        return True


@dataclass(frozen=True)
class IlpSolution:
    x: tuple[int, ...]
    objective_value: float
    status: str  # "optimal" | "infeasible"

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _greater(a, b, integral: bool) -> bool:
    if integral:
        return a > b
    return a > b + FLOAT_TOL


def solve(program: IntegerProgram) -> IlpSolution:
    """Depth-first branch and bound; ties go to the lexicographically
    greatest optimum."""
    n = program.n_vars
    if not program.feasible_bounds:
        return IlpSolution((), -math.inf, "infeasible")
    c = program.objective
    ub = program.upper_bounds
    integral = program.integral

    # remaining optimistic objective gain for variables i..n-1
    gain_tail = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        gain_tail[i] = gain_tail[i + 1] + max(0, c[i]) * ub[i] if integral else \
            gain_tail[i + 1] + max(0.0, c[i]) * ub[i]

    # per-row interval slack of the free variables i..n-1
    def tails(rows, pick):
        out = []
        for row, _ in rows:
            t = [0] * (n + 1)
            for i in range(n - 1, -1, -1):
                t[i] = t[i + 1] + pick(row[i]) * ub[i]
            out.append(t)
        return out

    leq_min_tail = tails(program.leq_rows, lambda a: min(0, a) if integral else min(0.0, a))
    geq_max_tail = tails(program.geq_rows, lambda a: max(0, a) if integral else max(0.0, a))

    best_x: list[int] | None = None
    best_val = None
    x = [0] * n

    def descend(i, value, leq_lhs, geq_lhs):
        nonlocal best_x, best_val
        if best_val is not None and not _greater(value + gain_tail[i], best_val, integral):
            return
        for k, (row, b) in enumerate(program.leq_rows):
            if leq_lhs[k] + leq_min_tail[k][i] > b:
                return
        for k, (row, b) in enumerate(program.geq_rows):
            if geq_lhs[k] + geq_max_tail[k][i] < b:
                return
        if i == n:
            if best_val is None or _greater(value, best_val, integral):
                best_val = value
                best_x = x.copy()
            return
        for v in range(ub[i], -1, -1):
            x[i] = v
            descend(i + 1, value + c[i] * v,
                    [lhs + row[i] * v for lhs, (row, _) in zip(leq_lhs, program.leq_rows)],
                    [lhs + row[i] * v for lhs, (row, _) in zip(geq_lhs, program.geq_rows)])
        x[i] = 0

    descend(0, 0 if integral else 0.0,
            [0] * len(program.leq_rows), [0] * len(program.geq_rows))
    if best_x is None:
        return IlpSolution((), -math.inf, "infeasible")
    return IlpSolution(tuple(best_x), best_val, "optimal")


def enumerate_feasible(program: IntegerProgram) -> list[tuple[tuple[int, ...], float]]:
    """All feasible integer points with their objective values.

    Intended as a test oracle and for the table reports; refuses search
    spaces above ``ENUMERATION_LIMIT`` points.
    """
    if not program.feasible_bounds:
        return []
    if program.search_space() > ENUMERATION_LIMIT:
        raise IntractableError(
            f"search space of {program.search_space()} points exceeds "
            f"{ENUMERATION_LIMIT}; use solve() instead")
    c = program.objective
    out = []
    for x in itertools.product(*[range(u + 1) for u in program.upper_bounds]):
        if program.is_feasible(list(x)):
            out.append((x, sum(a * v for a, v in zip(c, x))))
    return out


def require_optimal(solution: IlpSolution, context: str) -> IlpSolution:
    if not solution.optimal:
        raise InfeasibleError(context)
    return solution
