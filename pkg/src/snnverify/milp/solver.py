"""Exact branch-and-bound over the simplex LP relaxation.

Feasibility problems are searched depth-first; optimisation problems
best-first on the relaxation bound.  Branching splits the most fractional
integer variable (ties to the lowest id) with floor/ceil bound cuts, so
the search order - and hence the verdict - is deterministic for a fixed
model.  The time budget is cooperative: it is checked between simplex
pivots and between nodes, and exhaustion yields a Timeout status rather
than an exception.
"""

from __future__ import annotations

import heapq
import math
import time
from typing import Optional

import numpy as np

from .model import (
    MilpModel,
    Relation,
    SolveResult,
    SolveStats,
    SolveStatus,
    VarKind,
)
from .simplex import LpStatus, solve_lp

_solve_calls = 0


def solve_calls() -> int:
    """Number of solve() invocations so far (test instrumentation)."""
    return _solve_calls


def reset_solve_calls() -> None:
    global _solve_calls
    _solve_calls = 0


def _compile(model: MilpModel):
    n = len(model.variables)
    m = len(model.constraints)
    A = np.zeros((m, n))
    rel = np.zeros(m, dtype=int)
    b = np.zeros(m)
    for i, con in enumerate(model.constraints):
        for vid, coeff in con.coeffs:
            A[i, vid] += coeff
        rel[i] = {Relation.LE: -1, Relation.EQ: 0, Relation.GE: 1}[con.relation]
        b[i] = con.rhs
    lb = np.array([v.lower for v in model.variables])
    ub = np.array([v.upper for v in model.variables])
    int_ids = np.array(
        [v.id for v in model.variables if v.kind in (VarKind.INTEGER, VarKind.BINARY)],
        dtype=int,
    )
    c = None
    if model.objective is not None:
        c = np.zeros(n)
        for vid, coeff in model.objective:
            c[vid] += coeff
    return A, rel, b, lb, ub, int_ids, c


def solve(
    model: MilpModel,
    budget: Optional[float] = None,
    *,
    feas_tol: float = 1e-6,
    int_tol: float = 1e-6,
    infeas_tol: float = 1e-8,
) -> SolveResult:
    """Decide feasibility, or optimise when the model has an objective."""
    global _solve_calls
    _solve_calls += 1
    start = time.monotonic()
    deadline = start + budget if budget is not None else None
    stats = SolveStats()

    A, rel, b, lb0, ub0, int_ids, c = _compile(model)
    minimize_c = None
    if c is not None:
        minimize_c = -c if model.maximize else c

    # integral variables get integral bounds up front
    lb0 = lb0.copy()
    ub0 = ub0.copy()
    if int_ids.size:
        lb0[int_ids] = np.ceil(lb0[int_ids] - int_tol)
        ub0[int_ids] = np.floor(ub0[int_ids] + int_tol)

    def finish(status: SolveStatus, assignment=None, objective=None) -> SolveResult:
        stats.wall_time = time.monotonic() - start
        return SolveResult(status, assignment, objective, stats)

    def out_of_time() -> bool:
        return deadline is not None and time.monotonic() >= deadline

    def most_fractional(x: np.ndarray) -> Optional[int]:
        if not int_ids.size:
            return None
        vals = x[int_ids]
        frac = np.abs(vals - np.rint(vals))
        worst = frac.max() if frac.size else 0.0
        if worst <= int_tol:
            return None
        # closest to .5 wins; ties resolve to the lowest variable id
        score = np.minimum(frac, 1.0 - frac)
        score[frac <= int_tol] = -1.0
        best = score.max()
        return int(int_ids[np.nonzero(score >= best - 1e-12)[0][0]])

    def polish(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Optional[np.ndarray]:
        """Re-solve with integers pinned so continuous values come out clean."""
        lo2, hi2 = lo.copy(), hi.copy()
        if int_ids.size:
            pinned = np.rint(x[int_ids])
            lo2[int_ids] = pinned
            hi2[int_ids] = pinned
        res = solve_lp(
            A, rel, b, lo2, hi2, minimize_c, infeas_tol=infeas_tol, deadline=deadline
        )
        stats.pivots += res.pivots
        if res.status is LpStatus.OPTIMAL:
            out = res.x.copy()
            if int_ids.size:
                out[int_ids] = pinned
            return out
        return None

    def assignment_of(x: np.ndarray) -> dict[int, float]:
        return {i: float(v) for i, v in enumerate(x)}

    if c is None:
        # pure feasibility: depth-first, first integral leaf wins
        stack = [(lb0, ub0)]
        while stack:
            if out_of_time():
                return finish(SolveStatus.TIMEOUT)
            lo, hi = stack.pop()
            if np.any(lo > hi + 1e-12):
                continue
            stats.nodes += 1
            res = solve_lp(A, rel, b, lo, hi, None, infeas_tol=infeas_tol, deadline=deadline)
            stats.pivots += res.pivots
            if res.status in (LpStatus.LIMIT, LpStatus.UNBOUNDED):
                return finish(SolveStatus.TIMEOUT)
            if res.status is not LpStatus.OPTIMAL:
                continue
            branch = most_fractional(res.x)
            if branch is None:
                x = polish(res.x, lo, hi)
                if x is None:
                    x = res.x.copy()
                    if int_ids.size:
                        x[int_ids] = np.rint(x[int_ids])
                return finish(SolveStatus.FEASIBLE, assignment_of(x), None)
            v = res.x[branch]
            lo_up = lo.copy()
            lo_up[branch] = math.ceil(v)
            hi_dn = hi.copy()
            hi_dn[branch] = math.floor(v)
            stack.append((lo_up, hi))  # explored after the floor branch
            stack.append((lo, hi_dn))
        return finish(SolveStatus.INFEASIBLE)

    # optimisation: best-first on the relaxation bound
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    seq = 0
    heap.append((-math.inf, seq, lb0, ub0))
    best_x: Optional[np.ndarray] = None
    best_obj = math.inf  # in minimisation sense
    while heap:
        if out_of_time():
            return finish(SolveStatus.TIMEOUT)
        bound, _, lo, hi = heapq.heappop(heap)
        if bound >= best_obj - 1e-9:
            break  # heap is bound-ordered: nothing better remains
        if np.any(lo > hi + 1e-12):
            continue
        stats.nodes += 1
        res = solve_lp(A, rel, b, lo, hi, minimize_c, infeas_tol=infeas_tol, deadline=deadline)
        stats.pivots += res.pivots
        if res.status in (LpStatus.LIMIT, LpStatus.UNBOUNDED):
            return finish(SolveStatus.TIMEOUT)
        if res.status is not LpStatus.OPTIMAL:
            continue
        if res.objective >= best_obj - 1e-9:
            continue
        branch = most_fractional(res.x)
        if branch is None:
            x = polish(res.x, lo, hi)
            if x is None:
                x = res.x.copy()
                if int_ids.size:
                    x[int_ids] = np.rint(x[int_ids])
            obj = float(minimize_c @ x)
            if obj < best_obj - 1e-12:
                best_obj = obj
                best_x = x
            continue
        v = res.x[branch]
        lo_up = lo.copy()
        lo_up[branch] = math.ceil(v)
        hi_dn = hi.copy()
        hi_dn[branch] = math.floor(v)
        for child in ((lo, hi_dn), (lo_up, hi)):
            seq += 1
            heapq.heappush(heap, (res.objective, seq, child[0], child[1]))
    if best_x is None:
        return finish(SolveStatus.INFEASIBLE)
    true_obj = float(c @ best_x)
    return finish(SolveStatus.FEASIBLE, assignment_of(best_x), true_obj)
