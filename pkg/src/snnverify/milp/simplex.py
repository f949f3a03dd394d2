"""Dense two-phase tableau simplex with Bland's rule for anti-cycling.

Solves   min/max c.x   s.t.  A x {<=,=,>=} b,  lb <= x <= ub
with all variable bounds finite.  Variables are shifted to start at zero,
upper bounds become explicit rows, and infeasibility is decided by the
phase-one optimum.  Pricing is steepest reduced cost with deterministic
tie-breaking; a run of degenerate pivots switches to Bland's rule until
the objective moves again, so the pivot sequence cannot cycle and is a
pure function of the input.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

PIVOT_EPS = 1e-9
FIX_TOL = 1e-12


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"  # deadline or pivot cap hit


@dataclass
class LpResult:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    pivots: int = 0


class _Deadline:
    def __init__(self, deadline: Optional[float]):
        self.deadline = deadline

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() >= self.deadline


def solve_lp(
    A: np.ndarray,
    rel: np.ndarray,
    b: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    c: Optional[np.ndarray] = None,
    maximize: bool = False,
    *,
    infeas_tol: float = 1e-8,
    deadline: Optional[float] = None,
    max_pivots: int = 200_000,
) -> LpResult:
    """Solve one LP.  ``rel`` holds -1 for <=, 0 for =, +1 for >= per row."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    rel = np.asarray(rel, dtype=int)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m, n = A.shape if A.size else (0, lb.shape[0])
    if np.any(lb > ub + FIX_TOL):
        return LpResult(LpStatus.INFEASIBLE)

    clock = _Deadline(deadline)

    free = np.nonzero(ub - lb > FIX_TOL)[0]
    x0 = lb.copy()  # fixed variables sit at their (joint) bound
    if m:
        rhs0 = b - A @ x0
    else:
        rhs0 = np.zeros(0)

    if free.size == 0:
        # everything fixed: plain constraint check
        viol = 0.0
        for i in range(m):
            if rel[i] == -1:
                viol = max(viol, rhs0[i] * -1.0 if rhs0[i] < 0 else 0.0)
            elif rel[i] == 1:
                viol = max(viol, rhs0[i] if rhs0[i] > 0 else 0.0)
            else:
                viol = max(viol, abs(rhs0[i]))
        if viol > infeas_tol:
            return LpResult(LpStatus.INFEASIBLE)
        obj = float(c @ x0) if c is not None else 0.0
        return LpResult(LpStatus.OPTIMAL, x0, obj, 0)

    Af = A[:, free] if m else np.zeros((0, free.size))
    width = ub[free] - lb[free]

    # rows: the m constraints over shifted y, then one upper-bound row per y
    n_f = free.size
    rows = np.vstack([Af, np.eye(n_f)]) if m else np.eye(n_f)
    rrel = np.concatenate([rel, -np.ones(n_f, dtype=int)])
    rrhs = np.concatenate([rhs0, width])

    # normalise to rhs >= 0
    neg = rrhs < 0
    rows[neg] *= -1.0
    rrhs[neg] *= -1.0
    rrel[neg] *= -1

    m_tot = rows.shape[0]
    n_slack = int(np.count_nonzero(rrel == -1))
    n_surp = int(np.count_nonzero(rrel == 1))
    n_art = int(np.count_nonzero(rrel != -1))
    N = n_f + n_slack + n_surp + n_art

    T = np.zeros((m_tot + 1, N + 1))
    T[:m_tot, :n_f] = rows
    T[:m_tot, -1] = rrhs
    basis = np.empty(m_tot, dtype=int)
    art_mask = np.zeros(N, dtype=bool)

    s_at, p_at, a_at = n_f, n_f + n_slack, n_f + n_slack + n_surp
    for i in range(m_tot):
        if rrel[i] == -1:
            T[i, s_at] = 1.0
            basis[i] = s_at
            s_at += 1
        else:
            if rrel[i] == 1:
                T[i, p_at] = -1.0
                p_at += 1
            T[i, a_at] = 1.0
            art_mask[a_at] = True
            basis[i] = a_at
            a_at += 1

    pivots = 0

    def run(allowed: np.ndarray) -> LpStatus:
        """Pivot to optimality.  Steepest reduced cost normally; a stretch of
        degenerate pivots switches to Bland's rule (lowest eligible index in,
        lowest basis index out) until the objective moves again, which breaks
        cycles while keeping the sequence deterministic."""
        nonlocal pivots
        z = T[m_tot]
        bland = False
        stalled = 0
        while True:
            if pivots >= max_pivots or clock.expired():
                return LpStatus.LIMIT
            cand = np.nonzero((z[:N] < -PIVOT_EPS) & allowed)[0]
            if cand.size == 0:
                return LpStatus.OPTIMAL
            if bland:
                e = int(cand[0])
            else:
                e = int(cand[np.argmin(z[cand])])
            col = T[:m_tot, e]
            pos = np.nonzero(col > PIVOT_EPS)[0]
            if pos.size == 0:
                return LpStatus.UNBOUNDED
            ratios = T[pos, -1] / col[pos]
            rmin = ratios.min()
            ties = pos[ratios <= rmin + 1e-12]
            r = int(ties[np.argmin(basis[ties])])
            before = z[-1]
            _pivot(T, basis, r, e)
            pivots += 1
            if abs(z[-1] - before) <= 1e-12:
                stalled += 1
                if stalled >= 12:
                    bland = True
            else:
                stalled = 0
                bland = False

    def _pivot(T: np.ndarray, basis: np.ndarray, r: int, e: int) -> None:
        T[r] /= T[r, e]
        colv = T[:, e].copy()
        colv[r] = 0.0
        T -= np.outer(colv, T[r])
        T[:, e] = 0.0
        T[r, e] = 1.0
        basis[r] = e

    # ---- phase one: minimise the artificial sum -----------------------------
    z = T[m_tot]
    z[:] = 0.0
    z[:N][art_mask] = 1.0
    for i in range(m_tot):
        if art_mask[basis[i]]:
            z -= T[i]
    status = run(np.ones(N, dtype=bool))
    if status is not LpStatus.OPTIMAL:
        # the artificial sum is bounded below, so anything but optimal here
        # is a resource limit or numerical failure
        return LpResult(LpStatus.LIMIT, pivots=pivots)
    if -T[m_tot, -1] > infeas_tol:
        return LpResult(LpStatus.INFEASIBLE, pivots=pivots)

    def extract() -> np.ndarray:
        y = np.zeros(n_f)
        for i in range(m_tot):
            if basis[i] < n_f:
                y[basis[i]] = T[i, -1]
        x = x0.copy()
        x[free] += y
        return x

    if c is None:
        return LpResult(LpStatus.OPTIMAL, extract(), 0.0, pivots)

    # ---- drive leftover artificials out of the basis ------------------------
    drop: list[int] = []
    for i in range(m_tot):
        if not art_mask[basis[i]]:
            continue
        row = T[i, :N]
        cand = np.nonzero((np.abs(row) > PIVOT_EPS) & ~art_mask)[0]
        if cand.size:
            _pivot(T, basis, i, int(cand[0]))
            pivots += 1
        else:
            drop.append(i)
    if drop:
        keep = np.setdiff1d(np.arange(m_tot), np.array(drop, dtype=int))
        T = np.vstack([T[keep], T[m_tot:]])
        basis = basis[keep]
        m_tot = keep.size

    # ---- phase two -----------------------------------------------------------
    cf = c[free].astype(float)
    if maximize:
        cf = -cf
    z = T[m_tot]
    z[:] = 0.0
    z[:n_f] = cf
    for i in range(m_tot):
        if basis[i] < n_f and cf[basis[i]] != 0.0:
            z -= cf[basis[i]] * T[i]
    status = run(~art_mask)
    if status is LpStatus.LIMIT:
        return LpResult(LpStatus.LIMIT, pivots=pivots)
    if status is LpStatus.UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED, pivots=pivots)
    x = extract()
    return LpResult(LpStatus.OPTIMAL, x, float(c @ x), pivots)
