"""Generic mixed-integer linear program representation and evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from ..model import SnnVerifyError


class VarKind(Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Relation(Enum):
    LE = "<="
    GE = ">="
    EQ = "="


@dataclass
class Variable:
    id: int
    name: str
    kind: VarKind
    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError(f"variable {self.name}: bounds must be finite")
        if self.lower > self.upper:
            raise ValueError(f"variable {self.name}: lower {self.lower} > upper {self.upper}")
        if self.kind is VarKind.BINARY and (self.lower < 0 or self.upper > 1):
            raise ValueError(f"variable {self.name}: binary bounds must lie in [0, 1]")


@dataclass
class LinearConstraint:
    """sum(coeff * var) relation rhs, with a sparse coefficient list."""

    coeffs: list[tuple[int, float]]
    relation: Relation
    rhs: float
    name: str = ""

    def __post_init__(self):
        if not any(c != 0.0 for _, c in self.coeffs):
            raise ValueError(f"constraint {self.name or '<anon>'} has no nonzero coefficient")


@dataclass
class MilpModel:
    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    objective: Optional[list[tuple[int, float]]] = None
    maximize: bool = False

    def add_variable(self, name: str, kind: VarKind, lower: float, upper: float) -> int:
        vid = len(self.variables)
        if kind is VarKind.BINARY:
            lower, upper = max(0.0, lower), min(1.0, upper)
        self.variables.append(Variable(vid, name, kind, float(lower), float(upper)))
        return vid

    def add_constraint(
        self,
        coeffs: Iterable[tuple[int, float]],
        relation: Relation,
        rhs: float,
        name: str = "",
    ) -> None:
        coeffs = [(int(v), float(c)) for v, c in coeffs if c != 0.0]
        for vid, _ in coeffs:
            if not (0 <= vid < len(self.variables)):
                raise ValueError(f"constraint {name}: unknown variable id {vid}")
        self.constraints.append(LinearConstraint(coeffs, relation, float(rhs), name))

    def set_objective(self, coeffs: Iterable[tuple[int, float]], maximize: bool = False) -> None:
        self.objective = [(int(v), float(c)) for v, c in coeffs]
        self.maximize = maximize

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name, list(self.variables), list(self.constraints), None, self.maximize)
        if self.objective is not None:
            m.objective = list(self.objective)
        return m

    def names(self) -> dict[int, str]:
        return {v.id: v.name for v in self.variables}

    def by_name(self) -> dict[str, int]:
        return {v.name: v.id for v in self.variables}

    # -- independent evaluation ------------------------------------------------

    def constraint_violation(self, con: LinearConstraint, x: np.ndarray) -> float:
        lhs = sum(c * x[v] for v, c in con.coeffs)
        if con.relation is Relation.LE:
            return max(0.0, lhs - con.rhs)
        if con.relation is Relation.GE:
            return max(0.0, con.rhs - lhs)
        return abs(lhs - con.rhs)

    def check_assignment(
        self, assignment: dict[int, float], feas_tol: float = 1e-6, int_tol: float = 1e-6
    ) -> list[str]:
        """All bound/integrality/constraint violations beyond tolerance.

        This walks the raw model data and shares no code with the solver,
        so it can vouch for solver output independently.
        """
        problems: list[str] = []
        x = np.zeros(len(self.variables))
        for v in self.variables:
            if v.id not in assignment:
                problems.append(f"variable {v.name}: no value assigned")
                continue
            x[v.id] = assignment[v.id]
        if problems:
            return problems
        for v in self.variables:
            val = x[v.id]
            if val < v.lower - feas_tol or val > v.upper + feas_tol:
                problems.append(f"variable {v.name}={val} outside [{v.lower}, {v.upper}]")
            if v.kind in (VarKind.INTEGER, VarKind.BINARY):
                if abs(val - round(val)) > int_tol:
                    problems.append(f"variable {v.name}={val} not integral")
        for con in self.constraints:
            viol = self.constraint_violation(con, x)
            if viol > feas_tol:
                problems.append(f"constraint {con.name or '<anon>'} violated by {viol:g}")
        return problems

    def objective_value(self, assignment: dict[int, float]) -> Optional[float]:
        if self.objective is None:
            return None
        return sum(c * assignment[v] for v, c in self.objective)


class SolveStatus(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"


@dataclass
class SolveStats:
    nodes: int = 0
    pivots: int = 0
    wall_time: float = 0.0


@dataclass
class SolveResult:
    status: SolveStatus
    assignment: Optional[dict[int, float]] = None
    objective: Optional[float] = None
    stats: SolveStats = field(default_factory=SolveStats)
    detail: str = ""

    @property
    def is_feasible(self) -> bool:
        return self.status is SolveStatus.FEASIBLE

    def value(self, vid: int) -> float:
        if self.assignment is None:
            raise NotFeasible("result carries no assignment")
        return self.assignment[vid]


class NotFeasible(SnnVerifyError):
    """Operation needs a feasible result but got none."""


class UnknownVariable(SnnVerifyError):
    """Solution file names a variable the model lacks, or omits one it has."""
