"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import itertools
import math

import numpy as np

from snnverify.milp import MilpModel, Relation, VarKind
from snnverify.model import Dataset, InputBox, LayeredNetwork, SpikingNetwork


def make_ann(sizes, weights, biases) -> LayeredNetwork:
    return LayeredNetwork(
        tuple(sizes),
        tuple(np.asarray(w, dtype=float) for w in weights),
        tuple(np.asarray(b, dtype=float) for b in biases),
    )


def make_snn(ann: LayeredNetwork, theta=1.0, leak=1.0) -> SpikingNetwork:
    thetas = tuple(np.full(n, float(theta)) for n in ann.hidden_sizes)
    return SpikingNetwork(ann.layer_sizes, ann.weights, ann.biases, thetas, float(leak))


def demo_ann() -> LayeredNetwork:
    return make_ann([2, 2, 1], [[[0.6, 0.8], [-0.1, 0.5]], [[1.0, 1.0]]], [[0.0, 0.0], [0.0]])


def demo_snn() -> SpikingNetwork:
    return make_snn(demo_ann())


def point_box(values) -> InputBox:
    arr = np.asarray(values, dtype=float)
    return InputBox(arr.copy(), arr.copy())


def random_ann(rng: np.random.Generator, n_inputs=None, n_outputs=None,
               max_hidden_layers=2, max_width=4, weight_scale=1.0) -> LayeredNetwork:
    n_in = n_inputs or int(rng.integers(1, 4))
    n_out = n_outputs or int(rng.integers(1, 3))
    n_hidden = int(rng.integers(1, max_hidden_layers + 1))
    sizes = [n_in] + [int(rng.integers(1, max_width + 1)) for _ in range(n_hidden)] + [n_out]
    weights = [
        rng.uniform(-weight_scale, weight_scale, size=(sizes[k + 1], sizes[k]))
        for k in range(len(sizes) - 1)
    ]
    biases = [rng.uniform(-0.5, 0.5, size=sizes[k + 1]) for k in range(len(sizes) - 1)]
    return make_ann(sizes, weights, biases)


def random_snn(rng: np.random.Generator, **kw) -> SpikingNetwork:
    ann = random_ann(rng, **kw)
    theta = float(rng.choice([0.5, 1.0, 2.0]))
    leak = float(rng.choice([0.5, 1.0]))
    return make_snn(ann, theta, leak)


def random_box(rng: np.random.Generator, n_inputs: int, max_width=2.0) -> InputBox:
    lo = rng.uniform(-2.0, 2.0, size=n_inputs)
    width = rng.uniform(0.0, max_width, size=n_inputs)
    return InputBox(lo, lo + width)


def dataset_of(points) -> Dataset:
    return Dataset(np.atleast_2d(np.asarray(points, dtype=float)))


# ---------------------------------------------------------------------------
# brute-force MILP oracle: enumerate integer grids, delegate any continuous
# remainder to scipy's independent LP code
# ---------------------------------------------------------------------------


def oracle_solve(model: MilpModel):
    """(feasible, best_objective) by exhaustive enumeration.

    Every integer/binary variable is enumerated over its (small) bound
    range; for each combination the continuous remainder is checked or
    optimised with scipy.optimize.linprog, which shares nothing with the
    built-in simplex.  Pure-integer models take a vectorised path.
    """
    from scipy.optimize import linprog

    int_vars = [v for v in model.variables if v.kind in (VarKind.INTEGER, VarKind.BINARY)]
    cont_vars = [v for v in model.variables if v.kind is VarKind.CONTINUOUS]
    grids = [
        range(int(math.ceil(v.lower - 1e-9)), int(math.floor(v.upper + 1e-9)) + 1)
        for v in int_vars
    ]
    if any(len(range_) == 0 for range_ in grids):
        return False, None

    n = len(model.variables)
    A = np.zeros((len(model.constraints), n))
    rel = []
    b = np.zeros(len(model.constraints))
    for i, con in enumerate(model.constraints):
        for vid, coeff in con.coeffs:
            A[i, vid] += coeff
        rel.append(con.relation)
        b[i] = con.rhs
    c = np.zeros(n)
    if model.objective is not None:
        for vid, coeff in model.objective:
            c[vid] += coeff
    sense = -1.0 if model.maximize else 1.0
    cont_ids = [v.id for v in cont_vars]
    int_ids = [v.id for v in int_vars]

    if not cont_ids:
        # all-integer: evaluate every grid point in one shot
        combos = np.array(list(itertools.product(*grids)), dtype=float)
        lhs = combos @ A[:, int_ids].T
        ok = np.ones(combos.shape[0], dtype=bool)
        for i, r in enumerate(rel):
            if r is Relation.LE:
                ok &= lhs[:, i] <= b[i] + 1e-9
            elif r is Relation.GE:
                ok &= lhs[:, i] >= b[i] - 1e-9
            else:
                ok &= np.abs(lhs[:, i] - b[i]) <= 1e-9
        if not ok.any():
            return False, None
        if model.objective is None:
            return True, None
        vals = combos[ok] @ c[int_ids]
        best = vals.min() if sense > 0 else vals.max()
        return True, float(best)

    feasible = False
    best = None
    for combo in itertools.product(*grids):
        resid = b - A[:, int_ids] @ np.array(combo, dtype=float) if int_ids else b.copy()
        Ac = A[:, cont_ids]
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for i, r in enumerate(rel):
            if r is Relation.LE:
                A_ub.append(Ac[i])
                b_ub.append(resid[i])
            elif r is Relation.GE:
                A_ub.append(-Ac[i])
                b_ub.append(-resid[i])
            else:
                A_eq.append(Ac[i])
                b_eq.append(resid[i])
        bounds = [(v.lower, v.upper) for v in cont_vars]
        cc = sense * c[cont_ids]
        res = linprog(
            cc,
            A_ub=np.array(A_ub) if A_ub else None,
            b_ub=np.array(b_ub) if b_ub else None,
            A_eq=np.array(A_eq) if A_eq else None,
            b_eq=np.array(b_eq) if b_eq else None,
            bounds=bounds,
            method="highs",
        )
        if res.status != 0:
            continue
        feasible = True
        if model.objective is None:
            return True, None
        val = float(c[int_ids] @ np.array(combo, dtype=float)) + float(sense * res.fun)
        if best is None or sense * val < sense * best:
            best = val
    return feasible, best


def structured_milp(rng: np.random.Generator, n_bin: int, n_int: int, int_width: int,
                    n_cont: int, n_rows: int, objective: bool) -> MilpModel:
    """Random model with an exactly specified variable mix."""
    m = MilpModel(name="structured")
    for i in range(n_bin):
        m.add_variable(f"b{i}", VarKind.BINARY, 0.0, 1.0)
    for i in range(n_int):
        lo = int(rng.integers(-3, 3))
        m.add_variable(f"n{i}", VarKind.INTEGER, lo, lo + int(rng.integers(1, int_width + 1)))
    for i in range(n_cont):
        lo = float(rng.uniform(-4, 0))
        m.add_variable(f"y{i}", VarKind.CONTINUOUS, lo, lo + float(rng.uniform(1, 6)))
    n = len(m.variables)
    for r in range(n_rows):
        coeffs = []
        for vid in range(n):
            if rng.random() < 0.6:
                coeffs.append((vid, float(rng.integers(-3, 4))))
        coeffs = [(v, c) for v, c in coeffs if c != 0.0] or [(0, 1.0)]
        relation = rng.choice([Relation.LE, Relation.GE, Relation.EQ], p=[0.45, 0.45, 0.1])
        rhs = float(rng.integers(-6, 7)) + (0.5 if rng.random() < 0.3 else 0.0)
        m.add_constraint(coeffs, relation, rhs, f"r{r}")
    if objective:
        m.set_objective(
            [(vid, float(rng.integers(-3, 4))) for vid in range(n)],
            maximize=bool(rng.random() < 0.5),
        )
    return m


def random_milp(rng: np.random.Generator, max_int=6, max_cont=2, max_rows=5,
                with_objective=None) -> MilpModel:
    """Small random model whose integer grid stays enumerable."""
    m = MilpModel(name="random")
    n_int = int(rng.integers(1, max_int + 1))
    n_cont = int(rng.integers(0, max_cont + 1))
    for i in range(n_int):
        if rng.random() < 0.5:
            m.add_variable(f"b{i}", VarKind.BINARY, 0.0, 1.0)
        else:
            lo = int(rng.integers(-3, 3))
            m.add_variable(f"n{i}", VarKind.INTEGER, lo, lo + int(rng.integers(1, 5)))
    for i in range(n_cont):
        lo = float(rng.uniform(-4, 0))
        m.add_variable(f"y{i}", VarKind.CONTINUOUS, lo, lo + float(rng.uniform(1, 6)))
    n = len(m.variables)
    for r in range(int(rng.integers(1, max_rows + 1))):
        coeffs = []
        for vid in range(n):
            if rng.random() < 0.7:
                coeffs.append((vid, float(rng.integers(-3, 4))))
        coeffs = [(v, c) for v, c in coeffs if c != 0.0] or [(0, 1.0)]
        relation = rng.choice([Relation.LE, Relation.GE, Relation.EQ], p=[0.45, 0.45, 0.1])
        rhs = float(rng.integers(-6, 7)) + (0.5 if rng.random() < 0.3 else 0.0)
        m.add_constraint(coeffs, relation, rhs, f"r{r}")
    use_obj = with_objective if with_objective is not None else bool(rng.random() < 0.5)
    if use_obj:
        m.set_objective(
            [(vid, float(rng.integers(-3, 4))) for vid in range(n)],
            maximize=bool(rng.random() < 0.5),
        )
    return m
