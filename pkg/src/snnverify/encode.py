"""Compile a spiking-network run of fixed length into a MILP.

Per hidden neuron and timestep the model carries five variables: instant
potential S, membrane potential P, the rectified drive x, the big-M gate
bit q, and the integer spike amplitude A.  The constraint blocks are:

* membrane start:     P_{i,0} = 0
* instant potential:  S_{i,t} = (bias_i + sum_j A_{j,t} w_{j,i}) / theta_i
* rectification:      x = max(S + leak*P_{t-1}, 0) via big-M rows over q
* floor:              A <= x  and  A + 1 >= x + eps, A integer >= 0
* membrane update:    P_t = leak*P_{t-1} + S_t - A_t
* output reading:     op_i = mean_t S_{i,t}

plus rows pinning every input variable to its step-1 copy, because the
input is presented unchanged at each step.  All big-M values and variable
bounds come from forward interval propagation, so they are finite and
sound; the floor strictness constant eps defaults to 1e-6 (eps <= 0 would
leave A free to round up at integral x).

Safe-range queries append either a single bound test on one output or the
big-M disjunction over all outputs; both use the non-strict comparisons
op >= u and op <= l, so touching a bound counts as a violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .milp import MilpModel, NotFeasible, Relation, SolveResult, VarKind
from .model import InputBox, SnnVerifyError, SpikingNetwork
from .sim import SimulationTrace, floor_snapped

BOUND_NUDGE = 1e-9
Q_FIX_MARGIN = 1e-9


class IndexOutOfRange(SnnVerifyError):
    """Query names an output index the network does not have."""


@dataclass
class IntervalTable:
    """Forward-propagated value intervals and the derived big-M table.

    Hidden-layer arrays are indexed [t-1, neuron] (membrane rows include
    t = 0 at index 0).  ``big_m[k][t-1, i]`` dominates the magnitude of the
    rectifier drive of neuron i of hidden layer k at step t.
    """

    s_lo: list[np.ndarray]
    s_hi: list[np.ndarray]
    arg_lo: list[np.ndarray]
    arg_hi: list[np.ndarray]
    a_lo: list[np.ndarray]
    a_hi: list[np.ndarray]
    p_lo: list[np.ndarray]
    p_hi: list[np.ndarray]
    big_m: list[np.ndarray]
    out_lo: np.ndarray
    out_hi: np.ndarray
    op_lo: np.ndarray
    op_hi: np.ndarray

    def max_big_m(self) -> float:
        return max((float(m.max()) if m.size else 0.0) for m in self.big_m)


def _dot_interval(w: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    wpos = np.maximum(w, 0.0)
    wneg = np.minimum(w, 0.0)
    return wpos @ lo + wneg @ hi, wpos @ hi + wneg @ lo


def compute_big_m(
    snn: SpikingNetwork, steps: int, box: InputBox, inflate: float = 1.01
) -> IntervalTable:
    """Interval-propagate one run and size the big-M constants.

    The spike interval uses the floor's monotonicity (exact endpoints) and
    the membrane interval intersects the update rule with the residual
    semantics (0 <= P < 1 after a positive drive), so degenerate input
    boxes collapse to the exact trace.
    """
    if len(box) != snn.n_inputs:
        raise IndexOutOfRange(f"box has {len(box)} intervals for {snn.n_inputs} inputs")
    lam = snn.leak
    T = steps
    n_hidden = len(snn.hidden_sizes)
    s_lo = [np.zeros((T, n)) for n in snn.hidden_sizes]
    s_hi = [np.zeros((T, n)) for n in snn.hidden_sizes]
    g_lo = [np.zeros((T, n)) for n in snn.hidden_sizes]
    g_hi = [np.zeros((T, n)) for n in snn.hidden_sizes]
    a_lo = [np.zeros((T, n)) for n in snn.hidden_sizes]
    a_hi = [np.zeros((T, n)) for n in snn.hidden_sizes]
    p_lo = [np.zeros((T + 1, n)) for n in snn.hidden_sizes]
    p_hi = [np.zeros((T + 1, n)) for n in snn.hidden_sizes]
    big_m = [np.zeros((T, n)) for n in snn.hidden_sizes]
    out_lo = np.zeros((T, snn.n_outputs))
    out_hi = np.zeros((T, snn.n_outputs))

    for t in range(1, T + 1):
        prev_lo, prev_hi = box.lower, box.upper
        for k in range(n_hidden):
            dlo, dhi = _dot_interval(snn.weights[k], prev_lo, prev_hi)
            slo = (snn.biases[k] + dlo) / snn.thresholds[k]
            shi = (snn.biases[k] + dhi) / snn.thresholds[k]
            alo_drive = lam * p_lo[k][t - 1] + slo
            ahi_drive = lam * p_hi[k][t - 1] + shi
            spk_lo = floor_snapped(np.maximum(alo_drive, 0.0))
            spk_hi = floor_snapped(np.maximum(ahi_drive, 0.0))
            res_lo = np.maximum(alo_drive - spk_hi, np.minimum(alo_drive, 0.0))
            res_hi = np.where(
                ahi_drive <= 0.0, ahi_drive, np.minimum(ahi_drive - spk_lo, 1.0)
            )
            s_lo[k][t - 1], s_hi[k][t - 1] = slo, shi
            g_lo[k][t - 1], g_hi[k][t - 1] = alo_drive, ahi_drive
            a_lo[k][t - 1], a_hi[k][t - 1] = spk_lo, spk_hi
            p_lo[k][t], p_hi[k][t] = res_lo, res_hi
            big_m[k][t - 1] = inflate * np.maximum(np.abs(alo_drive), np.abs(ahi_drive))
            prev_lo, prev_hi = spk_lo, spk_hi
        olo, ohi = _dot_interval(snn.weights[-1], prev_lo, prev_hi)
        out_lo[t - 1] = snn.biases[-1] + olo
        out_hi[t - 1] = snn.biases[-1] + ohi

    return IntervalTable(
        s_lo, s_hi, g_lo, g_hi, a_lo, a_hi, p_lo, p_hi, big_m,
        out_lo, out_hi, out_lo.mean(axis=0), out_hi.mean(axis=0),
    )


@dataclass
class EncodedSnn:
    """A MILP carrying one full run, plus the variable id maps.

    ``input_ids[j, t-1]`` is input j's amplitude at step t; hidden id
    arrays are indexed like the interval table; ``op_ids[i]`` is the i-th
    network output.
    """

    model: MilpModel
    snn: SpikingNetwork
    steps: int
    box: InputBox
    epsilon: float
    table: IntervalTable
    input_ids: np.ndarray
    s_ids: list[np.ndarray]
    p_ids: list[np.ndarray]  # (T+1, n), row 0 is the start potential
    x_ids: list[np.ndarray]
    q_ids: list[np.ndarray]
    a_ids: list[np.ndarray]
    out_s_ids: np.ndarray
    op_ids: np.ndarray

    @property
    def n_outputs(self) -> int:
        return self.snn.n_outputs


def encode_snn(
    snn: SpikingNetwork,
    steps: int,
    box: InputBox,
    *,
    epsilon: float = 1e-6,
    big_m_inflate: float = 1.01,
    global_big_m: bool = False,
    include_biases: bool = True,
) -> EncodedSnn:
    """Build the run model.  ``global_big_m`` replaces the per-neuron,
    per-step big-M table with its single maximum; ``include_biases=False``
    drops bias terms from the instant-potential rows (only meaningful for
    zero-bias networks if the model is to agree with the simulator)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not (epsilon > 0.0):
        raise ValueError("the floor strictness constant must be positive")
    table = compute_big_m(snn, steps, box, inflate=big_m_inflate)
    T = steps
    lam = snn.leak
    n_hidden = len(snn.hidden_sizes)
    m = MilpModel(name=f"snn_T{T}")
    nudge = BOUND_NUDGE

    # global neuron ids follow the layer order: inputs, hidden, outputs
    gid_of_input = list(range(snn.n_inputs))
    gid = snn.n_inputs
    gid_of_hidden = []
    for n in snn.hidden_sizes:
        gid_of_hidden.append(list(range(gid, gid + n)))
        gid += n
    gid_of_output = list(range(gid, gid + snn.n_outputs))

    input_ids = np.zeros((snn.n_inputs, T), dtype=int)
    for j in range(snn.n_inputs):
        for t in range(1, T + 1):
            input_ids[j, t - 1] = m.add_variable(
                f"A_{gid_of_input[j]}_{t}", VarKind.CONTINUOUS,
                float(box.lower[j]), float(box.upper[j]),
            )

    s_ids, p_ids, x_ids, q_ids, a_ids = [], [], [], [], []
    for k, n in enumerate(snn.hidden_sizes):
        s_ids.append(np.zeros((T, n), dtype=int))
        p_ids.append(np.zeros((T + 1, n), dtype=int))
        x_ids.append(np.zeros((T, n), dtype=int))
        q_ids.append(np.zeros((T, n), dtype=int))
        a_ids.append(np.zeros((T, n), dtype=int))
        for i in range(n):
            g = gid_of_hidden[k][i]
            p_ids[k][0, i] = m.add_variable(f"P_{g}_0", VarKind.CONTINUOUS, 0.0, 0.0)
            for t in range(1, T + 1):
                r = t - 1
                tab = table
                s_ids[k][r, i] = m.add_variable(
                    f"S_{g}_{t}", VarKind.CONTINUOUS,
                    tab.s_lo[k][r, i] - nudge, tab.s_hi[k][r, i] + nudge,
                )
                x_ids[k][r, i] = m.add_variable(
                    f"x_{g}_{t}", VarKind.CONTINUOUS,
                    max(0.0, tab.arg_lo[k][r, i]) - nudge,
                    max(0.0, tab.arg_hi[k][r, i]) + nudge,
                )
                q_lo, q_hi = 0.0, 1.0
                if tab.arg_lo[k][r, i] > Q_FIX_MARGIN:
                    q_hi = 0.0  # the drive is provably positive
                elif tab.arg_hi[k][r, i] < -Q_FIX_MARGIN:
                    q_lo = 1.0  # the drive is provably non-positive
                q_ids[k][r, i] = m.add_variable(f"q_{g}_{t}", VarKind.BINARY, q_lo, q_hi)
                a_ids[k][r, i] = m.add_variable(
                    f"A_{g}_{t}", VarKind.INTEGER,
                    tab.a_lo[k][r, i], tab.a_hi[k][r, i],
                )
                p_ids[k][t, i] = m.add_variable(
                    f"P_{g}_{t}", VarKind.CONTINUOUS,
                    tab.p_lo[k][t, i] - nudge, tab.p_hi[k][t, i] + nudge,
                )

    out_s_ids = np.zeros((T, snn.n_outputs), dtype=int)
    for i in range(snn.n_outputs):
        g = gid_of_output[i]
        for t in range(1, T + 1):
            out_s_ids[t - 1, i] = m.add_variable(
                f"S_{g}_{t}", VarKind.CONTINUOUS,
                table.out_lo[t - 1, i] - nudge, table.out_hi[t - 1, i] + nudge,
            )
    op_ids = np.array(
        [
            m.add_variable(
                f"op_{i}", VarKind.CONTINUOUS,
                table.op_lo[i] - nudge, table.op_hi[i] + nudge,
            )
            for i in range(snn.n_outputs)
        ],
        dtype=int,
    )

    big_m = table.big_m
    if global_big_m:
        mval = table.max_big_m()
        big_m = [np.full_like(mm, mval) for mm in table.big_m]

    # input repetition: every step equals step 1
    for j in range(snn.n_inputs):
        for t in range(2, T + 1):
            m.add_constraint(
                [(int(input_ids[j, t - 1]), 1.0), (int(input_ids[j, 0]), -1.0)],
                Relation.EQ, 0.0, f"in_rep_{gid_of_input[j]}_{t}",
            )

    for k, n in enumerate(snn.hidden_sizes):
        w = snn.weights[k]
        th = snn.thresholds[k]
        b = snn.biases[k]
        for i in range(n):
            g = gid_of_hidden[k][i]
            m.add_constraint([(int(p_ids[k][0, i]), 1.0)], Relation.EQ, 0.0, f"pot0_{g}")
            for t in range(1, T + 1):
                r = t - 1
                sv = int(s_ids[k][r, i])
                xv = int(x_ids[k][r, i])
                qv = int(q_ids[k][r, i])
                av = int(a_ids[k][r, i])
                pv = int(p_ids[k][t, i])
                pprev = int(p_ids[k][t - 1, i])
                M = float(big_m[k][r, i])
                if k == 0:
                    srcs = [(int(input_ids[j, r]), j) for j in range(snn.n_inputs)]
                else:
                    srcs = [(int(a_ids[k - 1][r, j]), j) for j in range(snn.hidden_sizes[k - 1])]
                coeffs = [(sv, 1.0)] + [(vid, -w[i, j] / th[i]) for vid, j in srcs]
                rhs = b[i] / th[i] if include_biases else 0.0
                m.add_constraint(coeffs, Relation.EQ, rhs, f"inst_{g}_{t}")
                m.add_constraint(
                    [(sv, 1.0), (pprev, lam), (xv, -1.0), (qv, M)],
                    Relation.GE, 0.0, f"relu_hi_{g}_{t}",
                )
                m.add_constraint(
                    [(sv, 1.0), (pprev, lam), (xv, -1.0)],
                    Relation.LE, 0.0, f"relu_lo_{g}_{t}",
                )
                m.add_constraint([(xv, 1.0)], Relation.GE, 0.0, f"relu_pos_{g}_{t}")
                m.add_constraint(
                    [(xv, 1.0), (qv, M)], Relation.LE, M, f"relu_off_{g}_{t}",
                )
                m.add_constraint([(av, 1.0), (xv, -1.0)], Relation.LE, 0.0, f"floor_le_{g}_{t}")
                m.add_constraint(
                    [(av, 1.0), (xv, -1.0)], Relation.GE, epsilon - 1.0, f"floor_gt_{g}_{t}",
                )
                m.add_constraint(
                    [(pv, 1.0), (pprev, -lam), (sv, -1.0), (av, 1.0)],
                    Relation.EQ, 0.0, f"pot_{g}_{t}",
                )

    w_out = snn.weights[-1]
    b_out = snn.biases[-1]
    last_hidden = n_hidden - 1
    for i in range(snn.n_outputs):
        g = gid_of_output[i]
        for t in range(1, T + 1):
            r = t - 1
            coeffs = [(int(out_s_ids[r, i]), 1.0)] + [
                (int(a_ids[last_hidden][r, j]), -w_out[i, j])
                for j in range(snn.hidden_sizes[-1])
            ]
            rhs = b_out[i] if include_biases else 0.0
            m.add_constraint(coeffs, Relation.EQ, rhs, f"inst_{g}_{t}")
        coeffs = [(int(op_ids[i]), 1.0)] + [
            (int(out_s_ids[t - 1, i]), -1.0 / T) for t in range(1, T + 1)
        ]
        m.add_constraint(coeffs, Relation.EQ, 0.0, f"out_avg_{i}")

    return EncodedSnn(
        m, snn, T, box, epsilon, table,
        input_ids, s_ids, p_ids, x_ids, q_ids, a_ids, out_s_ids, op_ids,
    )


def _bounds_vector(enc: EncodedSnn, bounds: Union[float, np.ndarray]) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(bounds, dtype=float))
    if vec.shape == (1,) and enc.n_outputs != 1:
        vec = np.full(enc.n_outputs, float(vec[0]))
    if vec.shape != (enc.n_outputs,):
        raise IndexOutOfRange(f"{vec.shape[0]} bounds for {enc.n_outputs} outputs")
    return vec


def _query_big_m(enc: EncodedSnn, bound: float, i: int) -> float:
    spread = max(
        abs(enc.table.op_hi[i] - bound), abs(bound - enc.table.op_lo[i])
    )
    return 1.01 * spread + 1e-6


def encode_ub_query(
    enc: EncodedSnn, upper: Union[float, np.ndarray], output: Optional[int] = None
) -> MilpModel:
    """Append the negated upper-bound check: feasible iff some admissible
    input drives an output to or above its bound.

    ``output=i`` tests that single output; ``output=None`` adds the big-M
    disjunction over all outputs (fresh bit per output, at least one set).
    """
    bounds = _bounds_vector(enc, upper)
    m = enc.model.copy()
    if output is not None:
        if not (0 <= output < enc.n_outputs):
            raise IndexOutOfRange(f"output {output} of {enc.n_outputs}")
        m.add_constraint(
            [(int(enc.op_ids[output]), 1.0)], Relation.GE, float(bounds[output]),
            f"ub_query_{output}",
        )
        return m
    viol = [m.add_variable(f"viol_{i}", VarKind.BINARY, 0.0, 1.0) for i in range(enc.n_outputs)]
    for i in range(enc.n_outputs):
        op = int(enc.op_ids[i])
        M = _query_big_m(enc, float(bounds[i]), i)
        m.add_constraint([(op, 1.0), (viol[i], -M)], Relation.LE, float(bounds[i]), f"disj_hi_{i}")
        m.add_constraint(
            [(op, -1.0), (viol[i], M)], Relation.LE, M - float(bounds[i]), f"disj_lo_{i}",
        )
    m.add_constraint([(v, 1.0) for v in viol], Relation.GE, 1.0, "disj_any")
    return m


def encode_lb_query(
    enc: EncodedSnn, lower: Union[float, np.ndarray], output: Optional[int] = None
) -> MilpModel:
    """Mirror of the upper query: feasible iff some input drives an output
    to or below its lower bound."""
    bounds = _bounds_vector(enc, lower)
    m = enc.model.copy()
    if output is not None:
        if not (0 <= output < enc.n_outputs):
            raise IndexOutOfRange(f"output {output} of {enc.n_outputs}")
        m.add_constraint(
            [(int(enc.op_ids[output]), 1.0)], Relation.LE, float(bounds[output]),
            f"lb_query_{output}",
        )
        return m
    viol = [m.add_variable(f"viol_{i}", VarKind.BINARY, 0.0, 1.0) for i in range(enc.n_outputs)]
    for i in range(enc.n_outputs):
        op = int(enc.op_ids[i])
        M = _query_big_m(enc, float(bounds[i]), i)
        m.add_constraint([(op, -1.0), (viol[i], -M)], Relation.LE, -float(bounds[i]), f"disj_lo_{i}")
        m.add_constraint(
            [(op, 1.0), (viol[i], M)], Relation.LE, M + float(bounds[i]), f"disj_hi_{i}",
        )
    m.add_constraint([(v, 1.0) for v in viol], Relation.GE, 1.0, "disj_any")
    return m


def extract_counterexample(enc: EncodedSnn, result: SolveResult) -> tuple[np.ndarray, np.ndarray]:
    """Input vector and claimed outputs from a feasible query result."""
    if not result.is_feasible or result.assignment is None:
        raise NotFeasible("cannot extract a counterexample from a non-feasible result")
    x = np.array([result.assignment[int(enc.input_ids[j, 0])] for j in range(enc.snn.n_inputs)])
    ops = np.array([result.assignment[int(v)] for v in enc.op_ids])
    return x, ops


def trace_assignment(enc: EncodedSnn, trace: SimulationTrace) -> dict[int, float]:
    """Variable assignment induced by a simulation trace (gate bit q set to
    1 exactly when the drive was non-positive)."""
    if trace.steps != enc.steps:
        raise ValueError("trace length differs from the encoded run length")
    a: dict[int, float] = {}
    for j in range(enc.snn.n_inputs):
        for t in range(enc.steps):
            a[int(enc.input_ids[j, t])] = float(trace.input[j])
    for k in range(len(enc.snn.hidden_sizes)):
        for i in range(enc.snn.hidden_sizes[k]):
            a[int(enc.p_ids[k][0, i])] = 0.0
            for t in range(enc.steps):
                drive = trace.drive[k][t, i]
                a[int(enc.s_ids[k][t, i])] = float(trace.instant[k][t, i])
                a[int(enc.x_ids[k][t, i])] = float(max(drive, 0.0))
                a[int(enc.q_ids[k][t, i])] = 1.0 if drive <= 0.0 else 0.0
                a[int(enc.a_ids[k][t, i])] = float(trace.spikes[k][t, i])
                a[int(enc.p_ids[k][t + 1, i])] = float(trace.membrane[k][t + 1, i])
    for i in range(enc.snn.n_outputs):
        for t in range(enc.steps):
            a[int(enc.out_s_ids[t, i])] = float(trace.out_instant[t, i])
        a[int(enc.op_ids[i])] = float(trace.out_avg[-1, i])
    return a
