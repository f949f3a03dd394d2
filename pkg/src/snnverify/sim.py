"""Exact forward execution of ReLU networks and their spiking translations.

A hidden spiking neuron accumulates a threshold-scaled instant potential
each step, fires with the floored ReLU of (leak * membrane + instant) and
keeps the remainder as membrane potential.  Output neurons carry no state:
the network output after t steps is the running mean of their instant
potentials.  The same input vector is presented at every step.

Floors of values within 1e-9 of an integer snap to that integer first, so
simulated traces stay consistent with constraint-level witnesses computed
in exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    Counterexample,
    Dataset,
    InputBox,
    LayeredNetwork,
    Provenance,
    RangeSpec,
    SnnVerifyError,
    SpikingNetwork,
    Verdict,
    VerdictKind,
)

SNAP_TOL = 1e-9


class DimensionMismatch(SnnVerifyError):
    """Input vector length does not match the network's input layer."""


class EmptyDataset(SnnVerifyError):
    """Operation requires at least one sample."""


def floor_snapped(x: np.ndarray) -> np.ndarray:
    """Elementwise floor, snapping values within 1e-9 of an integer first."""
    x = np.asarray(x, dtype=float)
    nearest = np.rint(x)
    return np.where(np.abs(x - nearest) <= SNAP_TOL, nearest, np.floor(x))


def ann_forward(net: LayeredNetwork, x: np.ndarray) -> np.ndarray:
    """Dense forward pass: ReLU on hidden layers, affine output layer."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.n_inputs:
        raise DimensionMismatch(f"input has {x.shape[-1]} entries, network takes {net.n_inputs}")
    a = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w.T + b
        if k != last:
            a = np.maximum(a, 0.0)
    return a


@dataclass
class SnnState:
    """Mutable run state: per-hidden-layer membrane potentials, the step
    counter, and the cumulative sum of output instant potentials."""

    membrane: list[np.ndarray]
    t: int
    out_sum: np.ndarray

    @classmethod
    def initial(cls, snn: SpikingNetwork) -> "SnnState":
        return cls(
            membrane=[np.zeros(n) for n in snn.hidden_sizes],
            t=0,
            out_sum=np.zeros(snn.n_outputs),
        )


@dataclass
class StepValues:
    """Per-step quantities produced by one simulation step.

    ``drive[k]`` is leak * membrane + instant for hidden layer k (the ReLU
    argument); spikes are its snapped-floor rectification.
    """

    instant: list[np.ndarray]
    drive: list[np.ndarray]
    spikes: list[np.ndarray]
    out_instant: np.ndarray


def snn_step(snn: SpikingNetwork, state: SnnState, x: np.ndarray) -> tuple[SnnState, StepValues]:
    """Advance one timestep; returns the new state and the step's values."""
    x = np.asarray(x, dtype=float)
    if x.shape != (snn.n_inputs,):
        raise DimensionMismatch(f"input has shape {x.shape}, expected ({snn.n_inputs},)")
    lam = snn.leak
    a_prev = x  # input neurons emit their real value
    instant, drive, spikes = [], [], []
    new_membrane = []
    n_hidden_layers = len(snn.hidden_sizes)
    for k in range(n_hidden_layers):
        s = (snn.biases[k] + snn.weights[k] @ a_prev) / snn.thresholds[k]
        arg = lam * state.membrane[k] + s
        a = floor_snapped(np.maximum(arg, 0.0))
        p = arg - a
        # a snapped-up floor can leave a ~-1e-9 residue; the residue is 0
        p = np.where((a > 0) & (p < 0), 0.0, p)
        instant.append(s)
        drive.append(arg)
        spikes.append(a)
        new_membrane.append(p)
        a_prev = a
    out_instant = snn.biases[-1] + snn.weights[-1] @ a_prev
    new_state = SnnState(new_membrane, state.t + 1, state.out_sum + out_instant)
    return new_state, StepValues(instant, drive, spikes, out_instant)


@dataclass
class SimulationTrace:
    """Full record of a run: per hidden layer, arrays indexed [t-1, neuron]
    for instant potential, ReLU drive, spike amplitude, and [t, neuron] for
    membrane potential (row 0 is the all-zero start).  Output rows hold the
    instant values and their running means."""

    input: np.ndarray
    steps: int
    instant: list[np.ndarray]
    drive: list[np.ndarray]
    spikes: list[np.ndarray]
    membrane: list[np.ndarray]
    out_instant: np.ndarray
    out_avg: np.ndarray

    def outputs(self) -> np.ndarray:
        """Final network outputs op_i(T)."""
        return self.out_avg[-1]

    def pre_reset(self, layer: int, t: int) -> np.ndarray:
        """ReLU drive of hidden layer ``layer`` at step t (1-based)."""
        return self.drive[layer][t - 1]


def snn_run(snn: SpikingNetwork, x: np.ndarray, steps: int) -> SimulationTrace:
    """Run ``steps`` timesteps on the repeated input and record everything."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x, dtype=float)
    state = SnnState.initial(snn)
    inst = [np.empty((steps, n)) for n in snn.hidden_sizes]
    drv = [np.empty((steps, n)) for n in snn.hidden_sizes]
    spk = [np.empty((steps, n)) for n in snn.hidden_sizes]
    mem = [np.zeros((steps + 1, n)) for n in snn.hidden_sizes]
    out_inst = np.empty((steps, snn.n_outputs))
    out_avg = np.empty((steps, snn.n_outputs))
    for t in range(1, steps + 1):
        state, vals = snn_step(snn, state, x)
        for k in range(len(snn.hidden_sizes)):
            inst[k][t - 1] = vals.instant[k]
            drv[k][t - 1] = vals.drive[k]
            spk[k][t - 1] = vals.spikes[k]
            mem[k][t] = state.membrane[k]
        out_inst[t - 1] = vals.out_instant
        out_avg[t - 1] = state.out_sum / t
    return SimulationTrace(x, steps, inst, drv, spk, mem, out_inst, out_avg)


def snn_outputs(snn: SpikingNetwork, inputs: np.ndarray, steps: int) -> np.ndarray:
    """Vectorised final outputs for a batch of inputs, one row per sample."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != snn.n_inputs:
        raise DimensionMismatch(f"batch shape {inputs.shape} incompatible with {snn.n_inputs} inputs")
    lam = snn.leak
    membrane = [np.zeros((inputs.shape[0], n)) for n in snn.hidden_sizes]
    out_sum = np.zeros((inputs.shape[0], snn.n_outputs))
    for _ in range(steps):
        a_prev = inputs
        for k in range(len(snn.hidden_sizes)):
            s = (a_prev @ snn.weights[k].T + snn.biases[k]) / snn.thresholds[k]
            arg = lam * membrane[k] + s
            a = floor_snapped(np.maximum(arg, 0.0))
            p = arg - a
            membrane[k] = np.where((a > 0) & (p < 0), 0.0, p)
            a_prev = a
        out_sum += a_prev @ snn.weights[-1].T + snn.biases[-1]
    return out_sum / steps


def mse(dataset: Dataset, ann: LayeredNetwork, snn: SpikingNetwork, steps: int) -> np.ndarray:
    """Per-output mean squared error between the two networks over a dataset."""
    if len(dataset) == 0:
        raise EmptyDataset("mse needs a non-empty dataset")
    ref = ann_forward(ann, dataset.inputs)
    got = snn_outputs(snn, dataset.inputs, steps)
    return np.mean((ref - got) ** 2, axis=0)


def sample_inputs(box: InputBox, n: int, seed: int) -> Dataset:
    """Draw n inputs uniformly per coordinate from the box; deterministic."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(box.lower, box.upper, size=(n, len(box)))
    # rng.uniform(a, a) is a, but keep degenerate coordinates bit-exact
    fixed = box.lower == box.upper
    if np.any(fixed):
        pts[:, fixed] = box.lower[fixed]
    return Dataset(pts, seed=seed)


def violations(outputs: np.ndarray, spec: RangeSpec) -> np.ndarray:
    """Boolean mask of samples whose outputs leave the safe range.

    Boundary contact counts as a violation (outputs <= lower or >= upper),
    matching the non-strict formal queries.
    """
    return np.any((outputs <= spec.lower) | (outputs >= spec.upper), axis=1)


def find_violation(
    snn: SpikingNetwork, steps: int, dataset: Dataset, spec: RangeSpec
) -> Optional[Verdict]:
    """First dataset sample (lowest index) whose output leaves the range."""
    if len(dataset) == 0:
        return None
    outs = snn_outputs(snn, dataset.inputs, steps)
    mask = violations(outs, spec)
    hits = np.nonzero(mask)[0]
    if hits.size == 0:
        return None
    i = int(hits[0])
    out = outs[i]
    low = np.nonzero(out <= spec.lower)[0]
    if low.size:
        j = int(low[0])
        side, bound = "lower", float(spec.lower[j])
    else:
        j = int(np.nonzero(out >= spec.upper)[0][0])
        side, bound = "upper", float(spec.upper[j])
    cex = Counterexample(
        input=tuple(float(v) for v in dataset.inputs[i]),
        outputs=tuple(float(v) for v in out),
        index=j,
        side=side,
        bound=bound,
    )
    return Verdict(VerdictKind.UNSAFE, cex, Provenance.SIMULATION)


def format_trace(trace: SimulationTrace) -> str:
    """Tab-separated trace dump: one row per neuron per timestep.

    Columns: neuron id, t, instant potential S, membrane potential P,
    spike amplitude A.  Input neurons list their value under A; output
    neurons list the instant value under S and the running mean under P.
    """
    n_in = trace.input.shape[0]
    lines = ["neuron\tt\tS\tP\tA"]
    for t in range(1, trace.steps + 1):
        gid = 0
        for j in range(n_in):
            lines.append(f"N{gid}\t{t}\t\t\t{trace.input[j]:.9g}")
            gid += 1
        for k, layer in enumerate(trace.instant):
            for i in range(layer.shape[1]):
                s = trace.instant[k][t - 1, i]
                p = trace.membrane[k][t, i]
                a = trace.spikes[k][t - 1, i]
                lines.append(f"N{gid}\t{t}\t{s:.9g}\t{p:.9g}\t{a:.9g}")
                gid += 1
        for i in range(trace.out_instant.shape[1]):
            s = trace.out_instant[t - 1, i]
            avg = trace.out_avg[t - 1, i]
            lines.append(f"N{gid}\t{t}\t{s:.9g}\t{avg:.9g}\t")
            gid += 1
    return "\n".join(lines) + "\n"
