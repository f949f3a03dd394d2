"""ReLU-network to spiking-network translation and control-period arithmetic."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .model import InvalidLeak, InvalidTheta, LayeredNetwork, SnnVerifyError, SpikingNetwork


class StepExceedsPeriod(SnnVerifyError):
    """Single-step execution time longer than the control period."""


def ann_to_snn(ann: LayeredNetwork, theta: float = 1.0, leak: float = 1.0) -> SpikingNetwork:
    """Swap ReLU activations for spiking ones, keeping weights and biases.

    Every hidden neuron receives the same threshold ``theta``; output
    neurons stay linear accumulators with no threshold.
    """
    if theta <= 0:
        raise InvalidTheta(f"theta must be positive, got {theta}")
    if not (0.0 <= leak <= 1.0):
        raise InvalidLeak(f"leak must lie in [0, 1], got {leak}")
    thresholds = tuple(np.full(n, float(theta)) for n in ann.hidden_sizes)
    return SpikingNetwork(ann.layer_sizes, ann.weights, ann.biases, thresholds, float(leak))


def compute_t_up(control_period_s: float, step_time_s: float) -> int:
    """Largest step count fitting in the control period: floor(p / e).

    Compared as exact decimals so that e.g. 0.05 / 0.002 is 25, not 24.
    """
    if control_period_s <= 0 or step_time_s <= 0:
        raise ValueError("period and step time must be positive")
    if step_time_s > control_period_s:
        raise StepExceedsPeriod(f"step time {step_time_s} exceeds period {control_period_s}")
    ratio = Fraction(str(control_period_s)) / Fraction(str(step_time_s))
    return int(ratio.numerator // ratio.denominator)
