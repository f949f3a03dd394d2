"""Counterexample-seeded output-bound tightening.

Each violated bound is first pushed outward in fixed increments until the
formal check accepts it, then squeezed back with a randomised binary
search: the candidate is drawn uniformly from the open bracket (kept a
tightness-width away from the violated end), cheap dataset probes rule
out candidates before any solver call, and a solver timeout conservatively
keeps the bracket wide.  The search returns the verified end of a bracket
no wider than the tightness parameter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .encode import EncodedSnn, encode_snn
from .model import Dataset, InputBox, RangeSpec, SpikingNetwork, Verdict
from .sim import snn_outputs
from .verify import fv_lb, fv_ub


# the bracket can only approach width delta asymptotically when the true
# extremum is exactly attainable (the violated end converges to it), so the
# loop accepts widths within float noise of delta
CONVERGE_SLACK = 1e-12


@dataclass
class TightenConfig:
    """Knobs for the expansion and search phases.

    expansion_steps is the cap on outward increments of size ``beta``;
    ``delta`` is the accepted bracket width (beta > delta > 0).  ``probe``
    is the dataset simulated before each solver call.
    """

    expansion_steps: int = 5
    beta: float = 0.01
    delta: float = 0.001
    budget: Optional[float] = None
    seed: int = 0
    probe: Optional[Dataset] = None
    max_search_iters: int = 1000

    def __post_init__(self):
        if self.expansion_steps < 1:
            raise ValueError("expansion_steps must be >= 1")
        if not (self.beta > self.delta > 0.0):
            raise ValueError("need beta > delta > 0")


@dataclass
class TightenEvent:
    output: int
    side: str
    phase: int
    iteration: int
    candidate: float
    verdict: str  # safe | unsafe | unknown | probe-violation
    elapsed: float


@dataclass
class TightenResult:
    bound: float
    verified: bool  # the returned bound carries a formal Safe certificate
    converged: bool  # final bracket width <= delta
    width: float
    events: list[TightenEvent] = field(default_factory=list)


def _probe_values(enc: EncodedSnn, cfg: TightenConfig, output: int) -> np.ndarray:
    if cfg.probe is None or len(cfg.probe) == 0:
        return np.empty(0)
    return snn_outputs(enc.snn, cfg.probe.inputs, enc.steps)[:, output]


def find_ub(
    enc: EncodedSnn, output: int, upper: float, cfg: TightenConfig
) -> TightenResult:
    """Tighten a violated upper bound to within delta above the true one."""
    rng = np.random.default_rng([cfg.seed, output, 0])
    probe = _probe_values(enc, cfg, output)
    probe_max = probe.max() if probe.size else -np.inf
    events: list[TightenEvent] = []
    t0 = time.monotonic()

    def log(phase: int, it: int, cand: float, verdict: str) -> None:
        events.append(TightenEvent(output, "upper", phase, it, cand, verdict, time.monotonic() - t0))

    ce = float(upper)
    vio = ce
    safe_found = False
    for k in range(1, cfg.expansion_steps + 1):
        vio = ce
        ce = ce + cfg.beta
        verdict = fv_ub(enc, ce, output, cfg.budget)
        log(1, k, ce, verdict.kind.value)
        if verdict.is_safe:
            safe_found = True
            break
    if not safe_found:
        # never reached a verified bound: report the last candidate unverified
        return TightenResult(ce, False, False, ce - vio, events)

    left, right = vio, ce
    it = 0
    while right - left > cfg.delta + CONVERGE_SLACK and it < cfg.max_search_iters:
        it += 1
        mid = float(rng.uniform(left + cfg.delta, right))
        if probe_max > mid:
            log(2, it, mid, "probe-violation")
            left = mid
            continue
        verdict = fv_ub(enc, mid, output, cfg.budget)
        log(2, it, mid, verdict.kind.value)
        if verdict.is_safe:
            right = mid
        else:
            # unsafe, or unknown treated conservatively: keep the bracket wide
            left = mid
    return TightenResult(
        right, True, right - left <= cfg.delta + CONVERGE_SLACK, right - left, events
    )


def find_lb(
    enc: EncodedSnn, output: int, lower: float, cfg: TightenConfig
) -> TightenResult:
    """Mirror search: tighten a violated lower bound to within delta below."""
    rng = np.random.default_rng([cfg.seed, output, 1])
    probe = _probe_values(enc, cfg, output)
    probe_min = probe.min() if probe.size else np.inf
    events: list[TightenEvent] = []
    t0 = time.monotonic()

    def log(phase: int, it: int, cand: float, verdict: str) -> None:
        events.append(TightenEvent(output, "lower", phase, it, cand, verdict, time.monotonic() - t0))

    ce = float(lower)
    vio = ce
    safe_found = False
    for k in range(1, cfg.expansion_steps + 1):
        vio = ce
        ce = ce - cfg.beta
        verdict = fv_lb(enc, ce, output, cfg.budget)
        log(1, k, ce, verdict.kind.value)
        if verdict.is_safe:
            safe_found = True
            break
    if not safe_found:
        return TightenResult(ce, False, False, vio - ce, events)

    good, bad = ce, vio  # good < bad; the violated marker moves down
    it = 0
    while bad - good > cfg.delta + CONVERGE_SLACK and it < cfg.max_search_iters:
        it += 1
        mid = float(rng.uniform(good, bad - cfg.delta))
        if probe_min < mid:
            log(2, it, mid, "probe-violation")
            bad = mid
            continue
        verdict = fv_lb(enc, mid, output, cfg.budget)
        log(2, it, mid, verdict.kind.value)
        if verdict.is_safe:
            good = mid
        else:
            bad = mid
    return TightenResult(
        good, True, bad - good <= cfg.delta + CONVERGE_SLACK, bad - good, events
    )


@dataclass
class TightenedRange:
    """Per-output tightened bounds plus the per-side search outcomes."""

    range: RangeSpec
    sides: dict[tuple[int, str], TightenResult]

    def events(self) -> list[TightenEvent]:
        out: list[TightenEvent] = []
        for res in self.sides.values():
            out.extend(res.events)
        return out

    def all_verified(self) -> bool:
        return all(r.verified for r in self.sides.values())


def _cex_violates(verdict: Optional[Verdict], i: int, side: str, spec: RangeSpec) -> bool:
    if verdict is None or not verdict.is_unsafe or verdict.counterexample is None:
        return False
    outs = verdict.counterexample.outputs
    if i >= len(outs):
        return False
    if side == "upper":
        return outs[i] >= spec.upper[i] - 1e-6
    return outs[i] <= spec.lower[i] + 1e-6


def snn_bounds(
    snn: SpikingNetwork,
    steps: int,
    box: InputBox,
    spec: RangeSpec,
    cfg: TightenConfig,
    verdict: Optional[Verdict] = None,
    *,
    enc: Optional[EncodedSnn] = None,
) -> TightenedRange:
    """Tighten every violated side of the given range; untouched sides keep
    their given values.

    A side counts as violated when the recorded counterexample (if any)
    breaks it or a fresh single-output formal check does.
    """
    if enc is None:
        enc = encode_snn(snn, steps, box)
    lower = spec.lower.copy()
    upper = spec.upper.copy()
    sides: dict[tuple[int, str], TightenResult] = {}
    for i in range(snn.n_outputs):
        ub_bad = _cex_violates(verdict, i, "upper", spec)
        if not ub_bad:
            ub_bad = fv_ub(enc, float(spec.upper[i]), i, cfg.budget).is_unsafe
        if ub_bad:
            res = find_ub(enc, i, float(spec.upper[i]), cfg)
            upper[i] = res.bound
            sides[(i, "upper")] = res
        lb_bad = _cex_violates(verdict, i, "lower", spec)
        if not lb_bad:
            lb_bad = fv_lb(enc, float(spec.lower[i]), i, cfg.budget).is_unsafe
        if lb_bad:
            res = find_lb(enc, i, float(spec.lower[i]), cfg)
            lower[i] = res.bound
            sides[(i, "lower")] = res
    return TightenedRange(RangeSpec(lower, upper), sides)
