"""Smallest-temporal-window selection.

Walk T upward from 1: a cheap per-output MSE gate (strict `<` against the
accuracy bound) must pass before any verification runs; a Safe verdict
ends the search, an Unsafe one triggers bound tightening and an optional
margin-inflated acceptability test on the tightened range.  Both datasets
are sampled once per run so MSE trends across T stay comparable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import milp
from .model import InputBox, LayeredNetwork, RangeSpec, SpikingNetwork, Verdict, VerdictKind
from .sim import mse, sample_inputs
from .tighten import TightenConfig, TightenedRange, snn_bounds
from .verify import verify


@dataclass
class SearchConfig:
    eps: float
    t_up: int
    mse_samples: int = 5000
    sim_samples: int = 500
    margin: float = 0.0
    budget: Optional[float] = None
    seed: int = 0
    jobs: int = 1
    tighten: TightenConfig = field(default_factory=TightenConfig)

    def __post_init__(self):
        if self.t_up < 1:
            raise ValueError("t_up must be >= 1")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")


@dataclass
class TRecord:
    """One visited window length with everything observed there."""

    steps: int
    mse: tuple[float, ...]
    gate_passed: bool
    verdict: Optional[Verdict] = None
    tightened: Optional[TightenedRange] = None
    acceptable: Optional[bool] = None
    solver_calls: int = 0
    wall_time: float = 0.0


FOUND = "found"
FOUND_RELAXED = "found_with_relaxed_range"
NOT_FOUND = "not_found"


@dataclass
class SearchOutcome:
    kind: str
    steps: Optional[int] = None
    range: Optional[RangeSpec] = None


@dataclass
class SearchReport:
    records: list[TRecord]
    outcome: SearchOutcome
    given: RangeSpec
    eps: float
    seed: int

    def found_steps(self) -> Optional[int]:
        return self.outcome.steps


def acceptable(tightened: RangeSpec, given: RangeSpec, margin: float = 0.0) -> bool:
    """Containment of the tightened range in the margin-inflated given one.

    Margin 0 is plain interval containment, so any outward move fails.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    width = given.upper - given.lower
    lo = given.lower - margin * width
    hi = given.upper + margin * width
    return bool(np.all(lo <= tightened.lower) and np.all(tightened.upper <= hi))


def find_numsteps(
    ann: LayeredNetwork,
    snn: SpikingNetwork,
    eps: float,
    box: InputBox,
    spec: RangeSpec,
    t_up: int,
    cfg: Optional[SearchConfig] = None,
) -> SearchReport:
    """Smallest T <= t_up meeting the accuracy gate and the safe range."""
    if cfg is None:
        cfg = SearchConfig(eps=eps, t_up=t_up)
    mse_ds = sample_inputs(box, cfg.mse_samples, cfg.seed)
    ver_ds = sample_inputs(box, cfg.sim_samples, cfg.seed + 1)
    tcfg = cfg.tighten
    if tcfg.probe is None:
        tcfg = TightenConfig(
            expansion_steps=tcfg.expansion_steps,
            beta=tcfg.beta,
            delta=tcfg.delta,
            budget=tcfg.budget if tcfg.budget is not None else cfg.budget,
            seed=tcfg.seed or cfg.seed,
            probe=ver_ds,
            max_search_iters=tcfg.max_search_iters,
        )

    records: list[TRecord] = []
    outcome = SearchOutcome(NOT_FOUND)
    for steps in range(1, t_up + 1):
        t0 = time.monotonic()
        calls0 = milp.solve_calls()
        errs = mse(mse_ds, ann, snn, steps)
        rec = TRecord(steps=steps, mse=tuple(float(e) for e in errs), gate_passed=False)
        if not bool(np.all(errs < eps)):
            rec.wall_time = time.monotonic() - t0
            rec.solver_calls = milp.solve_calls() - calls0
            records.append(rec)
            continue
        rec.gate_passed = True
        verdict = verify(snn, steps, ver_ds, box, spec, cfg.budget, jobs=cfg.jobs)
        rec.verdict = verdict
        if verdict.kind is VerdictKind.SAFE:
            outcome = SearchOutcome(FOUND, steps)
        elif verdict.is_unsafe:
            tight = snn_bounds(snn, steps, box, spec, tcfg, verdict)
            rec.tightened = tight
            rec.acceptable = acceptable(tight.range, spec, cfg.margin)
            if rec.acceptable:
                outcome = SearchOutcome(FOUND_RELAXED, steps, tight.range)
        # Unknown: cannot certify this T, move on
        rec.solver_calls = milp.solve_calls() - calls0
        rec.wall_time = time.monotonic() - t0
        records.append(rec)
        if outcome.kind != NOT_FOUND:
            break
    return SearchReport(records, outcome, spec, eps, cfg.seed)
