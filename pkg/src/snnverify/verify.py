"""Simulation-then-formal safe-range verification.

A range check first executes the network on the sampled dataset (cheap);
only when no sample violates the range does it fall back to the exhaustive
MILP queries.  The lower-bound query runs before the upper-bound query,
a feasible query yields an Unsafe verdict with the witness input, both
infeasible yield Safe, and a solver timeout propagates as Unknown rather
than being folded into either answer.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Union

import numpy as np

from . import milp
from .encode import EncodedSnn, encode_lb_query, encode_snn, encode_ub_query, extract_counterexample
from .model import (
    Counterexample,
    Dataset,
    InputBox,
    Provenance,
    RangeSpec,
    SnnVerifyError,
    SpikingNetwork,
    Verdict,
    VerdictKind,
)
from .sim import find_violation, snn_run

AGREE_TOL = 1e-6


class NotUnsafe(SnnVerifyError):
    """Counterexample check called on a verdict that is not Unsafe."""


def _verdict_from_result(
    enc: EncodedSnn,
    result: milp.SolveResult,
    bounds: np.ndarray,
    side: str,
    output: Optional[int],
) -> Verdict:
    if result.status is milp.SolveStatus.TIMEOUT:
        return Verdict(VerdictKind.UNKNOWN, detail=f"solver timeout on {side} query")
    if result.status is milp.SolveStatus.INFEASIBLE:
        return Verdict(VerdictKind.SAFE, provenance=Provenance.FORMAL)
    x, ops = extract_counterexample(enc, result)
    if output is not None:
        idx = output
    else:
        # lowest violated output index; the query guarantees at least one
        if side == "upper":
            hits = np.nonzero(ops >= bounds - AGREE_TOL)[0]
            idx = int(hits[0]) if hits.size else int(np.argmax(ops - bounds))
        else:
            hits = np.nonzero(ops <= bounds + AGREE_TOL)[0]
            idx = int(hits[0]) if hits.size else int(np.argmin(ops - bounds))
    cex = Counterexample(
        input=tuple(float(v) for v in x),
        outputs=tuple(float(v) for v in ops),
        index=idx,
        side=side,
        bound=float(bounds[idx]),
    )
    return Verdict(VerdictKind.UNSAFE, cex, Provenance.FORMAL)


def fv_ub(
    enc: EncodedSnn,
    upper: Union[float, np.ndarray],
    output: Optional[int] = None,
    budget: Optional[float] = None,
) -> Verdict:
    """Formally check the safe upper bounds on the encoded run."""
    model = encode_ub_query(enc, upper, output)
    result = milp.solve(model, budget)
    bounds = np.atleast_1d(np.asarray(upper, dtype=float))
    if bounds.shape == (1,) and enc.n_outputs != 1:
        bounds = np.full(enc.n_outputs, float(bounds[0]))
    return _verdict_from_result(enc, result, bounds, "upper", output)


def fv_lb(
    enc: EncodedSnn,
    lower: Union[float, np.ndarray],
    output: Optional[int] = None,
    budget: Optional[float] = None,
) -> Verdict:
    """Formally check the safe lower bounds on the encoded run."""
    model = encode_lb_query(enc, lower, output)
    result = milp.solve(model, budget)
    bounds = np.atleast_1d(np.asarray(lower, dtype=float))
    if bounds.shape == (1,) and enc.n_outputs != 1:
        bounds = np.full(enc.n_outputs, float(bounds[0]))
    return _verdict_from_result(enc, result, bounds, "lower", output)


def _combine(lb_verdict: Verdict, ub_verdict: Verdict) -> Verdict:
    if lb_verdict.is_unsafe:
        return lb_verdict
    if ub_verdict.is_unsafe:
        return ub_verdict
    if lb_verdict.kind is VerdictKind.UNKNOWN:
        return lb_verdict
    if ub_verdict.kind is VerdictKind.UNKNOWN:
        return ub_verdict
    return Verdict(VerdictKind.SAFE, provenance=Provenance.FORMAL)


def fv(
    snn: SpikingNetwork,
    steps: int,
    box: InputBox,
    spec: RangeSpec,
    budget: Optional[float] = None,
    *,
    enc: Optional[EncodedSnn] = None,
    jobs: int = 1,
) -> Verdict:
    """Encode once, check lower then upper bounds (disjunctive queries).

    With ``jobs >= 2`` the two queries solve concurrently on copies of the
    base model; the combined verdict still prefers the lower-bound witness.
    """
    if len(spec) != snn.n_outputs:
        raise ValueError(f"range has {len(spec)} intervals for {snn.n_outputs} outputs")
    if enc is None:
        enc = encode_snn(snn, steps, box)
    if jobs >= 2:
        with ThreadPoolExecutor(max_workers=2) as pool:
            f_lb = pool.submit(fv_lb, enc, spec.lower, None, budget)
            f_ub = pool.submit(fv_ub, enc, spec.upper, None, budget)
            return _combine(f_lb.result(), f_ub.result())
    lb_verdict = fv_lb(enc, spec.lower, None, budget)
    if lb_verdict.is_unsafe:
        return lb_verdict
    ub_verdict = fv_ub(enc, spec.upper, None, budget)
    return _combine(lb_verdict, ub_verdict)


def verify(
    snn: SpikingNetwork,
    steps: int,
    dataset: Dataset,
    box: InputBox,
    spec: RangeSpec,
    budget: Optional[float] = None,
    *,
    jobs: int = 1,
) -> Verdict:
    """Simulation pass over the dataset first; formal check only if clean."""
    hit = find_violation(snn, steps, dataset, spec)
    if hit is not None:
        return hit
    return fv(snn, steps, box, spec, budget, jobs=jobs)


def check_counterexample(
    snn: SpikingNetwork, steps: int, verdict: Verdict, tol: float = AGREE_TOL
) -> bool:
    """Re-simulate a counterexample and confirm it reproduces the violation.

    True iff the fresh outputs agree with the claimed ones within ``tol``
    and the recorded output still sits on the wrong side of its bound.
    """
    if not verdict.is_unsafe or verdict.counterexample is None:
        raise NotUnsafe("verdict carries no counterexample")
    cex = verdict.counterexample
    outs = snn_run(snn, np.asarray(cex.input, dtype=float), steps).outputs()
    if np.max(np.abs(outs - np.asarray(cex.outputs))) > tol:
        return False
    val = outs[cex.index]
    if cex.side == "upper":
        return bool(val >= cex.bound - tol)
    return bool(val <= cex.bound + tol)
