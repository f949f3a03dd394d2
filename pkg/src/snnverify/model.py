"""Domain types for networks, ranges, datasets and verdicts, plus file I/O.

Network files are JSON with fields ``layer_sizes``, ``weights`` (one
row-major matrix per layer), ``biases`` (one vector per layer) and
``activation``.  Spiking-network files additionally carry ``thresholds``
(one vector per hidden layer) and ``leak``, with activation
``spiking_relu``.  Range and box files are JSON lists of ``[lo, hi]``
pairs (a single flat pair is accepted for one-dimensional cases).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np


class SnnVerifyError(Exception):
    """Base class for toolkit errors."""


class ParseError(SnnVerifyError):
    """File content is not a valid document of the expected schema."""


class ShapeError(SnnVerifyError):
    """Matrix/vector dimensions are inconsistent with the layer sizes."""


class UnsupportedActivation(SnnVerifyError):
    """Network declares an activation this toolkit does not handle."""


class CountMismatch(SnnVerifyError):
    """File provides a different number of entries than required."""


class DegenerateInterval(SnnVerifyError):
    """A range interval has lo >= hi."""


def _as_float_matrix(obj, what: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: not a numeric array") from exc
    if arr.ndim != 2:
        raise ShapeError(f"{what}: expected a matrix, got ndim={arr.ndim}")
    return arr


def _as_float_vector(obj, what: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: not a numeric array") from exc
    if arr.ndim != 1:
        raise ShapeError(f"{what}: expected a vector, got ndim={arr.ndim}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LayeredNetwork:
    """Dense feed-forward ReLU network.

    ``weights[k]`` maps layer k to layer k+1 and has shape
    (layer_sizes[k+1], layer_sizes[k]); ``biases[k]`` has length
    layer_sizes[k+1].  Hidden layers use ReLU, the output layer is affine.
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = self.layer_sizes
        if len(sizes) < 3:
            raise ShapeError("network needs at least one hidden layer")
        if any(s < 1 for s in sizes):
            raise ShapeError("all layer sizes must be >= 1")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("need one weight matrix and one bias vector per layer transition")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[k + 1], sizes[k]):
                raise ShapeError(
                    f"weight matrix {k} has shape {w.shape}, expected {(sizes[k + 1], sizes[k])}"
                )
            if b.shape != (sizes[k + 1],):
                raise ShapeError(f"bias vector {k} has length {b.shape[0]}, expected {sizes[k + 1]}")
        for w in self.weights:
            _freeze(w)
        for b in self.biases:
            _freeze(b)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return self.layer_sizes[1:-1]


@dataclass(frozen=True, eq=False)
class SpikingNetwork:
    """Spiking network sharing a LayeredNetwork's topology.

    Hidden neurons spike with floor-of-ReLU amplitudes scaled by a per-neuron
    threshold; output neurons are plain linear accumulators (no threshold,
    no state).  ``thresholds[k]`` holds the positive thresholds of hidden
    layer k; ``leak`` is the fraction of membrane potential retained per step.
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    thresholds: tuple[np.ndarray, ...]
    leak: float

    def __post_init__(self):
        # reuse the structural checks via a throwaway LayeredNetwork
        LayeredNetwork(self.layer_sizes, self.weights, self.biases)
        hidden = self.layer_sizes[1:-1]
        if len(self.thresholds) != len(hidden):
            raise ShapeError("need one threshold vector per hidden layer")
        for k, th in enumerate(self.thresholds):
            if th.shape != (hidden[k],):
                raise ShapeError(f"threshold vector {k} has length {th.shape[0]}, expected {hidden[k]}")
            if np.any(th <= 0):
                raise InvalidTheta("thresholds must be positive")
            _freeze(th)
        if not (0.0 <= self.leak <= 1.0):
            raise InvalidLeak(f"leak must lie in [0, 1], got {self.leak}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return self.layer_sizes[1:-1]


class InvalidTheta(SnnVerifyError):
    """Threshold outside (0, inf)."""


class InvalidLeak(SnnVerifyError):
    """Leak factor outside [0, 1]."""


@dataclass(frozen=True, eq=False)
class RangeSpec:
    """Per-output closed safe intervals [lower[i], upper[i]]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_float_vector(self.lower, "range lower bounds")
        hi = _as_float_vector(self.upper, "range upper bounds")
        if lo.shape != hi.shape:
            raise ShapeError("range bound vectors differ in length")
        bad = np.nonzero(~(lo < hi))[0]
        if bad.size:
            i = int(bad[0])
            raise DegenerateInterval(f"interval {i} has lo={lo[i]} >= hi={hi[i]}")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))

    def __len__(self) -> int:
        return self.lower.shape[0]

    def within(self, outer: "RangeSpec") -> bool:
        """Interval containment: every [lo, hi] lies inside outer's interval."""
        return bool(np.all(outer.lower <= self.lower) and np.all(self.upper <= outer.upper))


@dataclass(frozen=True, eq=False)
class InputBox:
    """Per-input closed intervals; fixed inputs are degenerate (lo == hi)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_float_vector(self.lower, "box lower bounds")
        hi = _as_float_vector(self.upper, "box upper bounds")
        if lo.shape != hi.shape:
            raise ShapeError("box bound vectors differ in length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ParseError("box bounds must be finite")
        bad = np.nonzero(lo > hi)[0]
        if bad.size:
            i = int(bad[0])
            raise DegenerateInterval(f"box interval {i} has lo={lo[i]} > hi={hi[i]}")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))

    def __len__(self) -> int:
        return self.lower.shape[0]

    def contains_point(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def is_point(self) -> bool:
        return bool(np.all(self.lower == self.upper))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered input samples, one row per sample, plus the generation seed."""

    inputs: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        arr = np.asarray(self.inputs, dtype=float)
        if arr.ndim != 2:
            raise ShapeError("dataset must be a 2-D array of row vectors")
        object.__setattr__(self, "inputs", _freeze(arr))

    def __len__(self) -> int:
        return self.inputs.shape[0]


class VerdictKind(Enum):
    SAFE = "safe"
    UNSAFE = "unsafe"
    UNKNOWN = "unknown"


class Provenance(Enum):
    SIMULATION = "simulation"
    FORMAL = "formal"


@dataclass(frozen=True)
class Counterexample:
    """A violating input with the outputs it produced.

    ``index``/``side``/``bound`` identify the violated output interval:
    side is "lower" for outputs[index] <= bound, "upper" for >= bound.
    """

    input: tuple[float, ...]
    outputs: tuple[float, ...]
    index: int
    side: str
    bound: float

    def __post_init__(self):
        if self.side not in ("lower", "upper"):
            raise ValueError("side must be 'lower' or 'upper'")


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    counterexample: Optional[Counterexample] = None
    provenance: Optional[Provenance] = None
    detail: str = ""

    def __post_init__(self):
        if self.kind is VerdictKind.UNSAFE and self.counterexample is None:
            raise ValueError("unsafe verdicts must carry a counterexample")

    @property
    def is_safe(self) -> bool:
        return self.kind is VerdictKind.SAFE

    @property
    def is_unsafe(self) -> bool:
        return self.kind is VerdictKind.UNSAFE


# --------------------------------------------------------------------------
# File ingestion
# --------------------------------------------------------------------------

PathLike = Union[str, Path]

_ANN_ACTIVATIONS = ("relu",)
_SNN_ACTIVATION = "spiking_relu"


def _load_json(path: PathLike):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _network_fields(doc, path: PathLike):
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    for key in ("layer_sizes", "weights", "biases", "activation"):
        if key not in doc:
            raise ParseError(f"{path}: missing field '{key}'")
    try:
        sizes = tuple(int(s) for s in doc["layer_sizes"])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: layer_sizes must be integers") from exc
    weights = tuple(_as_float_matrix(w, f"weights[{k}]") for k, w in enumerate(doc["weights"]))
    biases = tuple(_as_float_vector(b, f"biases[{k}]") for k, b in enumerate(doc["biases"]))
    return sizes, weights, biases


def load_network(path: PathLike) -> LayeredNetwork:
    """Load and validate a ReLU network file."""
    doc = _load_json(path)
    sizes, weights, biases = _network_fields(doc, path)
    act = str(doc["activation"]).lower()
    if act not in _ANN_ACTIVATIONS:
        raise UnsupportedActivation(f"{path}: activation '{doc['activation']}' not supported")
    return LayeredNetwork(sizes, weights, biases)


def load_snn(path: PathLike) -> SpikingNetwork:
    """Load and validate a spiking network file."""
    doc = _load_json(path)
    sizes, weights, biases = _network_fields(doc, path)
    act = str(doc["activation"]).lower()
    if act != _SNN_ACTIVATION:
        raise UnsupportedActivation(
            f"{path}: activation '{doc['activation']}' is not '{_SNN_ACTIVATION}'"
        )
    if "thresholds" not in doc or "leak" not in doc:
        raise ParseError(f"{path}: spiking network needs 'thresholds' and 'leak'")
    raw_th = doc["thresholds"]
    hidden = sizes[1:-1]
    if isinstance(raw_th, (int, float)):
        thresholds = tuple(np.full(n, float(raw_th)) for n in hidden)
    else:
        thresholds = tuple(_as_float_vector(t, f"thresholds[{k}]") for k, t in enumerate(raw_th))
    return SpikingNetwork(sizes, weights, biases, thresholds, float(doc["leak"]))


def save_network(net: LayeredNetwork, path: PathLike) -> None:
    doc = {
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "activation": "relu",
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def save_snn(snn: SpikingNetwork, path: PathLike) -> None:
    doc = {
        "layer_sizes": list(snn.layer_sizes),
        "weights": [w.tolist() for w in snn.weights],
        "biases": [b.tolist() for b in snn.biases],
        "activation": _SNN_ACTIVATION,
        "thresholds": [t.tolist() for t in snn.thresholds],
        "leak": snn.leak,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _interval_list(doc, path: PathLike) -> np.ndarray:
    """Accept [[lo, hi], ...] or a single flat [lo, hi]."""
    if not isinstance(doc, list) or not doc:
        raise ParseError(f"{path}: expected a non-empty JSON list of [lo, hi] pairs")
    if all(isinstance(v, (int, float)) for v in doc):
        if len(doc) != 2:
            raise ParseError(f"{path}: a flat list must be exactly one [lo, hi] pair")
        doc = [doc]
    arr = _as_float_matrix(doc, str(path))
    if arr.shape[1] != 2:
        raise ParseError(f"{path}: each entry must be a [lo, hi] pair")
    return arr


def load_ranges(path: PathLike, n_outputs: int) -> RangeSpec:
    """Load per-output safe intervals; exactly one pair per output."""
    arr = _interval_list(_load_json(path), path)
    if arr.shape[0] != n_outputs:
        raise CountMismatch(f"{path}: {arr.shape[0]} intervals for {n_outputs} outputs")
    return RangeSpec(arr[:, 0].copy(), arr[:, 1].copy())


def load_box(path: PathLike, n_inputs: Optional[int] = None) -> InputBox:
    """Load per-input closed intervals."""
    arr = _interval_list(_load_json(path), path)
    if n_inputs is not None and arr.shape[0] != n_inputs:
        raise CountMismatch(f"{path}: {arr.shape[0]} intervals for {n_inputs} inputs")
    return InputBox(arr[:, 0].copy(), arr[:, 1].copy())


def save_ranges(spec: RangeSpec, path: PathLike) -> None:
    pairs = [[float(l), float(u)] for l, u in zip(spec.lower, spec.upper)]
    Path(path).write_text(json.dumps(pairs) + "\n")


def networks_equal(a: LayeredNetwork, b: LayeredNetwork) -> bool:
    return (
        a.layer_sizes == b.layer_sizes
        and all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        and all(np.array_equal(x, y) for x, y in zip(a.biases, b.biases))
    )


def strip_biases(net):
    """Copy of a network with all biases zeroed (both network kinds)."""
    zeros = tuple(np.zeros_like(b) for b in net.biases)
    if isinstance(net, SpikingNetwork):
        return SpikingNetwork(net.layer_sizes, net.weights, zeros, net.thresholds, net.leak)
    return LayeredNetwork(net.layer_sizes, net.weights, zeros)
