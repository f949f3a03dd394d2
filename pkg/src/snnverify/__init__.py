"""Safe-range verification and temporal-window selection for spiking
neural controllers translated from ReLU networks."""

from .convert import ann_to_snn, compute_t_up
from .encode import EncodedSnn, compute_big_m, encode_lb_query, encode_snn, encode_ub_query
from .model import (
    Counterexample,
    Dataset,
    InputBox,
    LayeredNetwork,
    Provenance,
    RangeSpec,
    SpikingNetwork,
    Verdict,
    VerdictKind,
    load_box,
    load_network,
    load_ranges,
    load_snn,
    save_network,
    save_ranges,
    save_snn,
)
from .search import SearchConfig, SearchReport, acceptable, find_numsteps
from .sim import ann_forward, find_violation, mse, sample_inputs, snn_outputs, snn_run, snn_step
from .tighten import TightenConfig, find_lb, find_ub, snn_bounds
from .verify import check_counterexample, fv, fv_lb, fv_ub, verify

__version__ = "0.1.0"
