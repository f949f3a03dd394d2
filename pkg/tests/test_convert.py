import numpy as np
import pytest

from helpers import demo_ann, make_ann, make_snn
from snnverify.convert import StepExceedsPeriod, ann_to_snn, compute_t_up
from snnverify.model import InvalidLeak, InvalidTheta
from snnverify.sim import ann_forward, snn_run


def test_conversion_preserves_weights():
    ann = demo_ann()
    snn = ann_to_snn(ann)
    assert snn.layer_sizes == ann.layer_sizes
    assert all(np.array_equal(a, b) for a, b in zip(snn.weights, ann.weights))
    assert all(np.array_equal(a, b) for a, b in zip(snn.biases, ann.biases))
    assert snn.leak == 1.0
    assert all(np.all(t == 1.0) for t in snn.thresholds)


def test_conversion_reproduces_example_run():
    snn = ann_to_snn(demo_ann())
    trace = snn_run(snn, np.array([5.0, 2.0]), 6)
    assert trace.outputs()[0] == pytest.approx(5.0)


def test_invalid_parameters():
    ann = demo_ann()
    with pytest.raises(InvalidTheta):
        ann_to_snn(ann, theta=0.0)
    with pytest.raises(InvalidLeak):
        ann_to_snn(ann, leak=-0.1)
    with pytest.raises(InvalidLeak):
        ann_to_snn(ann, leak=1.01)


def test_t_up_values():
    assert compute_t_up(0.05, 0.002) == 25
    assert compute_t_up(0.1, 0.02) == 5
    assert compute_t_up(0.01, 0.01) == 1


def test_t_up_rejects_long_step():
    with pytest.raises(StepExceedsPeriod):
        compute_t_up(0.01, 0.02)


def test_t_up_bracketing_property():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = round(float(rng.uniform(0.01, 1.0)), 4)
        e = round(float(rng.uniform(0.001, 0.05)), 4)
        if e > p or e == 0:
            continue
        t = compute_t_up(p, e)
        # compare in exact decimal arithmetic, as the implementation does
        from fractions import Fraction

        fp, fe = Fraction(str(p)), Fraction(str(e))
        assert t * fe <= fp < (t + 1) * fe


def test_output_preservation_on_integer_activations():
    # integer weights and inputs make every hidden activation integral, so
    # flooring loses nothing and the spiking outputs equal the affine ones
    # exactly at every window length
    rng = np.random.default_rng(11)
    for _ in range(30):
        sizes = [int(rng.integers(1, 3)), int(rng.integers(1, 4)), int(rng.integers(1, 3))]
        weights = [
            rng.integers(-3, 4, size=(sizes[k + 1], sizes[k])).astype(float)
            for k in range(2)
        ]
        biases = [rng.integers(-2, 3, size=sizes[k + 1]).astype(float) for k in range(2)]
        ann = make_ann(sizes, weights, biases)
        snn = make_snn(ann, theta=1.0, leak=1.0)
        x = rng.integers(0, 4, size=sizes[0]).astype(float)
        want = ann_forward(ann, x)
        for steps in (1, 2, 5):
            got = snn_run(snn, x, steps).outputs()
            assert np.array_equal(got, want)
