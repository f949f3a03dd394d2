import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import demo_ann, make_ann
from snnverify.model import (
    CountMismatch,
    Dataset,
    DegenerateInterval,
    InvalidLeak,
    InvalidTheta,
    ParseError,
    RangeSpec,
    ShapeError,
    SpikingNetwork,
    UnsupportedActivation,
    load_box,
    load_network,
    load_ranges,
    load_snn,
    networks_equal,
    save_network,
    save_snn,
    strip_biases,
)


def write_json(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_load_zero_network(tmp_path):
    p = write_json(
        tmp_path,
        "zero.json",
        {
            "layer_sizes": [2, 2, 1],
            "weights": [[[0, 0], [0, 0]], [[0, 0]]],
            "biases": [[0, 0], [0]],
            "activation": "relu",
        },
    )
    net = load_network(p)
    assert net.layer_sizes == (2, 2, 1)
    assert all(np.all(w == 0) for w in net.weights)


def test_load_demo_fixture(fixtures_dir):
    net = load_network(fixtures_dir / "demo_ann.json")
    assert net.layer_sizes == (2, 2, 1)
    assert np.allclose(net.weights[0], [[0.6, 0.8], [-0.1, 0.5]])
    assert np.allclose(net.weights[1], [[1.0, 1.0]])
    assert all(np.all(b == 0) for b in net.biases)


def test_shape_mismatch_rejected(tmp_path):
    p = write_json(
        tmp_path,
        "bad.json",
        {
            "layer_sizes": [2, 2, 1],
            "weights": [[[1, 0, 0], [0, 1, 0]], [[1, 1]]],  # 3 columns feeding 2 inputs
            "biases": [[0, 0], [0]],
            "activation": "relu",
        },
    )
    with pytest.raises(ShapeError):
        load_network(p)


def test_unsupported_activation(tmp_path):
    p = write_json(
        tmp_path,
        "tanh.json",
        {
            "layer_sizes": [1, 1, 1],
            "weights": [[[1]], [[1]]],
            "biases": [[0], [0]],
            "activation": "tanh",
        },
    )
    with pytest.raises(UnsupportedActivation):
        load_network(p)


def test_malformed_json(tmp_path):
    p = tmp_path / "junk.json"
    p.write_text("{not valid")
    with pytest.raises(ParseError):
        load_network(p)


def test_network_round_trip(tmp_path):
    net = demo_ann()
    p = tmp_path / "rt.json"
    save_network(net, p)
    assert networks_equal(net, load_network(p))


def test_snn_round_trip(tmp_path, fixtures_dir):
    snn = load_snn(fixtures_dir / "demo_snn.json")
    p = tmp_path / "rt.json"
    save_snn(snn, p)
    again = load_snn(p)
    assert again.layer_sizes == snn.layer_sizes
    assert again.leak == snn.leak
    assert all(np.array_equal(a, b) for a, b in zip(again.thresholds, snn.thresholds))


def test_snn_loader_rejects_ann_file(fixtures_dir):
    with pytest.raises(UnsupportedActivation):
        load_snn(fixtures_dir / "demo_ann.json")


def test_snn_invariants():
    net = demo_ann()
    with pytest.raises(InvalidTheta):
        SpikingNetwork(net.layer_sizes, net.weights, net.biases, (np.array([0.0, 1.0]),), 1.0)
    with pytest.raises(InvalidLeak):
        SpikingNetwork(net.layer_sizes, net.weights, net.biases, (np.array([1.0, 1.0]),), 1.5)


def test_load_single_interval_range(tmp_path):
    p = tmp_path / "r.json"
    p.write_text("[-15.50883, 15.34465]")
    spec = load_ranges(p, 1)
    assert spec.lower[0] == pytest.approx(-15.50883)
    assert spec.upper[0] == pytest.approx(15.34465)


def test_load_two_output_ranges(fixtures_dir):
    spec = load_ranges(fixtures_dir / "dp_range.json", 2)
    assert np.allclose(spec.lower, [-5.86571, -6.35836])
    assert np.allclose(spec.upper, [-3.69253, -3.41698])


def test_degenerate_interval(tmp_path):
    p = tmp_path / "r.json"
    p.write_text("[1, 1]")
    with pytest.raises(DegenerateInterval):
        load_ranges(p, 1)


def test_range_count_mismatch(tmp_path):
    p = tmp_path / "r.json"
    p.write_text("[[0, 1], [0, 1]]")
    with pytest.raises(CountMismatch):
        load_ranges(p, 1)


def test_load_box_fixed_coordinates(fixtures_dir):
    box = load_box(fixtures_dir / "lip_box.json", 4)
    assert box.lower[1] == box.upper[1] == 0.0
    assert box.lower[3] == box.upper[3] == 0.0
    assert not box.is_point()


def test_box_must_be_finite(tmp_path):
    p = tmp_path / "b.json"
    p.write_text("[[0, 1e999]]")
    with pytest.raises(ParseError):
        load_box(p)


def test_dataset_must_be_2d():
    with pytest.raises(ShapeError):
        Dataset(np.zeros(3))


def test_strip_biases():
    net = make_ann([1, 1, 1], [[[2.0]], [[3.0]]], [[0.5], [0.25]])
    bare = strip_biases(net)
    assert all(np.all(b == 0) for b in bare.biases)
    assert np.array_equal(bare.weights[0], net.weights[0])


intervals = st.tuples(
    st.floats(-100, 100, allow_nan=False), st.floats(0.001, 50, allow_nan=False)
).map(lambda t: (t[0], t[0] + t[1]))


def _spec(iv):
    return RangeSpec(np.array([iv[0]]), np.array([iv[1]]))


@given(intervals)
def test_containment_reflexive(iv):
    assert _spec(iv).within(_spec(iv))


@given(intervals, intervals, intervals)
def test_containment_transitive(a, b, c):
    sa, sb, sc = _spec(a), _spec(b), _spec(c)
    if sa.within(sb) and sb.within(sc):
        assert sa.within(sc)


@given(intervals, intervals)
def test_containment_matches_endpoints(a, b):
    sa, sb = _spec(a), _spec(b)
    assert sa.within(sb) == (b[0] <= a[0] and a[1] <= b[1])
