import csv
import json

import numpy as np

from snnverify.cli import EX_DATA, EX_IOERR, EX_USAGE, main
from snnverify.model import load_ranges, load_snn


def fx(fixtures_dir, name):
    return str(fixtures_dir / name)


def test_unknown_subcommand():
    assert main(["frobnicate"]) == EX_USAGE


def test_missing_required_flag(fixtures_dir):
    assert main(["simulate", "--snn", fx(fixtures_dir, "demo_snn.json")]) == EX_USAGE


def test_missing_file_is_io_error(tmp_path):
    assert main(["simulate", "--snn", str(tmp_path / "nope.json"),
                 "--input", "1", "--steps", "1"]) == EX_IOERR


def test_malformed_file_is_data_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert main(["simulate", "--snn", str(bad), "--input", "1", "--steps", "1"]) == EX_DATA


def test_simulate_example(fixtures_dir, capsys):
    rc = main(["simulate", "--snn", fx(fixtures_dir, "demo_snn.json"),
               "--input", "5,2", "--steps", "6"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "running averages: <4, 5, 4.66667, 5, 5, 5>" in out
    assert "outputs: 5" in out
    # the stored-potential table carries the hand-stepped values
    assert "4.6" in out and "5.2" in out and "5.4" in out


def test_trace_dump(fixtures_dir, tmp_path):
    out = tmp_path / "trace.tsv"
    rc = main(["trace", "--snn", fx(fixtures_dir, "demo_snn.json"),
               "--input", "5,2", "--steps", "2", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "neuron\tt\tS\tP\tA"
    assert len(lines) == 11


def test_convert_matches_fixture(fixtures_dir, tmp_path):
    out = tmp_path / "converted.json"
    rc = main(["convert", "--ann", fx(fixtures_dir, "demo_ann.json"), "--out", str(out)])
    assert rc == 0
    snn = load_snn(out)
    ref = load_snn(fixtures_dir / "demo_snn.json")
    assert snn.layer_sizes == ref.layer_sizes
    assert snn.leak == ref.leak
    assert all(np.array_equal(a, b) for a, b in zip(snn.thresholds, ref.thresholds))


def test_mse_command(fixtures_dir, capsys):
    rc = main(["mse", "--ann", fx(fixtures_dir, "demo_ann.json"),
               "--snn", fx(fixtures_dir, "demo_snn.json"),
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--steps", "6", "--samples", "3", "--seed", "1"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "mse output 0: 0.01" in out  # (5.1 - 5.0)^2 on the point box


def test_encode_and_solve_round_trip(fixtures_dir, tmp_path, capsys):
    lp = tmp_path / "demo.lp"
    rc = main(["encode", "--snn", fx(fixtures_dir, "demo_snn.json"), "--steps", "1",
               "--box", fx(fixtures_dir, "demo_box_point.json"), "--export-lp", str(lp)])
    assert rc == 0
    text = lp.read_text()
    assert "Subject To" in text and "Binaries" in text and "Generals" in text
    sol = tmp_path / "demo.sol"
    rc = main(["solve", "--lp", str(lp), "--out", str(sol)])
    assert rc == 0
    assert sol.exists()
    rc = main(["solve", "--lp", str(lp), "--import-solution", str(sol)])
    assert rc == 0
    assert "feasible" in capsys.readouterr().out


def test_encode_query_exports(fixtures_dir, tmp_path):
    lp = tmp_path / "q.lp"
    rc = main(["encode", "--snn", fx(fixtures_dir, "demo_snn.json"), "--steps", "2",
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range.json"),
               "--query", "both", "--export-lp", str(lp)])
    assert rc == 0
    assert (tmp_path / "q.ub.lp").exists()
    assert (tmp_path / "q.lb.lp").exists()


def test_solve_infeasible_exit_code(fixtures_dir, tmp_path):
    lp = tmp_path / "bad.lp"
    lp.write_text(
        "Minimize\n obj:\nSubject To\n c0: 2 x = 5\nBounds\n 0 <= x <= 10\n"
        "Generals\n x\nEnd\n"
    )
    assert main(["solve", "--lp", str(lp)]) == 1


def test_verify_safe_exit_code(fixtures_dir):
    rc = main(["verify", "--snn", fx(fixtures_dir, "demo_snn.json"), "--steps", "6",
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range.json"),
               "--sim-samples", "10"])
    assert rc == 0


def test_verify_unsafe_writes_counterexample(fixtures_dir, tmp_path):
    cex = tmp_path / "cex.json"
    rc = main(["verify", "--snn", fx(fixtures_dir, "demo_snn.json"), "--steps", "6",
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range_tight.json"),
               "--sim-samples", "10", "--cex-out", str(cex)])
    assert rc == 1
    assert json.loads(cex.read_text()) == [5.0, 2.0]


def test_verify_unknown_exit_code(fixtures_dir):
    # formal stage with a zero budget: simulation stays clean, solver times out
    rc = main(["verify", "--snn", fx(fixtures_dir, "demo_snn.json"), "--steps", "6",
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range.json"),
               "--sim-samples", "5", "--budget", "0"])
    assert rc == 2


def test_tighten_outputs(fixtures_dir, tmp_path):
    ranges = tmp_path / "tight.json"
    log = tmp_path / "log.csv"
    fig = tmp_path / "iters.png"
    rc = main(["tighten", "--snn", fx(fixtures_dir, "demo_snn.json"), "--steps", "6",
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range_tight.json"),
               "--beta", "0.2", "--delta", "0.01", "--probe-samples", "5",
               "--out", str(ranges), "--log", str(log), "--plot", str(fig)])
    assert rc == 0
    spec = load_ranges(ranges, 1)
    assert spec.lower[0] == 4.0  # untouched
    assert 5.0 < spec.upper[0] <= 5.01
    with open(log) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "output"
    assert len(rows) > 2
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_search_end_to_end(fixtures_dir, tmp_path, capsys):
    report = tmp_path / "report.csv"
    plot_data = tmp_path / "bounds.csv"
    fig = tmp_path / "bounds.png"
    rc = main(["search", "--ann", fx(fixtures_dir, "demo_ann.json"),
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range.json"),
               "--eps", "100", "--t-up", "6",
               "--mse-samples", "10", "--sim-samples", "5",
               "--report", str(report), "--plot-data", str(plot_data),
               "--plot", str(fig)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "smallest admissible window: T = 2" in out
    with open(report) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["T", "mse", "verification_result", "tightened_range", "total_time_s"]
    assert rows[1][2] == "Unsafe"
    assert rows[2][2] == "Safe"
    with open(plot_data) as fh:
        brows = list(csv.reader(fh))
    assert brows[0] == ["T", "output", "given_lb", "given_ub", "tightened_lb", "tightened_ub"]
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_search_not_found_exit_code(fixtures_dir, tmp_path):
    rc = main(["search", "--ann", fx(fixtures_dir, "demo_ann.json"),
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range.json"),
               "--eps", "0", "--t-up", "3", "--mse-samples", "5", "--sim-samples", "5"])
    assert rc == 1


def test_search_t_up_from_period(fixtures_dir, capsys):
    rc = main(["search", "--ann", fx(fixtures_dir, "demo_ann.json"),
               "--box", fx(fixtures_dir, "demo_box_point.json"),
               "--range", fx(fixtures_dir, "demo_range.json"),
               "--eps", "100", "--period", "0.05", "--step-time", "0.002",
               "--mse-samples", "5", "--sim-samples", "5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "window upper bound from control period: 25" in out


def test_config_file_defaults_and_flag_precedence(fixtures_dir, tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text(
        f"snn = {json.dumps(fx(fixtures_dir, 'demo_snn.json'))}\n"
        "input = \"5,2\"\n"
        "steps = 3\n"
    )
    rc = main(["simulate", "--config", str(cfg)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "running averages: <4, 5, 4.66667>" in out
    # an explicit flag overrides the config value
    rc = main(["simulate", "--config", str(cfg), "--steps", "1"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "running averages: <4>" in out


def test_report_determinism_modulo_time(fixtures_dir, tmp_path):
    def run(name):
        path = tmp_path / name
        main(["search", "--ann", fx(fixtures_dir, "demo_ann.json"),
              "--box", fx(fixtures_dir, "demo_box.json"),
              "--range", fx(fixtures_dir, "demo_range.json"),
              "--eps", "100", "--t-up", "3", "--seed", "5",
              "--mse-samples", "20", "--sim-samples", "10",
              "--report", str(path)])
        with open(path) as fh:
            return [row[:-1] for row in csv.reader(fh)]  # drop the time column

    assert run("a.csv") == run("b.csv")


def test_simulate_two_output_network(fixtures_dir, tmp_path, capsys):
    snn_path = tmp_path / "twoout_snn.json"
    assert main(["convert", "--ann", fx(fixtures_dir, "twoout_ann.json"),
                 "--out", str(snn_path)]) == 0
    capsys.readouterr()
    rc = main(["simulate", "--snn", str(snn_path), "--input", "2,1", "--steps", "3"])
    out = capsys.readouterr().out
    assert rc == 0
    # hand-stepped: output means after 3 steps are 8/3 and 9.5/3
    assert "outputs: 2.66666667, 3.16666667" in out


def test_verify_two_output_disjunction(fixtures_dir, tmp_path, capsys):
    snn_path = tmp_path / "twoout_snn.json"
    main(["convert", "--ann", fx(fixtures_dir, "twoout_ann.json"), "--out", str(snn_path)])
    capsys.readouterr()
    rc = main(["verify", "--snn", str(snn_path), "--steps", "3",
               "--box", fx(fixtures_dir, "twoout_box_point.json"),
               "--range", fx(fixtures_dir, "twoout_range.json"),
               "--sim-samples", "5"])
    out = capsys.readouterr().out
    # means (8/3, 9.5/3) sit strictly inside [1,4] x [1,4.5]
    assert rc == 0 and "safe" in out
