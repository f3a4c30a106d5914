import csv
import json

import numpy as np
import pytest

from microhop import experiments
from microhop.cli import main
from microhop.errors import ConfigError, IQFormatError
from microhop.iqfile import read_iq, sidecar_path, write_iq


def test_iq_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    x = (rng.standard_normal(1000) + 1j * rng.standard_normal(1000)).astype(np.complex64)
    path = write_iq(tmp_path / "a.cf32", x, {"sf": 7, "seed": 1})
    y, meta = read_iq(path)
    assert y.dtype == np.complex64 and np.array_equal(x.view(np.uint64), y.view(np.uint64))
    assert meta["format"] == "cf32le" and meta["sample_count"] == 1000 and meta["sf"] == 7
    raw = np.fromfile(path, dtype="<f4")
    assert raw[0] == x[0].real and raw[1] == x[0].imag


def test_iq_errors(tmp_path):
    with pytest.raises(IQFormatError, match="sidecar"):
        np.zeros(4, np.complex64).tofile(tmp_path / "b.cf32")
        read_iq(tmp_path / "b.cf32")
    path = write_iq(tmp_path / "c.cf32", np.zeros(4))
    with open(path, "ab") as f:
        f.write(b"\0" * 8)
    with pytest.raises(IQFormatError, match="samples"):
        read_iq(path)
    with open(path, "ab") as f:
        f.write(b"\0" * 3)
    with pytest.raises(IQFormatError, match="whole number"):
        read_iq(path)
    sidecar_path(path).write_text('{"format": "cf32le",\n "sample_count": }')
    with pytest.raises(IQFormatError, match="line 2"):
        read_iq(path)
    sidecar_path(path).write_text('{"format": "cs16"}')
    with pytest.raises(IQFormatError, match="format"):
        read_iq(path)


def test_info(capsys):
    assert main(["info", "--sf", "7"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (info["p"], info["p1"], info["max_payload_symbols"]) == (131, 257, 255)
    assert info["sensitivity_dbm"] == pytest.approx(-119.75, abs=0.01)


@pytest.mark.parametrize("extra", [[], ["--key-seed", "4", "--read-roots", "2,3"]])
def test_gen_then_parse(tmp_path, capsys, extra):
    out = tmp_path / "frame.cf32"
    args = ["gen", "--sf", "5", "--bits", "1011001110", "--delay", "77", "--cfo-bins", "-4",
            "--esn0", "0", "--seed", "3", "--out", str(out)]
    assert main(args + extra) == 0
    capsys.readouterr()
    assert sidecar_path(out).is_file()
    assert main(["parse", str(out)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["bits"].startswith("1011001110") and res["bit_errors"] == 0
    assert res["estimate"]["frame_start"] == 77 and res["estimate"]["eFo"] == -4


def test_parse_errors(tmp_path, capsys):
    assert main(["parse", str(tmp_path / "none.cf32")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["type"] == "IQFormatError"
    write_iq(tmp_path / "noise.cf32", np.zeros(3000), {"sf": 7})
    assert main(["parse", str(tmp_path / "noise.cf32")]) == 1
    assert json.loads(capsys.readouterr().err)["type"] == "NotDetected"


SMALL = {
    "correlation": ({"P": 17}, 0),
    "demod-sweep": ({"SF": 4, "esn0_start": -6.0, "esn0_stop": -4.0}, 500),
    "timefreq-grid": ({"P1": 31}, 0),
    "multiuser": ({"P": 31, "symbols": 50}, 0),
    "confidentiality": ({"P": 31, "wrong_keys": 5, "plain_trials": 20}, 0),
    "frame-loopback": ({"SF": 4, "max_symbols": 4, "max_delay": 40}, 6),
}


def _run(tmp_path, name, threads, tag):
    params, trials = SMALL[name]
    cfg = tmp_path / f"{name}-{tag}.json"
    cfg.write_text(json.dumps({"experiment": name, "params": params, "trials": trials,
                               "seed": 5, "output": f"{name}-{tag}.csv"}))
    code = main(["run", "--config", str(cfg), "--threads", str(threads),
                 "--out", str(tmp_path)])
    assert code == 0
    return (tmp_path / f"{name}-{tag}.csv").read_bytes()


@pytest.mark.parametrize("name", sorted(SMALL))
def test_run_each_experiment_deterministic(tmp_path, capsys, name):
    one = _run(tmp_path, name, 1, "a")
    four = _run(tmp_path, name, 4, "b")
    assert one == four
    rows = list(csv.DictReader(one.decode().splitlines()))
    assert rows and set(rows[0]) >= {"experiment", "metric", "value"}
    header = one.decode().splitlines()[0].split(",")
    assert header[0] == "experiment" and header[-2:] == ["metric", "value"]
    assert all(r["experiment"] == name for r in rows)


def test_correlation_csv_values(tmp_path, capsys):
    rows = list(csv.DictReader(_run(tmp_path, "correlation", 1, "c").decode().splitlines()))
    get = {(r["domain"], r["metric"]): float(r["value"]) for r in rows if r["lag"] == ""}
    assert get[("time", "autocorr_peak")] == pytest.approx(17.0)
    assert get[("time", "crosscorr_min")] == pytest.approx(4.123, abs=1e-3)
    assert get[("time", "crosscorr_peak")] == pytest.approx(4.123, abs=1e-3)


def test_timefreq_grid_csv_all_exact(tmp_path, capsys):
    rows = list(csv.DictReader(_run(tmp_path, "timefreq-grid", 4, "g").decode().splitlines()))
    assert len(rows) == 31 * 31 and all(r["value"] == "true" for r in rows)


def test_run_by_experiment_flag(tmp_path, capsys):
    assert main(["run", "--experiment", "correlation", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "correlation.csv").is_file()


@pytest.mark.parametrize("body, field, line", [
    ('{"experiment": "nope"}', "experiment", None),
    ('{"experiment": "correlation", "params": {"P": 18}}', "params.P", None),
    ('{"experiment": "correlation", "params": {"P": 17, "roots": [3, 17]}}',
     "params.roots[1]", None),
    ('{"experiment": "demod-sweep", "params": {"mode": "xyz"}}', "params.mode", None),
    ('{"experiment": "correlation", "trials": -1}', "trials", None),
    ('{"experiment": "correlation", "bogus": 1}', "bogus", None),
    ('{"params": {}}', "experiment", None),
    ('{"experiment": "correlation",\n "params": {\n  "P": 17,\n }\n}', None, 4),
])
def test_config_errors_identify_field_or_line(tmp_path, capsys, body, field, line):
    cfg = tmp_path / "bad.json"
    cfg.write_text(body)
    with pytest.raises(ConfigError) as info:
        experiments.load_config(cfg)
    assert info.value.field == field and info.value.line == line
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err.get("field") == field and err.get("line") == line
