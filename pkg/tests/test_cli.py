import json
import subprocess
import sys

import numpy as np
import pytest

from corrocal import __version__, cli, fixtures, temperature
from corrocal.model import depth_from_diffusion


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def _read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# tool=corrocal")
    header = lines[1].split(",")
    return header, np.array([[float(v) for v in row.split(",")] for row in lines[2:]])


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)


def test_version_entry_point():
    out = subprocess.run([sys.executable, "-m", "corrocal", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout


def test_fit_temperature_bundled(tmp_path):
    assert run(tmp_path, "fit-temperature") == 0
    d = json.loads((tmp_path / "temperature_model.json").read_text())
    assert set(d["temperature_model"]) == {"amplitude", "phase_shift", "period", "offset"}
    assert d["version"] == __version__ and d["seed"] == 0 and len(d["config_hash"]) == 16


def test_fit_temperature_self_consistency(tmp_path):
    ref = fixtures.temperature_model()
    t = np.arange(0, 6 * 365.25 * 86400, 7 * 86400.0)
    src = tmp_path / "temps.csv"
    temperature.write_temperature_csv(src, temperature.samples_from_arrays(t, ref.evaluate(t)))
    assert run(tmp_path, "fit-temperature", "--input", str(src)) == 0
    m = json.loads((tmp_path / "temperature_model.json").read_text())["temperature_model"]
    assert m["amplitude"] == pytest.approx(ref.amplitude, rel=1e-3)
    assert m["offset"] == pytest.approx(ref.offset, rel=1e-3)
    assert m["period"] == pytest.approx(ref.period, rel=5e-3)


def test_missing_file_exit_1(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert run(tmp_path, "fit-temperature", "--input", str(missing)) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_ingest_reproduces_events(tmp_path):
    assert run(tmp_path, "ingest") == 0
    d = json.loads((tmp_path / "events.json").read_text())
    got = {e["wire_id"]: e for e in d["events"]}
    for e in fixtures.bridge_events():
        assert got[e.wire_id]["failure_time"] == pytest.approx(e.failure_time, abs=1.0)


def test_calibrate_gehlen_real(tmp_path):
    assert run(tmp_path, "calibrate", "--method", "gehlen", "--points", "4") == 0
    d = json.loads((tmp_path / "calibration_gehlen_k4.json").read_text())
    assert d["model"] == "gehlen" and d["mse"] <= 2.5e-7 and len(d["points"]) == 4
    b = d["bounds"]
    p = d["best_params"]
    assert b["a"][0] <= p["aging_exponent"] <= b["a"][1]
    assert b["d_t"][0] <= p["d_t"] <= b["d_t"][1]
    assert b["b_e"][0] <= p["b_e"] <= b["b_e"][1]


def test_calibrate_gehlen_sanity(tmp_path):
    assert run(tmp_path, "calibrate", "--sanity") == 0
    p = json.loads((tmp_path / "calibration_sanity_gehlen_k4.json").read_text())["best_params"]
    assert abs(p["aging_exponent"] - 0.2) <= 0.02
    assert p["d_t"] == pytest.approx(2e-12, rel=0.05)
    assert p["b_e"] == pytest.approx(2050, rel=0.05)


def test_calibrate_nn_all_points(tmp_path):
    assert run(tmp_path, "calibrate", "--method", "nn", "--points", "all") == 0
    for k in range(1, 5):
        d = json.loads((tmp_path / f"calibration_nn_k{k}.json").read_text())
        assert d["model"] == "nn" and len(d["points"]) == k
    c = json.loads((tmp_path / "calibration_nn_k4.json").read_text())["predicted_content"]
    assert np.all(np.abs(np.array(c) - 1.62) <= 0.0162)


def test_calibrate_bad_points(tmp_path):
    assert run(tmp_path, "calibrate", "--points", "9") == 2


def test_sensitivity_dummy(tmp_path):
    assert run(tmp_path, "sensitivity", "--dummy") == 0
    d = json.loads((tmp_path / "sensitivity_dummy.json").read_text())
    assert d["order_s1"] == ["X3", "X1", "X2"] and d["order_st"] == ["X3", "X1", "X2"]


def test_sensitivity_gehlen(tmp_path):
    assert run(tmp_path, "sensitivity") == 0
    s1 = json.loads((tmp_path / "sensitivity.json").read_text())["average"]["s1"]
    assert s1["aging_exponent"] > s1["d_t"] > s1["b_e"]
    rows = (tmp_path / "sensitivity.csv").read_text().splitlines()
    assert rows[0].startswith("# tool=corrocal") and rows[1] == "run,parameter,s1,st"


def test_sensitivity_bad_n_base(tmp_path, capsys):
    assert run(tmp_path, "sensitivity", "--n-base", "1000") == 2
    assert "ConfigError" in capsys.readouterr().err


@pytest.fixture(scope="module")
def gehlen_model_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("cal")
    assert cli.main(["calibrate", "--out", str(out)]) == 0
    return out / "calibration_gehlen_k4.json"


def test_predict_band_contains_points(tmp_path, gehlen_model_file, capsys):
    assert run(tmp_path, "predict", "--model", str(gehlen_model_file)) == 0
    assert "4/4 calibration points inside the band" in capsys.readouterr().out
    header, rows = _read_csv(tmp_path / "band_gehlen.csv")
    assert header == ["t_seconds", "depth_lo_m", "depth_mean_m", "depth_hi_m"]
    pts = json.loads(gehlen_model_file.read_text())["points"]
    lt = np.log(rows[:, 0])
    for p in pts:
        lo = np.interp(np.log(p["t"]), lt, rows[:, 1])
        hi = np.interp(np.log(p["t"]), lt, rows[:, 3])
        assert lo <= p["x"] <= hi


def test_predict_collapse(tmp_path, gehlen_model_file):
    assert run(tmp_path, "predict", "--model", str(gehlen_model_file), "--collapse") == 0
    _, rows = _read_csv(tmp_path / "band_gehlen.csv")
    np.testing.assert_array_equal(rows[:, 1], rows[:, 2])
    np.testing.assert_array_equal(rows[:, 3], rows[:, 2])


def test_predict_network(tmp_path):
    assert run(tmp_path, "calibrate", "--method", "nn") == 0
    assert run(tmp_path, "predict", "--model", str(tmp_path / "calibration_nn_k4.json")) == 0
    _, rows = _read_csv(tmp_path / "band_nn.csv")
    assert np.all(rows[:, 3] >= rows[:, 2]) and np.all(rows[:, 2] >= rows[:, 1])


def test_predict_literature(tmp_path):
    hyper = fixtures.hyperparameters()
    args = ["predict", "--literature", "--start-seconds", repr(hyper.t_ref_age), "--curve-temperature",
            repr(hyper.temp_ref)]
    assert run(tmp_path, *args) == 0
    header, rows = _read_csv(tmp_path / "d_eff_rcm_literature.csv")
    assert header == ["t_seconds", "d_eff_m2_per_s"]
    assert rows[0, 0] == hyper.t_ref_age
    assert rows[0, 1] == pytest.approx(17.6e-12, rel=1e-12)
    assert np.all(np.diff(rows[:, 1]) < 0)
    _, band = _read_csv(tmp_path / "band_rcm_literature.csv")
    assert band[0, 0] == hyper.t_ref_age


def test_predict_requires_model(tmp_path):
    assert run(tmp_path, "predict") == 2


def test_predict_unknown_model_kind(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"model": "spline"}))
    assert run(tmp_path, "predict", "--model", str(bad)) == 1


def test_fit_profile(tmp_path):
    from corrocal import profile as pf

    depths = 0.0025 + 0.005 * np.arange(12)
    t = 10 * 365.25 * 86400
    prof = pf.ChlorideProfile(depths, pf.profile_model(depths, 3.0, 0.5e-12, t), t)
    pf.write_profile_csv(tmp_path / "core.csv", prof)
    assert run(tmp_path, "fit-profile", "--input", str(tmp_path / "core.csv")) == 0
    fit = json.loads((tmp_path / "profile_fits.json").read_text())["fits"][0]
    assert fit["d_eff"] == pytest.approx(0.5e-12, rel=1e-4)
    assert run(tmp_path, "fit-profile") == 2


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["calibrate", "--method", "nn", "--out", str(d)]) == 0
        assert cli.main(["sensitivity", "--n-base", "1024", "--out", str(d)]) == 0
        assert cli.main(["ingest", "--out", str(d)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_seed_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "5")
    assert run(tmp_path, "sensitivity", "--dummy", "--n-base", "256") == 0
    assert json.loads((tmp_path / "sensitivity_dummy.json").read_text())["seed"] == 5
    assert run(tmp_path, "sensitivity", "--dummy", "--n-base", "256", "--seed", "9") == 0
    assert json.loads((tmp_path / "sensitivity_dummy.json").read_text())["seed"] == 9
    monkeypatch.setenv(cli.SEED_ENV, "five")
    assert run(tmp_path, "sensitivity", "--dummy") == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 3, "sensitivity": {"n_base": 512}, "critical_content": {"mean": 1.62}}))
    assert run(tmp_path, "sensitivity", "--config", str(cfg), "--dummy") == 0
    d = json.loads((tmp_path / "sensitivity_dummy.json").read_text())
    assert d["seed"] == 3 and d["n_base"] == 512
    cfg.write_text(json.dumps({"seeed": 3}))
    assert run(tmp_path, "sensitivity", "--config", str(cfg)) == 2
    cfg.write_text("{not json")
    assert run(tmp_path, "sensitivity", "--config", str(cfg)) == 1
    cfg.write_text(json.dumps({"bayes": {"n_init": 1}}))
    assert run(tmp_path, "calibrate", "--config", str(cfg)) == 2


def test_config_round_trip():
    cfg = cli.RunConfig()
    again = cli.RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()
    assert again.config_hash() == cfg.config_hash()
    assert cfg.with_seed(4).config_hash() != cfg.config_hash()


def test_numerical_failure_exit_3(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"train": {"learning_rate": 1e200, "max_epochs": 50}}))
    assert run(tmp_path, "calibrate", "--method", "nn", "--config", str(cfg)) == 3
    assert "DivergenceError" in capsys.readouterr().err


def test_sanity_check_command(tmp_path, capsys):
    assert run(tmp_path, "sanity-check") == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 5 and all(line.startswith("PASS") for line in out)


def test_calibration_json_reproduces_depths(gehlen_model_file):
    d = json.loads(gehlen_model_file.read_text())
    hyper = fixtures.hyperparameters()
    model = cli.load_model(gehlen_model_file, hyper)
    for p in d["points"]:
        x = float(depth_from_diffusion(1.62, model.diffusion(p["t"], p["temp"]), p["t"], hyper))
        assert x == pytest.approx(p["x"], abs=1e-3)
