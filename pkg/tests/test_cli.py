import csv
import json
import math

import pytest

from rabizigzag.cli import EXIT_CONFIG, EXIT_OK, EXIT_RESOURCE, run
from rabizigzag.config import parse_number, parse_text, resolve
from rabizigzag.errors import ConfigError
from rabizigzag.model import ModelParams, dispersion, momentum_grid


def write_conf(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("text, value", [("0.5", 0.5), ("pi/2", math.pi / 2), ("-3*pi/4", -0.75 * math.pi),
                                         ("1e-4", 1e-4), ("2**-3", 0.125)])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["__import__('os')", "pi(", "1/0", "x"])
def test_parse_number_rejects(text):
    with pytest.raises(ValueError):
        parse_number(text)


def test_parse_text_errors():
    with pytest.raises(ConfigError, match="unknown key 'gee1'"):
        parse_text("gee1 = 0.3\n", "f.conf")
    with pytest.raises(ConfigError, match="f.conf:2: duplicate key"):
        parse_text("g1 = 0.3\ng1 = 0.4\n", "f.conf")
    with pytest.raises(ConfigError, match="expected key = value"):
        parse_text("g1 0.3\n")


def test_resolution_precedence():
    cfg = resolve("bands", {"g1": "0.3", "theta": "pi/2", "j1_over_j2": "2"},
                  flags={"seed": 5}, environ={"RABIZZ_G1": "0.35"})
    assert cfg["g1"] == 0.35 and cfg.sources["g1"] == "env"
    assert cfg["seed"] == 5 and cfg.sources["seed"] == "flag"
    p = cfg.model()
    assert p.j1 == pytest.approx(0.1)
    with pytest.raises(ConfigError):
        resolve("bands", {}, environ={"RABIZZ_BOGUS": "1"})


def test_model_key_errors():
    cfg = resolve("bands", {"g1": "0.3", "j1": "0.1", "j1_over_j2": "2", "theta": "0"}, environ={})
    with pytest.raises(ConfigError, match="either j1 or j1_over_j2"):
        cfg.model()
    cfg = resolve("bands", {"g1": "0.3", "j1": "0.1"}, environ={})
    with pytest.raises(ConfigError, match="'theta'"):
        cfg.model()


BANDS = "g1 = 0.3\nj1_over_j2 = 2\ntheta = pi/2\n"


def test_bands_command(tmp_path):
    out = tmp_path / "o"
    assert run(["bands", "--config", write_conf(tmp_path, BANDS), "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "bands.csv")
    assert len(rows) == 3
    assert all(float(r["deviation"]) < 1e-10 for r in rows)
    assert "g1 = 0.3  # file" in (out / "resolved.conf").read_text()


def test_bands_decoupled_frequencies(tmp_path):
    out = tmp_path / "o"
    conf = write_conf(tmp_path, "g1 = 0\nj1 = 0\ntheta = pi/3\nn_cavities = 8\n")
    assert run(["bands", "--config", conf, "--out", str(out)]) == EXIT_OK
    p = ModelParams(g1=0.0, j1=0.0, theta=math.pi / 3, n_cavities=8)
    for row, k in zip(read_csv(out / "bands.csv"), momentum_grid(8)):
        bare = sorted([dispersion(p, k, 1), dispersion(p, k, -1)], reverse=True)
        assert [float(row["freq_plus"]), float(row["freq_minus"])] == pytest.approx(bare, abs=1e-12)
        assert "deviation" not in row


def test_missing_key_names_it(tmp_path, capsys):
    conf = write_conf(tmp_path, "g1 = 0.3\nj1_over_j2 = 2\n")
    assert run(["bands", "--config", conf, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "'theta'" in capsys.readouterr().err


def test_unknown_key_is_config_error(tmp_path, capsys):
    conf = write_conf(tmp_path, BANDS + "colour = blue\n")
    assert run(["bands", "--config", conf, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "colour" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run(["bands", "--config", str(tmp_path / "nope.conf"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_env_override_is_echoed(tmp_path, monkeypatch):
    monkeypatch.setenv("RABIZZ_G1", "0.2")
    out = tmp_path / "o"
    assert run(["bands", "--config", write_conf(tmp_path, BANDS), "--out", str(out)]) == EXIT_OK
    assert "g1 = 0.2  # env" in (out / "resolved.conf").read_text()


def test_bands_rerun_is_byte_identical(tmp_path):
    conf = write_conf(tmp_path, BANDS)
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert run(["bands", "--config", conf, "--out", str(o)]) == EXIT_OK
    for name in ("bands.csv", "resolved.conf"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_currents_flux_reversal(tmp_path):
    conf = write_conf(tmp_path, "g1 = 0.65\nratio_min = 0\nratio_max = 0.1\nratio_n = 3\n"
                                "thetas = pi/2, -pi/2, 0\nn_random = 8\n")
    out = tmp_path / "o"
    assert run(["currents", "--config", conf, "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "currents.csv")
    plus = [r for r in rows if float(r["theta"]) > 0]
    minus = [r for r in rows if float(r["theta"]) < 0]
    for a, b in zip(plus, minus):
        assert a["label"] == b["label"] == "MSR"
        for key in ("I_O", "I_E", "I_C"):
            assert float(b[key]) == pytest.approx(-float(a[key]), abs=1e-6 * abs(float(a["I_O"])))
        assert float(a["I_E"]) * float(a["I_O"]) < 0
    zero = [r for r in rows if float(r["theta"]) == 0]
    assert zero
    for r in zero:
        assert all(abs(float(r[k])) < 1e-8 for k in ("I_O", "I_E", "I_T"))


def test_single_cell_scan(tmp_path):
    conf = write_conf(tmp_path, "g1 = 0.65\ntheta = pi/4\naxis1 = theta\naxis1_min = pi/4\naxis1_max = pi/4\n"
                                "axis1_n = 1\naxis2 = j1_over_j2\naxis2_min = 0.8\naxis2_max = 0.8\naxis2_n = 1\n")
    out = tmp_path / "o"
    assert run(["scan", "--config", conf, "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "phase_diagram.csv")
    assert [r["label"] for r in rows] == ["FSR"]
    doc = json.loads((out / "phase_diagram.json").read_text())
    assert doc["grid"]["axis1"]["name"] == "theta"


def test_ed_dimension_cap_is_resource_error(tmp_path):
    conf = write_conf(tmp_path, "g1 = 0.3\nj1 = 0.1\ntheta = pi/2\ndelta = 10\nn_max = 3\ndim_cap = 1000\n")
    assert run(["ed", "--config", conf, "--out", str(tmp_path / "o")]) == EXIT_RESOURCE


def test_ed_command_small(tmp_path):
    conf = write_conf(tmp_path, "g1 = 0.3\nj1 = 0.1\ntheta = pi/2\ndelta = 10\nn_max = 1\ndump_vector = true\n")
    out = tmp_path / "o"
    assert run(["ed", "--config", conf, "--out", str(out)]) == EXIT_OK
    doc = json.loads((out / "ed_report.json").read_text())
    assert doc["variational_monotone"] is True
    assert (out / "ground_vector.bin").stat().st_size == 16 + 16 * 4**6
    assert [int(r["n_max"]) for r in read_csv(out / "ed_sweep.csv")] == [0, 1]


def test_bad_workers_flag(tmp_path):
    assert run(["bands", "--config", write_conf(tmp_path, BANDS), "--workers", "0"]) == EXIT_CONFIG
