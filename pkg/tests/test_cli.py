import io
import json
from pathlib import Path

import numpy as np
import pytest

from ionsim.cli import main
from ionsim.config import ConfigError, config_from_dict, load_config
from ionsim.tables import parse_table, table_to_text

SEQ = """
experiment flop {
  pulse carrier 7us
  scan duration 0us..14us step 2us
  shots 40
}
"""


def run(*argv, env=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def seqfile(tmp_path):
    path = tmp_path / "flop.ionseq"
    path.write_text(SEQ)
    return path


# -- configuration -----------------------------------------------------------------

def test_config_requires_seed():
    with pytest.raises(ConfigError, match="master_seed"):
        config_from_dict({"run": {}})


def test_config_unknown_key_named():
    with pytest.raises(ConfigError, match="laser.sigma"):
        config_from_dict({"run": {"master_seed": 1}, "laser": {"sigma": 3}})


def test_config_bad_value_names_section():
    with pytest.raises(ConfigError, match="simulation"):
        config_from_dict({"run": {"master_seed": 1}, "simulation": {"n_max": 0}})


def test_config_round_trip(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[run]\nmaster_seed = 9\nshots = 50\n[laser]\nsigma_shot = 120.0\n'
                    '[simulation.pi_time_us]\ncarrier = 8.0\n')
    cfg = load_config(path)
    assert cfg.master_seed == 9 and cfg.shots == 50
    assert cfg.sim.laser.sigma_shot == 120.0
    assert cfg.sim.calibration.pi_time_us["carrier"] == 8.0
    assert cfg.sim.calibration.pi_time_us["blue"] == 30.0


def test_example_config_loads():
    path = Path(__file__).resolve().parents[1] / "scripts" / "example_config.toml"
    assert load_config(path).master_seed >= 0


# -- tables ------------------------------------------------------------------------

def test_table_round_trip():
    text = table_to_text({"x": np.array([0.1, 1 / 3]), "y": np.array([2.0, 5.0])}, {"seed": 4})
    table = parse_table(text)
    assert table.header["seed"] == "4"
    assert np.array_equal(table.columns["x"], [0.1, 1 / 3])


def test_table_rejects_empty():
    with pytest.raises(ValueError):
        parse_table("# only: header\n")


# -- run ---------------------------------------------------------------------------

def test_run_is_byte_identical(seqfile, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("run", seqfile, "--seed", 1, "--out", a)[0] == 0
    assert run("run", seqfile, "--seed", 1, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    assert manifest["seed"] == 1 and "a.csv" in manifest["files"]


def test_run_seed_changes_output(seqfile):
    _, one, _ = run("run", seqfile, "--seed", 1)
    _, two, _ = run("run", seqfile, "--seed", 2)
    assert one != two
    table = parse_table(one)
    assert table.header["seed"] == "1"
    assert list(table.columns) == ["scan_value", "p_D", "std_err", "shots"]
    assert np.all(table.columns["shots"] == 40)


def test_run_worker_env_fallback(seqfile, monkeypatch):
    _, serial, _ = run("run", seqfile, "--seed", 3)
    monkeypatch.setenv("IONSIM_WORKERS", "2")
    _, parallel, _ = run("run", seqfile, "--seed", 3)
    assert serial == parallel
    monkeypatch.setenv("IONSIM_WORKERS", "lots")
    assert run("run", seqfile)[0] == 1


def test_run_unknown_experiment(seqfile):
    code, _, err = run("run", seqfile, "--experiment", "nope")
    assert code == 1 and "nope" in err


def test_run_parse_error_exit(tmp_path):
    bad = tmp_path / "bad.ionseq"
    bad.write_text("experiment x {\n wait 5us\n scan wait 0Hz..1us step 1us\n}")
    code, _, err = run("run", bad)
    assert code == 2 and "3:" in err


def test_missing_file_is_usage_error():
    assert run("run", "does_not_exist.ionseq")[0] == 1


# -- fit ---------------------------------------------------------------------------

def test_fit_contrast_decay(tmp_path):
    t = np.linspace(0.1, 1.0, 10)
    path = tmp_path / "c.csv"
    path.write_text(table_to_text({"wait_ms": t, "contrast": np.exp(-(t / 0.94) ** 2),
                                   "contrast_err": np.full(10, 0.02)}, {}))
    code, out, _ = run("fit", path, "--model", "contrast-decay")
    assert code == 0
    assert "preferred model: gaussian" in out
    machine = json.loads(out.split("# machine-readable\n", 1)[1])
    assert machine["gaussian"]["params"]["tau"]["value"] == pytest.approx(0.94, rel=1e-6)


def test_fit_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    assert run("fit", path, "--model", "line")[0] == 2


def test_fit_model_data_mismatch(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text(table_to_text({"x": np.arange(3.0), "y": np.arange(3.0)}, {}))
    code, _, err = run("fit", path, "--model", "exponential")
    assert code == 2 and "mismatch" in err


# -- figure and validate -----------------------------------------------------------

def test_unknown_figure_lists_presets():
    code, _, err = run("figure", "fig99")
    assert code == 1
    assert "fig3" in err and "fig10" in err


def test_validate_exit_codes(seqfile, tmp_path):
    code, out, _ = run("validate", seqfile)
    assert code == 0 and "ok" in out
    bad = tmp_path / "bad.ionseq"
    bad.write_text("experiment x {\n pulse carrier S-1/2 -> D+5/2 pi\n scan repeat 1..1 step 1\n}")
    code, _, err = run("validate", seqfile, bad)
    assert code == 2 and "bad.ionseq:2:" in err


def test_no_subcommand():
    assert run()[0] == 1
