import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from fluxevans import cli
from fluxevans.cli import build_contour, load_config, run
from fluxevans.errors import ConfigError


def _write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


# --- configuration -----------------------------------------------------------

def test_print_defaults_roundtrip(tmp_path):
    runner = CliRunner()
    res = runner.invoke(cli.main, ["print-defaults"])
    assert res.exit_code == 0
    data = yaml.safe_load(res.output)
    assert data == cli.DEFAULTS
    # the printed defaults are themselves a valid config file
    p = tmp_path / "d.yaml"
    p.write_text(res.output)
    assert load_config(str(p)) == cli.DEFAULTS


def test_config_merge_and_flag_override(tmp_path):
    p = _write_cfg(tmp_path, {"system": "burgers",
                              "contour": {"radius": 0.7}})
    cfg = load_config(p, {"system": "isentropic_lagrangian_1d",
                          "jobs": None})
    assert cfg["system"] == "isentropic_lagrangian_1d"
    assert cfg["contour"]["radius"] == 0.7
    assert cfg["contour"]["samples"] == 48   # untouched default
    assert cfg["jobs"] == 1                  # None flag does not override


@pytest.mark.parametrize("data, field", [
    ({"system": "nope"}, "system"),
    ({"bogus_key": 1}, "bogus_key"),
    ({"contour": {"radius": -1.0}}, "contour.radius"),
    ({"contour": {"shape": "triangle"}}, "contour.shape"),
    ({"lowfreq": {"radii": [1e-3, 1e-2]}}, "lowfreq.radii"),
    ({"eval": {"frequencies": []}}, "eval.frequencies"),
    ({"jobs": 0}, "jobs"),
    ({"shock": {"U_middle": [0.0]}}, "shock.U_middle"),
])
def test_config_errors_name_the_field(tmp_path, data, field):
    p = _write_cfg(tmp_path, data)
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        load_config(p)


def test_invalid_yaml_is_a_config_error(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("system: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_bad_config_exits_2(tmp_path):
    p = _write_cfg(tmp_path, {"system": "nope"})
    runner = CliRunner()
    res = runner.invoke(cli.main, ["profile", "--config", p,
                                   "--out", str(tmp_path)])
    assert res.exit_code == 2


# --- contour construction ----------------------------------------------------

def test_build_contour_shapes():
    circ = build_contour("circle", [0.0, 0.0], 2.0, 16)
    assert len(circ) == 16
    assert all(abs(abs(f.lam) - 2.0) < 1e-12 for f in circ)
    semi = build_contour("semicircle", [1.0, 0.0], 3.0, 20)
    assert all(f.lam.real >= 1.0 - 1e-12 for f in semi)
    # arc points keep the radius, diameter points sit on Re = 1
    assert any(abs(abs(f.lam - 1.0) - 3.0) < 1e-12 for f in semi)
    rect = build_contour("rectangle", [0.0, 0.0], 1.0, 16)
    assert all(max(abs(f.lam.real), abs(f.lam.imag)) == pytest.approx(1.0)
               for f in rect)


# --- tasks -------------------------------------------------------------------

def test_profile_task_burgers_matches_tanh(tmp_path):
    code = run("profile", None, str(tmp_path), {"system": "burgers"})
    assert code == 0
    data = np.loadtxt(tmp_path / "profile.txt")
    x, u = data[:, 0], data[:, 1]
    assert np.max(np.abs(u + np.tanh(x / 2.0))) <= 1e-8
    summ = yaml.safe_load((tmp_path / "profile_summary.yaml").read_text())
    assert summ["task"] == "profile"
    assert summ["ode_residual"] < 1e-3
    assert (tmp_path / "profile.png").stat().st_size > 0


def test_contour_task_lagrangian_winding_zero(tmp_path):
    p = _write_cfg(tmp_path, {
        "system": "isentropic_lagrangian_1d",
        "variant": "integrated_1d",
        "profile": {"nodes": 1000},
        "contour": {"center": [1.5, 0.0], "radius": 1.4, "samples": 48},
    })
    code = run("contour", p, str(tmp_path / "out"))
    assert code == 0
    summ = yaml.safe_load(
        (tmp_path / "out" / "contour_summary.yaml").read_text())
    assert summ["winding"] == 0
    rows = np.loadtxt(tmp_path / "out" / "contour.txt")
    assert rows.shape[0] == summ["n_samples"]
    assert (tmp_path / "out" / "contour.png").stat().st_size > 0


def test_lowfreq_task_euler2d_spread(tmp_path):
    p = _write_cfg(tmp_path, {
        "system": "isentropic_eulerian_2d",
        "profile": {"nodes": 1000},
        "lowfreq": {"angles": 8},
    })
    code = run("lowfreq", p, str(tmp_path / "out"))
    assert code == 0
    summ = yaml.safe_load(
        (tmp_path / "out" / "lowfreq_summary.yaml").read_text())
    assert summ["n_angles"] == 8
    assert summ["spread"] <= 0.1
    txt = (tmp_path / "out" / "lowfreq.txt").read_text()
    assert "spread" in txt


def test_eval_task_deterministic_across_jobs(tmp_path):
    base = {
        "system": "burgers",
        "variant": "integrated_1d",
        "profile": {"nodes": 600},
        "eval": {"frequencies": [[0.3, 0.0], [1.0, 0.5], [2.0, -1.0]]},
    }
    out = {}
    for jobs in (1, 8):
        p = _write_cfg(tmp_path, {**base, "jobs": jobs}, f"c{jobs}.yaml")
        d = tmp_path / f"out{jobs}"
        assert run("eval", p, str(d)) == 0
        out[jobs] = (d / "eval.txt").read_bytes()
    assert out[1] == out[8]
    rows = np.loadtxt(tmp_path / "out1" / "eval.txt")
    assert rows.shape == (3, 6)   # re/im lambda, re/im value, log, cond


def test_regime_scan_task_burgers(tmp_path):
    p = _write_cfg(tmp_path, {
        "system": "burgers",
        "profile": {"nodes": 600},
        "regime_scan": {"shell_samples": 4, "contour_center": [3.0, 0.0],
                        "contour_radius": 2.0, "contour_samples": 32},
    })
    code = run("regime-scan", p, str(tmp_path / "out"))
    assert code == 0
    summ = yaml.safe_load(
        (tmp_path / "out" / "regime_summary.yaml").read_text())
    # stable shock: no zeros inside the intermediate contour, and the
    # balanced samples near the origin stay well conditioned
    assert summ["total_winding"] == 0
    assert summ["shell_min_conditioning"] > 1e-13
    assert summ["shell_min_abs_value"] > 0
    assert (tmp_path / "out" / "regime_windings.txt").exists()
    assert (tmp_path / "out" / "regime_scan.png").stat().st_size > 0


def test_numerical_failure_exits_3_with_record(tmp_path):
    # end states violating the jump condition cannot connect
    p = _write_cfg(tmp_path, {
        "system": "burgers",
        "shock": {"U_minus": [1.0], "U_plus": [-0.5]},
    })
    code = run("profile", p, str(tmp_path / "out"))
    assert code == 3
    rec = yaml.safe_load((tmp_path / "out" / "error.yaml").read_text())
    assert rec["error"] == "NoConnectionError"
    assert rec["task"] == "profile"
    assert rec["message"]


def test_eval_frequency_dimension_mismatch(tmp_path):
    p = _write_cfg(tmp_path, {
        "system": "isentropic_eulerian_2d",
        "variant": "flux_md",
        "profile": {"nodes": 600},
        "eval": {"frequencies": [[1.0, 0.0]]},   # missing xi component
    })
    assert run("eval", p, str(tmp_path / "out")) == 2
