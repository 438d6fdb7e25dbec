import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpdirac import scenarios
from warpdirac.evolution import Backend, StepTooLarge
from warpdirac.hamiltonians import Frame


def _short(name, t_max=2e-4, **kw):
    return scenarios.preset(name).with_overrides(t_max=t_max, **kw)


@pytest.mark.parametrize("name", scenarios.PRESET_NAMES)
def test_presets_roundtrip(name):
    cfg = scenarios.preset(name)
    doc = json.loads(json.dumps(scenarios.config_to_dict(cfg)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        back = scenarios.config_from_dict(doc)
    assert scenarios.config_to_dict(back) == scenarios.config_to_dict(cfg)


def test_presets_match_reference_parameters():
    assert scenarios.preset("fig2a").dirac.profile.constant_vs == 0.0
    assert scenarios.preset("fig2b").dirac.profile.constant_vs == pytest.approx(2.0)
    f3 = scenarios.preset("fig3a-const").dirac
    assert f3.zitterbewegung_frequency == pytest.approx(2 * np.pi * 6.1e3)
    assert scenarios.preset("convergence").nmax_sweep == (128, 256, 512)
    rwa = scenarios.preset("rwa-validate")
    assert rwa.frame is Frame.ION_LAB
    assert rwa.ion.Omega0 / rwa.ion.nu == pytest.approx(2 * np.pi * 1.46e3 / (2 * np.pi * 5.9e6))
    with pytest.raises(KeyError):
        scenarios.preset("fig9")


def test_validation_collects_every_violation():
    doc = scenarios.config_to_dict(scenarios.preset("fig2a"))
    doc["name"] = ""
    doc["n_max"] = 1
    doc["propagator"]["t_max"] = -1
    with pytest.raises(scenarios.ValidationError) as info:
        scenarios.config_from_dict(doc)
    assert len(info.value.violations) >= 3


def test_unknown_key_warns():
    doc = scenarios.config_to_dict(scenarios.preset("fig2a"))
    doc["colour"] = "blue"
    with pytest.warns(UserWarning, match="colour"):
        scenarios.config_from_dict(doc)


def test_parse_error_has_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "name": "x",\n  oops\n}')
    with pytest.raises(scenarios.ParseError) as info:
        scenarios.load_config(p)
    assert info.value.line == 3
    with pytest.raises(scenarios.ConfigError):
        scenarios.load_config(tmp_path / "missing.json")
    with pytest.raises(scenarios.ConfigError):
        scenarios.resolve("not-a-preset")


@settings(deadline=None, max_examples=10)
@given(st.integers(1, 300))
def test_override_clips_snapshots(k):
    t_max = k * 5e-6
    cfg = scenarios.preset("fig2c").with_overrides(t_max=t_max)
    assert all(t <= t_max for t in cfg.outputs.snapshots)
    assert cfg.propagator.sample_interval <= t_max


def test_run_writes_outputs(tmp_path):
    res = scenarios.run_scenario(_short("fig2c", t_max=5e-4), tmp_path)
    names = sorted(p.name for p in res.files)
    assert "summary.json" in names and "trajectory_plus.csv" in names and "density_plus.csv" in names
    assert "trajectory.svg" in names
    rows = (res.out_dir / "trajectory_up.csv").read_text().splitlines()
    assert rows[0] == ",".join(scenarios.CSV_COLUMNS)
    assert len(rows) == 1 + 101
    summary = json.loads((res.out_dir / "summary.json").read_text())
    assert summary["lightcone"]["slope_up"] == pytest.approx(3.0, rel=1e-9)
    assert summary["provenance"]["convergence"]["norm_drift"] < 1e-8


def test_rerun_is_byte_identical(tmp_path):
    cfg = _short("fig3a-const", t_max=3e-4)
    a = scenarios.run_scenario(cfg, tmp_path / "a")
    b = scenarios.run_scenario(cfg, tmp_path / "b")
    for f in a.files:
        assert f.read_bytes() == (b.out_dir / f.name).read_bytes()


def test_verify_passes_for_exact(tmp_path):
    res = scenarios.run_scenario(_short("fig3c", t_max=3e-4), tmp_path, svg=False, verify=True)
    assert res.summary["verification"]["pass"]


def test_failed_run_leaves_nothing(tmp_path):
    cfg = _short("fig2a", backend="timeordered", dt=4e-6)
    with pytest.raises(StepTooLarge):
        scenarios.run_scenario(cfg, tmp_path / "out")
    assert not (tmp_path / "out" / "fig2a").exists()


def test_sweep_reports_convergence(tmp_path):
    cfg = scenarios.preset("convergence").with_overrides(t_max=3e-4)
    res = scenarios.run_scenario(cfg, tmp_path, svg=False)
    conv = res.summary["nmax_convergence"]
    assert set(conv) == {"128", "256"}
    assert all(v["max_rel_change_vs_512"] < 1e-4 for v in conv.values())
    assert "n256_up" in res.records
    assert scenarios.preset("convergence").with_overrides(n_max=64).nmax_sweep == ()
