import json

import numpy as np
import pytest

from ambitflux.cli import main
from ambitflux.config import ConfigError, load_config, parse_overrides
from ambitflux.experiments import RUNNERS


# ------------------------------------------------------------------ config


def test_defaults_validate():
    for exp in RUNNERS:
        cfg = load_config(exp)
        assert cfg.experiment == exp and len(cfg.digest()) == 64


def test_empty_radii_rejected():
    with pytest.raises(ConfigError, match="radii"):
        load_config("flux-scan", overrides=["run.radii="])


def test_radii_must_decrease():
    with pytest.raises(ConfigError):
        load_config("flux-scan", overrides=["run.radii=0.1,0.2,0.05"])


def test_moment_guard():
    with pytest.raises(ConfigError, match="moment guard"):
        load_config("flux-scan", overrides=["basis.alpha=1.5", "flux.phi=kinetic"])
    load_config("flux-scan", overrides=["basis.alpha=1.5", "flux.phi=identity"])


def test_fv_needs_finite_variation_basis():
    with pytest.raises(ConfigError):
        load_config("fv-limit", overrides=["basis.kind=stable"])


def test_unknown_names_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        load_config("flux-scan", overrides=["run.bogus=1"])
    with pytest.raises(ConfigError):
        load_config("flux-scan", overrides=["kernel.name=wavelet"])
    with pytest.raises(ConfigError):
        parse_overrides(["alpha=1.5"])
    with pytest.raises(ConfigError):
        load_config("not-an-experiment")


def test_config_file_and_precedence(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("N = 123\nseed = 5\n[basis]\nalpha = 1.5\n")
    cfg = load_config("flux-scan", path, ["run.N=77"], seed=9)
    assert cfg.N == 77 and cfg.seed == 9 and cfg.f("basis.alpha") == 1.5
    assert cfg.digest() != load_config("flux-scan").digest()


def test_builders():
    cfg = load_config("fv-limit")
    model = cfg.model()
    assert model.finite_variation
    assert [p.name for p in cfg.phis()] == ["identity", "kinetic"]
    assert np.allclose(model.basis.gamma, [1.0, 0.5])
    box = load_config("flux-scan", overrides=["geometry.A=box", "geometry.lo=0,0", "geometry.hi=1,2"])
    assert box.ambit_set().volume() == pytest.approx(2.0)


# --------------------------------------------------------------------- CLI


def test_cli_identity_suite_and_report(tmp_path, capsys):
    assert main(["verify-identities", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "verify-identities_report.json").read_text())
    assert doc["passed"] and doc["provenance"]["config_hash"]
    assert (tmp_path / "verify-identities.csv").read_text().startswith(
        "experiment,seed,replication,r,t,value,statistic_kind")
    assert main(["report", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "summary.md").exists()
    assert "PASS" in capsys.readouterr().out


def test_cli_tampered_exponent_fails(tmp_path, capsys):
    assert main(["verify-identities", "--out", str(tmp_path), "--override", "identity.phi_power=0.6"]) == 1
    out = capsys.readouterr().out
    assert "FAIL ac_identity" in out
    assert main(["report", "--out", str(tmp_path)]) == 1


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert main(["flux-scan", "--out", str(tmp_path), "--override", "run.radii="]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_report_without_reports(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 1


def _run(tmp_path, name, threads, *extra):
    out = tmp_path / f"{name}-{threads}"
    main([name, "--out", str(out), "--threads", str(threads), *extra])
    return out


@pytest.mark.parametrize("name,extra", [
    ("fv-limit", ["--override", "run.N=120", "--override", "run.chunk=40", "--override", "fv.pilot=40"]),
    ("flux-scan", ["--override", "run.N=90", "--override", "run.chunk=25", "--override", "basis.alpha=1.5"]),
])
def test_outputs_independent_of_threads(tmp_path, name, extra):
    a = _run(tmp_path, name, 1, *extra)
    b = _run(tmp_path, name, 2, *extra)
    assert (a / f"{name}.csv").read_bytes() == (b / f"{name}.csv").read_bytes()
    for svg in a.glob("*.svg"):
        assert svg.read_bytes() == (b / svg.name).read_bytes()


def test_digest_tracks_config_content():
    a, b = load_config("fv-limit"), load_config("fv-limit")
    assert a.digest() == b.digest()
    assert load_config("fv-limit", seed=1).digest() != a.digest()
    assert load_config("fv-limit", overrides=["run.N=2001"]).digest() != a.digest()
