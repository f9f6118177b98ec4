import json
import os

import numpy as np
import pytest

from gmclab.cli import load_config, main, validate_config
from gmclab.errors import ConfigError


def write_cfg(tmp_path, **overrides):
    cfg = {
        "grid": {"dimension": 1, "n": 256, "side": 2.5},
        "gammas": [[0.5, 1.3229]],
        "replicas": 150,
        "seed": 99,
        "out": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


def test_validate_config_rejects_unknown_field():
    with pytest.raises(ConfigError) as err:
        validate_config({"grid": {}, "bogus": 1})
    assert any("bogus" in m for m in err.value.messages)


def test_validate_config_rejects_bad_gamma():
    with pytest.raises(ConfigError) as err:
        validate_config({"gammas": [[1.0]]})
    assert any("gammas[0]" in m for m in err.value.messages)


def test_validate_config_rejects_nongeometric_ladder():
    with pytest.raises(ConfigError):
        validate_config({"eps_fracs": [0.1, 0.05, 0.03]})


def test_load_config_json_error_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"grid": }')
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert ":1:" in err.value.messages[0]


def test_constants_subcommand(tmp_path):
    path, cfg = write_cfg(tmp_path)
    rc = main(["constants", "--config", str(path)])
    assert rc == 0
    report = json.load(open(tmp_path / "out" / "constants.json"))
    assert report["payload"]["table"]["j_kappa"] == pytest.approx(1.0)
    assert report["config_hash"]
    assert report["environment"]["generator_algorithm"].startswith("numpy")
    csv_text = open(tmp_path / "out" / "constants.csv").read()
    assert "j_kappa" in csv_text


def test_synthesize_subcommand(tmp_path):
    path, cfg = write_cfg(tmp_path, replicas=4)
    rc = main(["synthesize", "--config", str(path)])
    assert rc == 0
    data = np.load(tmp_path / "out" / "ensemble.npz")
    assert data["fields"].shape[1] == 256


def test_scan_phase_monotone_exponent(tmp_path):
    path, cfg = write_cfg(
        tmp_path, replicas=400, gammas=[[0.0, 0.6], [0.0, 1.2], [0.0, 1.6]],
        eps_fracs=[2.0**-k for k in range(3, 7)])
    rc = main(["scan-phase", "--config", str(path)])
    assert rc == 0
    rows = open(tmp_path / "out" / "scan-phase.csv").read().strip().splitlines()
    slopes = [float(r.split(",")[3]) for r in rows[1:]]
    assert slopes[0] > slopes[-1]  # steeper decay deeper in the phase


def test_decompose_subcommand(tmp_path):
    path, cfg = write_cfg(tmp_path, points=64)
    rc = main(["decompose", "--config", str(path)])
    assert rc == 0
    rep = json.load(open(tmp_path / "out" / "decompose.json"))
    assert rep["payload"]["passed"] is True


def test_cli_reports_config_error(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"replicas": -3}))
    rc = main(["constants", "--config", str(path)])
    assert rc == 2
    assert "replicas" in capsys.readouterr().err


def test_seed_override_and_determinism(tmp_path):
    path, cfg = write_cfg(tmp_path, replicas=120,
                          eps_fracs=[2.0**-k for k in range(3, 7)])
    rc = main(["limit-test", "--config", str(path), "--seed", "7"])
    assert rc in (0, 1)
    first = json.load(open(tmp_path / "out" / "limit-test.json"))
    rc = main(["limit-test", "--config", str(path), "--seed", "7"])
    second = json.load(open(tmp_path / "out" / "limit-test.json"))
    assert first["payload"] == second["payload"]
    assert first["timing"] != {}


def test_accept_deterministic_payload(tmp_path):
    path, cfg = write_cfg(tmp_path)
    rc = main(["accept", "--config", str(path), "--criteria", "AC-8"])
    assert rc == 0
    first = json.load(open(tmp_path / "out" / "accept.json"))
    rc = main(["accept", "--config", str(path), "--criteria", "AC-8"])
    second = json.load(open(tmp_path / "out" / "accept.json"))
    assert first["payload"] == second["payload"]
    assert first["payload"]["results"][0]["criterion"] == "AC-8"
