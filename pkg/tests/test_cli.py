import csv
import json
from pathlib import Path

import pytest
import yaml

from amenlab import cli
from amenlab.io import ConfigError, dumps, load_config, validate_config
from amenlab.means import WindowOverflow

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, doc, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return p


def run(tmp_path, doc, *extra):
    out = tmp_path / "out"
    code = cli.main(["--config", str(write(tmp_path, doc)), "--out", str(out), *extra])
    return code, out


def test_defect_table_and_certificate(tmp_path):
    code, out = run(tmp_path, {"command": "defect", "group": {"kind": "free-abelian", "rank": 1},
                               "n": {"start": 1, "stop": 8}, "threshold": 0.3})
    assert code == 0
    rows = list(csv.DictReader((out / "defect.csv").open()))
    assert [int(r["n"]) for r in rows] == list(range(1, 9))
    assert all(abs(float(r["defect"]) - 2 / int(r["n"])) <= 1e-12 for r in rows)
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["label"] == "amenability evidence"
    assert cert["final_defect"] == pytest.approx(0.25)
    assert len(cert["config_sha256"]) == 64 and cert["tool"]["name"] == "amenlab"


def test_defect_without_threshold_reports_no_evidence(tmp_path):
    code, out = run(tmp_path, {"command": "defect", "group": {"kind": "free", "rank": 2},
                               "mean": {"kind": "prefix"}, "n": [2, 4]})
    assert code == 0
    assert json.loads((out / "certificate.json").read_text())["label"] == "no evidence"


def test_lp_search_certificate_exact(tmp_path):
    code, out = run(tmp_path, {"command": "lp-search", "group": {"kind": "free", "rank": 2},
                               "window": {"radius": 1}, "exact": True})
    assert code == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["exact_optimum"] == "6/5" and cert["agree"] is True


@pytest.mark.parametrize("name", ["s3_pipeline", "bz_pipeline"])
def test_shipped_pipeline_configs(tmp_path, name):
    out = tmp_path / name
    assert cli.main(["--config", str(CONFIGS / f"{name}.yaml"), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["ok"] is True
    assert rep["stages"]["gate"]["right_l1_geometric_defect"] == 0.0


@pytest.mark.parametrize("doc", [
    {"command": "defect", "group": {"kind": "free", "rank": 2}, "generators": [], "n": [1]},
    {"command": "defect", "group": {"kind": "free", "rank": 2}, "n": [4]},
    {"command": "defect", "group": {"kind": "free", "rank": 2}, "mean": {"kind": "prefix"},
     "generators": ["ab"], "n": [4]},
    {"command": "pipeline", "group": {"kind": "cyclic", "order": 3},
     "module": {"kind": "document", "doc": {"left_gen": [[1]]}}},
    {"command": "lp-search", "group": {"kind": "free", "rank": 2}},
    {"command": "defect", "group": {"kind": "free", "rank": 2}, "unknown_key": 1},
    {"group": {"kind": "free", "rank": 2}},
])
def test_config_errors_exit_2(tmp_path, doc):
    assert run(tmp_path, doc)[0] == 2


def test_size_limit_exit_4(tmp_path):
    doc = {"command": "lp-search", "group": {"kind": "free", "rank": 2}, "window": {"radius": 3},
           "max_variables": 100}
    assert run(tmp_path, doc)[0] == 4
    doc = {"command": "lp-search", "group": {"kind": "free", "rank": 2}, "space": {"type": "boundary"},
           "window": {"radius": 1}, "depth": 40}
    assert run(tmp_path, doc)[0] == 4


def test_window_overflow_exit_3(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise WindowOverflow("translate leaves the window")
    monkeypatch.setattr(cli, "cmd_defect", boom)
    assert run(tmp_path, {"command": "defect", "group": {"kind": "free", "rank": 1}, "n": [1]})[0] == 3


def test_command_mismatch_is_config_error(tmp_path):
    doc = {"command": "defect", "group": {"kind": "free-abelian", "rank": 1}, "n": [2]}
    assert run(tmp_path, doc)[0] == 0
    out = tmp_path / "o2"
    assert cli.main(["pipeline", "--config", str(tmp_path / "run.yaml"), "--out", str(out)]) == 2


def test_seed_override_is_recorded(tmp_path):
    code, out = run(tmp_path, {"command": "defect", "group": {"kind": "free-abelian", "rank": 1}, "n": [2]},
                    "--seed", "41")
    assert code == 0 and json.loads((out / "certificate.json").read_text())["seed"] == 41


def test_same_config_same_bytes_in_process(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}"
        assert cli.main(["--config", str(CONFIGS / "f2_lp.yaml"), "--out", str(out)]) == 0
        outs.append((out / "certificate.json").read_bytes())
    assert outs[0] == outs[1]


def test_load_config_hash_and_validation(tmp_path):
    p = write(tmp_path, {"command": "defect", "group": {"kind": "free", "rank": 1}, "n": [1]})
    cfg, h = load_config(p)
    import hashlib
    assert h == hashlib.sha256(p.read_bytes()).hexdigest()
    with pytest.raises(ConfigError):
        validate_config({"command": "defect", "group": {"kind": "torus"}})
    bad = tmp_path / "bad.yaml"
    bad.write_text("command: [unclosed")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_dumps_is_canonical():
    import numpy as np
    from fractions import Fraction
    s = dumps({"b": np.float64(-0.0), "a": [np.int64(3), Fraction(2, 5), float("inf")]})
    assert s == '{\n  "a": [\n    3,\n    "2/5",\n    "inf"\n  ],\n  "b": 0.0\n}\n'


def test_shipped_z_sweep(tmp_path):
    out = tmp_path / "z"
    assert cli.main(["--config", str(CONFIGS / "z_folner.yaml"), "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "defect.csv").open()))
    assert len(rows) == 32
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["final_defect"] == pytest.approx(1 / 16, abs=1e-12)
    assert cert["label"] == "amenability evidence"


@pytest.mark.parametrize("name,value", [("z_lp", "2/5"), ("s3_lp", None)])
def test_shipped_lp_configs(tmp_path, name, value):
    out = tmp_path / name
    assert cli.main(["--config", str(CONFIGS / f"{name}.yaml"), "--out", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    if value is not None:
        assert cert["exact_optimum"] == value
    else:
        assert cert["defect"] == pytest.approx(0.0, abs=1e-12)
