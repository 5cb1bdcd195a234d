import json
import os

import numpy as np
import pytest
import yaml

from wavesplit.cli import main
from wavesplit.config import GridSpec, RunConfig
from wavesplit.errors import ConfigError, DependencyError, OverflowGuardError
from wavesplit.fields import FieldGrid, read_grid, write_grid
from wavesplit.medium import isotropic
from wavesplit.pipeline import run_pipeline, run_validate_isotropic

ANISO = {"eps": [[2.0, 0.3, 0.4], [0.3, 2.5, -0.2], [0.4, -0.2, 3.0]],
         "mu": [[1.2, 0.1, 0.0], [0.1, 1.0, 0.15], [0.0, 0.15, 1.4]]}


@pytest.fixture
def media(tmp_path):
    a = tmp_path / "aniso.yaml"
    a.write_text(yaml.safe_dump(ANISO))
    i = tmp_path / "iso.yaml"
    i.write_text(yaml.safe_dump({"eps": 4, "mu": 1}))
    return a, i


def write_run(tmp_path, **over):
    cfg = {"medium": "aniso.yaml", "grid": {"nx1": 8, "nx2": 8, "L1": 20.0, "L2": 20.0},
           "s": ["1+0.5j", "2"], "S_R": 0.5, "samples": 1024, "depth": 0.5, "allow_growing": True,
           "out": "out"}
    cfg.update(over)
    p = tmp_path / "run.yaml"
    p.write_text(yaml.safe_dump(cfg))
    return p


def mtimes(d):
    return {f: os.stat(d / f).st_mtime_ns for f in sorted(os.listdir(d))}


def test_exit_codes(tmp_path, media, capsys):
    a, _ = media
    assert main(["split", "--medium", str(a), "--xi", "4,4,10,10", "--s", "1+1j", "--out", str(tmp_path / "x.csv")]) == 0
    assert main(["split", "--medium", str(tmp_path / "missing.yaml"), "--xi", "4,4,10,10", "--s", "1"]) == 2
    assert main(["split", "--medium", str(a), "--xi", "4,4", "--s", "1"]) == 2
    assert main(["split", "--medium", str(a), "--xi", "4,4,10,10", "--s", "0.5", "--sr", "0.6",
                 "--out", str(tmp_path / "y.csv")]) == 3
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"eps": [[1, 0, 0], [0, -1, 0], [0, 0, 1]], "mu": 1}))
    assert main(["analyze-strip", "--medium", str(bad), "--sr", "0.2", "--out", str(tmp_path / "r.json")]) == 2
    err = capsys.readouterr().err
    assert "numeric guard" in err


def test_split_csv_rows(tmp_path, media):
    a, _ = media
    out = tmp_path / "split.csv"
    assert main(["split", "--medium", str(a), "--xi", "4,2,10,10", "--s", "1+1j", "--method", "residue", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 1 + 8
    header = lines[0].split(",")
    row = dict(zip(header, map(float, lines[1].split(","))))
    assert row["involution"] <= 1e-9


def test_analyze_strip_report(tmp_path, media):
    a, _ = media
    out = tmp_path / "rep.json"
    assert main(["analyze-strip", "--medium", str(a), "--sr", "0.3", "--samples", "1024", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["Ce"] > 0 and rep["C0"] > 0 and rep["root_ratio_min"] >= rep["strip_ratio"]


def test_symbol_dump(tmp_path, media):
    a, _ = media
    out = tmp_path / "sym.csv"
    assert main(["symbol-dump", "--medium", str(a), "--xi", "2,2,5,5", "--s", "1", "--lam", "0", "0.5j", "--out", str(out)]) == 0
    assert len(out.read_text().strip().split("\n")) == 1 + 2 * 2 * 2


@pytest.mark.parametrize("eps, mu, s", [(1.0, 1.0, 1.0), (4.0, 1.0, 2 + 1j)])
def test_validate_isotropic(eps, mu, s):
    rep = run_validate_isotropic(isotropic(eps, mu), GridSpec(16, 16, 10.0, 10.0), [s])
    assert rep["max_rel_error"] <= 1e-10


def test_validate_isotropic_cli(tmp_path, media):
    a, i = media
    out = tmp_path / "iso.json"
    assert main(["validate-isotropic", "--medium", str(i), "--xi", "0,0,10,10", "--s", "1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["results"][0]["n_modes"] == 0
    assert main(["validate-isotropic", "--medium", str(a), "--xi", "4,4,10,10", "--s", "1"]) == 2


def test_propagate_cli(tmp_path, media):
    _, i = media
    rng = np.random.default_rng(0)
    f = tmp_path / "in.dump"
    F = FieldGrid(rng.normal(size=(4, 4, 4)) + 0j, 10.0, 10.0, 1.0)
    write_grid(f, F)
    out = tmp_path / "out.dump"
    assert main(["propagate", "--medium", str(i), "--field", str(f), "--depth", "0.2", "--allow-growing",
                 "--out", str(out), "--csv", str(tmp_path / "out.csv")]) == 0
    G = read_grid(out)
    assert G.x3 == pytest.approx(0.2) and G.ordering == "F"
    assert (tmp_path / "out.csv").exists()


def test_pipeline_split_rows_32(tmp_path, media):
    p = write_run(tmp_path, grid={"nx1": 32, "nx2": 32, "L1": 40.0, "L2": 40.0}, s=["1+0.5j"],
                  stages=["split"])
    summary = run_pipeline(RunConfig.load(p))
    assert summary == {"split": "ran"}
    lines = (tmp_path / "out" / "split_s0.csv").read_text().strip().split("\n")
    assert len(lines) - 1 == 1024
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["stages"]["split"]["metrics"]["rows"] == [1024]


def test_pipeline_cache_hit_touches_nothing(tmp_path, media):
    p = write_run(tmp_path)
    assert main(["run", "--config", str(p)]) == 0
    before = mtimes(tmp_path / "out")
    summary = run_pipeline(RunConfig.load(p))
    assert set(summary.values()) == {"cached"}
    assert mtimes(tmp_path / "out") == before
    # changing a parameter reruns only the affected stages
    p = write_run(tmp_path, depth=0.25)
    summary = run_pipeline(RunConfig.load(p))
    assert summary["propagate"] == "ran" and summary["split"] == "cached"
    # a tampered output invalidates its stage
    (tmp_path / "out" / "split_s0.csv").write_text("x")
    assert run_pipeline(RunConfig.load(p))["split"] == "ran"


def test_pipeline_dependency_error(tmp_path, media):
    p = write_run(tmp_path, stages=["propagate"])
    with pytest.raises(DependencyError):
        run_pipeline(RunConfig.load(p))
    assert main(["run", "--config", str(p)]) == 2


def test_pipeline_failure_marks_stale(tmp_path, media):
    p = write_run(tmp_path)
    run_pipeline(RunConfig.load(p))
    p = write_run(tmp_path, depth=400.0)
    with pytest.raises(OverflowGuardError) as info:
        run_pipeline(RunConfig.load(p))
    assert info.value.stage == "propagate"
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["stages"]["propagate"]["status"] == "stale"
    assert man["stages"]["split"]["status"] == "ok"
    assert main(["run", "--config", str(p)]) == 3


def test_pipeline_deterministic(tmp_path, media):
    p = write_run(tmp_path)
    cfg = RunConfig.load(p)
    run_pipeline(cfg, tmp_path / "a")
    run_pipeline(cfg, tmp_path / "b", threads=2)
    files = sorted(f for f in os.listdir(tmp_path / "a") if f != "manifest.json")
    assert any(f.endswith(".csv") for f in files)
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_run_config_validation(tmp_path, media):
    with pytest.raises(ConfigError):
        RunConfig.load(write_run(tmp_path, S_R=2.0))
    with pytest.raises(ConfigError):
        RunConfig.load(write_run(tmp_path, stages=["split", "bogus"]))
    with pytest.raises(ConfigError):
        RunConfig.load(write_run(tmp_path, method="eig"))
    assert not GridSpec(12, 8, 1, 1).power_of_two and GridSpec(16, 8, 1, 1).power_of_two
