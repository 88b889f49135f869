import json

import numpy as np
import pytest

from excursions.cli import main
from excursions.gridio import read_grid, read_report

MODEL_CFG = """
field = gaussian
family = squared_exponential
scale = 1.0
variance = 1.0
mean = 0.0
dims = 48,48
spacing = 0.5
"""

EXPERIMENT_CFG = """
kind = clt_volume
field = white_noise
family = nugget
windows = 48x48
spacing = 1.0
levels = 0.0
replications = 120
master_seed = 9
"""


@pytest.fixture
def model_cfg(tmp_path):
    p = tmp_path / "model.cfg"
    p.write_text(MODEL_CFG)
    return p


def test_simulate_measure_test_pipeline(tmp_path, model_cfg, capsys):
    grid = tmp_path / "field.xgrd"
    assert main(["simulate", "--config", str(model_cfg), "--seed", "5",
                 "--stream", "2", "--out", str(grid)]) == 0
    f = read_grid(grid)
    assert f.values.shape == (48, 48)

    report = tmp_path / "measure.json"
    assert main(["measure", "--field", str(grid), "--levels=-1,0,1",
                 "--perimeter", "--out", str(report)]) == 0
    data = read_report(report)
    assert data["levels"] == [-1.0, 0.0, 1.0]
    assert data["volumes"][0] >= data["volumes"][1] >= data["volumes"][2]
    assert all(p >= 0 for p in data["perimeters"])

    out = tmp_path / "test.json"
    assert main(["test", "--field", str(grid), "--null", str(model_cfg),
                 "--levels=-0.6,0,0.6", "--alpha", "0.05", "--block", "6",
                 "--out", str(out)]) == 0
    data = read_report(out)
    assert data["decision"] in ("reject", "fail_to_reject")
    assert data["df"] == 3


def test_simulate_determinism_across_invocations(tmp_path, model_cfg):
    a, b = tmp_path / "a.xgrd", tmp_path / "b.xgrd"
    main(["simulate", "--config", str(model_cfg), "--seed", "11", "--out", str(a)])
    main(["simulate", "--config", str(model_cfg), "--seed", "11", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_variance_command(tmp_path, model_cfg):
    out = tmp_path / "var.json"
    assert main(["variance", "--config", str(model_cfg), "--level", "0",
                 "--lattice", "0.5", "--windowed", "1.0", "--surface",
                 "--matrix=-0.5,0.5", "--out", str(out)]) == 0
    data = read_report(out)
    assert data["asymptotic_variance"]["value"] > 0
    assert data["asymptotic_variance_lattice"]["value"] > 0
    assert data["windowed_variance"]["value"] > 0
    assert data["mean_surface_area_per_unit_volume"] == pytest.approx(0.5, rel=1e-9)
    entries = np.array(data["cov_matrix"]["entries"])
    assert entries.shape == (2, 2)
    assert entries[0, 1] == entries[1, 0]


def test_mc_command_with_raw(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(EXPERIMENT_CFG)
    out = tmp_path / "mc.json"
    raw = tmp_path / "raw"
    assert main(["mc", "--config", str(cfg), "--out", str(out),
                 "--raw", str(raw)]) == 0
    data = read_report(out)
    assert data["kind"] == "clt_volume"
    assert (raw / "clt_48x48.csv").exists()


def test_variance_requires_some_request(tmp_path, model_cfg):
    with pytest.raises(SystemExit):
        main(["variance", "--config", str(model_cfg), "--out",
              str(tmp_path / "x.json")])
