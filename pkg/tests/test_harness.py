import json

import numpy as np
import pytest

from bvlab.harness import cli
from bvlab.harness.config import CONFIG_DIR, ConfigError, shipped
from bvlab.harness.runner import (HYPERBOLIC_COLUMNS, VISCOUS_COLUMNS, convergence_table, resolve_oracle,
                                  restrict, run)


def _csvs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.glob("*.csv"))}


def test_shock_exit_run_writes_five_snapshots(output_dir):
    art = run(CONFIG_DIR / "shock_exit.cfg")
    assert art.ok and art.solver == "hyperbolic"
    assert art.directory == output_dir / "shock_exit"
    assert len(list(art.directory.glob("u_*.csv"))) == 5
    meta = json.loads((art.directory / "run.json").read_text())
    assert meta["status"] == "ok" and meta["solver"] == "hyperbolic"
    assert set(meta["fitted_constants"]) == {"c0", "c1", "c2", "c3", "c4"}
    assert meta["scenario"]["geometry"]["kind"] == "weighted-interval"
    header = (art.directory / "series.csv").read_text().splitlines()[0].split(",")
    assert header == list(HYPERBOLIC_COLUMNS)


def test_viscous_config_records_viscous_solver(output_dir):
    art = run(CONFIG_DIR / "ac_5.cfg")
    meta = json.loads((art.directory / "run.json").read_text())
    assert meta["solver"] == "viscous"
    assert meta["fitted_constants"]["c0"] > 0
    header = (art.directory / "series.csv").read_text().splitlines()[0].split(",")
    assert header == list(VISCOUS_COLUMNS)


def test_rerun_is_byte_identical(tmp_path):
    a = run(CONFIG_DIR / "ac_4_band.cfg", tmp_path / "a")
    b = run(CONFIG_DIR / "ac_4_band.cfg", tmp_path / "b")
    ca, cb = _csvs(a.directory), _csvs(b.directory)
    assert ca and ca == cb


def test_abort_recorded_in_run_json(tmp_path, monkeypatch):
    from bvlab import fv
    monkeypatch.setattr(fv, "GROWTH_LIMIT", 0.5)
    art = run(CONFIG_DIR / "ac_4.cfg", tmp_path)
    assert art.status == "aborted"
    meta = json.loads((art.directory / "run.json").read_text())
    assert meta["status"] == "aborted" and meta["abort_step"] == 1


def test_cli_run_and_exit_codes(output_dir, tmp_path, capsys):
    assert cli.main(["run", str(CONFIG_DIR / "ac_4.cfg")]) == 0
    assert (output_dir / "ac_4" / "run.json").exists()
    bad = tmp_path / "bad.cfg"
    bad.write_text((CONFIG_DIR / "ac_4.cfg").read_text().replace("[flux]", "[flux]\nwobble = 1"))
    assert cli.main(["run", str(bad)]) == 2
    assert "wobble" in capsys.readouterr().err


def test_cli_output_flag(tmp_path):
    assert cli.main(["run", str(CONFIG_DIR / "ac_4.cfg"), "--output", str(tmp_path / "x")]) == 0
    assert (tmp_path / "x" / "ac_4" / "series.csv").exists()


def test_cli_convergence_writes_rates(output_dir, capsys):
    assert cli.main(["convergence", str(CONFIG_DIR / "ac_10_rotation.cfg"), "--levels", "3"]) == 0
    rows = (output_dir / "ac_10_rotation" / "rates.csv").read_text().splitlines()
    assert rows[0] == "N,l1_error,observed_order"
    orders = [float(r.split(",")[2]) for r in rows[2:]]
    assert len(orders) == 2 and min(orders) >= 0.8


def test_cli_limit_writes_table(output_dir):
    assert cli.main(["limit", str(CONFIG_DIR / "ac_9.cfg"), "--eps", "0.1,0.05"]) == 0
    rows = (output_dir / "ac_9" / "viscosity_limit.csv").read_text().splitlines()
    assert len(rows) == 3


def test_shock_exit_convergence_order():
    oracle, rows = convergence_table(shipped("ac_10_shock").scenario, 3)
    assert oracle == "shock-exit"
    assert all(r[2] >= 0.5 for r in rows[1:])


def test_reference_at_same_level_gives_zero_error():
    sc = shipped("ac_4_band").scenario
    oracle, rows = convergence_table(sc.replace(oracle="reference"), 1, reference_level=0)
    assert oracle == "reference" and rows[0][1] == 0.0


def test_oracle_resolution_rules():
    assert resolve_oracle(shipped("ac_10").scenario) == "characteristic"
    assert resolve_oracle(shipped("shock_exit").scenario) == "shock-exit"
    assert resolve_oracle(shipped("ac_7_step").scenario) == "step-shock"
    assert resolve_oracle(shipped("ac_4_band").scenario) == "reference"
    with pytest.raises(ConfigError):
        resolve_oracle(shipped("ac_4").scenario.replace(oracle="none"))
    with pytest.raises(ConfigError):
        resolve_oracle(shipped("ac_4_band").scenario.replace(oracle="shock-exit"))


def test_restrict_preserves_integral():
    sc = shipped("ac_4_band").scenario.refined(2)
    grid = sc.build_grid()
    u = np.random.default_rng(0).normal(size=grid.shape)
    r = restrict(u, grid, 2)
    n0, n1 = grid.shape
    coarse_vol = grid.cell_volume.reshape(n0 // 2, 2, n1 // 2, 2).sum(axis=(1, 3))
    assert np.sum(r * coarse_vol) == pytest.approx(np.sum(u * grid.cell_volume), rel=1e-12)
    assert np.array_equal(restrict(u, grid, 1), u)


def test_cli_rejects_bad_arguments():
    with pytest.raises(SystemExit):
        cli.main(["verify", "everything"])
    with pytest.raises(SystemExit):
        cli.main(["limit", "x.cfg", "--eps", "-1"])
