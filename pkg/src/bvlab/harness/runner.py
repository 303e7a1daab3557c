"""
Run persistence, convergence tables and vanishing-viscosity tables.

Every artifact lands under ``$BVLAB_OUTPUT/<scenario name>/`` (default
``./bvlab_output``). CSVs are written with 17 significant digits so that
re-running a scenario reproduces them byte for byte.
"""

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..bv_trace import boundary_normal_component, tv_jump
from ..entropy_solver import bln_residual, solve_hyperbolic
from ..fv import InstabilityError, SeriesRecord
from ..grid import StructuredGrid, build_grid, discrete_laplace, gradient_norm, integrate, write_field_csv
from ..oracles import burgers_oracle, characteristic_oracle, l1_error, viscosity_limit_study
from ..problem import Scenario, mollify_initial
from ..viscous_solver import fit_tv_envelope, solve_viscous, time_derivative_l1
from .config import ConfigError, ScenarioConfig, echo, load_config

OUTPUT_ENV = "BVLAB_OUTPUT"

VISCOUS_COLUMNS = ("t", "linf", "tv_jump", "tv_gradient", "dudt_l1", "mass", "tv_extended",
                   "mass_flux_boundary", "trace_min", "trace_max", "step")
HYPERBOLIC_COLUMNS = VISCOUS_COLUMNS + ("entropy_cell_resid_max", "bln_resid_max")

CONSTANT_MEANING = {
    "c0": "eps * (|u0e|_L1 + |grad u0e|_L1 + |lap u0e|_L1) / tv_jump(u0)",
    "c1": "max_t |du/dt|_L1 / tv_jump(u0)",
    "c2": "TV envelope growth constant (c2 = c3, fitted on tv_extended)",
    "c3": "TV envelope growth constant (c2 = c3, fitted on tv_extended)",
    "c4": "max_t |u|_inf / |u0|_inf",
}


def output_root(root=None) -> Path:
    return Path(root or os.environ.get(OUTPUT_ENV, "bvlab_output"))


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


@dataclass
class RunArtifact:
    directory: Path
    status: str
    solver: str
    series: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def h21_surrogate(grid: StructuredGrid, u: np.ndarray, eps: float) -> float:
    """eps * (|u|_L1 + |grad u|_L1 + |Laplace u|_L1) with the Dirichlet-zero Laplacian."""
    return eps * (integrate(grid, np.abs(u)) + integrate(grid, gradient_norm(grid, u))
                  + integrate(grid, np.abs(discrete_laplace(grid, u).values)))


def fitted_constants(grid: StructuredGrid, scenario: Scenario, u0: np.ndarray, series) -> dict:
    tv0 = tv_jump(grid, u0)
    sup0 = float(np.max(np.abs(u0)))
    out = {"c0": None, "c1": None, "c2": None, "c3": None, "c4": None}
    if tv0 > 0:
        if scenario.viscosity > 0:
            ue = mollify_initial(grid, u0, scenario.viscosity, scenario.mollifier).values
            out["c0"] = h21_surrogate(grid, ue, scenario.viscosity) / tv0
        out["c1"] = time_derivative_l1(series) / tv0
    tve = [r.tv_extended for r in series]
    if tve[0] > 0:
        c = fit_tv_envelope([r.t for r in series], tve, tve[0])
        out["c2"] = out["c3"] = c
    if sup0 > 0:
        out["c4"] = max(r.linf for r in series) / sup0
    return out


def _face_columns(grid: StructuredGrid):
    bf = grid.boundary
    cols = [np.arange(len(bf)), bf.side] + [bf.centers[i] for i in range(grid.dim)]
    names = ["face", "side"] + [f"z{i + 1}" for i in range(grid.dim)]
    return names, cols


def run(config, root=None) -> RunArtifact:
    """Run one scenario and write run.json, series.csv, snapshots and trace/BLN tables."""
    cfg = config if isinstance(config, ScenarioConfig) else load_config(config)
    sc = cfg.scenario
    outdir = output_root(root) / sc.name
    outdir.mkdir(parents=True, exist_ok=True)
    solver = "viscous" if sc.viscosity > 0 else "hyperbolic"
    grid = sc.build_grid()
    u0 = sc.initial_field(grid).values
    meta = {"scenario": echo(cfg), "config_path": str(cfg.path), "code_version": __version__,
            "solver": solver, "grid_shape": list(grid.shape), "output_times": sc.output_times(),
            "constant_meaning": CONSTANT_MEANING}
    start = time.perf_counter()
    files = []
    try:
        if solver == "viscous":
            _, series, loop = solve_viscous(sc, grid)
            bln = [None] * len(series)
            columns = VISCOUS_COLUMNS
        else:
            res = solve_hyperbolic(sc, grid)
            series, loop, bln = res.series, res.loop, res.bln
            columns = HYPERBOLIC_COLUMNS
    except InstabilityError as exc:
        meta.update(status="aborted", message=str(exc), abort_time=exc.t, abort_step=exc.step,
                    wall_time=time.perf_counter() - start)
        _write_json(outdir / "run.json", meta)
        return RunArtifact(outdir, "aborted", solver, message=str(exc), files=["run.json"])

    write_csv(outdir / "series.csv", columns, [[getattr(r, c) for c in columns] for r in series])
    files.append("series.csv")
    names, cols = _face_columns(grid)
    for rec, snap, tr, b in zip(series, loop.snapshots, loop.traces, bln):
        if sc.snapshots:
            name = f"u_{rec.step:06d}.csv"
            write_field_csv(outdir / name, grid.field(snap))
            files.append(name)
        if tr is not None:
            tname = f"trace_{rec.t:.6f}.csv"
            write_csv(outdir / tname, names + ["trace", "raw"],
                      zip(*(cols + [tr.values, tr.raw])))
            files.append(tname)
        if b is not None:
            xn = boundary_normal_component(grid, lambda z: sc.flux.direction(z, rec.t))
            bname = f"bln_{rec.t:.6f}.csv"
            write_csv(outdir / bname, names + ["trace", "normal_speed", "bln_residual"],
                      zip(*(cols + [tr.values, xn, b])))
            files.append(bname)
    consts = fitted_constants(grid, sc, u0, series)
    meta.update(status="ok", steps=loop.steps, final_time=loop.t, fitted_constants=consts,
                wall_time=time.perf_counter() - start, files=files)
    _write_json(outdir / "run.json", meta)
    return RunArtifact(outdir, "ok", solver, series, consts, ["run.json"] + files)


def _write_json(path: Path, data: dict):
    def clean(v):
        if isinstance(v, float) and not np.isfinite(v):
            return None
        if isinstance(v, (np.floating, np.integer)):
            return clean(v.item())
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v
    path.write_text(json.dumps(clean(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- convergence --------------------------------------------------------------

def resolve_oracle(scenario: Scenario) -> str:
    """Name of the oracle used for a scenario: an analytic one or 'reference'."""
    choice = scenario.oracle
    if choice == "none":
        raise ConfigError("scenario declares no oracle; convergence needs one")
    if choice != "auto":
        if choice == "characteristic" and (scenario.flux.h_kind != "linear" or scenario.viscosity > 0
                                           or scenario.u0.profile == "csv"):
            raise ConfigError("characteristic oracle needs linear flux, viscosity 0 and analytic data")
        if choice in ("shock-exit", "boundary-rarefaction", "step-shock") and not _is_unit_burgers(scenario):
            raise ConfigError(f"{choice} oracle needs Burgers on the flat unit interval without viscosity")
        return choice
    if scenario.viscosity == 0 and scenario.flux.h_kind == "linear" and scenario.u0.profile != "csv":
        return "characteristic"
    if _is_unit_burgers(scenario):
        p = scenario.u0.params
        if scenario.u0.profile == "constant" and p.get("value") in (1.0, -1.0):
            return "shock-exit" if p["value"] == 1.0 else "boundary-rarefaction"
        if scenario.u0.profile == "step" and (p.get("left"), p.get("right"), p.get("position")) == (1.0, 0.0, 0.5):
            return "step-shock"
    return "reference"


def _is_unit_burgers(sc: Scenario) -> bool:
    g = sc.geometry
    return (g.kind == "weighted-interval" and g.metric_params.get("weight", "one") == "one"
            and tuple(g.transverse_range) == (0.0, 1.0) and sc.flux.h_kind == "burgers"
            and sc.flux.a == 1.0 and sc.flux.a_mode == "constant" and sc.viscosity == 0)


def _solve(sc: Scenario, grid: StructuredGrid) -> np.ndarray:
    if sc.viscosity > 0:
        return solve_viscous(sc, grid)[2].u
    return solve_hyperbolic(sc, grid, check_entropy=False).loop.u


def restrict(fine: np.ndarray, fine_grid: StructuredGrid, factor: int) -> np.ndarray:
    """Volume-weighted average of factor^dim fine cells onto each coarse cell."""
    if factor == 1:
        return np.array(fine, dtype=float)
    vol = fine_grid.cell_volume
    shape = []
    for n in fine.shape:
        shape += [n // factor, factor]
    axes = tuple(range(1, 2 * fine.ndim, 2))
    return np.sum((fine * vol).reshape(shape), axis=axes) / np.sum(vol.reshape(shape), axis=axes)


def convergence_table(scenario: Scenario, levels: int, reference_level=None):
    """Rows (N, l1_error, observed_order) for resolutions N, 2N, ... (every axis doubled).

    Without an analytic oracle the reference is the run refined by
    2**reference_level (default: one level beyond the finest in the table).
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    oracle = resolve_oracle(scenario)
    T = scenario.horizon
    rows = []
    scen = [scenario.refined(2 ** k) for k in range(levels)]
    ref = None
    ref_level = levels if reference_level is None else int(reference_level)
    if oracle == "reference":
        if ref_level < levels - 1:
            raise ValueError("reference must be at least as fine as every level")
        fine_sc = scenario.refined(2 ** ref_level)
        fine_grid = fine_sc.build_grid()
        ref = (_solve(fine_sc, fine_grid), fine_grid)
    for k, sc in enumerate(scen):
        grid = sc.build_grid()
        u = _solve(sc, grid)
        if oracle == "reference":
            target = restrict(ref[0], ref[1], 2 ** (ref_level - k))
            err = integrate(grid, np.abs(u - target))
        elif oracle == "characteristic":
            err = l1_error(grid, u, characteristic_oracle(sc), T)
        else:
            err = l1_error(grid, u, burgers_oracle(oracle), T)
        order = float("nan")
        if rows and err > 0 and rows[-1][1] > 0:
            order = float(np.log2(rows[-1][1] / err))
        rows.append((sc.resolution[0], err, order))
    return oracle, rows


def convergence(config, levels: int, root=None):
    cfg = config if isinstance(config, ScenarioConfig) else load_config(config)
    oracle, rows = convergence_table(cfg.scenario, levels)
    outdir = output_root(root) / cfg.scenario.name
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "rates.csv", ("N", "l1_error", "observed_order"), rows)
    return oracle, rows, outdir / "rates.csv"


def limit(config, eps_list, root=None):
    cfg = config if isinstance(config, ScenarioConfig) else load_config(config)
    sc = cfg.scenario
    rows = viscosity_limit_study(sc, eps_list, cadence=max(16, sc.cadence))
    outdir = output_root(root) / sc.name
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "viscosity_limit.csv", ("eps", "l1_distance", "fitted_rate"),
              [(r.eps, r.l1_distance, r.fitted_rate) for r in rows])
    return rows, outdir / "viscosity_limit.csv"
