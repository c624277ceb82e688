"""Monte Carlo experiment harness: sweeps, trial execution, CSV output."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .anm import SolverOptions, regularization_weight, solve_anm
from .aoa import AoaEstimate, estimate_aoa
from .crlb import fim_position
from .geometry import Position3D, UpaLayout
from .locate import direction_vector, ls_intersection, ml_refine
from .sounding import (
    SceneConfig,
    default_schedule,
    facing_side,
    scene_from_dict,
    scene_with_power_dbm,
    simulate_sounding,
)
from .zf import build_bs_response_matrix, separate, zf_weights

CSV_COLUMNS = [
    "sweep_variable",
    "sweep_value",
    "trials",
    "failures",
    "rmse_m",
    "rmse_x_m",
    "rmse_y_m",
    "rmse_z_m",
    "peb_m",
    "mean_angle_err_rad",
    "wall_time_s",
]

SWEEP_VARIABLES = ("tx_power_dbm", "T", "N", "M", "ris_shift_m")


@dataclass
class ExperimentConfig:
    scene: SceneConfig
    sweep_variable: str = "tx_power_dbm"
    sweep_values: list = field(default_factory=lambda: [30.0])
    trials: int = 100
    seed: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)
    estimator: str = "ls"
    c0: float = 1.0
    threads: int = 1
    out: str | None = None
    balance_warn_ratio: float = 3.0

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.sweep_variable!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.estimator not in ("ls", "ml"):
            raise ValueError("estimator must be 'ls' or 'ml'")


@dataclass
class TrialRecord:
    trial_index: int
    ok: bool
    p_ls: Position3D | None = None
    p_ml: Position3D | None = None
    aoa: list[AoaEstimate] = field(default_factory=list)
    error_ls_m: float | None = None
    error_ml_m: float | None = None
    angle_errors_rad: list[float] = field(default_factory=list)
    failure: str | None = None

    @property
    def error_m(self) -> float | None:
        return self.error_ml_m if self.error_ml_m is not None else self.error_ls_m

    @property
    def position(self) -> Position3D | None:
        return self.p_ml if self.p_ml is not None else self.p_ls


@dataclass
class ResultRow:
    sweep_variable: str
    sweep_value: float
    trials: int
    failures: int
    rmse_m: float | None
    rmse_xyz_m: tuple[float, float, float] | None
    peb_m: float
    mean_angle_err_rad: float | None
    wall_time_s: float


def apply_sweep(scene: SceneConfig, variable: str, value) -> SceneConfig:
    """Scene for one sweep point."""
    if variable == "tx_power_dbm":
        return scene_with_power_dbm(scene, float(value))
    if variable == "T":
        return replace(scene, T=int(value))
    if variable == "N":
        n = int(value)
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise ValueError(f"N sweep expects a square antenna count, got {n}")
        return replace(scene, bs_layout=UpaLayout(scene.bs_layout.plane, side, side))
    if variable == "M":
        m = int(value)
        if not (2 <= m <= len(scene.ris)):
            raise ValueError(f"M sweep value {m} outside 2..{len(scene.ris)}")
        return replace(scene, ris=scene.ris[:m])
    if variable == "ris_shift_m":
        shift = float(value)
        bs = scene.bs_position.as_array()
        moved = []
        for r in scene.ris:
            p = r.position.as_array()
            u = (p - bs) / np.linalg.norm(p - bs)
            moved.append(replace(r, position=Position3D.from_array(p + shift * u)))
        return replace(scene, ris=tuple(moved))
    raise ValueError(f"unknown sweep variable {variable!r}")


def trial_seed(master_seed: int, sweep_index: int, trial_index: int) -> np.random.SeedSequence:
    """Counter-based stream splitting: the triple fully determines the stream,
    independent of execution order."""
    return np.random.SeedSequence([int(master_seed), int(sweep_index), int(trial_index)])


def run_single_trial(
    scene: SceneConfig,
    seed,
    solver: SolverOptions | None = None,
    estimator: str = "ls",
    c0: float = 1.0,
    trial_index: int = 0,
) -> TrialRecord:
    """One full pipeline pass: simulate, separate, per-RIS ANM + AoA, locate."""
    solver = solver or SolverOptions()
    rec = TrialRecord(trial_index=trial_index, ok=False)
    try:
        schedule = default_schedule(scene)
        record = simulate_sounding(scene, schedule, seed)
        A = build_bs_response_matrix(scene, record.truth)
        W = zf_weights(A)
        separated = separate(record, W, scene.radio.noise_var)
        estimates = []
        for m, (ris, tr, sep) in enumerate(zip(scene.ris, record.truth, separated)):
            L = ris.layout.size
            mu = regularization_weight(scene.radio.noise_var, sep.w_norm, L, c0)
            sol = solve_anm(
                sep.z, schedule[m], scene.radio.tx_power, mu,
                (ris.layout.n_a, ris.layout.n_z), solver,
            )
            side = facing_side(ris, scene.bs_position)
            est = estimate_aoa(sol, tr.ris_aod, ris.layout, side)
            estimates.append(est)
            xi_hat = direction_vector(est.angles)
            xi = direction_vector(tr.ris_aoa)
            rec.angle_errors_rad.append(float(np.arccos(np.clip(xi_hat @ xi, -1.0, 1.0))))
        rec.aoa = estimates
        p_ls, _ = ls_intersection(
            [(est.angles, ris.position) for est, ris in zip(estimates, scene.ris)]
        )
        rec.p_ls = p_ls
        truth_p = scene.ue_position.as_array()
        rec.error_ls_m = float(np.linalg.norm(p_ls.as_array() - truth_p))
        if estimator == "ml":
            p_ml, _, _ = ml_refine(p_ls, separated, scene, schedule)
            rec.p_ml = p_ml
            rec.error_ml_m = float(np.linalg.norm(p_ml.as_array() - truth_p))
        rec.ok = True
    except (ValueError, np.linalg.LinAlgError) as exc:
        rec.failure = f"{type(exc).__name__}: {exc}"
    return rec


def _trial_worker(args):
    scene, master_seed, sweep_index, trial_index, solver, estimator, c0 = args
    seed = trial_seed(master_seed, sweep_index, trial_index)
    return run_single_trial(scene, seed, solver, estimator, c0, trial_index)


def run_sweep_point(
    config: ExperimentConfig, sweep_index: int, value
) -> tuple[ResultRow, list[TrialRecord]]:
    scene = apply_sweep(config.scene, config.sweep_variable, value)
    start = time.perf_counter()
    args = [
        (scene, config.seed, sweep_index, t, config.solver, config.estimator, config.c0)
        for t in range(config.trials)
    ]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(_trial_worker, args, chunksize=4))
    else:
        records = [_trial_worker(a) for a in args]

    schedule = default_schedule(scene)
    _, report = fim_position(scene, schedule)

    good = [r for r in records if r.ok]
    failures = len(records) - len(good)
    if good:
        errs = np.array([r.error_m for r in good])
        deltas = np.array(
            [r.position.as_array() - scene.ue_position.as_array() for r in good]
        )
        rmse = float(np.sqrt(np.mean(errs**2)))
        rmse_xyz = tuple(float(v) for v in np.sqrt(np.mean(deltas**2, axis=0)))
        ang = float(np.mean([e for r in good for e in r.angle_errors_rad]))
    else:
        rmse, rmse_xyz, ang = None, None, None
    row = ResultRow(
        sweep_variable=config.sweep_variable,
        sweep_value=float(value),
        trials=len(records),
        failures=failures,
        rmse_m=rmse,
        rmse_xyz_m=rmse_xyz,
        peb_m=report.peb_m,
        mean_angle_err_rad=ang,
        wall_time_s=time.perf_counter() - start,
    )
    return row, records


def run_sweep(config: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for i, value in enumerate(config.sweep_values):
        row, _ = run_sweep_point(config, i, value)
        rows.append(row)
    if config.out:
        write_csv(config.out, rows)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.12g}"


def write_csv(path: str, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            xyz = r.rmse_xyz_m or (None, None, None)
            writer.writerow(
                [
                    r.sweep_variable,
                    _fmt(r.sweep_value),
                    r.trials,
                    r.failures,
                    _fmt(r.rmse_m),
                    _fmt(xyz[0]),
                    _fmt(xyz[1]),
                    _fmt(xyz[2]),
                    _fmt(r.peb_m),
                    _fmt(r.mean_angle_err_rad),
                    _fmt(r.wall_time_s),
                ]
            )


def experiment_from_dict(cfg: dict) -> ExperimentConfig:
    scene = scene_from_dict(cfg)
    exp = cfg.get("experiment", {}) or {}
    solver_cfg = exp.get("solver", {}) or {}
    solver = SolverOptions(**solver_cfg)
    return ExperimentConfig(
        scene=scene,
        sweep_variable=exp.get("sweep", "tx_power_dbm"),
        sweep_values=list(exp.get("values", [30.0])),
        trials=int(exp.get("trials", 100)),
        seed=int(exp.get("seed", 0)),
        solver=solver,
        estimator=exp.get("estimator", "ls"),
        c0=float(exp.get("c0", 1.0)),
        threads=int(exp.get("threads", 1)),
        out=exp.get("out"),
    )


def load_experiment(path: str) -> ExperimentConfig:
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("experiment config must be a YAML mapping")
    return experiment_from_dict(cfg)
