"""Command-line front end for simulation sweeps, bounds, and diagnostics."""

from __future__ import annotations

import sys

import click
import numpy as np

from .crlb import fim_position
from .harness import (
    CSV_COLUMNS,
    load_experiment,
    run_single_trial,
    run_sweep,
    trial_seed,
)
from .sounding import default_schedule, derive_truth, watts_to_dbm
from .zf import balance_report, build_bs_response_matrix, zf_weights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_FAILED = 3


def _load(config_path):
    try:
        return load_experiment(config_path)
    except (ValueError, OSError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """RIS-assisted 3D localization simulator."""


@main.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
def validate_config(config_path):
    """Parse a config file and check scene consistency."""
    cfg = _load(config_path)
    try:
        derive_truth(cfg.scene)
        A = build_bs_response_matrix(cfg.scene)
        W = zf_weights(A)
        norms, ratio = balance_report(W)
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(
        f"ok: M={cfg.scene.num_ris} RIS, N={cfg.scene.bs_layout.size} antennas, "
        f"T={cfg.scene.T} slots, sweep {cfg.sweep_variable}={cfg.sweep_values}"
    )
    click.echo(f"combiner norms {['%.4g' % n for n in norms]} (max/min ratio {ratio:.3g})")
    if ratio > cfg.balance_warn_ratio:
        click.echo(
            f"warning: combiner norm imbalance {ratio:.3g} exceeds {cfg.balance_warn_ratio}",
            err=True,
        )
    sys.exit(EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
@click.option("--seed", type=int, default=None, help="override the master seed")
@click.option("--trials", type=int, default=None, help="override the trial count")
@click.option("--out", type=click.Path(), default=None, help="CSV output path")
@click.option("--threads", type=int, default=None)
@click.option("--estimator", type=click.Choice(["ls", "ml"]), default=None)
def simulate(config_path, seed, trials, out, threads, estimator):
    """Run the configured Monte Carlo sweep and write the CSV rows."""
    cfg = _load(config_path)
    if seed is not None:
        cfg.seed = seed
    if trials is not None:
        cfg.trials = trials
    if out is not None:
        cfg.out = out
    if threads is not None:
        cfg.threads = threads
    if estimator is not None:
        cfg.estimator = estimator
    try:
        rows = run_sweep(cfg)
    except (ValueError, OSError) as exc:
        click.echo(f"config/output error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(",".join(CSV_COLUMNS))
    for r in rows:
        xyz = r.rmse_xyz_m or (None, None, None)
        vals = [
            r.sweep_variable, r.sweep_value, r.trials, r.failures, r.rmse_m,
            xyz[0], xyz[1], xyz[2], r.peb_m, r.mean_angle_err_rad, round(r.wall_time_s, 3),
        ]
        click.echo(",".join("" if v is None else str(v) for v in vals))
    if all(row.failures == row.trials for row in rows):
        sys.exit(EXIT_ALL_FAILED)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
def peb(config_path):
    """Print the position error bound for each sweep point (no trials)."""
    cfg = _load(config_path)
    from .harness import apply_sweep

    click.echo("sweep_value,peb_m,peb_x_m,peb_y_m,peb_z_m")
    for value in cfg.sweep_values:
        scene = apply_sweep(cfg.scene, cfg.sweep_variable, value)
        try:
            _, report = fim_position(scene, default_schedule(scene))
        except ValueError as exc:
            click.echo(f"degenerate geometry at {value}: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        b = report.axis_bounds_m
        click.echo(f"{value},{report.peb_m:.6g},{b[0]:.6g},{b[1]:.6g},{b[2]:.6g}")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=False))
@click.option("--seed", type=int, default=None)
@click.option("--estimator", type=click.Choice(["ls", "ml"]), default=None)
@click.option("--verbose", is_flag=True)
def single(config_path, seed, estimator, verbose):
    """Run one trial at the first sweep point and dump per-stage results."""
    cfg = _load(config_path)
    if seed is not None:
        cfg.seed = seed
    if estimator is not None:
        cfg.estimator = estimator
    from .harness import apply_sweep

    scene = apply_sweep(cfg.scene, cfg.sweep_variable, cfg.sweep_values[0])
    rec = run_single_trial(
        scene, trial_seed(cfg.seed, 0, 0), cfg.solver, cfg.estimator, cfg.c0
    )
    if not rec.ok:
        click.echo(f"trial failed: {rec.failure}", err=True)
        sys.exit(EXIT_ALL_FAILED)
    click.echo(f"tx power: {watts_to_dbm(scene.radio.tx_power):.1f} dBm")
    truth = derive_truth(scene)
    for m, (est, tr) in enumerate(zip(rec.aoa, truth)):
        click.echo(
            f"RIS {m}: est az/el = ({est.angles.azimuth:+.6f}, {est.angles.elevation:+.6f}) rad, "
            f"true = ({tr.ris_aoa.azimuth:+.6f}, {tr.ris_aoa.elevation:+.6f}), "
            f"angle error {rec.angle_errors_rad[m]:.3e} rad"
        )
        if verbose:
            click.echo(f"       gammas {est.gammas}, quality {est.quality:.3g}")
    p = rec.p_ls
    click.echo(f"LS fix: ({p.x:+.6f}, {p.y:+.6f}, {p.z:+.6f}) m, error {rec.error_ls_m:.3e} m")
    if rec.p_ml is not None:
        q = rec.p_ml
        click.echo(
            f"ML fix: ({q.x:+.6f}, {q.y:+.6f}, {q.z:+.6f}) m, error {rec.error_ml_m:.3e} m"
        )
    if verbose:
        A = build_bs_response_matrix(scene)
        W = zf_weights(A)
        norms, ratio = balance_report(W)
        click.echo(f"ZF residual max|A^H W - I| = {np.max(np.abs(A.conj().T @ W - np.eye(W.shape[1]))):.3e}")
        click.echo(f"combiner norms {['%.4g' % n for n in norms]} (ratio {ratio:.3g})")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
