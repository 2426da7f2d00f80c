"""Command-line entry points: detect, simulate, quantiles, experiment."""

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import bridge_quantiles
from .epidemic_test import ScanConfig, ScanError
from .experiment import ExperimentConfig, run_experiment
from .model_core import EpiscanError, ModelSpec
from .qmle import FitError
from .reporting import InputError, ingest_csv, run_detect, write_series_csv, write_surface_csv
from .simulate import EpidemicDesign, SeedSpec, simulate_epidemic, simulate_null

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, (FitError, ScanError)):
        sys.exit(EXIT_NUMERICAL)
    sys.exit(EXIT_INPUT)


def _parse_theta(text):
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise InputError(f"cannot parse parameter vector {text!r}") from None


def _spec(model, noise, r):
    return ModelSpec(family=model, noise=noise, r=r)


@click.group()
def main():
    """Epidemic change-point detection for count time series."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--model", type=click.Choice(["inarch1", "ingarch11"]), required=True)
@click.option("--noise", type=click.Choice(["poisson", "nb"]), default="poisson")
@click.option("--r", type=int, default=None, help="NB dispersion (nb noise only)")
@click.option("--alpha", type=float, default=0.05)
@click.option("--un", "u_n", type=int, default=None)
@click.option("--vn", "v_n", type=int, default=None)
@click.option("--stride", type=int, default=1)
@click.option("--surface", "surface_path", type=click.Path(), default=None)
@click.option("--table", "table_path", type=click.Path(), default=None)
@click.option("--report", "report_path", type=click.Path(), default=None)
def detect(input_path, model, noise, r, alpha, u_n, v_n, stride, surface_path,
           table_path, report_path):
    """Run the epidemic change-point test on a CSV of counts."""
    try:
        series = ingest_csv(input_path)
        spec = _spec(model, noise, r)
        table = bridge_quantiles.QuantileTable.load(table_path) if table_path else None
        config = ScanConfig.for_detect(len(series), spec, alpha=alpha,
                                       stride=stride, table=table)
        if u_n is not None:
            config.u_n = u_n
        if v_n is not None:
            config.v_n = v_n
        report, result = run_detect(series, spec, config)
    except EpiscanError as exc:
        _fail(exc)
    if surface_path:
        write_surface_csv(result.surface, surface_path)
    text = report.to_json()
    if report_path:
        Path(report_path).write_text(text)
    click.echo(text)


@main.command()
@click.option("--model", type=click.Choice(["inarch1", "ingarch11"]), required=True)
@click.option("--noise", type=click.Choice(["poisson", "nb"]), default="poisson")
@click.option("--r", type=int, default=None)
@click.option("--theta", required=True, help="comma-separated baseline parameter")
@click.option("--theta1", default=None, help="mid-stretch parameter (epidemic)")
@click.option("--tau1", type=float, default=0.3)
@click.option("--tau2", type=float, default=0.7)
@click.option("--n", type=int, required=True)
@click.option("--burnin", type=int, default=500)
@click.option("--seed", type=int, default=0)
@click.option("--stream", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
def simulate(model, noise, r, theta, theta1, tau1, tau2, n, burnin, seed, stream,
             out_path):
    """Simulate a trajectory, writing counts to CSV and the design to JSON."""
    try:
        spec = _spec(model, noise, r)
        th0 = _parse_theta(theta)
        seedspec = SeedSpec(seed, stream)
        design_echo = {
            "model": model, "noise": noise, "r": r,
            "theta0": th0.tolist(), "n": n, "burnin": burnin,
            "seed": seed, "stream": stream,
        }
        if theta1 is not None:
            th1 = _parse_theta(theta1)
            design = EpidemicDesign(th0, th1, tau1, tau2)
            series, breaks = simulate_epidemic(spec, design, n, burnin, seedspec)
            design_echo.update(theta1=th1.tolist(), tau1=tau1, tau2=tau2,
                               breaks=list(breaks))
        else:
            series = simulate_null(spec, th0, n, burnin, seedspec)
    except EpiscanError as exc:
        _fail(exc)
    write_series_csv(series, out_path)
    Path(str(out_path) + ".json").write_text(json.dumps(design_echo, indent=2))
    click.echo(f"wrote {n} observations to {out_path}")


@main.command()
@click.option("--d", "dims", type=int, multiple=True, required=True)
@click.option("--alpha", "alphas", type=float, multiple=True, required=True)
@click.option("--reps", type=int, default=bridge_quantiles.DEFAULT_REPS)
@click.option("--grid", type=int, default=bridge_quantiles.DEFAULT_GRID)
@click.option("--seed", type=int, default=0)
@click.option("--cache", "cache_path", type=click.Path(), default=None)
def quantiles(dims, alphas, reps, grid, seed, cache_path):
    """Monte-Carlo critical values of the limiting sup distribution."""
    try:
        table = bridge_quantiles.build_table(dims, alphas, reps=reps,
                                             grid_size=grid, seed=seed,
                                             cache_path=cache_path)
    except (EpiscanError, ValueError) as exc:
        _fail(exc)
    click.echo(table.to_json())


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None)
def experiment(config_path, out_path):
    """Empirical size/power study driven by a JSON config."""
    try:
        config = ExperimentConfig.load(config_path)
        result = run_experiment(config)
    except (EpiscanError, OSError, json.JSONDecodeError, TypeError) as exc:
        _fail(exc)
    if out_path:
        result.save(out_path)
    click.echo(json.dumps({
        "rejection_frequency": result.rejection_frequency,
        "completed": result.completed,
        "failed": result.failed,
    }, indent=2))


if __name__ == "__main__":
    main()
