"""Command-line front end.

Exit codes: 0 certified/success, 2 infeasible or uncertifiable, 1 error.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .certify import CERTIFIED, certify_at, minimize_rho, sweep_gain
from .errors import RhoIqcError
from .iqc import NonlinearityModel, parse_family
from .lti import eigenvalues, linearized_closed_loop, plant_from_dict, spectral_radius
from .simulate import simulate_batch

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class ConfigError(RhoIqcError, ValueError):
    pass


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be an object")
    for key in ("plant", "nonlinearity"):
        if key not in cfg:
            raise ConfigError(f"config: missing field {key!r}")
    try:
        plant = plant_from_dict(cfg["plant"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"config.plant: {exc}") from exc
    try:
        delta = NonlinearityModel.from_dict(cfg["nonlinearity"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"config.nonlinearity: {exc}") from exc
    families = cfg.get("families", [[{"kind": "sector"}]])
    try:
        families = [parse_family(f) for f in families]
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"config.families: {exc}") from exc
    return {"plant": plant, "delta": delta, "families": families}


def _family_option(cfg: dict, family: str | None) -> list:
    if family is None:
        return cfg["families"][0]
    if family.isdigit():
        idx = int(family)
        if idx >= len(cfg["families"]):
            raise ConfigError(f"--family: index {idx} out of range")
        return cfg["families"][idx]
    return parse_family(family)


def _fmt(v) -> str:
    return "" if v is None else f"{v:.9g}"


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2))


@click.group()
def cli():
    """Certified exponential-rate bounds via rho-IQCs."""


@cli.command("certify")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--rho", type=float, default=None, help="Certify at this fixed rate.")
@click.option("--minimize", is_flag=True, help="Bisect for the smallest certifiable rate.")
@click.option("--family", default=None, help="Family index in the config or e.g. 'sector+off_by_1'.")
@click.option("--tol", type=float, default=1e-3, show_default=True, help="Bisection tolerance on rho.")
def cmd_certify(config, rho, minimize, family, tol):
    """Certify a rate for the loop described in CONFIG."""
    cfg = load_config(config)
    if (rho is None) == (not minimize):
        raise click.UsageError("give exactly one of --rho or --minimize")
    fam = _family_option(cfg, family)
    if minimize:
        res = minimize_rho(cfg["plant"], cfg["delta"], fam, tol)
    else:
        res = certify_at(cfg["plant"], cfg["delta"], fam, rho)
    _emit(res.to_json())
    sys.exit(EXIT_OK if res.status == CERTIFIED else EXIT_INFEASIBLE)


def _parse_grid(spec: str) -> list:
    try:
        lo, hi, n = spec.split(":")
        n = int(n)
        lo, hi = float(lo), float(hi)
    except ValueError as exc:
        raise ConfigError(f"--b-grid: expected lo:hi:n, got {spec!r}") from exc
    if n < 1:
        raise ConfigError("--b-grid: n must be at least 1")
    return [lo] if n == 1 else list(np.linspace(lo, hi, n))


@cli.command("sweep")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--b-grid", "b_grid", required=True, help="Gains as lo:hi:n.")
@click.option("--families", "families", multiple=True, help="Family string; repeatable. Defaults to the config's.")
@click.option("--tol", type=float, default=1e-3, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (stdout if omitted).")
def cmd_sweep(config, b_grid, families, tol, jobs, out):
    """Certified rate versus arctan gain b for several families."""
    cfg = load_config(config)
    fams = [parse_family(f) for f in families] if families else cfg["families"]
    rows = sweep_gain(cfg["plant"], _parse_grid(b_grid), fams, tol, jobs=jobs)
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["b", "family", "rho_cert", "rho_linearized", "margin", "status"])
        for r in rows:
            margin = None if not np.isfinite(r.margin) else r.margin
            w.writerow([_fmt(r.b), r.family, _fmt(r.rho_cert), _fmt(r.rho_linearized), _fmt(margin), r.status])
    finally:
        if out:
            fh.close()


@cli.command("simulate")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--x0-count", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--T", "T", type=int, default=120, show_default=True)
@click.option("--burn-in", type=int, default=20, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def cmd_simulate(config, x0_count, seed, T, burn_in, out):
    """Simulate from seeded initial states in [-15, 15]^n and fit decay rates."""
    cfg = load_config(config)
    rows = simulate_batch(cfg["plant"], cfg["delta"], x0_count, seed, T, burn_in, out)
    rates = [r["rate"] for r in rows]
    _emit({"count": len(rows), "max_rate": max(rates), "min_rate": min(rates), "out": str(out)})


@cli.command("linearize")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--slope", type=float, default=None, help="Defaults to the upper slope bound.")
def cmd_linearize(config, slope):
    """Spectral radius of the loop with Delta replaced by a linear gain."""
    cfg = load_config(config)
    slope = cfg["delta"].beta if slope is None else slope
    cl = linearized_closed_loop(cfg["plant"], slope)
    ev = eigenvalues(cl.A)
    _emit({
        "slope": slope,
        "rho_linearized": spectral_radius(cl.A),
        "plant_spectral_radius": spectral_radius(cfg["plant"].A),
        "poles": [[float(e.real), float(e.imag)] for e in ev],
    })


@cli.command("selftest")
def cmd_selftest():
    """Run the embedded invariant checks."""
    from .selftest import run_all

    results = run_all()
    for name, ok, detail in results:
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    failed = sum(not ok for _, ok, _ in results)
    click.echo(f"{len(results) - failed} passed, {failed} failed")
    sys.exit(EXIT_OK if failed == 0 else EXIT_ERROR)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="rhoiqc", standalone_mode=False)
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except (RhoIqcError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
