# Copyright 2026 The semhyper authors
# Licensed under the MIT license

import logging
import sys
from pathlib import Path
from typing import List, Optional

import click

from .__version__ import __version__
from .config import (
    dump_scenario,
    load_config,
    load_scenario,
    parse_generate,
    parse_schemes,
    parse_seeds,
    parse_shape,
    save_scenario,
)
from .core import run_experiment
from .scenario import generate_scenario, validate
from .types import ConfigError, ExperimentConfig, Options


def init_logging(*, debug: Optional[bool] = None) -> None:
    format = "%(message)s" if not debug else "%(levelname)s %(name)s %(message)s"
    level = (
        logging.DEBUG if debug else (logging.INFO if debug is None else logging.ERROR)
    )
    logging.basicConfig(stream=sys.stderr, level=level, format=format)


def plural(v: int, word: str) -> str:
    return f"{v} {word if v == 1 else word + 's'}"


@click.group()
@click.pass_context
@click.version_option(__version__, "--version", "-V")
@click.option(
    "--debug/--quiet",
    "-v/-q",
    is_flag=True,
    default=None,
    help="Enable debug/verbose output",
)
@click.option(
    "--concurrency",
    type=int,
    default=None,
    help="Override the default concurrency",
)
@click.option(
    "--root",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Specify the root directory for project configuration",
)
def main(
    ctx: click.Context,
    debug: Optional[bool],
    concurrency: Optional[int],
    root: Optional[Path],
) -> None:
    init_logging(debug=debug)

    ctx.obj = Options(
        debug=debug is True,
        quiet=debug is False,
        concurrency=concurrency,
        root=root,
    )


@main.command()
@click.pass_context
@click.option(
    "--scenario",
    "scenario_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Scenario file to run, re-seeded for every seed",
)
@click.option(
    "--generate",
    metavar="SEED,KxJxD,DECAY",
    default=None,
    help="Generate scenarios with this shape and relevance decay",
)
@click.option("--schemes", default=None, help="Comma separated schemes to run")
@click.option("--rounds", type=int, default=None, help="Maximum rounds per scheme")
@click.option("--seeds", default=None, help="Comma separated seeds")
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Output directory",
)
@click.option(
    "--sweep",
    "sweeps",
    type=click.Choice(["perception", "relevance"]),
    multiple=True,
    help="Add a parameter sweep to sweep.csv",
)
@click.option(
    "--oracle",
    is_flag=True,
    default=False,
    help="Check the solver against exhaustive search on tiny fixtures",
)
def run(
    ctx: click.Context,
    scenario_path: Optional[Path],
    generate: Optional[str],
    schemes: Optional[str],
    rounds: Optional[int],
    seeds: Optional[str],
    out: Optional[Path],
    sweeps: List[str],
    oracle: bool,
) -> None:
    """
    Solve every scheme for every seed and write the results.

    Writes scenarios/seed-N.toml, trace.csv, sweep.csv and summary.json to the
    output directory. trace.csv has one row per player per round, then one row per
    ordered pair per round with role "pair", with the columns scheme, seed,
    config_hash, round, player, role, perceiver, utility, qote, bits, surprise, delay
    and misperception. sweep.csv has the columns scheme, seed, config_hash,
    sweep, x, bits, qote and utility.

    Without --seeds, a generator runs its own seed and a scenario file runs the
    seeds from [tool.semhyper].
    """
    options: Options = ctx.obj
    try:
        project = load_config(root=options.root)
        spec = parse_generate(generate) if generate else None
        if seeds:
            seed_list = parse_seeds(seeds)
        elif spec is not None:
            seed_list = [spec.seed]
        else:
            seed_list = project.seeds
        config = ExperimentConfig(
            out=out or project.out,
            schemes=parse_schemes(schemes) if schemes else project.schemes,
            seeds=seed_list,
            rounds=project.rounds if rounds is None else rounds,
            scenario_path=scenario_path,
            generate=spec,
            sweeps=sorted(set(sweeps) or set(project.sweeps)),
            oracle=oracle,
            concurrency=options.concurrency,
        )
        status = run_experiment(config)
    except ConfigError as e:
        click.secho(f"Error: {e}", fg="yellow", err=True)
        ctx.exit(1)

    if status:
        click.secho("❗️ Every seed failed ❗️", fg="yellow", err=True)
        ctx.exit(status)
    if not options.quiet:
        seeds_written = plural(len(config.seeds), "seed")
        click.secho(f"✨ {seeds_written} written to {config.out} ✨", err=True)


@main.command()
@click.pass_context
@click.argument("seed", type=int)
@click.option("--shape", default="2x2x4", help="Counts as KxJxD")
@click.option("--decay", type=float, default=0.5, help="Relevance decay in (0, 1]")
@click.option(
    "--output",
    "-o",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write the scenario here instead of stdout",
)
def generate(
    ctx: click.Context,
    seed: int,
    shape: str,
    decay: float,
    output: Optional[Path],
) -> None:
    """Generate a random scenario file"""
    options: Options = ctx.obj
    try:
        scenario = generate_scenario(seed, parse_shape(shape), decay)
    except ConfigError as e:
        click.secho(f"Error: {e}", fg="yellow", err=True)
        ctx.exit(1)

    if output is None:
        click.echo(dump_scenario(scenario), nl=False)
    else:
        save_scenario(scenario, output)
        if not options.quiet:
            click.secho(f"Wrote {output}", err=True)


@main.command("validate")
@click.pass_context
@click.argument(
    "paths",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    nargs=-1,
    required=True,
    metavar="PATH ...",
)
def validate_command(ctx: click.Context, paths: List[Path]) -> None:
    """Check one or more scenario files"""
    options: Options = ctx.obj
    invalid = 0
    for path in paths:
        try:
            diagnostics = validate(load_scenario(path))
        except ConfigError as e:
            diagnostics = [str(e)]
        if diagnostics:
            invalid += 1
            for diagnostic in diagnostics:
                click.secho(f"{path}: {diagnostic}", fg="yellow", err=True)
        elif not options.quiet:
            click.secho(f"{path}: ok", err=True)

    if not options.quiet:
        if invalid:
            message = plural(invalid, "invalid scenario")
            click.secho(f"❗️ {message} ❗️", fg="yellow", err=True)
        else:
            message = plural(len(paths), "scenario")
            click.secho(f"✨ {message} valid ✨", err=True)
    if invalid:
        ctx.exit(1)
