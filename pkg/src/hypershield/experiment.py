"""Command line driver: viability precomputation, training, rollouts and exports"""

import logging
import os
from dataclasses import replace
from functools import wraps
from os import path
from typing import Callable, Dict, Optional

import click
import numpy as np

from hypershield.config import ConfigurationError, ExperimentConfig, dump_config, load_config
from hypershield.constraints import in_safety_box
from hypershield.dynamics import VehicleState
from hypershield.formats.csv_writer import write_csv_file
from hypershield.formats.hdf5 import (
    FingerprintMismatchError,
    read_qtable_file,
    read_viability_file,
    write_qtable_file,
    write_viability_file,
)
from hypershield.formats.interfaces import ExportInput
from hypershield.formats.text_writer import write_text_file
from hypershield.qlearning import episode_table, evaluate, q_slice, train
from hypershield.units import to_si
from hypershield.viability import ViabilityResult, mask_table

logger = logging.getLogger(__name__)

VIABILITY_FILE = "viability.h5"
QTABLE_FILE = "qtable.h5"


class InfeasibleConfigurationError(click.ClickException):
    exit_code = 3


class ArtifactMismatchError(click.ClickException):
    exit_code = 4


def common_options(command: Callable) -> Callable:
    """Adds the --config, --seed and --out options shared by all subcommands."""

    @click.option(
        "-c",
        "--config",
        "config_file",
        default="",
        help="Flat json file with dotted keys overriding the default settings.",
    )
    @click.option(
        "--seed",
        default=None,
        type=int,
        help="Random seed, overrides the `seed` setting.",
    )
    @click.option(
        "-o",
        "--out",
        envvar="HYPERSHIELD_OUT",
        default="hypershield_out",
        show_default=True,
        help="Directory for artifacts and exports (env: HYPERSHIELD_OUT).",
    )
    @wraps(command)
    def wrapper(config_file: str, seed: Optional[int], out: str, **kwargs):
        config = read_config(config_file, seed)
        os.makedirs(out, exist_ok=True)
        return command(config=config, out=out, **kwargs)

    return wrapper


def read_config(config_file: str, seed: Optional[int]) -> ExperimentConfig:
    if config_file and (not path.exists(config_file) or not path.isfile(config_file)):
        raise click.BadParameter(
            f"Config file `{config_file}` does not exist or is not valid.",
            param_hint="--config",
        )
    if config_file and path.splitext(config_file)[1] != ".json":
        raise click.BadParameter(
            f"Config file `{config_file}` must be a json file.", param_hint="--config"
        )

    try:
        config = load_config(config_file) if config_file else ExperimentConfig()
        if config.tables and not path.isfile(config.tables):
            raise ConfigurationError(f"Table file `{config.tables}` does not exist")
        if config.tables:
            try:
                config.vehicle_model()
            except (ValueError, KeyError) as exc:
                raise ConfigurationError(
                    f"Cannot read tables from `{config.tables}`: {exc}"
                ) from exc
        if config.learner.mode_augmented:
            raise ConfigurationError("`learner.mode_augmented` is not supported")
    except ConfigurationError as exc:
        raise click.UsageError(str(exc)) from exc

    if seed is not None:
        config = replace(config, seed=seed)
    return config


def read_viability(config: ExperimentConfig, out: str) -> ViabilityResult:
    fname = path.join(out, VIABILITY_FILE)
    if not path.isfile(fname):
        raise click.FileError(fname, hint="Run `hypershield viability` first.")
    try:
        return read_viability_file(fname, config.viability_fingerprint(), config.grid)
    except (FingerprintMismatchError, OSError, KeyError) as exc:
        raise ArtifactMismatchError(f"Refusing to load `{fname}`: {exc}") from exc


def read_qtable(config: ExperimentConfig, out: str, result: ViabilityResult):
    fname = path.join(out, QTABLE_FILE)
    if not path.isfile(fname):
        raise click.FileError(fname, hint="Run `hypershield train` first.")
    try:
        q = read_qtable_file(
            fname, config.viability_fingerprint(), config.fingerprint()
        )
    except (FingerprintMismatchError, OSError, KeyError) as exc:
        raise ArtifactMismatchError(f"Refusing to load `{fname}`: {exc}") from exc
    if q.shape != result.admissible.shape:
        raise ArtifactMismatchError(
            f"`{fname}` has shape {q.shape}, expected {result.admissible.shape}"
        )
    return q


def parse_state(value: str) -> VehicleState:
    """Parses "h,V,gamma,m" where each part is a SI number or a quantity string."""
    parts = [part.strip() for part in value.split(",")]
    if len(parts) != 4:
        raise click.BadParameter(
            f"Expected four comma separated values h,V,gamma,m, got `{value}`",
            param_hint="--x0",
        )
    try:
        return VehicleState(*(to_si(part) for part in parts))
    except Exception as exc:
        raise click.BadParameter(
            f"Cannot read `{value}`: {exc}", param_hint="--x0"
        ) from exc


def write_table(export: ExportInput, file_format: str):
    format_map: Dict[str, Callable[[ExportInput], None]] = {
        "csv": write_csv_file,
        "text": write_text_file,
    }
    format_map[file_format](export)
    logger.info("Wrote %s", export.output)


def output_name(out: str, stem: str, file_format: str) -> str:
    return path.join(out, f"{stem}.{'csv' if file_format == 'csv' else 'txt'}")


@click.group()
@click.option(
    "-v",
    "--verbose",
    is_flag=True,
    default=False,
    help="Log progress messages.",
)
def cli(verbose: bool):
    """Shielded Q-learning for hypersonic cruise under hard flight constraints."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@common_options
def viability(config: ExperimentConfig, out: str):
    """Computes the viable set and admissible action masks."""
    result = config.compute_viability()
    if result.is_empty:
        raise InfeasibleConfigurationError(
            "The viable set is empty: no state keeps all hard constraints satisfied."
        )

    fname = path.join(out, VIABILITY_FILE)
    write_viability_file(fname, result)

    shield = config.shield(result)
    sizes = result.mask_sizes()[result.feasible]
    click.echo(f"states: {result.n_states}")
    click.echo(f"viable states: {result.n_feasible}")
    click.echo(
        f"mask size: mean {sizes.mean():.2f}, min {sizes.min()}, max {sizes.max()}"
    )
    click.echo(f"sweeps: {result.sweeps}")
    click.echo(
        f"safe mode states: {int(shield.safe_states.sum())}, "
        f"unsafe mode states: {int(shield.unsafe_states.sum())}, "
        f"soft-safe states: {int(shield.soft_safe_states().sum())}"
    )
    click.echo(f"wrote {fname}")


@cli.command(name="train")
@common_options
@click.option(
    "-f",
    "--format",
    "file_format",
    default="csv",
    type=click.Choice(["csv", "text"]),
    help="Format of the episode log.",
    show_default=True,
)
def train_command(config: ExperimentConfig, out: str, file_format: str):
    """Trains a Q-table with the shield over chained episodes."""
    result = read_viability(config, out)
    shield = config.shield(result)
    if not shield.admits(config.grid.project(config.nominal).id):
        raise InfeasibleConfigurationError("The nominal state is not viable.")

    training = train(shield, config.nominal, config.learner, config.rewards, config.seed)

    fname = path.join(out, QTABLE_FILE)
    write_qtable_file(
        fname, training.q, config.viability_fingerprint(), config.fingerprint()
    )
    log_name = output_name(out, "episodes", file_format)
    write_table(
        ExportInput(log_name, episode_table(training.logs), "training episodes"),
        file_format,
    )

    violations = sum(log.hard_violations for log in training.logs)
    click.echo(f"episodes: {len(training.logs)}")
    click.echo(f"hard violations: {violations}")
    click.echo(f"inadmissible backup reads: {training.q.inadmissible_reads}")
    click.echo(f"wrote {fname} and {log_name}")


@cli.command()
@common_options
@click.option(
    "--x0",
    default="",
    help='Initial state "h,V,gamma,m", e.g. "35 km,2500,7 deg,12000". Defaults to nominal.',
)
@click.option(
    "--steps",
    default=None,
    type=click.IntRange(min=1),
    help="Number of steps. Defaults to the learner horizon.",
)
@click.option(
    "-f",
    "--format",
    "file_format",
    default="csv",
    type=click.Choice(["csv", "text"]),
    help="Format of the trajectory output.",
    show_default=True,
)
def rollout(
    config: ExperimentConfig,
    out: str,
    x0: str,
    steps: Optional[int],
    file_format: str,
):
    """Greedy shielded rollout of the trained Q-table."""
    result = read_viability(config, out)
    q = read_qtable(config, out, result)
    shield = config.shield(result)

    start = parse_state(x0) if x0 else config.nominal
    if config.grid.beyond_hull(start):
        raise click.BadParameter(f"{start} lies outside the state grid", param_hint="--x0")
    if not shield.admits(config.grid.project(start).id):
        raise click.BadParameter(f"{start} is not in the viable set", param_hint="--x0")

    episode = evaluate(
        shield, q, start, steps or config.learner.horizon, config.learner, config.rewards
    )
    fname = output_name(out, "rollout", file_format)
    write_table(ExportInput(fname, episode.to_dataset(), "greedy rollout"), file_format)

    inside = [in_safety_box(step.state, config.box) for step in episode.steps]
    entered = int(np.argmax(inside)) if any(inside) else None
    click.echo(f"steps: {episode.length}, ended by {episode.cause}")
    click.echo(f"return: {episode.total_return:.3f}")
    if entered is None:
        click.echo("never entered the safety box")
    else:
        click.echo(f"entered the safety box at step {entered}")
    click.echo(f"wrote {fname}")


@cli.command()
@common_options
@click.option(
    "-w",
    "--what",
    default="masks",
    type=click.Choice(["masks", "qslice", "maps", "config"]),
    help="What to export.",
    show_default=True,
)
@click.option(
    "-f",
    "--format",
    "file_format",
    default="csv",
    type=click.Choice(["csv", "text"]),
    help="Output format of tables.",
    show_default=True,
)
@click.option("--gamma-bin", default=None, type=int, help="Flight-path angle bin of a Q slice.")
@click.option("--m-bin", default=None, type=int, help="Mass bin of a Q slice.")
def export(
    config: ExperimentConfig,
    out: str,
    what: str,
    file_format: str,
    gamma_bin: Optional[int],
    m_bin: Optional[int],
):
    """Exports masks, Q-table slices, the vehicle maps or the configuration."""
    if what == "config":
        fname = path.join(out, "config.json")
        dump_config(config, fname)
        click.echo(f"fingerprint: {config.fingerprint()}")
        click.echo(f"wrote {fname}")
        return

    if what == "maps":
        vehicle = config.vehicle_model().vehicle
        alphas = np.linspace(vehicle.params.alpha_min, vehicle.params.alpha_max, 41)
        for stem, table in (
            ("aero_map", vehicle.aero_grid(alphas)),
            ("propulsion_map", vehicle.propulsion_grid()),
        ):
            fname = output_name(out, stem, file_format)
            write_table(ExportInput(fname, table, stem.replace("_", " ")), file_format)
            click.echo(f"wrote {fname}")
        return

    result = read_viability(config, out)
    if what == "masks":
        fname = output_name(out, "masks", file_format)
        write_table(
            ExportInput(fname, mask_table(result, config.grid), "admissible action masks"),
            file_format,
        )
        click.echo(f"wrote {fname}")
        return

    q = read_qtable(config, out, result)
    nominal = config.grid.project(config.nominal).index
    gamma_bin = nominal[2] if gamma_bin is None else gamma_bin
    m_bin = nominal[3] if m_bin is None else m_bin
    try:
        table = q_slice(q, config.grid, gamma_bin, m_bin, result.admissible)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--gamma-bin/--m-bin") from exc

    fname = output_name(out, f"qslice_g{gamma_bin}_m{m_bin}", file_format)
    write_table(ExportInput(fname, table, "greedy values over (h, V)"), file_format)
    click.echo(f"wrote {fname}")
