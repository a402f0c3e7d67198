"""
Contains the cli api of simmatch.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

from pathlib import Path

import click
import loggings
import numpy as np

from ._version import __version__
from .config import ConfigKeyError, ConfigValueError, ExperimentConfig
from .core import (
    ExperimentError,
    export_stream,
    materialize,
    run_experiment,
    run_network,
    run_offline,
    run_phase,
)
from .datagen import load_stream
from .metrics import Reference
from .offline import RegularizerKind
from .saver import FileFormatError

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}
KIND_NAMES = [
    "scale",
    "io",
    "squared",
    "scale-dependent",
    "input-output",
    "squared-output",
]


def _parse_spectrum(
    ctx: click.Context, param: click.Parameter, value: str
) -> list[float]:
    _ = ctx, param
    try:
        values = [float(v) for v in value.replace(" ", "").split(",") if v]
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated numbers: {value!r}") from e
    if not values:
        raise click.BadParameter("the spectrum is empty")
    if any(not np.isfinite(v) or v < 0 for v in values):
        raise click.BadParameter("eigenvalues must be finite and non-negative")
    return values


def _load_config(
    config: Path | None, scenario: str, seed: int | None, out_dir: str | None
) -> ExperimentConfig:
    try:
        cfg = (
            ExperimentConfig.preset(scenario)
            if config is None
            else ExperimentConfig.read(config)
        )
    except (ConfigKeyError, ConfigValueError, FileFormatError) as e:
        raise click.BadParameter(str(e), param_hint="--config") from e
    return cfg.with_overrides(seed=seed, output_dir=out_dir)


config_option = click.option(
    "--config",
    "config",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Experiment config file (yaml, toml or json).",
)
scenario_option = click.option(
    "--scenario",
    type=click.Choice(["stationary", "nonstationary"]),
    default="stationary",
    show_default=True,
    help="Built-in protocol, used when no config is given.",
)
seed_option = click.option("--seed", type=click.IntRange(min=0), help="Stream seed.")
out_dir_option = click.option("--out-dir", help="Output directory.")
plot_option = click.option("--plot", is_flag=True, help="Also write svg figures.")


@click.group(context_settings=CONTEXT_SETTINGS)
@click.option("-v", "--verbose", count=True, help="Log more (repeat for debug).")
@click.version_option(__version__, "-V", "--version")
def run(verbose: int) -> None:
    """Regularized similarity matching: offline solvers, online networks and sweeps."""
    if verbose:
        loggings.get_logger("simmatch", loggings.DEBUG if verbose > 1 else loggings.INFO)


@run.command(context_settings=CONTEXT_SETTINGS)
@click.option(
    "--kind", type=click.Choice(KIND_NAMES, case_sensitive=False), required=True
)
@click.option(
    "--spectrum",
    callback=_parse_spectrum,
    required=True,
    help="Comma-separated input eigenvalues, e.g. 6,5,4.",
)
@click.option("--alpha", type=click.FloatRange(min=0), required=True)
@click.option("-k", "--k", "k", type=click.IntRange(min=1), required=True)
@click.option("-T", "--samples", "T", type=click.IntRange(min=1), default=1, show_default=True)
def offline(kind: str, spectrum: list[float], alpha: float, k: int, T: int) -> None:
    """Print the offline optimal output eigenvalues and rank."""
    click.echo(repr(run_offline(spectrum, k, alpha, RegularizerKind.parse(kind), T=T)))


@run.command(context_settings=CONTEXT_SETTINGS)
@config_option
@scenario_option
@seed_option
@click.option("--count", type=click.IntRange(min=0), help="Number of samples.")
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False, path_type=Path),
    default="stream.csv",
    show_default=True,
    help="Where to write the samples.",
)
@click.option(
    "--network",
    type=click.Choice(KIND_NAMES, case_sensitive=False),
    help="Instead of dumping, run this network on the stream.",
)
@click.option(
    "--input",
    "input_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Replay samples from a stream csv (with --network).",
)
def stream(
    config: Path | None,
    scenario: str,
    seed: int | None,
    count: int | None,
    output: Path,
    network: str | None,
    input_path: Path | None,
) -> None:
    """Dump a synthetic stream to csv, or run one network on a stream."""
    cfg = _load_config(config, scenario, seed, None)
    if network is None:
        rows = export_stream(cfg, output, count)
        click.echo(f"wrote {rows} samples to {output}")
        return

    kind = RegularizerKind.parse(network)
    if str(kind) not in cfg.networks:
        raise click.BadParameter(f"config has no {kind} network", param_hint="--network")
    realized, samples = materialize(cfg)
    alpha, _ = cfg.resolve_alpha(kind, realized.spectrum.eigenvalues)
    net_cfg = cfg.networks[str(kind)].network_config(kind, cfg.stream.dim, alpha)
    reference = Reference.for_stream(realized, kind, alpha, net_cfg.k)
    if input_path is not None:
        samples, reference = load_stream(input_path), None
        if samples and len(samples[0].x) != cfg.stream.dim:
            raise click.BadParameter(
                f"stream has dimension {len(samples[0].x)}, config expects {cfg.stream.dim}",
                param_hint="--input",
            )
    if count is not None:
        samples = samples[:count]
    log, err = run_network(net_cfg, samples, cfg, reference=reference)
    log.to_csv(output, header={"kind": str(kind), "alpha": format(alpha, ".12g")})
    if err is not None:
        raise click.ClickException(f"{err}; partial results in {output}")
    click.echo(f"wrote {len(log)} snapshots to {output}")


@run.command(context_settings=CONTEXT_SETTINGS)
@config_option
@scenario_option
@seed_option
@out_dir_option
@plot_option
def experiment(
    config: Path | None,
    scenario: str,
    seed: int | None,
    out_dir: str | None,
    plot: bool,
) -> None:
    """Run the networks of an experiment on one recorded stream."""
    cfg = _load_config(config, scenario, seed, out_dir)
    try:
        result = run_experiment(cfg, plot=plot)
    except ExperimentError as e:
        raise click.ClickException(
            f"{e}; partial results in {cfg.output_dir}"
        ) from e
    for kind, net in result.runs.items():
        final = net.log.records[-1].output_spectrum if len(net.log) else []
        spectrum = " ".join(format(v, ".4g") for v in final)
        click.echo(f"{kind}: alpha={net.config.alpha:.6g} final output spectrum {spectrum}")
        click.echo(f"  -> {net.path}")


@run.command(context_settings=CONTEXT_SETTINGS)
@click.option(
    "--kind",
    "kinds",
    type=click.Choice(KIND_NAMES, case_sensitive=False),
    multiple=True,
    help="Regularizers to sweep (repeatable), by default all.",
)
@click.option(
    "--step",
    type=click.FloatRange(min=0, min_open=True, max=1),
    default=0.01,
    show_default=True,
    help="Step of the (a, b) grid.",
)
@click.option("--n1", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--n2", type=click.IntRange(min=1), default=1, show_default=True)
@out_dir_option
@plot_option
def phase(
    kinds: tuple[str, ...],
    step: float,
    n1: int,
    n2: int,
    out_dir: str | None,
    plot: bool,
) -> None:
    """Sweep alpha over the two-level spectrum grid."""
    selected = [RegularizerKind.parse(k) for k in kinds] or list(RegularizerKind)
    try:
        result = run_phase(
            list(dict.fromkeys(selected)),
            step=step,
            multiplicities=(n1, n2),
            out_dir=out_dir or "out",
            plot=plot,
        )
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--step") from e
    for kind, alphas in result.universal.items():
        if alphas:
            click.echo(
                f"{kind}: {len(alphas)} universal alpha values "
                f"in [{min(alphas):.6g}, {max(alphas):.6g}]"
            )
        else:
            click.echo(f"{kind}: none")


@run.command(name="config", context_settings=CONTEXT_SETTINGS)
@click.argument("scenario", type=click.Choice(["stationary", "nonstationary"]))
@click.argument("path", type=click.Path(dir_okay=False, path_type=Path))
def write_config(scenario: str, path: Path) -> None:
    """Write a built-in protocol to a config file to start from."""
    try:
        ExperimentConfig.preset(scenario).save(path)
    except FileFormatError as e:
        raise click.BadParameter(str(e), param_hint="PATH") from e
    click.echo(f"wrote {scenario} config to {path}")
