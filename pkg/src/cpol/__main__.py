"""Command-line interface."""
import json
import logging
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Iterator
from typing import Optional

import click
import numpy as np
import pandas as pd

from cpol import analysis
from cpol import entanglement
from cpol import physics
from cpol.config import CpolSettings
from cpol.config import RunConfig
from cpol.config import parse_run_config
from cpol.enums import ExitCode
from cpol.enums import FitMethod
from cpol.enums import OutputFormat
from cpol.errors import ConfigError
from cpol.errors import EventFileError
from cpol.errors import FormatVersionError
from cpol.errors import QuadratureError
from cpol.eventfile import DEFAULT_CHUNK_ROWS
from cpol.eventfile import EventFileHeader
from cpol.eventfile import iter_event_chunks
from cpol.eventfile import read_event_header
from cpol.eventfile import write_event_file
from cpol.events import BinningScheme
from cpol.montecarlo import SimulationStats
from cpol.montecarlo import run_simulation
from cpol.oracles import FACTORIZATION_TOLERANCE
from cpol.oracles import run_oracles
from cpol.utils import CSV_FLOAT_FORMAT
from cpol.utils import BasicLog
from cpol.utils import configure_logging


LOGGER = logging.getLogger(__name__)


def _note(level: str, text: str) -> None:
    click.echo(BasicLog.format(level, text), err=True)


def _echo_config(cfg: RunConfig) -> None:
    click.echo(json.dumps(cfg.effective(), indent=2, sort_keys=True), err=True)


def _load_config(ctx: click.Context, path: Optional[str], overrides: Dict[str, Dict[str, Any]]) -> RunConfig:
    try:
        payload: Dict[str, Any] = {} if path is None else json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        _note("ERROR", f"<root>: invalid JSON: {e}")
        ctx.exit(int(ExitCode.CONFIG))
    except OSError as e:
        _note("ERROR", f"cannot read config {path}: {e}")
        ctx.exit(int(ExitCode.IO))
    for section, values in overrides.items():
        for key, value in values.items():
            if value is not None:
                payload.setdefault(section, {})[key] = value
    try:
        return parse_run_config(payload)
    except ConfigError as e:
        _note("ERROR", str(e))
        ctx.exit(int(ExitCode.CONFIG))


@click.group()
@click.version_option(package_name="compton-polarimetry")
@click.pass_context
def main(ctx: click.Context) -> None:
    """Compton polarimetry of photon pairs."""
    settings = CpolSettings()
    configure_logging(settings.logging_on, settings.log_level)
    ctx.obj = settings


@main.command()
@click.option("--energy-kev", type=float, default=physics.ELECTRON_MASS_KEV, show_default=True)
@click.option("--grid-deg", type=float, default=1.0, show_default=True, help="Angle step.")
@click.option("--output", "output", type=click.Path(dir_okay=False), default="curves.csv", show_default=True)
@click.pass_context
def curves(ctx: click.Context, energy_kev: float, grid_deg: float, output: str) -> None:
    """Theory curves C_qft, C_pure and A with the scattered energy over 0..180 degrees."""
    if energy_kev <= 0 or grid_deg <= 0:
        _note("ERROR", "energy and grid step must be positive")
        ctx.exit(int(ExitCode.CONFIG))
    theta_deg = np.linspace(0.0, 180.0, int(np.ceil(180.0 / grid_deg - 1e-9)) + 1)
    theta = np.deg2rad(theta_deg)
    qft = entanglement.qft_concurrence_curve(energy_kev, theta)
    kinematics = [physics.ScatterKinematics.from_angle(energy_kev, float(t)) for t in theta]
    frame = pd.DataFrame(
        {
            "theta_deg": theta_deg,
            "c_qft": [c for _, c in qft.samples],
            "c_pure_model": [entanglement.concurrence_pure_model(energy_kev, float(t)) for t in theta],
            "analyzing_power": np.atleast_1d(physics.analyzing_power(energy_kev, theta)),
            "e_out_kev": [k.e_out for k in kinematics],
            "gamma": [k.gamma for k in kinematics],
        }
    )
    try:
        frame.to_csv(output, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        _note("ERROR", f"cannot write {output}: {e}")
        ctx.exit(int(ExitCode.IO))
    _note("INFO", f"wrote {len(frame)} rows to {output}")


@main.command()
@click.option("--energy-kev", type=float, default=None, help="Source energy for an explicit configuration.")
@click.option("--theta", "theta_deg", type=float, default=None, help="Pre-scatter angle, degrees.")
@click.option("--theta-a", "theta_a_deg", type=float, default=None, help="Polarimeter a angle, degrees.")
@click.option("--theta-b", "theta_b_deg", type=float, default=None, help="Polarimeter b angle, degrees.")
@click.option("--count", type=int, default=100, show_default=True, help="Random configurations in the grid.")
@click.option("--seed", type=int, default=None)
@click.pass_context
def factorize(
    ctx: click.Context,
    energy_kev: Optional[float],
    theta_deg: Optional[float],
    theta_a_deg: Optional[float],
    theta_b_deg: Optional[float],
    count: int,
    seed: Optional[int],
) -> None:
    """Check nu = C A_a A_b by quadrature, explicitly or on a random grid."""
    settings: CpolSettings = ctx.obj
    explicit = [theta_deg, theta_a_deg, theta_b_deg]
    if any(v is not None for v in explicit):
        if any(v is None for v in explicit):
            _note("ERROR", "--theta, --theta-a and --theta-b go together")
            ctx.exit(int(ExitCode.CONFIG))
        configs = [
            entanglement.ThreeComptonConfig(
                e_in=physics.ELECTRON_MASS_KEV if energy_kev is None else energy_kev,
                theta=float(np.deg2rad(theta_deg)),
                theta_a=float(np.deg2rad(theta_a_deg)),
                theta_b=float(np.deg2rad(theta_b_deg)),
            )
        ]
    else:
        configs = entanglement.random_configs(count, settings.verify_seed if seed is None else seed)

    worst = 0.0
    try:
        for cfg in configs:
            nu = entanglement.nu_from_R(cfg)
            closed = entanglement.nu_closed_form(cfg)
            factored = entanglement.factorized_visibility(cfg)
            worst = max(worst, abs(nu - closed), abs(nu - factored))
            if len(configs) == 1:
                click.echo(
                    f"nu_quadrature={nu:.12g} nu_closed_form={closed:.12g} c_a_a_a_b={factored:.12g} "
                    f"residual_closed={abs(nu - closed):.3e} residual_factorized={abs(nu - factored):.3e}"
                )
    except QuadratureError as e:
        _note("ERROR", str(e))
        ctx.exit(int(ExitCode.ORACLE))
    click.echo(f"configurations={len(configs)} max_residual={worst:.3e}")
    if worst >= FACTORIZATION_TOLERANCE:
        ctx.exit(int(ExitCode.ORACLE))


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--output", "output", type=click.Path(dir_okay=False), default=None)
@click.option("--workers", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--pairs", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default=None)
@click.pass_context
def simulate(
    ctx: click.Context,
    config_path: Optional[str],
    output: Optional[str],
    workers: Optional[int],
    seed: Optional[int],
    pairs: Optional[int],
    fmt: Optional[str],
) -> None:
    """Generate an event file."""
    settings: CpolSettings = ctx.obj
    cfg = _load_config(
        ctx,
        config_path,
        {"source": {"seed": seed, "pairs": pairs}, "output": {"path": output, "format": fmt}},
    )
    _echo_config(cfg)
    n_workers = settings.workers if workers is None else workers
    if n_workers < 1:
        _note("ERROR", "workers must be at least 1")
        ctx.exit(int(ExitCode.CONFIG))

    total = SimulationStats()

    def frames() -> Iterator[pd.DataFrame]:
        for chunk in run_simulation(cfg.source, cfg.geometry, n_workers):
            total.merge(chunk.stats)
            yield chunk.events

    try:
        written = write_event_file(cfg.output.path, cfg.output.format, EventFileHeader.for_run(cfg), frames())
    except EventFileError as e:
        _note("ERROR", str(e))
        ctx.exit(int(ExitCode.IO))
    _note(
        "INFO",
        f"wrote {written} events to {cfg.output.path}; sampler acceptance {total.acceptance:.4f}, "
        f"lost {total.lost} ({total.loss_fraction:.4f})",
    )


@main.command()
@click.argument("events", type=click.Path(dir_okay=False))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--output", "output", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--method", type=click.Choice([m.value for m in FitMethod]), default=None)
@click.option(
    "--chunk-rows", type=click.IntRange(min=1), default=DEFAULT_CHUNK_ROWS, show_default=True, help="Events per read."
)
@click.pass_context
def analyze(
    ctx: click.Context,
    events: str,
    config_path: Optional[str],
    output: Optional[str],
    method: Optional[str],
    chunk_rows: int,
) -> None:
    """Concurrence per event class from an event file."""
    settings: CpolSettings = ctx.obj
    try:
        header = read_event_header(events)
    except FormatVersionError as e:
        _note("ERROR", str(e))
        ctx.exit(int(ExitCode.VERSION))
    except EventFileError as e:
        _note("ERROR", str(e))
        ctx.exit(int(ExitCode.IO))

    if config_path is None:
        try:
            cfg = parse_run_config(header.effective_config)
        except ConfigError as e:
            _note("ERROR", f"embedded config: {e}")
            ctx.exit(int(ExitCode.CONFIG))
        if method is not None:
            cfg = cfg.copy(update={"analysis": cfg.analysis.copy(update={"method": FitMethod(method)})})
    else:
        cfg = _load_config(ctx, config_path, {"analysis": {"method": method}})
    _echo_config(cfg)

    scheme = BinningScheme.from_config(cfg.binning, cfg.source.energy_kev)
    try:
        result = analysis.concurrence_curve_chunks(
            iter_event_chunks(events, chunk_rows),
            scheme,
            cfg.analysis.method,
            cfg.geometry,
            min_events=cfg.analysis.min_events,
            polarimeter_window_deg=cfg.analysis.polarimeter_theta_window_deg,
        )
    except EventFileError as e:
        _note("ERROR", str(e))
        ctx.exit(int(ExitCode.IO))
    out_dir = Path(settings.output_dir if output is None else output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        analysis.write_concurrence_csv(result.points, out_dir / "concurrence.csv")
        for hist in result.histograms:
            analysis.write_histogram_csv(hist, out_dir / f"histogram_{hist.label}.csv")
    except OSError as e:
        _note("ERROR", f"cannot write results to {out_dir}: {e}")
        ctx.exit(int(ExitCode.IO))

    click.echo(f"{'class':<16}{'events':>10}{'nu':>12}{'sigma_nu':>12}{'C':>10}{'sigma_C':>10}{'2C':>10}")
    for p in result.points:
        click.echo(
            f"{p.label:<16}{p.events:>10d}{p.nu.nu:>12.5f}{p.nu.sigma_nu:>12.5f}"
            f"{p.c:>10.4f}{p.sigma_c:>10.4f}{2 * p.c:>10.4f}"
        )


@main.command()
@click.option("--seed", type=int, default=None)
@click.pass_context
def verify(ctx: click.Context, seed: Optional[int]) -> None:
    """Run the analytic self-checks; exit 5 if any fails."""
    settings: CpolSettings = ctx.obj
    outcomes = run_oracles(settings.verify_seed if seed is None else seed)
    for outcome in outcomes:
        click.echo(f"{'PASS' if outcome.passed else 'FAIL'} {outcome.name}: {outcome.detail}")
    if not all(o.passed for o in outcomes):
        ctx.exit(int(ExitCode.ORACLE))


if __name__ == "__main__":
    main(prog_name="compton-polarimetry")  # pragma: no cover
