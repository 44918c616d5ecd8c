"""
CLI entry point for coarse-spectra.

Reports go to stdout (or --out) as JSON; tables, log records and the
✓/✗ status lines go to stderr.

Modified: 2026-10-19
"""

import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from coarse_spectra import __version__
from coarse_spectra.config import Settings, get_config_dir
from coarse_spectra.core.exceptions import (
    CoarseSpectraError,
    InsufficientWindowError,
    InvalidInputError,
    InvariantViolationError,
    NoLimitError,
)
from coarse_spectra.core.filters import proxy_from_label
from coarse_spectra.core.ideals import (
    discrete_entry_criterion,
    ghost_report,
    jxi_defect,
    localization_ball_criterion,
)
from coarse_spectra.core.kernels import (
    NormOptions,
    norm_localization_check,
    op_compose,
    operator_norm,
    norm_options,
    random_band_kernel,
    schur_bound,
)
from coarse_spectra.core.loader import DocumentLoader
from coarse_spectra.core.localization import check_self_adjoint
from coarse_spectra.core.property_a import truncation_row, truncation_sweep
from coarse_spectra.core.space import (
    Space,
    build_lattice_window,
    greedy_net,
    verify_metric,
    volume_growth,
)
from coarse_spectra.core.spectra import (
    finite_section_spectrum,
    hausdorff_gap,
    localization_spectra,
    union_of_spectra,
)
from coarse_spectra.utils.serialization import dumps, write_csv, write_json

logger = logging.getLogger(__name__)
console = Console(stderr=True)

METRIC_CHECK_LIMIT = 1000


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _fail(context: str, error: Exception) -> None:
    """Print a ✗ line and exit with the error's exit code."""
    if isinstance(error, CoarseSpectraError):
        code = error.exit_code
        logger.debug(f"{context} failed", exc_info=True)
    else:
        code = 1
        logger.error(f"{context} failed", exc_info=True)
    click.echo(f"✗ {context}: {error}", err=True)
    if isinstance(error, NoLimitError):
        click.echo(
            f"  band {error.band} along {error.proxy}: oscillation amplitude {error.amplitude:.6g}",
            err=True,
        )
    sys.exit(code)


def _emit(report: Any, out: Optional[Path], settings: Settings) -> None:
    if out is None:
        click.echo(dumps(report, settings.output.indent))
    else:
        write_json(report, out, settings.output.indent)
        click.echo(f"✓ Report written to {out}", err=True)


def _limit_options(settings: Settings) -> Dict[str, Any]:
    """Keyword arguments for limit_operator taken from the localization settings."""
    return {
        "horizon": settings.localization.horizon,
        "tol": settings.tolerances.limit,
        "max_period": settings.localization.max_period,
        "window": settings.localization.cauchy_window,
    }


def _number_list(cast):
    def parse(ctx: click.Context, param: click.Parameter, value: Optional[str]):
        if value is None:
            return None
        try:
            return [cast(item) for item in value.split(",") if item.strip()]
        except ValueError as e:
            raise click.BadParameter(f"expected a comma-separated list, got '{value}'") from e

    return parse


spec_option = click.option(
    "--spec",
    "spec_path",
    type=click.Path(path_type=Path),
    required=True,
    help="JSON input document",
)
out_option = click.option(
    "--out", type=click.Path(path_type=Path), default=None, help="Write the JSON report here"
)
csv_option = click.option(
    "--csv",
    "csv_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Dump the numeric table as CSV",
)
window_option = click.option(
    "--window", type=int, default=None, help="Lattice window radius W (overrides the document)"
)


@click.group()
@click.version_option(version=__version__)
@click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Path to config file (default: ~/.config/coarse-spectra/config.yaml)",
)
@click.option("--verbose", is_flag=True, help="Debug logging on stderr")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], verbose: bool):
    """coarse-spectra - coarse geometry diagnostics and essential spectra at desk scale."""
    _setup_logging(verbose)
    try:
        ctx.obj = Settings.load(config_path)
    except CoarseSpectraError as e:
        _fail("Configuration", e)
    ctx.with_resource(norm_options(NormOptions.from_settings(ctx.obj)))


# ----------------------------------------------------------------------
# space
# ----------------------------------------------------------------------


def space_report(space: Space, radii: List[float]) -> Dict[str, Any]:
    """Volume growth, greedy net and capacity check of a space."""
    growth = volume_growth(space)
    net = greedy_net(space)
    rows = []
    for r in radii:
        try:
            volume: Optional[float] = growth(r)
            bound: Optional[float] = net.capacity_bound(r)
        except InsufficientWindowError:
            volume = bound = None
        measured = net.measured_capacity(r)
        if bound is not None and measured > bound + 1e-9:
            raise InvariantViolationError(f"net capacity {measured} exceeds N({r}) = {bound}")
        rows.append(
            {"r": r, "volume": volume, "capacity_bound": bound, "measured_capacity": measured}
        )

    metric_verified = space.size <= METRIC_CHECK_LIMIT
    if metric_verified:
        verify_metric(space, METRIC_CHECK_LIMIT)
    return {
        "kind": space.kind.value,
        "points": space.size,
        "dimension": space.dimension,
        "counting_measure": space.is_counting,
        "nu": space.nu,
        "net_centers": len(net.centers),
        "metric_verified": metric_verified,
        "growth": rows,
    }


@cli.command()
@spec_option
@window_option
@click.option(
    "--radii",
    default="0,1,2,4,8",
    callback=_number_list(float),
    help="Radii for the volume table",
)
@out_option
@csv_option
@click.pass_obj
def space(
    settings: Settings,
    spec_path: Path,
    window: Optional[int],
    radii: List[float],
    out: Optional[Path],
    csv_path: Optional[Path],
):
    """Build a space and print its volume growth, net and capacity check."""
    try:
        document = DocumentLoader(settings).load(spec_path, window)
        if document.space is None:
            raise InvalidInputError("document defines no space")
        report = space_report(document.space, radii)
    except Exception as e:
        _fail("Space", e)
        return

    table = Table(title=f"{report['kind']} space, {report['points']} points")
    table.add_column("r", justify="right")
    table.add_column("V(r)", justify="right")
    table.add_column("N(r)", justify="right")
    table.add_column("measured", justify="right")
    for row in report["growth"]:
        table.add_row(
            f"{row['r']:g}",
            "-" if row["volume"] is None else f"{row['volume']:g}",
            "-" if row["capacity_bound"] is None else f"{row['capacity_bound']:g}",
            str(row["measured_capacity"]),
        )
    console.print(table)

    if csv_path:
        write_csv(
            csv_path,
            ["r", "volume", "capacity_bound", "measured_capacity"],
            [
                [row["r"], row["volume"], row["capacity_bound"], row["measured_capacity"]]
                for row in report["growth"]
            ],
            settings.output.csv_precision,
        )
    _emit(report, out, settings)


# ----------------------------------------------------------------------
# ghost
# ----------------------------------------------------------------------


@cli.command()
@spec_option
@window_option
@click.option("--radii", default="1", callback=_number_list(float), help="Ball radii r")
@click.option("--tol", type=float, default=None, help="Verdict tolerance")
@out_option
@csv_option
@click.pass_obj
def ghost(
    settings: Settings,
    spec_path: Path,
    window: Optional[int],
    radii: List[float],
    tol: Optional[float],
    out: Optional[Path],
    csv_path: Optional[Path],
):
    """Ghost decay curves of an operator and the ghost verdict."""
    tol = tol if tol is not None else settings.tolerances.verdict
    try:
        if tol <= 0:
            raise InvalidInputError("--tol must be > 0")
        document = DocumentLoader(settings).load(
            spec_path, window, gap_scale=max(radii) if radii else None
        )
        report = ghost_report(document.require_kernel(), radii, tol, settings.parallel.threads)
    except Exception as e:
        _fail("Ghost", e)
        return

    table = Table(title="Ghost decay")
    table.add_column("r", justify="right")
    table.add_column("horizons", justify="right")
    table.add_column("final left", justify="right")
    table.add_column("final right", justify="right")
    for curve in report.curves:
        right = curve.right_values[-1] if curve.right_values else float("nan")
        table.add_row(
            f"{curve.radius:g}", str(len(curve.horizons)), f"{curve.final:.3e}", f"{right:.3e}"
        )
    console.print(table)
    mark = "✓" if report.verdict else "✗"
    click.echo(f"{mark} Ghost verdict at tol {tol:g}: {report.verdict}", err=True)

    if csv_path:
        rows = [
            [curve.radius, h, v, rv]
            for curve in report.curves
            for h, v, rv in zip(curve.horizons, curve.values, curve.right_values)
        ]
        write_csv(csv_path, ["r", "horizon", "left", "right"], rows, settings.output.csv_precision)

    payload: Dict[str, Any] = {"ghost": report}
    if document.hls is not None:
        payload["hls"] = document.hls
    _emit(payload, out, settings)


# ----------------------------------------------------------------------
# ess
# ----------------------------------------------------------------------


@cli.command()
@spec_option
@click.option(
    "--proxies",
    default=None,
    help="Comma-separated direction proxies: +1,-1 on ℤ or axis:sign[:period] on ℤ^d",
)
@click.option(
    "--window", type=int, default=None, help="Finite-section half-width N (default 200 on ℤ)"
)
@click.option("--tol", type=float, default=0.05, help="Outlier distance for the comparison")
@out_option
@csv_option
@click.pass_obj
def ess(
    settings: Settings,
    spec_path: Path,
    proxies: Optional[str],
    window: Optional[int],
    tol: float,
    out: Optional[Path],
    csv_path: Optional[Path],
):
    """Essential spectrum via limit operators, compared with a finite section."""
    try:
        if tol <= 0:
            raise InvalidInputError("--tol must be > 0")
        spec = DocumentLoader(settings).load(spec_path).require_spec()
        check_self_adjoint(
            spec, far=settings.localization.horizon, tol=settings.tolerances.self_adjoint
        )
        chosen = (
            [proxy_from_label(label, spec.dimension) for label in proxies.split(",")]
            if proxies
            else None
        )
        grid = (
            settings.spectra.floquet_grid if spec.dimension == 1 else settings.spectra.torus_grid
        )
        localizations = localization_spectra(
            spec, chosen, grid, settings.parallel.threads, **_limit_options(settings)
        )
        union = union_of_spectra([s for _, s in localizations], settings.tolerances.merge)

        N = window if window is not None else (200 if spec.dimension == 1 else 10)
        section = finite_section_spectrum(
            spec, N, settings.window.max_points, settings.tolerances.self_adjoint
        )
        one_sided, outliers = hausdorff_gap(union, section, tol, settings.spectra.hausdorff_step)
    except Exception as e:
        _fail("Essential spectrum", e)
        return

    table = Table(title=f"Localizations of {spec.name or 'operator'}")
    table.add_column("proxy")
    table.add_column("period", justify="right")
    table.add_column("spectrum")
    for limit, spectrum in localizations:
        table.add_row(limit.proxy.label, str(limit.period), _describe(spectrum.intervals))
    console.print(table)
    click.echo(f"✓ ess = {_describe(union.intervals)}", err=True)
    click.echo(
        f"  finite section N={N}: one-sided gap {one_sided:.3e}, {outliers} outliers at {tol:g}",
        err=True,
    )

    if csv_path:
        values = section.all_values
        write_csv(
            csv_path,
            ["index", "eigenvalue"],
            ([i, float(v)] for i, v in enumerate(values)),
            settings.output.csv_precision,
            comment=f"finite section N={N}",
        )

    report = {
        "operator": spec.name,
        "localizations": [
            {"proxy": limit.proxy.label, "limit": limit, "spectrum": spectrum}
            for limit, spectrum in localizations
        ],
        "ess": union,
        "finite_section": {
            "N": N,
            "eigenvalues": int(len(section.all_values)),
            "one_sided": one_sided,
            "outliers": outliers,
            "tol": tol,
        },
    }
    _emit(report, out, settings)


def _describe(intervals) -> str:
    if not intervals:
        return "∅"
    return " ∪ ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi in intervals)


# ----------------------------------------------------------------------
# truncate
# ----------------------------------------------------------------------


@cli.command()
@spec_option
@window_option
@click.option(
    "--radii",
    default=None,
    callback=_number_list(int),
    help="Ball-witness radii R (default: the document's witness)",
)
@out_option
@csv_option
@click.pass_obj
def truncate(
    settings: Settings,
    spec_path: Path,
    window: Optional[int],
    radii: Optional[List[int]],
    out: Optional[Path],
    csv_path: Optional[Path],
):
    """Property A truncation: measured error against its bound."""
    try:
        document = DocumentLoader(settings).load(spec_path, window)
        kernel = document.require_kernel()
        if radii:
            rows = truncation_sweep(kernel, radii)
        elif document.witness is not None:
            rows = [truncation_row(kernel, document.witness)]
        else:
            raise InvalidInputError("give --radii or a witness in the document")
    except Exception as e:
        _fail("Truncation", e)
        return

    table = Table(title="Truncation error")
    table.add_column("R", justify="right")
    table.add_column("measured", justify="right")
    table.add_column("bound", justify="right")
    table.add_column("ratio", justify="right")
    for row in rows:
        table.add_row(
            str(row.radius), f"{row.measured:.6e}", f"{row.bound:.6e}", f"{row.ratio:.4f}"
        )
    console.print(table)
    click.echo("✓ Measured error within bound for every witness", err=True)

    if csv_path:
        write_csv(
            csv_path,
            ["R", "measured", "bound", "ratio"],
            ([row.radius, row.measured, row.bound, row.ratio] for row in rows),
            settings.output.csv_precision,
        )
    _emit(
        {"points": kernel.space.size, "propagation": kernel.propagation, "rows": rows},
        out,
        settings,
    )


# ----------------------------------------------------------------------
# ideal
# ----------------------------------------------------------------------


@cli.command()
@spec_option
@window_option
@click.option("--radii", default="1", callback=_number_list(float), help="Ball radii r")
@click.option("--tol", type=float, default=None, help="Verdict tolerance")
@out_option
@click.pass_obj
def ideal(
    settings: Settings,
    spec_path: Path,
    window: Optional[int],
    radii: List[float],
    tol: Optional[float],
    out: Optional[Path],
):
    """Filter-ideal membership diagnostics for the document's filters."""
    tol = tol if tol is not None else settings.tolerances.verdict
    try:
        document = DocumentLoader(settings).load(spec_path, window)
        kernel = document.require_kernel()
        if not document.filters:
            raise InvalidInputError("document lists no filters")
        results = []
        for xi in document.filters:
            entry: Dict[str, Any] = {"filter": xi.label}
            if xi.is_coarse_kind:
                defect = jxi_defect(kernel, xi)
                entry["defect"] = defect
                entry["defect_verdict"] = defect.left < tol
            ball = localization_ball_criterion(
                kernel, xi, radii, tol, threads=settings.parallel.threads
            )
            entry["ball"] = ball
            if kernel.space.is_counting:
                entry_sup = discrete_entry_criterion(kernel, xi)
                entry["entry_sup"] = entry_sup
                entry["entry_verdict"] = entry_sup < tol
            results.append(entry)
    except Exception as e:
        _fail("Ideal", e)
        return

    table = Table(title="Filter-ideal membership")
    table.add_column("filter")
    table.add_column("set defect", justify="right")
    table.add_column("ball profile", justify="right")
    table.add_column("entry sup", justify="right")
    for entry in results:
        table.add_row(
            entry["filter"],
            f"{entry['defect'].left:.3e}" if "defect" in entry else "-",
            f"{max(entry['ball'].values.values()):.3e}",
            f"{entry['entry_sup']:.3e}" if "entry_sup" in entry else "-",
        )
    console.print(table)
    _emit({"tol": tol, "radii": radii, "filters": results}, out, settings)


# ----------------------------------------------------------------------
# check-kernels
# ----------------------------------------------------------------------


@cli.command("check-kernels")
@click.option("--count", type=int, default=20, help="Number of random kernel pairs")
@click.option("--seed", type=int, default=0, help="Random seed")
@click.option("--dimension", type=int, default=1, help="Lattice dimension")
@click.option("--window", type=int, default=12, help="Lattice window radius W")
@out_option
@click.pass_obj
def check_kernels(
    settings: Settings,
    count: int,
    seed: int,
    dimension: int,
    window: int,
    out: Optional[Path],
):
    """Randomized kernel-calculus checks: submultiplicativity, Schur and localization."""
    rng = np.random.default_rng(seed)
    rows = []
    try:
        lattice = build_lattice_window(dimension, window, max_points=settings.window.max_points)
        for index in range(count):
            k = random_band_kernel(lattice, float(rng.integers(1, 3)), rng)
            other = random_band_kernel(lattice, float(rng.integers(1, 3)), rng)
            norm_k, norm_other = operator_norm(k), operator_norm(other)
            product = operator_norm(op_compose(k, other))
            lhs, rhs = norm_localization_check(k)
            row = {
                "index": index,
                "submultiplicative_slack": norm_k * norm_other - product,
                "schur_slack": schur_bound(k) - norm_k,
                "localization_slack": rhs - lhs,
            }
            for name in ("submultiplicative_slack", "schur_slack", "localization_slack"):
                if row[name] < -1e-9:
                    raise InvariantViolationError(f"{name} {row[name]:.3e} < 0 for kernel {index}")
            rows.append(row)
    except Exception as e:
        _fail("Kernel checks", e)
        return

    worst = {
        name: min((row[name] for row in rows), default=0.0)
        for name in ("submultiplicative_slack", "schur_slack", "localization_slack")
    }
    click.echo(f"✓ {len(rows)} kernel pairs passed (seed {seed})", err=True)
    _emit(
        {"seed": seed, "dimension": dimension, "window": window, "worst": worst, "rows": rows},
        out,
        settings,
    )


# ----------------------------------------------------------------------
# status
# ----------------------------------------------------------------------


@cli.command()
@click.pass_obj
def status(settings: Settings):
    """Show the effective configuration."""
    click.echo(f"coarse-spectra v{__version__}")
    click.echo(f"Config Dir: {get_config_dir()}")
    table = Table(title="Settings")
    table.add_column("section")
    table.add_column("key")
    table.add_column("value", justify="right")
    for section, values in settings.to_dict().items():
        for key, value in values.items():
            table.add_row(section, key, str(value))
    Console().print(table)


if __name__ == "__main__":
    cli()
