"""Command-line entry point."""

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from statman import __version__
from statman.config import settings
from statman.exceptions import (
    ConsistencyError,
    DegenerateFit,
    DimensionError,
    DomainError,
    ParamError,
    ParseError,
    SingularMetric,
    StatmanException,
)
from statman.models.manifold_models import ManifoldFile
from statman.models.report_models import SCHEMA_ID, ManifoldMetadata, ReportDocument
from statman.services.curvature_service import (
    cotton,
    curvature_state,
    div_K,
    projective_curvature,
    ricci,
    riemann,
    statistical_curvature,
)
from statman.services.diagnostics_service import DiagnosticsService
from statman.services.model_service import (
    chart_from_manifold,
    chart_strategy_tol,
    load_manifold_file,
)
from statman.services.report_service import ReportService
from statman.services.structure_service import (
    Chart,
    ConnectionField,
    connection_field,
    dual_chart,
    local_geometry,
)
from statman.utils.sampling import sample_points
from statman.utils.tensor_core import Tensor

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_INTERNAL = 3

CONNECTIONS = ("nabla", "nabla_star", "levi_civita")


def configure_logging(level: str) -> None:
    """Send log records to stderr so stdout carries only reports."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def _float_list(text: str, what: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ParamError(f"Cannot read {what} {text!r}: expected comma-separated numbers") from e


@dataclass
class RunContext:
    """Everything a command needs about the manifold under test."""

    manifold: ManifoldFile
    chart: Chart
    points: np.ndarray
    tol: float
    seed: int

    @property
    def service(self) -> DiagnosticsService:
        return DiagnosticsService(self.chart, self.points, self.tol)

    def metadata(self) -> ManifoldMetadata:
        return ManifoldMetadata(
            name=self.manifold.name,
            dim=self.chart.dim,
            coords=list(self.chart.coords),
            family=self.chart.family,
            strategy=self.chart.strategy,
            box=[tuple(b) for b in self.chart.box],
        )


def load_context(args: argparse.Namespace) -> RunContext:
    manifold = load_manifold_file(args.file)
    chart = chart_from_manifold(manifold)
    count = args.points if args.points is not None else settings.points
    seed = args.seed if args.seed is not None else settings.seed
    if count < 1:
        raise ParamError(f"--points must be positive, got {count}")
    tol = chart_strategy_tol(chart, args.tol, manifold)
    points = sample_points(chart.box, count, seed)
    logger.info(f"{manifold.name}: {count} points, seed {seed}, tol {tol:.1e}")
    return RunContext(manifold, chart, points, tol, seed)


def _alphas(args: argparse.Namespace) -> List[float]:
    if getattr(args, "alphas", None):
        return _float_list(",".join(args.alphas), "--alphas")
    return list(settings.alphas)


def _emit(document: ReportDocument, args: argparse.Namespace) -> None:
    service = ReportService()
    if args.json == "-":
        sys.stdout.write(service.export_to_json(document))
        return
    sys.stdout.write(service.export_to_txt(document))
    if args.json:
        with open(args.json, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(service.export_to_json(document))


def cmd_check(args: argparse.Namespace) -> int:
    """Validate the chart, run every identity and classify the dual pair."""
    ctx = load_context(args)
    validation, identities, diagnostics = ctx.service.check(_alphas(args))

    verdicts = [i.verdict for i in identities]
    if diagnostics is not None:
        verdicts += [c.verdict for c in diagnostics.checks]
        verdicts += [f.verdict for f in diagnostics.fits]
    ok = (
        validation.passed
        and all(i.passed for i in identities)
        and "inconclusive" not in verdicts
    )
    document = ReportDocument(
        tool_version=__version__,
        command="check",
        manifold=ctx.metadata(),
        seed=ctx.seed,
        points=len(ctx.points),
        tol=ctx.tol,
        validation=validation,
        identities=identities,
        diagnostics=diagnostics,
        exit_code=EXIT_OK if ok else EXIT_CHECK_FAILED,
    )
    _emit(document, args)
    return document.exit_code


def cmd_alpha_scan(args: argparse.Namespace) -> int:
    """Conjugate symmetry and constant curvature along the alpha family."""
    ctx = load_context(args)
    scan = ctx.service.scan(_alphas(args))
    inconclusive = any(
        "inconclusive" in (row.conj_r_verdict, row.constant_curvature_verdict) for row in scan.rows
    )
    document = ReportDocument(
        tool_version=__version__,
        command="alpha-scan",
        manifold=ctx.metadata(),
        seed=ctx.seed,
        points=len(ctx.points),
        tol=ctx.tol,
        alpha_scan=scan,
        exit_code=EXIT_CHECK_FAILED if inconclusive else EXIT_OK,
    )
    _emit(document, args)
    return document.exit_code


def cmd_verify_theorems(args: argparse.Namespace) -> int:
    """Sampled agreement of both constant-curvature characterizations."""
    ctx = load_context(args)
    theorems = ctx.service.theorems()
    failed = any(t.agreement in ("disagree", "inconclusive") for t in theorems)
    document = ReportDocument(
        tool_version=__version__,
        command="verify-theorems",
        manifold=ctx.metadata(),
        seed=ctx.seed,
        points=len(ctx.points),
        tol=ctx.tol,
        theorems=theorems,
        exit_code=EXIT_CHECK_FAILED if failed else EXIT_OK,
    )
    _emit(document, args)
    return document.exit_code


def _conn_field(chart: Chart, conn: str) -> ConnectionField:
    if conn == "nabla_star":
        return connection_field(dual_chart(chart), "nabla")
    return connection_field(chart, conn)


def evaluate_quantity(chart: Chart, point: np.ndarray, quantity: str, conn: str = "nabla") -> Tensor:
    """
    Evaluate a named geometric quantity at a point.

    Names: g, ginv, C, K, gamma_hat, gamma, gamma_star, gamma_alpha:<a>,
    R, Rstar, Rhat, Ralpha:<a>, Ric, Ricstar, tau, divK, S, P, Pstar, Cot.
    R, Ric, P and Cot use the connection selected by ``conn``.

    Raises:
        ParamError: For unknown names or malformed alpha values
    """
    if conn not in CONNECTIONS:
        raise ParamError(f"Unknown connection {conn!r}; expected one of {CONNECTIONS}")
    name, _, argument = quantity.partition(":")
    alpha: Optional[float] = None
    if name in ("gamma_alpha", "Ralpha"):
        values = _float_list(argument, f"alpha in {quantity!r}")
        if len(values) != 1:
            raise ParamError(f"{name} needs one alpha value, e.g. {name}:0.5")
        alpha = values[0]
    elif argument:
        raise ParamError(f"Quantity {name!r} takes no argument")

    geometry = local_geometry(chart, point)
    selected = _conn_field(chart, conn)
    star = _conn_field(chart, "nabla_star")

    def curvature(field: ConnectionField) -> Tensor:
        return riemann(field, point)

    table: Dict[str, Callable[[], Tensor]] = {
        "g": lambda: Tensor.of(geometry.metric.value, "ll"),
        "ginv": lambda: Tensor.of(geometry.metric_inv.value, "uu"),
        "C": lambda: Tensor.of(geometry.cubic.value, "lll"),
        "K": lambda: Tensor.of(geometry.difference.value, "ull"),
        "gamma_hat": lambda: connection_field(chart, "levi_civita").coefficients(point).gamma,
        "gamma": lambda: connection_field(chart, "nabla").coefficients(point).gamma,
        "gamma_star": lambda: connection_field(chart, "nabla_star").coefficients(point).gamma,
        "gamma_alpha": lambda: connection_field(chart, "alpha", alpha).coefficients(point).gamma,
        "R": lambda: curvature(selected),
        "Rstar": lambda: curvature(star),
        "Rhat": lambda: curvature(connection_field(chart, "levi_civita")),
        "Ralpha": lambda: curvature(connection_field(chart, "alpha", alpha)),
        "Ric": lambda: ricci(curvature(selected)),
        "Ricstar": lambda: ricci(curvature(star)),
        "tau": lambda: Tensor.of(curvature_state(chart, point).tau, "l"),
        "divK": lambda: div_K(chart, point),
        "S": lambda: statistical_curvature(chart, point),
        "P": lambda: projective_curvature(curvature(selected), ricci(curvature(selected))),
        "Pstar": lambda: projective_curvature(curvature(star), ricci(curvature(star))),
        "Cot": lambda: cotton(selected, point),
    }
    if name not in table:
        raise ParamError(
            f"Unknown quantity {quantity!r}", {"expected": sorted(table)}
        )
    return table[name]()


def cmd_eval(args: argparse.Namespace) -> int:
    """Print one quantity at one point, components labelled 1-based."""
    manifold = load_manifold_file(args.file)
    chart = chart_from_manifold(manifold)
    point = np.asarray(_float_list(",".join(args.point), "--point"))
    if point.shape[0] != chart.dim:
        raise ParamError(f"--point needs {chart.dim} coordinates, got {point.shape[0]}")
    try:
        tensor = evaluate_quantity(chart, point, args.quantity, args.conn)
    except (DomainError, SingularMetric, DimensionError) as e:
        raise ParamError(f"Cannot evaluate {args.quantity} at {point.tolist()}: {e.message}") from e

    service = ReportService()
    if args.json == "-":
        payload = {
            "schema": SCHEMA_ID,
            "manifold": manifold.name,
            "quantity": args.quantity,
            "conn": args.conn,
            "point": point.tolist(),
            "variance": "".join(tensor.variance),
            "components": tensor.components.tolist(),
        }
        sys.stdout.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
        return EXIT_OK
    header = (
        f"# {args.quantity} {service.format_variance(tensor.variance)} "
        f"at ({', '.join(repr(float(x)) for x in point)})"
    )
    sys.stdout.write("\n".join([header] + service.format_tensor(args.quantity, tensor)) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for all subcommands."""
    parser = argparse.ArgumentParser(
        prog="statman",
        description="Numerical laboratory for statistical manifolds",
    )
    parser.add_argument("--version", action="version", version=f"statman {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("file", help="Manifold file (JSON)")
        sub.add_argument("--json", metavar="PATH", help="Also write JSON to PATH ('-' for stdout only)")
        sub.add_argument("--log-level", default=None, help="Logging level (default from settings)")

    def sampled(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--points", type=int, default=None, help="Number of sample points")
        sub.add_argument("--seed", type=int, default=None, help="Sampler seed")
        sub.add_argument("--tol", type=float, default=None, help="Relative tolerance")

    check = subparsers.add_parser("check", help="Validate, run identities and classify")
    common(check)
    sampled(check)
    check.add_argument("--alphas", nargs="+", help="Alpha grid for identities, e.g. -1 0 1")
    check.set_defaults(handler=cmd_check)

    evaluate = subparsers.add_parser("eval", help="Evaluate one quantity at one point")
    common(evaluate)
    evaluate.add_argument("--point", nargs="+", required=True, help="Coordinates, e.g. 2,0.5 or -1 0.5")
    evaluate.add_argument("--quantity", required=True, help="Quantity name, e.g. R or gamma_alpha:0.5")
    evaluate.add_argument("--conn", default="nabla", choices=CONNECTIONS, help="Connection for R, Ric, P, Cot")
    evaluate.set_defaults(handler=cmd_eval)

    scan = subparsers.add_parser("alpha-scan", help="Scan the alpha-connections")
    common(scan)
    sampled(scan)
    scan.add_argument("--alphas", nargs="+", help="Alpha values, e.g. -1 -0.5 0 0.5 1")
    scan.set_defaults(handler=cmd_alpha_scan)

    theorems = subparsers.add_parser("verify-theorems", help="Sample both characterizations")
    common(theorems)
    sampled(theorems)
    theorems.set_defaults(handler=cmd_verify_theorems)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Returns:
        0 all checks pass, 1 a check failed or was inconclusive,
        2 bad input, 3 internal inconsistency or unexpected error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_BAD_INPUT if e.code else EXIT_OK
    configure_logging(args.log_level or settings.log_level)

    try:
        return args.handler(args)
    except (ParseError, ParamError) as e:
        logger.error(f"{e.__class__.__name__}: {e.message}")
        sys.stderr.write(f"error: {e.message}\n")
        return EXIT_BAD_INPUT
    except (ConsistencyError, DegenerateFit) as e:
        logger.error(f"{e.__class__.__name__}: {e.message}", extra={"details": e.details})
        sys.stderr.write(f"error: {e.message}\n")
        return EXIT_INTERNAL
    except StatmanException as e:
        logger.error(f"{e.__class__.__name__}: {e.message}")
        sys.stderr.write(f"error: {e.message}\n")
        return EXIT_CHECK_FAILED
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        sys.stderr.write(f"internal error: {e}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
