"""Service for rendering reports and tensors as text or JSON."""

import itertools
import json
import logging
from enum import Enum
from typing import List, Sequence

import numpy as np

from statman.models.report_models import CheckResult, FitResult, ReportDocument
from statman.utils.tensor_core import Tensor

logger = logging.getLogger(__name__)


class ExportFormat(str, Enum):
    """Supported report formats."""

    TXT = "txt"
    JSON = "json"


class ReportService:
    """Service for exporting report documents."""

    def export_to_txt(self, document: ReportDocument) -> str:
        """
        Render a report as plain text.

        Args:
            document: Report to render

        Returns:
            Formatted text content
        """
        manifold = document.manifold
        lines = []
        lines.append("=" * 80)
        lines.append(f"STATMAN {document.command.upper()}: {manifold.name}")
        lines.append("=" * 80)
        lines.append(
            f"family={manifold.family} dim={manifold.dim} coords={','.join(manifold.coords)} "
            f"jets={manifold.strategy}"
        )
        lines.append(
            f"points={document.points} seed={document.seed} tol={document.tol:.1e}"
        )
        lines.append("")

        if document.validation is not None:
            validation = document.validation
            lines.append("Structure")
            lines.append("-" * 80)
            status = "ok" if validation.passed else f"{len(validation.violations)} violation(s)"
            lines.append(f"  statistical manifold: {status}")
            for violation in validation.violations[:10]:
                lines.append(
                    f"    [{violation.point_index}] {violation.name}: {violation.message}"
                )
            lines.append("")

        if document.identities:
            lines.append("Identities (worst first)")
            lines.append("-" * 80)
            for identity in document.identities:
                lines.append(
                    f"  {identity.verdict:<12} {identity.max_defect:10.3e}  "
                    f"(tol {identity.tol:.0e}) {identity.name}"
                )
            lines.append("")

        if document.diagnostics is not None:
            lines.append("Classification")
            lines.append("-" * 80)
            for check in document.diagnostics.checks:
                lines.append(self._check_line(check))
            for fit in document.diagnostics.fits:
                lines.append(self._fit_line(fit))
            lines.append("")

        for theorem in document.theorems:
            lines.append(f"Theorem: {theorem.theorem} ({theorem.status})")
            lines.append("-" * 80)
            for name, verdict in theorem.verdicts.items():
                lines.append(f"  {name:<32} {verdict}")
            lines.append(f"  {'agreement':<32} {theorem.agreement}")
            lines.append("")

        if document.alpha_scan is not None:
            scan = document.alpha_scan
            lines.append("Alpha scan")
            lines.append("-" * 80)
            lines.append(f"  metric curvature fit k={scan.metric_k:.6g}")
            lines.append(f"  {'alpha':>8} {'conj-R':<13} {'k':>12} {'residual':>10}  constant")
            for row in scan.rows:
                lines.append(
                    f"  {row.alpha:8.3f} {row.conj_r_verdict:<13} {row.k_fit:12.6g} "
                    f"{row.residual:10.3e}  {row.constant_curvature_verdict}"
                )
            lines.append(f"  heredity holds: {scan.heredity_holds}")
            lines.append(
                f"  proposition applies: {scan.proposition_applies}, "
                f"consistent: {scan.proposition_consistent}"
            )
            lines.append("")

        lines.append(f"exit code {document.exit_code}")
        return "\n".join(lines) + "\n"

    def _check_line(self, check: CheckResult) -> str:
        return f"  {check.name:<32} {check.verdict:<15} defect {check.defect:.3e}"

    def _fit_line(self, fit: FitResult) -> str:
        return (
            f"  {'constant_curvature_' + fit.conn:<32} {fit.verdict:<15} "
            f"k={fit.k:.6g} residual {fit.residual:.3e}"
        )

    def export_to_json(self, document: ReportDocument) -> str:
        """
        Render a report as JSON.

        Args:
            document: Report to render

        Returns:
            JSON string; byte-identical for identical inputs
        """
        data = document.model_dump(mode="json", by_alias=True)
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"

    def export_report(self, document: ReportDocument, format: ExportFormat) -> str:
        """
        Export a report to the given format.

        Raises:
            ValueError: If format is not supported
        """
        if format == ExportFormat.TXT:
            return self.export_to_txt(document)
        elif format == ExportFormat.JSON:
            return self.export_to_json(document)
        else:
            raise ValueError(f"Unsupported export format: {format}")

    def format_tensor(self, name: str, tensor: Tensor, precision: int = 12) -> List[str]:
        """
        One ``name[i,j,...] = value`` line per component, 1-based.

        Scalars and rank-0 values print as ``name = value``.
        """
        components = np.asarray(tensor.components)
        if components.ndim == 0:
            return [f"{name} = {float(components):.{precision}g}"]
        lines = []
        for index in itertools.product(range(components.shape[0]), repeat=components.ndim):
            label = ",".join(str(i + 1) for i in index)
            lines.append(f"{name}[{label}] = {float(components[index]):.{precision}g}")
        return lines

    def format_variance(self, variance: Sequence[str]) -> str:
        upper = sum(1 for v in variance if v == "u")
        return f"({upper},{len(variance) - upper})"
