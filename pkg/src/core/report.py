"""Verification reports: pydantic records, JSON output and rich/Markdown rendering."""
import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import mpmath as mp
from pydantic import BaseModel, Field
from rich.table import Table

from config.logging_config import log
from config.settings import get_settings

SCHEMA_VERSION = "1.0"

Status = Literal["pass", "fail", "unresolved"]


def number_field(value: Any, digits: int = 12) -> Dict[str, str]:
    """Full-precision decimal string plus a rounded display value."""
    if value is None:
        return {"value": "", "display": "-"}
    if isinstance(value, (mp.mpf, mp.mpc, float, int)):
        full = mp.nstr(value, max(mp.mp.dps, 15), min_fixed=-mp.inf, max_fixed=mp.inf) \
            if isinstance(value, (mp.mpf, mp.mpc)) else repr(value)
        return {"value": full, "display": mp.nstr(mp.mpmathify(value), digits)}
    return {"value": str(value), "display": str(value)}


class CheckRecord(BaseModel):
    """Outcome of one identity check."""

    check_id: str
    anchor: str
    lhs: Dict[str, str] = Field(default_factory=lambda: number_field(None))
    rhs: Dict[str, str] = Field(default_factory=lambda: number_field(None))
    abs_error: Dict[str, str] = Field(default_factory=lambda: number_field(None))
    rel_error: Dict[str, str] = Field(default_factory=lambda: number_field(None))
    status: Status = "unresolved"
    constants: Dict[str, Any] = Field(default_factory=dict)
    details: Dict[str, Any] = Field(default_factory=dict)
    error: str = ""
    wall_time: float = 0.0

    @classmethod
    def compare(cls, check_id: str, anchor: str, lhs, rhs, tol, **kwargs) -> "CheckRecord":
        """Record |lhs - rhs| and pass when the relative error is below tol."""
        diff = abs(lhs - rhs)
        rel = diff / max(abs(lhs), abs(rhs), mp.mpf(2) ** (-mp.mp.prec))
        status = "pass" if rel < tol else "fail"
        return cls(check_id=check_id, anchor=anchor, lhs=number_field(lhs), rhs=number_field(rhs),
                   abs_error=number_field(diff, 3), rel_error=number_field(rel, 3),
                   status=status, **kwargs)


class VerificationReport(BaseModel):
    """All check records of one run."""

    schema_version: str = SCHEMA_VERSION
    config: Dict[str, Any] = Field(default_factory=dict)
    embedding: int = 1
    checks: List[CheckRecord] = Field(default_factory=list)
    constants: Dict[str, Any] = Field(default_factory=dict)
    wall_time: float = 0.0

    def add(self, record: CheckRecord) -> CheckRecord:
        self.checks.append(record)
        return record

    def by_id(self, check_id: str) -> Optional[CheckRecord]:
        return next((c for c in self.checks if c.check_id == check_id), None)

    @property
    def failed(self) -> List[CheckRecord]:
        return [c for c in self.checks if c.status == "fail"]

    @property
    def unresolved(self) -> List[CheckRecord]:
        return [c for c in self.checks if c.status == "unresolved"]

    def exit_code(self) -> int:
        return 1 if self.failed else 0


class ReportFormatter:
    """Formats and saves verification reports."""

    def __init__(self, output_dir: Optional[str] = None):
        """
        Initialize report formatter.

        Args:
            output_dir: Directory for report files (default from settings)
        """
        settings = get_settings()
        self.output_dir = Path(output_dir or settings.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        log.info(f"ReportFormatter initialized with directory: {self.output_dir}")

    def to_json(self, report: VerificationReport) -> str:
        return json.dumps(report.model_dump(), indent=2, sort_keys=False, default=str)

    def format_markdown(self, report: VerificationReport) -> str:
        """
        Format a report as Markdown.

        Args:
            report: Verification report

        Returns:
            Markdown string with one table row per check
        """
        md_parts = ["# StarkCheck report\n"]
        cfg = report.config
        if cfg:
            md_parts.append(f"d = {cfg.get('d')}, c = {cfg.get('c')}, "
                            f"character {cfg.get('char_index')}, {cfg.get('prec')} bits\n")
        md_parts.append("| Check | Anchor | LHS | RHS | rel. error | Status |")
        md_parts.append("|-------|--------|-----|-----|------------|--------|")
        for c in report.checks:
            md_parts.append(f"| {c.check_id} | {c.anchor} | {c.lhs['display']} | {c.rhs['display']} "
                            f"| {c.rel_error['display']} | {c.status} |")
        if report.constants:
            md_parts.append("\n## Measured constants\n")
            for key, value in report.constants.items():
                md_parts.append(f"- {key}: {value}")
        md_parts.append(f"\n*Generated by StarkCheck - {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}*")
        return "\n".join(md_parts)

    def rich_table(self, report: VerificationReport) -> Table:
        table = Table(title="StarkCheck")
        for column in ("Check", "Anchor", "LHS", "RHS", "rel. error", "Status"):
            table.add_column(column)
        colours = {"pass": "green", "fail": "red", "unresolved": "yellow"}
        for c in report.checks:
            status = f"[{colours[c.status]}]{c.status}[/{colours[c.status]}]"
            table.add_row(c.check_id, c.anchor, c.lhs["display"], c.rhs["display"],
                          c.rel_error["display"], status)
        return table

    def save_json(self, report: VerificationReport, path: Optional[str] = None) -> str:
        """
        Save a report as JSON.

        Args:
            report: Verification report
            path: Output path (default auto-generated under output_dir)

        Returns:
            Path to saved file
        """
        if path is None:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filepath = self.output_dir / f"report_{timestamp}.json"
        else:
            filepath = Path(path)
            filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, "w", encoding="utf-8") as f:
            f.write(self.to_json(report))
        log.info(f"Saved JSON report: {filepath}")
        return str(filepath)

    def save_markdown(self, report: VerificationReport, path: Optional[str] = None) -> str:
        if path is None:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filepath = self.output_dir / f"report_{timestamp}.md"
        else:
            filepath = Path(path)
        with open(filepath, "w", encoding="utf-8") as f:
            f.write(self.format_markdown(report))
        log.info(f"Saved Markdown report: {filepath}")
        return str(filepath)
