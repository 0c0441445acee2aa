"""
Markdown Report Generator

Turns verification results and asymptotics reports into markdown summaries
for people reading a results directory.
"""

from typing import Dict, List, Optional

from .asymptotics import AsymptoticsReport, TrendTable
from .verification import VerificationReport


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


class MarkdownReportGenerator:
    """Generate markdown summaries of verify and asymptotics runs."""

    def __init__(self, title: str = "Peakon Toda Run Summary"):
        self.title = title

    def generate_verification_summary(self, report: VerificationReport) -> str:
        """Suite table followed by one row per criterion."""
        status = "PASSED" if report.passed else "FAILED"
        summary = f"""## Verification

**Seed**: {report.seed}
**Suites**: {len(report.suites)}
**Criteria**: {len(report.results)} ({len(report.failures)} failed)
**Overall**: {status}

| Suite | Status |
|-------|--------|
"""
        for name in report.suites:
            summary += f"| {name} | {'pass' if report.suite_passed(name) else 'FAIL'} |\n"

        summary += "\n### Criteria\n\n"
        summary += "| Suite | Criterion | Value | Threshold | Status |\n"
        summary += "|-------|-----------|-------|-----------|--------|\n"
        for r in report.results:
            bound = f"{r.comparison} {r.threshold:.1e}"
            summary += f"| {r.suite} | {r.name} | {_fmt(r.value)} | {bound} | {'pass' if r.passed else 'FAIL'} |\n"
        return summary

    def generate_asymptotics_table(self, report: AsymptoticsReport) -> str:
        """Per-particle limits in canonical order."""
        table = f"""## Asymptotics ({report.sector.get('tag')}, n={report.n})

**t_end**: {report.t_end:g}
**Converged**: {report.converged}
**Extended**: {report.extended} (cap reached: {report.cap_reached})
**Max momentum residual**: {_fmt(report.max_momentum_residual)}
**Max slope residual**: {_fmt(report.max_slope_residual)}

| j | original index | lambda | p(t_end) | target | slope | slope target |
|---|----------------|--------|----------|--------|-------|--------------|
"""
        for row in report.to_frame().to_dict(orient="records"):
            table += (
                f"| {row['j']} | {row['original_index']} | {row['lambda']:.6f} | {row['p_end']:.6f} "
                f"| {row['p_target']:.6f} | {row['slope']:.6f} | {row['slope_target']:.6f} |\n"
            )
        return table

    def generate_trend_table(self, trend: TrendTable) -> str:
        table = "## Trend Across Truncation Sizes\n\n"
        table += "| n | slope q1 | p1 plateau | smallest lambda |\n|---|----------|------------|-----------------|\n"
        for row in trend.frame.itertuples(index=False):
            table += f"| {row.n} | {row.slope_q1:.6f} | {row.p1_plateau:.6f} | {row.lambda_min:.6f} |\n"
        table += f"\nSlope decreasing: {trend.slope_decreasing}; plateau decreasing: {trend.plateau_decreasing}\n"
        return table

    def generate_full_report(
        self,
        verification: Optional[VerificationReport] = None,
        asymptotics: Optional[List[AsymptoticsReport]] = None,
        trend: Optional[TrendTable] = None,
        metadata: Optional[Dict] = None,
    ) -> str:
        """
        Combine the available sections into one markdown document.

        Args:
            verification: Result of a verify run
            asymptotics: Reports of asymptotics runs
            trend: Sublinear trend table of a sweep
            metadata: Extra key/value lines for the header

        Returns:
            Markdown text
        """
        report = f"# {self.title}\n\n"
        for key, value in (metadata or {}).items():
            report += f"**{key}**: {value}  \n"

        sections = []
        if verification is not None:
            sections.append(self.generate_verification_summary(verification))
        for item in asymptotics or []:
            sections.append(self.generate_asymptotics_table(item))
        if trend is not None:
            sections.append(self.generate_trend_table(trend))

        for section in sections:
            report += f"\n---\n\n{section}"
        return report
