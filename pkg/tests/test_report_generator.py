from peakon_toda.asymptotics import AsymptoticsReport, sublinear_trend
from peakon_toda.report_generator import MarkdownReportGenerator
from peakon_toda.verification import CriterionResult, VerificationReport


def _report(n, slope, plateau):
    return AsymptoticsReport(
        sector={"tag": "S_minus", "permutation": None}, n=n, t_end=400.0,
        lambdas=[plateau / 2] * n, momenta=[plateau] * n, momentum_targets=[plateau] * n,
        momentum_residuals=[0.0] * n, sorted_converged=True,
        slopes=[slope] * n, slope_targets=[slope] * n, slope_residuals=[0.0] * n,
    )


def test_full_report_sections():
    verification = VerificationReport(seed=0, suites=["mybe"], results=[
        CriterionResult("mybe", "mybe_residual", 1e-15, 1e-12),
    ])
    reports = [_report(3, 0.2, 0.4), _report(4, 0.1, 0.2), _report(5, 0.05, 0.1)]
    text = MarkdownReportGenerator("Sweep").generate_full_report(
        verification=verification,
        asymptotics=reports,
        trend=sublinear_trend(reports),
        metadata={"seed": 0},
    )
    assert text.startswith("# Sweep")
    assert "**Overall**: PASSED" in text
    assert "| mybe | pass |" in text
    assert text.count("## Asymptotics (S_minus") == 3
    assert "Slope decreasing: True" in text


def test_failed_verification_is_flagged():
    verification = VerificationReport(seed=1, suites=["route"], results=[
        CriterionResult("route", "max_discrepancy", 1.0, 1e-5),
    ])
    text = MarkdownReportGenerator().generate_verification_summary(verification)
    assert "FAILED" in text
    assert "| route | FAIL |" in text


def test_report_text_is_reproducible():
    verification = VerificationReport(seed=0, suites=["mybe"], results=[
        CriterionResult("mybe", "mybe_residual", 1e-15, 1e-12),
    ])
    first = MarkdownReportGenerator("Verify").generate_full_report(verification=verification, metadata={"seed": 0})
    second = MarkdownReportGenerator("Verify").generate_full_report(verification=verification, metadata={"seed": 0})
    assert first == second
    assert "Generated" not in first
    assert first.startswith("# Verify\n\n**seed**: 0")
