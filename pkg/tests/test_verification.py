import math

import pytest

from peakon_toda.errors import ConfigError, SpectrumError
from peakon_toda.verification import CriteriaVerifier, CriterionResult, VerificationReport, VerifyOptions

QUICK_SUITES = [
    "mybe", "splitting", "adjointness", "hierarchy", "coadjoint",
    "tridiagonal", "determinant", "first_component", "compound",
]
LONG_SUITES = [
    "route", "isospectral", "conservation", "sorting",
    "scattering", "sminus", "permutation", "wavefield",
]


@pytest.fixture
def verifier():
    return CriteriaVerifier(VerifyOptions(seed=0))


def test_criterion_comparison():
    assert CriterionResult("s", "c", 1e-13, 1e-12).passed
    assert not CriterionResult("s", "c", 1e-11, 1e-12).passed
    assert CriterionResult("s", "c", 0.999, 0.99, comparison=">=").passed
    assert not CriterionResult("s", "c", 0.98, 0.99, comparison=">=").passed
    assert not CriterionResult("s", "c", math.nan, 1.0).passed
    assert not CriterionResult("s", "c", 0.0, 1.0, error="boom").passed
    assert CriterionResult("s", "c", 0.0, 1.0).to_dict()["passed"]


def test_empty_report_does_not_pass():
    assert not VerificationReport(seed=0, suites=[]).passed


def test_resolve(verifier):
    assert verifier.resolve(["all"]) == verifier.names
    assert verifier.resolve([]) == verifier.names
    assert verifier.resolve(["mybe", "mybe", "route"]) == ["mybe", "route"]
    with pytest.raises(ConfigError) as info:
        verifier.resolve(["mybe", "nope"])
    assert info.value.field == "suite"
    assert set(QUICK_SUITES + LONG_SUITES) == set(verifier.names)


@pytest.mark.parametrize("suite", QUICK_SUITES)
def test_quick_suite_passes(verifier, suite):
    report = verifier.run([suite])
    assert report.results
    assert report.passed, [r.to_dict() for r in report.failures]
    assert report.to_dict()["suites"] == {suite: True}


@pytest.mark.slow
@pytest.mark.parametrize("suite", LONG_SUITES)
def test_long_suite_passes(verifier, suite):
    report = verifier.run([suite])
    assert report.passed, [r.to_dict() for r in report.failures]


def test_suite_error_becomes_failure(verifier):
    def broken():
        raise SpectrumError("degenerate spectrum", {"index": 1})

    verifier.suites["mybe"] = broken
    report = verifier.run(["mybe"])
    assert not report.passed
    failure = report.failures[0]
    assert failure.name == "suite_completed"
    assert failure.details["diagnostic"] == {"index": 1}


def test_seeded_runs_are_reproducible():
    a = CriteriaVerifier(VerifyOptions(seed=3)).run(["mybe", "tridiagonal"])
    b = CriteriaVerifier(VerifyOptions(seed=3)).run(["mybe", "tridiagonal"])
    assert [r.value for r in a.results] == [r.value for r in b.results]


@pytest.mark.slow
def test_sminus_extends_past_base_cap(verifier):
    report = verifier.run(["sminus"])
    assert report.passed, [r.to_dict() for r in report.failures]
    horizons = report.results[0].details["t_end"]
    assert horizons["n3"] <= verifier.options.cap
    assert horizons["n5"] > verifier.options.cap
