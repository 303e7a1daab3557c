import time

import numpy as np
import pytest

from bvlab import fv
from bvlab.harness import cli
from bvlab.harness.verify import SUITES, verify


def test_geometry_suite_passes_quickly():
    start = time.perf_counter()
    report = verify("geometry")
    assert report.passed, "\n".join(report.lines())
    assert time.perf_counter() - start < 60


def test_quick_suites_pass():
    for suite in SUITES:
        report = verify(suite, full=False)
        assert report.passed, "\n".join(report.lines())


@pytest.mark.slow
def test_all_suites_report_at_least_25_named_checks():
    report = verify("all", full=True, cached=True)
    names = [c.name for c in report.checks]
    assert len(names) >= 25
    assert len(set(names)) == len(names)
    assert report.passed, "\n".join(l for l in report.lines() if "FAIL" in l)


def test_flipped_godunov_sign_fails_entropy_suite(monkeypatch):
    original = fv.godunov_flux
    monkeypatch.setattr(fv, "godunov_flux", lambda family, a, b, q: -original(family, a, b, q))
    report = verify("entropy", full=False)
    assert not report.passed
    failed = {c.name for c in report.checks if not c.passed}
    assert "Godunov flux for Burgers at unit face speed" in failed


def test_cli_verify_exit_codes(capsys, monkeypatch):
    assert cli.main(["verify", "geometry"]) == 0
    assert "verify geometry" in capsys.readouterr().out
    monkeypatch.setattr(fv, "godunov_flux", lambda family, a, b, q: np.zeros(np.broadcast(a, b, q).shape))
    assert cli.main(["verify", "entropy", "--quick"]) == 1
