import pytest

_ACCEPTANCE_PREFIX = "test_criterion_"


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call":
        return
    name = report.location[2]
    if _ACCEPTANCE_PREFIX not in name:
        return
    tag = name.split(_ACCEPTANCE_PREFIX, 1)[1]
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] criterion {tag}: {verdict}", flush=True)
