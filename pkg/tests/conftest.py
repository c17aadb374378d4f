import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ctdvs", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("ctdvs")


@pytest.fixture(scope="session")
def default_traces():
    """All four schemes on the default scenario, seed 0 (shared, read-only)."""
    from ctdvs.scenario import SCHEMES, default_scenario, run_all

    return run_all(default_scenario(0), SCHEMES)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    order = sorted(mod.RESULTS, key=lambda k: (int(k.rstrip("ab")), k))
    for key in order:
        ok, detail = mod.RESULTS[key]
        tr.write_line(f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {detail}")
