import pytest

from lctrs_prover.smt import Solver, SolverNotFound


@pytest.fixture(scope="session")
def solver():
    try:
        s = Solver(timeout=20.0)
    except SolverNotFound as e:
        pytest.fail(f"an SMT solver is required: {e}")
    yield s
    s.close()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._acceptance = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call" and not call.excinfo:
        return
    n = marker.args[0]
    ok = call.excinfo is None
    results = item.config._acceptance
    results[n] = results.get(n, True) and ok


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance")
    for n in sorted(results):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if results[n] else 'FAIL'}")
