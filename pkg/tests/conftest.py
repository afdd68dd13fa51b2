import pytest

SMALL_CONFIG = """\
# tiny experiment for pipeline tests
sim.trials = 2
sim.pool_size = 5000
sweep.n_values = 2, 5, 10
sweep.d_values = 100, 200, 300
sweep.values = 500, 2000, 8000
sweep.seeds = 2
sweep.convergence_gammas = 500, 4000
population.n_learners = 20
oracle.instances = 5
model.restarts = 2
"""


@pytest.fixture
def small_config_path(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CONFIG)
    return path


_RESULTS = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Record ``(passed, detail)`` per criterion for the end-of-run table."""
    return request.config.stash.setdefault(_RESULTS, {})


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, detail = results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status:<6} {detail}")
