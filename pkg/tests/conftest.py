import pytest

from qlab import make_params, shoot_delaunay


@pytest.fixture(scope="session")
def p5():
    return make_params(5)


@pytest.fixture(scope="session")
def shot(p5):
    """Cached shooter: shot(fraction) solves at fraction * eps_bar (n = 5)."""
    cache = {}

    def get(frac):
        if frac not in cache:
            cache[frac] = shoot_delaunay(frac * p5.eps_bar, params=p5)
        return cache[frac]

    return get


def pytest_terminal_summary(terminalreporter):
    import sys

    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(mod, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.RESULTS:
                terminalreporter.write_line(line)
