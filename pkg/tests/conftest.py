import pytest

from cubic_ist.harness import builtin_potential

CRITERIA = {
    1: "generalized-exponential identities, 1000 samples, 1e-11, < 5 s",
    2: "free operator: Jost solutions, T = I, fundamental determinant",
    3: "Gaussian T: det, J-unitarity, unitarity, cofactor at 1e-6, < 60 s",
    4: "rotation covariance of v_k and u_k at 1e-8",
    5: "Wronskian duality and x-independence of t00 at 1e-6",
    6: "asymptotic moment: decreasing error, <= 5% at omega = 40",
    7: "Fredholm solve-then-apply 1e-10, N=100->200 change <= 1e-7",
    8: "one-soliton reconstruction vs closed form at 1e-6, < 30 s",
    9: "degenerate reductions: sc1 = 0 at 1e-8, empty data gives q = 0",
    10: "jump relations on both rays at 1e-4, 5 points",
    11: "bound-state scan empty for small q, condition always reported",
}

_outcomes: dict = {}
_details: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.fixture
def note(request):
    """note(text) attaches a measured value to the test's acceptance criterion."""
    mark = request.node.get_closest_marker("criterion")

    def add(text: str):
        if mark is not None:
            _details.setdefault(mark.args[0], []).append(text)
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.skipped:
        return
    if rep.when == "call" or rep.failed:
        n = mark.args[0]
        _outcomes[n] = _outcomes.get(n, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, name in CRITERIA.items():
        if n not in _outcomes:
            tr.write_line(f"NOT RUN  criterion {n:2d}: {name}")
            continue
        detail = "; ".join(_details.get(n, []))
        tr.write_line(f"{'PASS' if _outcomes[n] else 'FAIL'}     criterion {n:2d}: {name}"
                      + (f" | {detail}" if detail else ""))


@pytest.fixture(scope="session")
def gaussian():
    return builtin_potential("gaussian", {"q0": 0.1, "w": 1.0, "decay_rate": 3.0})


@pytest.fixture(scope="session")
def small_gaussian():
    return builtin_potential("gaussian", {"q0": 0.05, "w": 1.0, "decay_rate": 3.0})
