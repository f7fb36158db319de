import pytest

from gramaspect.aspects import parse_syntactic_aspect
from gramaspect.reader import parse_grammar
from gramaspect.weaver import weave

from support import read

ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def arith():
    return parse_grammar(read("arith.gram"), "arith.gram")


@pytest.fixture
def intvars():
    return parse_syntactic_aspect(read("intvars.gaspect"), "intvars.gaspect")


@pytest.fixture
def dialect(arith, intvars):
    g, _ = weave(arith, [intvars])
    return g


@pytest.fixture
def criterion(request):
    """Record PASS/FAIL of one acceptance criterion for the terminal summary."""

    def record(number: int, title: str):
        ACCEPTANCE[number] = (title, "FAIL")
        request.node.user_properties.append(("criterion", number))
        return number

    yield record
    for key, number in request.node.user_properties:
        if key == "criterion":
            rep = getattr(request.node, "rep_call", None)
            title = ACCEPTANCE[number][0]
            ACCEPTANCE[number] = (title, "PASS" if rep is not None and rep.passed else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, status = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
