import re
from collections import OrderedDict

TITLES = {
    1: "rate table reproduction",
    2: "Erlang-B reduction",
    3: "Markov model vs simulation",
    4: "MCS ordering on the load sweep",
    5: "E_b/N_0 sweep structure",
    6: "scheduler conservation and improvement",
    7: "invariant suite",
}

_outcomes: "OrderedDict[int, list[tuple[str, str]]]" = OrderedDict()


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes.setdefault(int(m.group(1)), []).append((m.group(2), report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_outcomes):
        parts = _outcomes[k]
        ok = all(o == "passed" for _, o in parts)
        failed = [n for n, o in parts if o != "passed"]
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {TITLES.get(k, '')}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        tr.write_line(line)
