import pytest

from predlab.vm import Program, RunResult, Status, VMState, step


def ref_run(p: Program, input: str = "", fuel: int = 100, max_out: int = 1 << 62) -> RunResult:
    """Run by repeated single steps; independent of the compiled kernel."""
    if p.n_instr == 0:
        return RunResult(Status.EMPTY, "", 0)
    s = VMState.initial(p, input)
    while True:
        if len(s.output) >= max_out:
            return RunResult(Status.OUTPUT_LIMIT, s.output, s.steps)
        if s.steps >= fuel:
            return RunResult(Status.FUEL, s.output, s.steps)
        s = step(s, p)
        if s.terminal:
            return RunResult(s.status, s.output, s.steps)


@pytest.fixture
def reference_run():
    return ref_run


def prog(*names):
    return Program.from_instructions(names)


# -- acceptance summary lines --------------------------------------------------------

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        line = f"CRITERION {number:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
