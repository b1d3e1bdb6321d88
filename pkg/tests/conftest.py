import pytest

HEADER = "2005.06.03 R02-M1-N0 2005-06-03-15.42.50 R02-M1-N0 RAS KERNEL INFO"
FIXTURE_NORMAL = [
    "instruction cache parity error corrected",
    "generating core.{k}",
    "total of {k} ddr error(s) detected and corrected",
    "shutdown complete for node {k}",
]
FIXTURE_ALERT = "KERNDTLB data TLB error interrupt at {k}"

_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def bgl_fixture(tmp_path):
    """1,000 lines: the 4 normal patterns in rotation; alerts at lines 150 and 920.

    Hand count: 4 normal templates + 1 alert template = 5.  Windows 1 and 9
    (0-based) contain the alerts.
    """
    lines = []
    for i in range(1000):
        if i in (150, 920):
            label, content = FIXTURE_ALERT.split(" ", 1)
        else:
            label, content = "-", FIXTURE_NORMAL[i % 4]
        lines.append(f"{label} {1117838570 + i} {HEADER} {content.format(k=i)}\n")
    path = tmp_path / "fixture.log"
    path.write_text("".join(lines))
    return path


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_RESULTS, [])

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
