import pytest

from hetdapac.model import SystemConfig

ABC = (("a", "b"), ("1", "2"), ("x", "y"))
ABCD = (("a", "b"), ("1", "2"), ("u", "v"), ("x", "y"))


@pytest.fixture
def cfg32():
    return SystemConfig(3, 3, 2, q=257, L=3, alphabets=ABC, seed=11)


@pytest.fixture
def cfg322():
    return SystemConfig(3, 2, 2, q=257, L=2, alphabets=ABC, seed=11)


@pytest.fixture
def cfg432():
    return SystemConfig(4, 3, 2, q=257, L=6, alphabets=ABCD, seed=11)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = getattr(rep, "head_line", "") or ""
            if rep.when == "call" and "test_criterion_" in name:
                lines.append((name, outcome))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(lines, key=lambda x: int(x[0].split("_")[2])):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  criterion {name.split('_')[2]}: {name.split('_', 3)[3].replace('_', ' ')}")
