import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def write_ini(path, sections):
    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {v}" for k, v in entries.items())
        lines.append("")
    path.write_text("\n".join(lines))
    return path


@pytest.fixture
def ini(tmp_path):
    def make(sections, name="run.ini"):
        return write_ini(tmp_path / name, sections)

    return make


_criteria_key = pytest.StashKey[list]()


@pytest.fixture
def criterion_log(request):
    """Record one PASS/FAIL line per acceptance criterion for the run summary."""
    return request.config.stash.setdefault(_criteria_key, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_criteria_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
