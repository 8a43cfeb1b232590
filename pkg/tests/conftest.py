import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    lines = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py" not in str(getattr(rep, "nodeid", "")):
                continue
            name = rep.nodeid.split("::")[-1].replace("test_", "", 1)
            verdict = "PASS" if status == "passed" else "FAIL"
            lines.append((name, verdict))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in lines:
            terminalreporter.write_line(f"[acceptance] {name}: {verdict}")
