from collections import OrderedDict

import pytest

_ACCEPTANCE = OrderedDict()


@pytest.fixture(scope="session")
def acceptance():
    """Record ``(criterion, part, ok, detail)``; a criterion passes when all its parts do."""

    def record(criterion, part, ok, detail=""):
        _ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'}  criterion {criterion} [{part}] {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, parts in sorted(_ACCEPTANCE.items()):
        bad = [p for p, ok, _ in parts if not ok]
        tail = f"  failing parts: {', '.join(bad)}" if bad else ""
        tr.write_line(f"{'PASS' if not bad else 'FAIL'}  criterion {crit}  ({len(parts) - len(bad)}/{len(parts)} parts){tail}")
        for part, ok, detail in parts:
            tr.write_line(f"    {'ok  ' if ok else 'FAIL'} {part}  {detail}")
