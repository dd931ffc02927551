"""Shared fixtures; collects the acceptance verdicts and prints them at the end of the run."""

from collections import OrderedDict

import pytest

# criterion number -> list of (part, passed, detail, counts_toward_verdict)
_ACCEPTANCE = OrderedDict()

TITLES = {
    1: "integral identities",
    2: "oracle chain",
    3: "resolvent consistency",
    4: "moments of Lambda_u",
    5: "kernel density limit",
    6: "kernel vs measure pairing",
    7: "positivity",
    8: "Monte Carlo consistency",
}


class AcceptanceRecorder:
    def record(self, criterion, part, passed, detail, counts=True):
        _ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail, counts))
        tag = "PASS" if passed else "FAIL"
        note = "" if counts else " (supplementary)"
        print(f"criterion {criterion} {tag}: {part}{note}: {detail}")


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[crit]
        verdict = all(ok for _, ok, _, counts in parts if counts)
        details = "; ".join(f"{name} {'ok' if ok else 'FAILED'} [{detail}]"
                            for name, ok, detail, counts in parts if counts)
        terminalreporter.write_line(
            f"{'PASS' if verdict else 'FAIL'}  criterion {crit} ({TITLES.get(crit, '')}): {details}")
    for crit in sorted(_ACCEPTANCE):
        for name, ok, detail, counts in _ACCEPTANCE[crit]:
            if not counts:
                terminalreporter.write_line(
                    f"      criterion {crit} supplementary, {name}: {'ok' if ok else 'FAILED'} [{detail}]")
