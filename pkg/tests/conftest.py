"""Terminal summary: one verdict line per release criterion.

Aggregates test_acceptance.py results by their c<N> name prefix. A
criterion passes only if every test under it passed; a skip surfaces
as SKIP so an ungated environment is visible, not silently green.
"""

CRITERIA = (
    ("c1", "seed-topic sweep hits the per-method variant counts"),
    ("c2", "statistics match independent brute-force oracles"),
    ("c3", "studentized range matches tables; k=2 reduces to t"),
    ("c4", "order and misspelling validators hold under random sweeps"),
    ("c5", "toy pipeline byte-reproducible within the time budget"),
    ("c6", "location-shift invariance; NDCG rank-only dependence"),
    ("c7", "released-data agreement figures reproduce"),
)


def _criterion_of(report) -> str:
    nodeid = getattr(report, "nodeid", "")
    if "test_acceptance.py" not in nodeid:
        return ""
    name = nodeid.rsplit("::", 1)[-1]
    for key, _ in CRITERIA:
        if name.startswith(f"test_{key}_"):
            return key
    return ""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, set[str]] = {}
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, ()):
            key = _criterion_of(report)
            if key:
                outcomes.setdefault(key, set()).add(status)
    if not outcomes:
        return
    terminalreporter.section("release criteria")
    for key, label in CRITERIA:
        seen = outcomes.get(key)
        if not seen:
            verdict = "NOT RUN"
        elif seen & {"failed", "error"}:
            verdict = "FAIL"
        elif "passed" in seen:
            verdict = "PASS"
        else:
            verdict = "SKIP"
        terminalreporter.write_line(f"[{key}] {verdict:7s} {label}")
