import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance line: 'criterion N: PASS|FAIL  detail'."""
    def record(num, ok, detail):
        line = "criterion %2d: %s  %s" % (num, "PASS" if ok else "FAIL", detail)
        VERDICTS.append(line)
        print(line)
        return ok
    return record


def _suite_logs():
    from tlcomp.analysis import LB_LOG
    from tlcomp.invertible import PRUNE_LOG
    return PRUNE_LOG, LB_LOG


def pytest_terminal_summary(terminalreporter):
    prune, lb = _suite_logs()
    tr = terminalreporter
    if VERDICTS:
        tr.section("acceptance")
        for line in sorted(VERDICTS):
            tr.write_line(line)
    tr.section("suite-wide bound logs")
    tr.write_line("pruning: %d calls, %d violations, max depth/bound %.3f, max length/bound %.3f"
                  % (prune["calls"], prune["violations"], prune["max_depth_ratio"], prune["max_len_ratio"]))
    tr.write_line("lower bounds: %d checks, %d violations, %d not applicable"
                  % (lb["checks"], lb["violations"], lb["not_applicable"]))


def pytest_sessionfinish(session, exitstatus):
    prune, lb = _suite_logs()
    if prune["violations"] or lb["violations"]:
        session.exitstatus = 1
