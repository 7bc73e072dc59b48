"""Shared fixtures and the acceptance-summary hook.

After a run that includes tests/test_acceptance.py, one PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import re

import numpy as np
import pytest

from pogcf.graph import InteractionLog, build_pog, merge_logs
from pogcf.order import build_rank_function, validate_order


def make_graph(num_users, num_items, behavior_sizes, tau, rng, levels=None):
    """Random multi-behavior graph; behavior_sizes maps name -> pair count."""
    names = list(behavior_sizes)
    order = validate_order(levels if levels is not None else [[n] for n in names])
    logs = [
        InteractionLog(
            name,
            rng.integers(num_users, size=size),
            rng.integers(num_items, size=size),
        )
        for name, size in behavior_sizes.items()
    ]
    cg = merge_logs(logs, num_users, num_items)
    ranks = build_rank_function(order)
    return build_pog(cg, ranks, tau), logs, order, ranks


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


_CRITERION_RE = re.compile(r"test_c(\d+)_")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in str(getattr(report, "nodeid", "")):
                continue
            m = _CRITERION_RE.search(report.nodeid)
            if not m:
                continue
            num = int(m.group(1))
            name = report.nodeid.split("::")[-1]
            ok = outcome == "passed"
            results[num] = (name, results.get(num, (name, True))[1] and ok)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        name, ok = results[num]
        terminalreporter.write_line(
            f"criterion {num:2d} [{name}]: {'PASS' if ok else 'FAIL'}"
        )
