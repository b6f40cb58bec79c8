import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cmjtrees.tree import RootedTree

settings.register_profile(
    "default",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def random_trees(draw, min_size=1, max_size=30, relabel=True):
    """Arbitrary rooted trees, optionally with node labels shuffled."""
    n = draw(st.integers(min_size, max_size))
    parent = [-1] + [draw(st.integers(0, k - 1)) for k in range(1, n)]
    if not relabel or n == 1:
        return RootedTree(parent)
    perm = draw(st.permutations(range(n)))
    new = [0] * n
    for v, p in enumerate(parent):
        new[perm[v]] = -1 if p < 0 else perm[p]
    return RootedTree(new)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion(request):
    """Record and print one pass/fail line per acceptance check."""
    sink = request.config._acceptance_lines

    def report(label: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else "")
        sink.append(line)
        print(line)
        return ok

    return report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
