import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_instances(n_subjects=4, per_subject=3, T=6, dims=(6, 2), classes=3, seed=0, lengths=None):
    """Small labelled dataset; lengths, when given, cycles over instances."""
    from gwn.data import MultimodalInstance

    r = np.random.default_rng(seed)
    out = []
    k = 0
    for s in range(n_subjects):
        for j in range(per_subject):
            t = T if lengths is None else lengths[k % len(lengths)]
            mods = [r.standard_normal((t, d)) for d in dims]
            out.append(MultimodalInstance(f"I{k:03d}", f"S{s:02d}", k % classes, mods))
            k += 1
    return out


# acceptance criteria report: one line per criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
