"""Shared brute-force oracles: slow, independent recomputations."""

import numpy as np
import pytest

from phasefkg import gcwm, graphs
from phasefkg.lattice import SpinConfig


def brute_gcwm_probs(params, n, band=None):
    """Per-state probabilities by direct 2^n enumeration of e^{H}."""
    states = np.arange(1 << n, dtype=np.int64)
    logw = np.empty(len(states))
    levels = np.empty(len(states), dtype=np.int64)
    for s in states:
        x = SpinConfig.from_packed(int(s), n)
        logw[s] = n * gcwm.hamiltonian(params, x)
        levels[s] = sum(x.values)
    if band is not None:
        mask = band.level_mask(n)[levels]
        logw = np.where(mask, logw, -np.inf)
    finite = np.isfinite(logw)
    w = np.zeros(len(states))
    w[finite] = np.exp(logw[finite] - logw[finite].max())
    return w / w.sum(), levels


def brute_ergm_probs(spec, n=None):
    """Per-state probabilities via homomorphism counts, no fast paths."""
    n = spec.n if n is None else n
    ne = n * (n - 1) // 2
    states = np.arange(1 << ne, dtype=np.int64)
    logw = np.empty(len(states))
    for s in states:
        cfg = graphs.GraphConfig(n=n, edge_mask=int(s))
        h = 0.0
        for g, b in zip(spec.graphs, spec.beta):
            h += b * graphs.hom_density(g, cfg)
        logw[s] = n * n * h
    w = np.exp(logw - logw.max())
    return w / w.sum()


@pytest.fixture
def quad_params():
    return gcwm.GcwmParams(beta=(0.0, 1.0))


# One verdict line per acceptance criterion, echoed after the test
# summary so the lines survive output capture.
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok in ACCEPTANCE_VERDICTS:
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}")