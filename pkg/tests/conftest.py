import numpy as np
import pytest

from woldgranger import ModelParams

ACCEPTANCE_LOG = []


def record_acceptance(criterion, passed, detail):
    ACCEPTANCE_LOG.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_LOG, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")


def planted_model(k, nonzeros, rng, mu_low=0.05, mu_high=0.2):
    granger = np.zeros((k, k))
    for b in range(k):
        granger[b, rng.choice(k, nonzeros, replace=False)] = 1.0 / nonzeros
    return ModelParams(granger, np.ones(k), rng.uniform(mu_low, mu_high, k))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def frozen_problem(alpha_p=0.25, seed=7):
    """K=4 data where only the last early event of process 0 is resampled.

    Returns ``(collection, state, params, a, i, target)`` with ``target`` the
    normalized collapsed conditional over the free label, computed by linear
    scans independent of the package.
    """
    from woldgranger import LatentState, build_collection

    k = 4
    gen = np.random.default_rng(seed)
    early = [[0.5, 4.0, 6.0], [1.0, 3.5], [2.0], [0.2, 3.0]]
    late = [sorted(gen.uniform(10, 50, n)) for n in (6, 9, 4, 12)]
    events = [e + list(l) for e, l in zip(early, late)]
    col = build_collection(events)
    labels = gen.integers(0, k + 1, col.total_events)
    a, i = 0, 2
    free = int(col.offsets[a] + i)
    labels[col.offsets[a]] = k
    labels[free] = 2
    state = LatentState.from_labels(col, labels)
    params = ModelParams(np.full((k, k), 1 / k), np.ones(k), np.zeros(k))

    anchor = events[a][i - 1]
    deltas = [anchor - max(x for x in events[b] if x < anchor) for b in range(k)]
    counts = np.zeros((k, k))
    owner = np.repeat(np.arange(k), [len(e) for e in events])
    for g, (lbl, own) in enumerate(zip(labels, owner)):
        if g != free and lbl < k:
            counts[lbl, own] += 1
    weights = np.array([(counts[b, a] + alpha_p) / (counts[b].sum() + alpha_p * k) / (1 + deltas[b])
                        for b in range(k)])
    return col, state, params, a, i, weights / weights.sum()
