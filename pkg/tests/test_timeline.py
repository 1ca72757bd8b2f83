import numpy as np
import pytest

from woldgranger import StructuralError, build_collection, delta_cross, prev_index


def linear_prev(timeline, t):
    found = None
    for i, x in enumerate(timeline):
        if x < t:
            found = i
    return found


def linear_delta(col, b, a, t):
    p = linear_prev(col.processes[a], t)
    if p is None:
        return None
    anchor = col.processes[a][p]
    q = linear_prev(col.processes[b], anchor)
    if q is None:
        return None
    return anchor - col.processes[b][q]


@pytest.mark.parametrize("t, expected", [(3, 1), (1, None), (6, 2), (0.5, None), (5, 1), (5.0001, 2)])
def test_prev_index_examples(t, expected):
    assert prev_index(np.array([1.0, 2.0, 5.0]), t) == expected
    assert linear_prev([1.0, 2.0, 5.0], t) == expected


def test_prev_index_matches_linear_scan(rng):
    for _ in range(50):
        timeline = np.sort(rng.uniform(0, 100, rng.integers(0, 60)))
        for t in rng.uniform(-1, 101, 200):
            assert prev_index(timeline, t) == linear_prev(timeline, t)
        for t in timeline[:20]:
            assert prev_index(timeline, t) == linear_prev(timeline, t)


def test_delta_examples():
    col = build_collection([[2, 5], [1, 4]])
    d = delta_cross(col, 1, 0, 6)
    assert d.value == 1.0 and d.p_index == 1 and d.q_index == 1
    assert delta_cross(col, 0, 0, 6).value == 3.0

    col = build_collection([[2, 5], [7]])
    d = delta_cross(col, 1, 0, 6)
    assert d.value is None and d.p_index is None and d.q_index is None


def test_delta_invalid_process():
    col = build_collection([[1.0]])
    with pytest.raises(StructuralError):
        delta_cross(col, 1, 0, 2.0)


def test_delta_matches_linear_scan(rng):
    col = build_collection([np.sort(rng.uniform(0, 50, n)) for n in (30, 10, 0, 25)])
    for _ in range(2000):
        b, a = rng.integers(0, 4, 2)
        t = rng.uniform(0, 51)
        d = delta_cross(col, b, a, t)
        ref = linear_delta(col, b, a, t)
        assert d.value == ref
        if d.value is not None:
            assert 0 < d.value < col.horizon


def test_self_increment_interior(rng):
    ta = np.sort(rng.uniform(0, 10, 40))
    col = build_collection([ta])
    for i in range(1, ta.size - 1):
        t = 0.5 * (ta[i] + ta[i + 1])
        assert delta_cross(col, 0, 0, t).value == ta[i] - ta[i - 1]


def test_constant_within_interval(rng):
    col = build_collection([np.sort(rng.uniform(0, 10, 20)), np.sort(rng.uniform(0, 10, 20))])
    ta = col.processes[0]
    for i in range(ta.size - 1):
        ts = np.linspace(ta[i], ta[i + 1], 7)[1:]
        values = {delta_cross(col, 1, 0, t).value for t in ts}
        assert len(values) == 1
