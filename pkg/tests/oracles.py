"""Independent brute-force reference implementations used by the tests."""

import numpy as np


def naive_step_value(grid, curve, t):
    """Step interpolation: last grid value at or before ``t``; 1 before the grid."""
    value = 1.0
    for g, v in zip(grid, curve):
        if g <= t:
            value = v
        else:
            break
    return value


def naive_c_index(grid, curves, times, events):
    concordant2 = 0
    comparable = 0
    n = len(times)
    for i in range(n):
        if not events[i]:
            continue
        for j in range(n):
            if i == j:
                continue
            if times[i] < times[j] or (times[i] == times[j] and not events[j]):
                comparable += 1
                si = naive_step_value(grid, curves[i], times[i])
                sj = naive_step_value(grid, curves[j], times[i])
                if si < sj:
                    concordant2 += 2
                elif si == sj:
                    concordant2 += 1
    return concordant2 / (2.0 * comparable)


def naive_logrank_two_groups(times, events, in_first):
    """Two-group log-rank statistic by walking the distinct event times."""
    u = 0.0
    var = 0.0
    for t in sorted({x for x, e in zip(times, events) if e}):
        at_risk = [x >= t for x in times]
        n = sum(at_risk)
        n1 = sum(1 for r, g in zip(at_risk, in_first) if r and g)
        d = sum(1 for x, e in zip(times, events) if e and x == t)
        d1 = sum(1 for x, e, g in zip(times, events, in_first) if e and x == t and g)
        u += d1 - d * n1 / n
        if n > 1:
            var += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1)
    return u * u / var


def adjusted_rand(a, b):
    """Adjusted Rand index from the contingency table."""
    from math import comb

    a = np.asarray(a)
    b = np.asarray(b)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    sum_cells = sum(comb(int(x), 2) for x in table.ravel())
    sum_a = sum(comb(int(x), 2) for x in table.sum(1))
    sum_b = sum(comb(int(x), 2) for x in table.sum(0))
    total = comb(a.size, 2)
    expected = sum_a * sum_b / total
    maximum = (sum_a + sum_b) / 2
    if maximum == expected:
        return 1.0
    return (sum_cells - expected) / (maximum - expected)
