"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

_CHUNK = 2048


def gaussian_kernel_sum(query, centers, weights, bandwidth):
    query = np.asarray(query, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    out = np.zeros(query.shape[0])
    if centers.size == 0:
        return out
    norm = 1.0 / (bandwidth * np.sqrt(2.0 * np.pi))
    for start in range(0, query.shape[0], _CHUNK):
        z = (query[start:start + _CHUNK, None] - centers[None, :]) / bandwidth
        out[start:start + _CHUNK] = np.exp(-0.5 * z * z) @ weights * norm
    return out


def concordance_counts(values, cols, times, events):
    values = np.asarray(values, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.int64)
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events).astype(bool)
    n = times.shape[0]
    twice_concordant = 0
    comparable = 0
    for i in np.flatnonzero(events):
        ti = times[i]
        mask = (times > ti) | ((times == ti) & ~events)
        mask[i] = False
        if not mask.any():
            continue
        c = cols[i]
        if c >= 0:
            si = values[i, c]
            sj = values[mask, c]
        else:
            si = 1.0
            sj = np.ones(int(mask.sum()))
        comparable += int(mask.sum())
        twice_concordant += 2 * int(np.count_nonzero(si < sj)) + int(np.count_nonzero(si == sj))
    return twice_concordant, comparable
