"""Hot inner loops: cut-point search and co-leaf counting.

Each kernel exists as an explicit loop (compiled by numba) and as a
vectorised numpy twin. Both perform the same floating point operations in
the same order, so they return bit-identical results; ``USE_NUMBA`` picks one.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# smallest gain accepted as a real improvement; absorbs round-off on
# splits whose exact gain is zero
GAIN_EPS = 1e-12


def _tag_gain(P, N, PL, NL):
    T = P + N
    if T <= 0.0:
        return 0.0
    p = P / T
    g = 1.0 - p * p - (1.0 - p) * (1.0 - p)
    TL = PL + NL
    if TL > 0.0:
        pl = PL / TL
        g -= (TL / T) * (1.0 - pl * pl - (1.0 - pl) * (1.0 - pl))
    PR = max(P - PL, 0.0)
    NR = max(N - NL, 0.0)
    TR = PR + NR
    if TR > 0.0:
        pr = PR / TR
        g -= (TR / T) * (1.0 - pr * pr - (1.0 - pr) * (1.0 - pr))
    return g


def _midpoint(lo, hi):
    mid = (lo + hi) * 0.5
    if not mid > lo:
        mid = hi
    return mid


_tag_gain_jit = njit(_tag_gain)
_midpoint_jit = njit(_midpoint)


@njit
def _best_split_jit(Xs, wp, wn, totp, totn):
    s, nf = Xs.shape
    t = wp.shape[1]
    best_gain = GAIN_EPS
    best_f = -1
    best_thr = 0.0
    cp = np.empty(t)
    cn = np.empty(t)
    for f in range(nf):
        col = Xs[:, f].copy()
        order = np.argsort(col, kind="mergesort")
        cp[:] = 0.0
        cn[:] = 0.0
        for r in range(s - 1):
            idx = order[r]
            for i in range(t):
                cp[i] += wp[idx, i]
                cn[i] += wn[idx, i]
            lo = col[idx]
            hi = col[order[r + 1]]
            if not hi > lo:
                continue
            gain = 0.0
            for i in range(t):
                gain += _tag_gain_jit(totp[i], totn[i], cp[i], cn[i])
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_thr = _midpoint_jit(lo, hi)
    return best_f, best_thr, best_gain


def _tag_gain_vec(P, N, PL, NL):
    """Vectorised ``_tag_gain`` over cut positions for one tag."""
    T = P + N
    if T <= 0.0:
        return np.zeros(len(PL))
    p = P / T
    g = np.full(len(PL), 1.0 - p * p - (1.0 - p) * (1.0 - p))
    with np.errstate(divide="ignore", invalid="ignore"):
        TL = PL + NL
        pl = PL / TL
        termL = (TL / T) * (1.0 - pl * pl - (1.0 - pl) * (1.0 - pl))
        g = np.where(TL > 0.0, g - termL, g)
        PR = np.maximum(P - PL, 0.0)
        NR = np.maximum(N - NL, 0.0)
        TR = PR + NR
        pr = PR / TR
        termR = (TR / T) * (1.0 - pr * pr - (1.0 - pr) * (1.0 - pr))
        g = np.where(TR > 0.0, g - termR, g)
    return g


def _best_split_np(Xs, wp, wn, totp, totn):
    s, nf = Xs.shape
    t = wp.shape[1]
    best_gain = GAIN_EPS
    best_f = -1
    best_thr = 0.0
    for f in range(nf):
        col = Xs[:, f]
        order = np.argsort(col, kind="mergesort")
        v = col[order]
        valid = v[1:] > v[:-1]
        if not valid.any():
            continue
        cp = np.cumsum(wp[order[:-1]], axis=0)
        cn = np.cumsum(wn[order[:-1]], axis=0)
        gain = np.zeros(s - 1)
        for i in range(t):
            gain += _tag_gain_vec(totp[i], totn[i], cp[:, i], cn[:, i])
        gain[~valid] = -np.inf
        r = int(np.argmax(gain))
        if gain[r] > best_gain:
            best_gain = float(gain[r])
            best_f = f
            best_thr = _midpoint(v[r], v[r + 1])
    return best_f, best_thr, best_gain


def best_split(Xs, wp, wn, totp, totn, use_numba=None):
    """Best cut over the columns of ``Xs``.

    ``wp``/``wn`` hold each sample's positive/negative mass per target tag and
    ``totp``/``totn`` their column totals. Returns ``(column, threshold, gain)``
    with ``column == -1`` when no cut beats ``GAIN_EPS``. Ties keep the first
    column, then the lowest threshold.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    Xs = np.ascontiguousarray(Xs, dtype=np.float64)
    wp = np.ascontiguousarray(wp, dtype=np.float64)
    wn = np.ascontiguousarray(wn, dtype=np.float64)
    totp = np.ascontiguousarray(totp, dtype=np.float64)
    totn = np.ascontiguousarray(totn, dtype=np.float64)
    if use_numba:
        f, thr, g = _best_split_jit(Xs, wp, wn, totp, totn)
    else:
        f, thr, g = _best_split_np(Xs, wp, wn, totp, totn)
    return int(f), float(thr), float(g)


@njit
def _coleaf_jit(leaf_ids, counts):
    tau, n = leaf_ids.shape
    for t in range(tau):
        row = leaf_ids[t]
        order = np.argsort(row, kind="mergesort")
        start = 0
        while start < n:
            stop = start + 1
            while stop < n and row[order[stop]] == row[order[start]]:
                stop += 1
            for a in range(start, stop):
                ia = order[a]
                for b in range(start, stop):
                    counts[ia, order[b]] += 1
            start = stop
    return counts


def _coleaf_np(leaf_ids, counts):
    for row in leaf_ids:
        order = np.argsort(row, kind="mergesort")
        sorted_ids = row[order]
        bounds = np.flatnonzero(np.diff(sorted_ids)) + 1
        for members in np.split(order, bounds):
            counts[np.ix_(members, members)] += 1
    return counts


def coleaf_counts(leaf_ids, use_numba=None):
    """Number of trees in which each sample pair shares a leaf.

    ``leaf_ids`` is ``(tau, n)``: the leaf of every sample in every tree.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    leaf_ids = np.ascontiguousarray(leaf_ids, dtype=np.int64)
    n = leaf_ids.shape[1]
    counts = np.zeros((n, n), dtype=np.int64)
    if use_numba:
        return _coleaf_jit(leaf_ids, counts)
    return _coleaf_np(leaf_ids, counts)
