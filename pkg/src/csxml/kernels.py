"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection: set CSXML_BACKEND=numpy to force the fallback path;
anything else (or unset) uses numba when importable. Both paths compute
the same quantities; `benchmarks/bench_kernels.py` compares their speed.
"""

import os

import numpy as np

_backend = os.environ.get("CSXML_BACKEND", "numba").lower()
USE_NUMBA = _backend != "numpy"

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


# --- boosting kernels -------------------------------------------------------

def _bin_gradient_stats_np(codes, grad, n_bins):
    sums = np.bincount(codes, weights=grad, minlength=n_bins)
    counts = np.bincount(codes, minlength=n_bins).astype(np.float64)
    sq = np.bincount(codes, weights=grad * grad, minlength=n_bins)
    return sums, counts, sq


def _bin_gradient_stats_nb(codes, grad, n_bins):
    sums = np.zeros(n_bins)
    counts = np.zeros(n_bins)
    sq = np.zeros(n_bins)
    for i in range(codes.shape[0]):
        c = codes[i]
        g = grad[i]
        sums[c] += g
        counts[c] += 1.0
        sq[c] += g * g
    return sums, counts, sq


def _best_cut_nb(s1, s2, c):
    """Best single cut of contiguous bins [0, n) minimizing two-segment SSE.

    Returns (cut, sse) where the left segment is bins [0, cut) and sse is the
    combined segment SSE; cut == 0 means no valid cut (one side empty).
    """
    n = s1.shape[0]
    tot1 = 0.0
    tot2 = 0.0
    totc = 0.0
    for i in range(n):
        tot1 += s1[i]
        tot2 += s2[i]
        totc += c[i]
    best_cut = 0
    best_sse = np.inf
    l1 = 0.0
    l2 = 0.0
    lc = 0.0
    for i in range(n - 1):
        l1 += s1[i]
        l2 += s2[i]
        lc += c[i]
        rc = totc - lc
        if lc <= 0.0 or rc <= 0.0:
            continue
        sse = (l2 - l1 * l1 / lc) + ((tot2 - l2) - (tot1 - l1) * (tot1 - l1) / rc)
        if sse < best_sse:
            best_sse = sse
            best_cut = i + 1
    return best_cut, best_sse


def _segment_updates_nb(sums, counts, sq, max_leaves):
    """Per-bin fitted values of a small regression tree over ordered bins.

    Greedily partitions the bin axis into at most `max_leaves` contiguous
    segments minimizing squared error of the per-segment mean; empty bins
    inherit their segment's mean. Equal-SSE cuts resolve to the lowest
    boundary index.
    """
    n = sums.shape[0]
    values = np.zeros(n)
    # segment boundaries as a sorted list of starts; segments end at next start
    starts = np.zeros(max_leaves + 1, dtype=np.int64)
    starts[0] = 0
    starts[1] = n
    n_seg = 1
    while n_seg < max_leaves:
        best_gain = 0.0
        best_seg = -1
        best_cut = -1
        for s in range(n_seg):
            a = starts[s]
            b = starts[s + 1]
            if b - a < 2:
                continue
            t1 = 0.0
            t2 = 0.0
            tc = 0.0
            for i in range(a, b):
                t1 += sums[i]
                t2 += sq[i]
                tc += counts[i]
            if tc <= 0.0:
                continue
            sse0 = t2 - t1 * t1 / tc
            cut, sse = _best_cut_nb(sums[a:b], sq[a:b], counts[a:b])
            if cut == 0:
                continue
            gain = sse0 - sse
            if gain > best_gain + 1e-12:
                best_gain = gain
                best_seg = s
                best_cut = a + cut
        if best_seg < 0:
            break
        for s in range(n_seg, best_seg, -1):
            starts[s + 1] = starts[s]
        starts[best_seg + 1] = best_cut
        n_seg += 1
    for s in range(n_seg):
        a = starts[s]
        b = starts[s + 1]
        t1 = 0.0
        tc = 0.0
        for i in range(a, b):
            t1 += sums[i]
            tc += counts[i]
        mean = t1 / tc if tc > 0.0 else 0.0
        for i in range(a, b):
            values[i] = mean
    return values


def _gini_split_scan_nb(values, labels, n_classes):
    """Best threshold by weighted child Gini over sorted (values, labels).

    Candidates are midpoints between consecutive distinct values. Returns
    (threshold, weighted_impurity, found) with ties broken toward the lowest
    threshold.
    """
    n = values.shape[0]
    left = np.zeros(n_classes)
    right = np.zeros(n_classes)
    for i in range(n):
        right[labels[i]] += 1.0
    best_thr = 0.0
    best_imp = np.inf
    found = False
    for i in range(n - 1):
        c = labels[i]
        left[c] += 1.0
        right[c] -= 1.0
        if values[i] == values[i + 1]:
            continue
        nl = float(i + 1)
        nr = float(n - i - 1)
        gl = 1.0
        gr = 1.0
        for k in range(n_classes):
            gl -= (left[k] / nl) * (left[k] / nl)
            gr -= (right[k] / nr) * (right[k] / nr)
        imp = (nl * gl + nr * gr) / n
        if imp < best_imp - 1e-12:
            best_imp = imp
            best_thr = 0.5 * (values[i] + values[i + 1])
            found = True
    return best_thr, best_imp, found


def _variance_split_scan_nb(values, y):
    """Best threshold by weighted child variance over sorted (values, y)."""
    n = values.shape[0]
    tot1 = 0.0
    tot2 = 0.0
    for i in range(n):
        tot1 += y[i]
        tot2 += y[i] * y[i]
    best_thr = 0.0
    best_imp = np.inf
    found = False
    l1 = 0.0
    l2 = 0.0
    for i in range(n - 1):
        l1 += y[i]
        l2 += y[i] * y[i]
        if values[i] == values[i + 1]:
            continue
        nl = float(i + 1)
        nr = float(n - i - 1)
        r1 = tot1 - l1
        r2 = tot2 - l2
        var_l = l2 / nl - (l1 / nl) * (l1 / nl)
        var_r = r2 / nr - (r1 / nr) * (r1 / nr)
        imp = (nl * var_l + nr * var_r) / n
        if imp < best_imp - 1e-12:
            best_imp = imp
            best_thr = 0.5 * (values[i] + values[i + 1])
            found = True
    return best_thr, best_imp, found


# --- numpy fallbacks ---------------------------------------------------------

def _first_within_tol(costs, tol=1e-12):
    """Lowest index whose cost is within tol of the minimum (tie semantics of
    the sequential kernels); -1 when no finite cost exists."""
    lo = np.min(costs)
    if not np.isfinite(lo):
        return -1
    return int(np.argmax(costs <= lo + tol))


def _best_cut_np(s1, s2, c):
    n = s1.shape[0]
    if n < 2:
        return 0, np.inf
    l1 = np.cumsum(s1)[:-1]
    l2 = np.cumsum(s2)[:-1]
    lc = np.cumsum(c)[:-1]
    t1, t2, tc = l1[-1] + s1[-1], l2[-1] + s2[-1], lc[-1] + c[-1]
    rc = tc - lc
    with np.errstate(divide="ignore", invalid="ignore"):
        sse = (l2 - l1 * l1 / lc) + ((t2 - l2) - (t1 - l1) * (t1 - l1) / rc)
    sse = np.where((lc > 0) & (rc > 0), sse, np.inf)
    i = _first_within_tol(sse)
    if i < 0:
        return 0, np.inf
    return i + 1, float(sse[i])


def _segment_updates_np(sums, counts, sq, max_leaves):
    n = sums.shape[0]
    values = np.zeros(n)
    starts = [0, n]
    while len(starts) - 1 < max_leaves:
        best_gain = 0.0
        best = None
        for s in range(len(starts) - 1):
            a, b = starts[s], starts[s + 1]
            if b - a < 2:
                continue
            tc = counts[a:b].sum()
            if tc <= 0.0:
                continue
            t1 = sums[a:b].sum()
            sse0 = sq[a:b].sum() - t1 * t1 / tc
            cut, sse = _best_cut_np(sums[a:b], sq[a:b], counts[a:b])
            if cut == 0:
                continue
            gain = sse0 - sse
            if gain > best_gain + 1e-12:
                best_gain = gain
                best = (s, a + cut)
        if best is None:
            break
        starts.insert(best[0] + 1, best[1])
    for s in range(len(starts) - 1):
        a, b = starts[s], starts[s + 1]
        tc = counts[a:b].sum()
        values[a:b] = sums[a:b].sum() / tc if tc > 0.0 else 0.0
    return values


def _gini_split_scan_np(values, labels, n_classes):
    n = values.shape[0]
    if n < 2:
        return 0.0, np.inf, False
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = onehot.sum(axis=0) - left
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    gl = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
    gr = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
    imp = (nl * gl + nr * gr) / n
    imp = np.where(values[:-1] != values[1:], imp, np.inf)
    i = _first_within_tol(imp)
    if i < 0:
        return 0.0, np.inf, False
    return 0.5 * (values[i] + values[i + 1]), float(imp[i]), True


def _variance_split_scan_np(values, y):
    n = values.shape[0]
    if n < 2:
        return 0.0, np.inf, False
    l1 = np.cumsum(y)[:-1]
    l2 = np.cumsum(y * y)[:-1]
    t1, t2 = l1[-1] + y[-1], l2[-1] + y[-1] * y[-1]
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    imp = ((l2 - l1 * l1 / nl) + ((t2 - l2) - (t1 - l1) ** 2 / nr)) / n
    imp = np.where(values[:-1] != values[1:], imp, np.inf)
    i = _first_within_tol(imp)
    if i < 0:
        return 0.0, np.inf, False
    return 0.5 * (values[i] + values[i + 1]), float(imp[i]), True


if USE_NUMBA:
    _best_cut_nb = njit(cache=True)(_best_cut_nb)
    bin_gradient_stats = njit(cache=True)(_bin_gradient_stats_nb)
    segment_updates = njit(cache=True)(_segment_updates_nb)
    gini_split_scan = njit(cache=True)(_gini_split_scan_nb)
    variance_split_scan = njit(cache=True)(_variance_split_scan_nb)
else:
    bin_gradient_stats = _bin_gradient_stats_np
    segment_updates = _segment_updates_np
    gini_split_scan = _gini_split_scan_np
    variance_split_scan = _variance_split_scan_np
