"""Compiled simulation kernels.

Everything here is nopython-compiled, releases the GIL, and is driven by
the counter-based generator defined in rng.py: a draw is a pure function
of (key, counter), so replicate results depend only on their key and the
algorithm's canonical counter order, never on scheduling.  The Python
reference implementations in _pysampler.py mirror these functions
expression for expression and the test suite holds the two sides to exact
equality; fastmath stays off so the compiler cannot re-associate floats.

Trees are laid out implicitly: vertex v's children are v*r + 1 .. v*r + r
in breadth-first order, the per-vertex open/closed draw sits at counter v,
and counters from tree-size upward feed the boundary continuation
walkers in boundary order.

Below the depth-d boundary only aggregated frontier counts matter, so
one binomial draw advances a whole generation: Bin(F*r, p) open children
of an F-vertex frontier has exactly the law of per-vertex draws.  That
keeps the cost of a continuation proportional to its height, which is
what makes near-critical runs (heights in the millions) tractable.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

U11 = np.uint64(11)
U27 = np.uint64(27)
U30 = np.uint64(30)
U31 = np.uint64(31)
MUL1 = np.uint64(0xBF58476D1CE4E5B9)
MUL2 = np.uint64(0x94D049BB133111EB)
GAMMA = np.uint64(0x9E3779B97F4A7C15)
ONE = np.uint64(1)
INV53 = 1.0 / 9007199254740992.0

# stirling_tail(k) = lgamma(k+1) - ((k+.5)ln(k+1) - (k+1) + .5 ln(2pi)),
# tabulated for k <= 9; the closed series below is used past the table.
STIRLING_TAIL_TABLE = np.array(
    [
        0.08106146679532726,
        0.04134069595540929,
        0.02767792568499834,
        0.02079067210376509,
        0.01664469118982119,
        0.01387612882307075,
        0.01189670994589177,
        0.01041126526197209,
        0.009255462182712733,
        0.008330563433362871,
    ]
)

UNBOUNDED = np.int64(1) << np.int64(62)


@nb.njit(cache=True, nogil=True, inline="always")
def _mix64(x):
    x = x ^ (x >> U30)
    x = x * MUL1
    x = x ^ (x >> U27)
    x = x * MUL2
    x = x ^ (x >> U31)
    return x


@nb.njit(cache=True, nogil=True, inline="always")
def _u64_at(key, counter):
    return _mix64(key + (counter + ONE) * GAMMA)


@nb.njit(cache=True, nogil=True, inline="always")
def _unif(key, counter):
    return (_u64_at(key, counter) >> U11) * INV53


@nb.njit(cache=True, nogil=True, inline="always")
def _stirling_tail(k):
    if k <= 9.0:
        return STIRLING_TAIL_TABLE[np.int64(k)]
    kp = k + 1.0
    kp2 = kp * kp
    return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / 1260.0 / kp2) / kp2) / kp


@nb.njit(cache=True, nogil=True)
def _binom_inv(key, ctr, n, ps):
    # Single-uniform inversion walking the pmf from k = 0; callers keep
    # n*ps <= 30 or n <= 64 so the starting mass cannot underflow.
    u = _unif(key, ctr)
    ctr = ctr + ONE
    q = 1.0 - ps
    f = math.exp(n * math.log(q))
    k = np.int64(0)
    while u > f and k < n:
        u = u - f
        f = f * (((n - k) * ps) / ((k + 1.0) * q))
        k = k + 1
    return k, ctr


@nb.njit(cache=True, nogil=True)
def _binom_btrs(key, ctr, n, ps):
    # Transformed-rejection sampler; valid for n*ps > 10, dispatched only
    # above 30.  Two uniforms per attempt, squeeze accepts most of them.
    spq = math.sqrt(n * ps * (1.0 - ps))
    b = 1.15 + 2.53 * spq
    a = -0.0873 + 0.0248 * b + 0.01 * ps
    c = n * ps + 0.5
    vr = 0.92 - 4.2 / b
    alpha = (2.83 + 5.1 / b) * spq
    rr = ps / (1.0 - ps)
    m = math.floor((n + 1.0) * ps)
    while True:
        u = _unif(key, ctr) - 0.5
        ctr = ctr + ONE
        v = _unif(key, ctr)
        ctr = ctr + ONE
        us = 0.5 - abs(u)
        kf = math.floor((2.0 * a / us + b) * u + c)
        if kf < 0.0 or kf > n:
            continue
        if us >= 0.07 and v <= vr:
            return np.int64(kf), ctr
        if v <= 0.0:
            continue
        t = math.log(v * alpha / (a / (us * us) + b))
        ub = (
            (m + 0.5) * math.log((m + 1.0) / (rr * (n - m + 1.0)))
            + (n + 1.0) * math.log((n - m + 1.0) / (n - kf + 1.0))
            + (kf + 0.5) * math.log(rr * (n - kf + 1.0) / (kf + 1.0))
            + _stirling_tail(m)
            + _stirling_tail(n - m)
            - _stirling_tail(kf)
            - _stirling_tail(n - kf)
        )
        if t <= ub:
            return np.int64(kf), ctr


@nb.njit(cache=True, nogil=True)
def _binom(key, ctr, n, p):
    if n <= 0 or p <= 0.0:
        return np.int64(0), ctr
    if p >= 1.0:
        return np.int64(n), ctr
    flip = p > 0.5
    ps = 1.0 - p if flip else p
    if n * ps <= 30.0 or n <= 64:
        k, ctr = _binom_inv(key, ctr, n, ps)
    else:
        k, ctr = _binom_btrs(key, ctr, n, ps)
    if flip:
        k = np.int64(n) - k
    return k, ctr


@nb.njit(cache=True, nogil=True)
def _walk(key, ctr, r, p, cap_nodes, cap_height):
    """Frontier walk below one open boundary vertex.

    Returns (nodes, height, ctr, censored): nodes and height are exact
    when censored is False and certified lower bounds when it is True.
    """
    f, ctr = _binom(key, ctr, np.int64(r), p)
    total = f
    h = np.int64(0)
    cens = False
    while f > 0:
        h = h + 1
        if total > cap_nodes or h >= cap_height:
            cens = True
            break
        f, ctr = _binom(key, ctr, f * r, p)
        total = total + f
    return total, h, ctr, cens


@nb.njit(cache=True, nogil=True)
def _tree_rep_cluster(key, r, size, first_boundary, p, cap_nodes, buf):
    ctr = np.uint64(size)
    cens = False
    work = np.int64(size)
    kb = np.int64(0)
    for b in range(first_boundary, size):
        if _unif(key, np.uint64(b)) < p:
            tot, _h, ctr, hit = _walk(key, ctr, r, p, cap_nodes, UNBOUNDED)
            cens = cens or hit
            buf[b] = 1 + tot
            work = work + tot
            if buf[b] > kb:
                kb = buf[b]
        else:
            buf[b] = 0
    best = kb
    for v in range(first_boundary - 1, -1, -1):
        if _unif(key, np.uint64(v)) < p:
            s = np.int64(1)
            cb = v * r
            for j in range(1, r + 1):
                s = s + buf[cb + j]
            buf[v] = s
            if s > best:
                best = s
        else:
            buf[v] = 0
    return best, kb, work, cens


@nb.njit(cache=True, nogil=True)
def _tree_rep_run(key, r, size, first_boundary, p, cap_nodes, cap_height, buf):
    ctr = np.uint64(size)
    cens = False
    work = np.int64(size)
    rb = np.int64(0)
    for b in range(first_boundary, size):
        if _unif(key, np.uint64(b)) < p:
            tot, h, ctr, hit = _walk(key, ctr, r, p, cap_nodes, cap_height)
            cens = cens or hit
            buf[b] = 1 + h
            work = work + tot
            if buf[b] > rb:
                rb = buf[b]
        else:
            buf[b] = 0
    best = rb
    for v in range(first_boundary - 1, -1, -1):
        if _unif(key, np.uint64(v)) < p:
            mx = np.int64(0)
            cb = v * r
            for j in range(1, r + 1):
                if buf[cb + j] > mx:
                    mx = buf[cb + j]
            buf[v] = 1 + mx
            if buf[v] > best:
                best = buf[v]
        else:
            buf[v] = 0
    return best, rb, work, cens


@nb.njit(cache=True, nogil=True)
def _tree_rep_joint(key, r, size, first_boundary, p, cap_nodes, cap_height, buf_s, buf_r):
    # One realization, both statistics: walkers are drawn once and feed
    # the size and the run recursion simultaneously.
    ctr = np.uint64(size)
    cens = False
    work = np.int64(size)
    kb = np.int64(0)
    rb = np.int64(0)
    for b in range(first_boundary, size):
        if _unif(key, np.uint64(b)) < p:
            tot, h, ctr, hit = _walk(key, ctr, r, p, cap_nodes, cap_height)
            cens = cens or hit
            buf_s[b] = 1 + tot
            buf_r[b] = 1 + h
            work = work + tot
            if buf_s[b] > kb:
                kb = buf_s[b]
            if buf_r[b] > rb:
                rb = buf_r[b]
        else:
            buf_s[b] = 0
            buf_r[b] = 0
    best_k = kb
    best_r = rb
    for v in range(first_boundary - 1, -1, -1):
        if _unif(key, np.uint64(v)) < p:
            s = np.int64(1)
            mx = np.int64(0)
            cb = v * r
            for j in range(1, r + 1):
                s = s + buf_s[cb + j]
                if buf_r[cb + j] > mx:
                    mx = buf_r[cb + j]
            buf_s[v] = s
            buf_r[v] = 1 + mx
            if s > best_k:
                best_k = s
            if buf_r[v] > best_r:
                best_r = buf_r[v]
        else:
            buf_s[v] = 0
            buf_r[v] = 0
    return best_k, kb, best_r, rb, work, cens


@nb.njit(cache=True, nogil=True)
def cluster_batch(keys, r, size, first_boundary, p, cap_nodes, buf, out_full, out_bnd, out_work, out_cens):
    for i in range(keys.shape[0]):
        f, bnd, w, c = _tree_rep_cluster(keys[i], r, size, first_boundary, p, cap_nodes, buf)
        out_full[i] = f
        out_bnd[i] = bnd
        out_work[i] = w
        out_cens[i] = c


@nb.njit(cache=True, nogil=True)
def run_batch(keys, r, size, first_boundary, p, cap_nodes, cap_height, buf, out_full, out_bnd, out_work, out_cens):
    for i in range(keys.shape[0]):
        f, bnd, w, c = _tree_rep_run(keys[i], r, size, first_boundary, p, cap_nodes, cap_height, buf)
        out_full[i] = f
        out_bnd[i] = bnd
        out_work[i] = w
        out_cens[i] = c


@nb.njit(cache=True, nogil=True)
def joint_batch(keys, r, size, first_boundary, p, cap_nodes, cap_height, buf_s, buf_r, out_k, out_kb, out_r, out_rb, out_work, out_cens):
    for i in range(keys.shape[0]):
        k, kb, rr, rb, w, c = _tree_rep_joint(
            keys[i], r, size, first_boundary, p, cap_nodes, cap_height, buf_s, buf_r
        )
        out_k[i] = k
        out_kb[i] = kb
        out_r[i] = rr
        out_rb[i] = rb
        out_work[i] = w
        out_cens[i] = c


@nb.njit(cache=True, nogil=True)
def gw_cluster_batch(keys, r, p, cap_nodes, out_val, out_cens):
    # Single-vertex cluster size: counter 0 is the root's own draw, the
    # walk consumes counters from 1.
    for i in range(keys.shape[0]):
        key = keys[i]
        if _unif(key, np.uint64(0)) < p:
            tot, _h, _ctr, hit = _walk(key, ONE, r, p, cap_nodes, UNBOUNDED)
            out_val[i] = 1 + tot
            out_cens[i] = hit
        else:
            out_val[i] = 0
            out_cens[i] = False


@nb.njit(cache=True, nogil=True)
def gw_run_batch(keys, r, p, cap_nodes, cap_height, out_val, out_cens):
    for i in range(keys.shape[0]):
        key = keys[i]
        if _unif(key, np.uint64(0)) < p:
            _tot, h, _ctr, hit = _walk(key, ONE, r, p, cap_nodes, cap_height)
            out_val[i] = 1 + h
            out_cens[i] = hit
        else:
            out_val[i] = 0
            out_cens[i] = False
