"""Pure-Python twins of the compiled kernels.

Every function here mirrors its counterpart in _kernels.py expression for
expression, in the same evaluation order, so results agree bit for bit.
The twins exist to test the kernels against an implementation with no
compiler in the loop, and to serve small Python-level sampling needs where
spinning up compiled batches is not worth it.
"""

from __future__ import annotations

import math

from .rng import uniform_at

STIRLING_TAIL_TABLE = [
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

UNBOUNDED = 1 << 62


def _stirling_tail(k: float) -> float:
    if k <= 9.0:
        return STIRLING_TAIL_TABLE[int(k)]
    kp = k + 1.0
    kp2 = kp * kp
    return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / 1260.0 / kp2) / kp2) / kp


def _binom_inv(key: int, ctr: int, n: int, ps: float):
    u = uniform_at(key, ctr)
    ctr = ctr + 1
    q = 1.0 - ps
    f = math.exp(n * math.log(q))
    k = 0
    while u > f and k < n:
        u = u - f
        f = f * (((n - k) * ps) / ((k + 1.0) * q))
        k = k + 1
    return k, ctr


def _binom_btrs(key: int, ctr: int, n: int, ps: float):
    spq = math.sqrt(n * ps * (1.0 - ps))
    b = 1.15 + 2.53 * spq
    a = -0.0873 + 0.0248 * b + 0.01 * ps
    c = n * ps + 0.5
    vr = 0.92 - 4.2 / b
    alpha = (2.83 + 5.1 / b) * spq
    rr = ps / (1.0 - ps)
    m = math.floor((n + 1.0) * ps)
    while True:
        u = uniform_at(key, ctr) - 0.5
        ctr = ctr + 1
        v = uniform_at(key, ctr)
        ctr = ctr + 1
        us = 0.5 - abs(u)
        kf = math.floor((2.0 * a / us + b) * u + c)
        if kf < 0.0 or kf > n:
            continue
        if us >= 0.07 and v <= vr:
            return int(kf), ctr
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
            return int(kf), ctr


def binom_at(key: int, ctr: int, n: int, p: float):
    """Binomial draw consuming counters from ctr; returns (k, next ctr)."""
    if n <= 0 or p <= 0.0:
        return 0, ctr
    if p >= 1.0:
        return n, ctr
    flip = p > 0.5
    ps = 1.0 - p if flip else p
    if n * ps <= 30.0 or n <= 64:
        k, ctr = _binom_inv(key, ctr, n, ps)
    else:
        k, ctr = _binom_btrs(key, ctr, n, ps)
    if flip:
        k = n - k
    return k, ctr


def walk(key: int, ctr: int, r: int, p: float, cap_nodes: int, cap_height: int):
    f, ctr = binom_at(key, ctr, r, p)
    total = f
    h = 0
    cens = False
    while f > 0:
        h = h + 1
        if total > cap_nodes or h >= cap_height:
            cens = True
            break
        f, ctr = binom_at(key, ctr, f * r, p)
        total = total + f
    return total, h, ctr, cens


def tree_rep_cluster(key: int, r: int, size: int, first_boundary: int, p: float, cap_nodes: int, buf: list):
    ctr = size
    cens = False
    work = size
    kb = 0
    for b in range(first_boundary, size):
        if uniform_at(key, b) < p:
            tot, _h, ctr, hit = walk(key, ctr, r, p, cap_nodes, UNBOUNDED)
            cens = cens or hit
            buf[b] = 1 + tot
            work = work + tot
            if buf[b] > kb:
                kb = buf[b]
        else:
            buf[b] = 0
    best = kb
    for v in range(first_boundary - 1, -1, -1):
        if uniform_at(key, v) < p:
            s = 1
            cb = v * r
            for j in range(1, r + 1):
                s = s + buf[cb + j]
            buf[v] = s
            if s > best:
                best = s
        else:
            buf[v] = 0
    return best, kb, work, cens


def tree_rep_run(key: int, r: int, size: int, first_boundary: int, p: float, cap_nodes: int, cap_height: int, buf: list):
    ctr = size
    cens = False
    work = size
    rb = 0
    for b in range(first_boundary, size):
        if uniform_at(key, b) < p:
            tot, h, ctr, hit = walk(key, ctr, r, p, cap_nodes, cap_height)
            cens = cens or hit
            buf[b] = 1 + h
            work = work + tot
            if buf[b] > rb:
                rb = buf[b]
        else:
            buf[b] = 0
    best = rb
    for v in range(first_boundary - 1, -1, -1):
        if uniform_at(key, v) < p:
            mx = 0
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


def tree_rep_joint(key: int, r: int, size: int, first_boundary: int, p: float, cap_nodes: int, cap_height: int, buf_s: list, buf_r: list):
    ctr = size
    cens = False
    work = size
    kb = 0
    rb = 0
    for b in range(first_boundary, size):
        if uniform_at(key, b) < p:
            tot, h, ctr, hit = walk(key, ctr, r, p, cap_nodes, cap_height)
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
        if uniform_at(key, v) < p:
            s = 1
            mx = 0
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


def gw_cluster(key: int, r: int, p: float, cap_nodes: int):
    if uniform_at(key, 0) < p:
        tot, _h, _ctr, hit = walk(key, 1, r, p, cap_nodes, UNBOUNDED)
        return 1 + tot, hit
    return 0, False


def gw_run(key: int, r: int, p: float, cap_nodes: int, cap_height: int):
    if uniform_at(key, 0) < p:
        _tot, h, _ctr, hit = walk(key, 1, r, p, cap_nodes, cap_height)
        return 1 + h, hit
    return 0, False
