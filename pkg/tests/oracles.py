"""Slow, direct reference implementations used only by the tests."""

import itertools
from fractions import Fraction

import numpy as np


def subsets(n, size=None):
    sizes = range(1, n) if size is None else [size]
    return [c for k in sizes for c in itertools.combinations(range(n), k)]


def cross(a, into, frm):
    return sum(a[i][j] for i in into for j in frm)


def out_of(n, s):
    return [v for v in range(n) if v not in s]


def ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs
    return float("inf") if lhs > 0 else 1.0


def cut_kmin(mats, L):
    """max over windows w and subsets S of flow(out of S) / flow(into S)."""
    n = len(mats[0])
    best = -1.0
    for w in range(len(mats) - L + 1):
        win = sum(np.asarray(m, dtype=float) for m in mats[w:w + L])
        for s in subsets(n):
            o = out_of(n, s)
            best = max(best, ratio(cross(win, o, s), cross(win, s, o)))
    return best


def aif_min(mats, two_sided=True, sizes=None):
    """Exhaustive min over subset sequences S(0..T) of the accumulated flow.

    Every sequence is materialised: the totals array has one entry per
    sequence, built by broadcasting per-step cost tables computed with loops.
    """
    n = len(mats[0])
    sizes = range(1, n // 2 + 1) if sizes is None else sizes
    best = float("inf")
    for c in sizes:
        subs = subsets(n, c)
        k = len(subs)
        total = np.zeros((k,) * (len(mats) + 1))
        for t, a in enumerate(mats):
            cost = np.zeros((k, k))
            for p, s_now in enumerate(subs):
                for q, s_next in enumerate(subs):
                    v = cross(a, out_of(n, s_next), s_now)
                    if two_sided:
                        v += cross(a, s_next, out_of(n, s_now))
                    cost[p, q] = v
            shape = [1] * (len(mats) + 1)
            shape[t], shape[t + 1] = k, k
            total = total + cost.reshape(shape)
        best = min(best, float(total.min()))
    return best


def asym_mmin(a):
    n = len(a)
    best = -1.0
    for c in range(1, n):
        for s1 in subsets(n, c):
            for s2 in subsets(n, c):
                best = max(best, ratio(cross(a, out_of(n, s1), s2), cross(a, s1, out_of(n, s2))))
    return best


def dyadic_stochastic(rng, n, denom=16):
    """Random stochastic matrix with entries k/denom, so float sums are exact."""
    a = np.zeros((n, n))
    for i in range(n):
        cuts = np.sort(rng.integers(0, denom + 1, size=n - 1))
        parts = np.diff(np.concatenate([[0], cuts, [denom]]))
        a[i] = rng.permutation(parts) / denom
    return a


def matmul_fraction(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def psi_exact_sec5(steps):
    """Exact rational Psi for the three-agent example from x(1) = [1, 1, 0]."""
    from persistflow.schedule import sec5_entries

    x = [Fraction(1), Fraction(1), Fraction(0)]
    out = [max(x) - min(x)]
    for t in range(1, steps + 1):
        a = sec5_entries(t)
        x = [sum(a[i][j] * x[j] for j in range(3)) for i in range(3)]
        out.append(max(x) - min(x))
    return out
