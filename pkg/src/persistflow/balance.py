"""Windowed arc-/cut-balance, balanced asymmetry, and subset-sequence flows.

Every ``*_Kmin``/``*_Mmin`` function returns the smallest constant for
which the corresponding inequality holds over what was examined, with a
witness that attains it. Ratios use the convention 0/0 -> 1 and x/0 -> inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from persistflow.errors import GuardError, ValidationError
from persistflow.matrix_core import SLACK, as_subset, subset_indicators
from persistflow.schedule import Arc, WeightSchedule

CUT_GUARD = 20
ASYM_GUARD = 12
DP_GUARD = 16


def ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return math.inf if lhs > 0 else 1.0


def _ratios(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    out = np.ones_like(lhs, dtype=float)
    pos = rhs > 0
    np.divide(lhs, rhs, out=out, where=pos)
    out[~pos & (lhs > 0)] = math.inf
    return out


def _one_based(s: Iterable[int]) -> list[int]:
    return [int(i) + 1 for i in s]


@dataclass
class BalanceReport:
    condition: str
    L: int | None
    K_min: float
    horizon: tuple[int, int] | None
    witness: dict
    satisfied_at: list[dict] = field(default_factory=list)
    source: str | None = None

    def check(self, L: int, K: float) -> bool:
        """Record and return whether constant ``K`` suffices at this report's window length."""
        ok = self.K_min <= K + SLACK and (self.L is None or L == self.L)
        self.satisfied_at.append({"L": L, "K": K, "pass": bool(ok)})
        return ok

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "L": self.L,
            "K_min": None if math.isinf(self.K_min) else self.K_min,
            "K_min_infinite": math.isinf(self.K_min),
            "horizon": None if self.horizon is None else list(self.horizon),
            "witness": self.witness,
            "satisfied_at": list(self.satisfied_at),
            "source": self.source,
        }


def _check_window(L: int, horizon: tuple[int, int]) -> tuple[int, int]:
    if int(L) != L or L < 1:
        raise ValidationError(f"window length must be a positive integer, got {L}")
    ta, tb = horizon
    if tb - ta + 1 < L:
        raise ValidationError(f"horizon [{ta}, {tb}] is shorter than one window of length {L}")
    return ta, tb


def window_sums(s: WeightSchedule, L: int, horizon: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Sliding L-window sums of A(t), one per start in ``[ta, tb - L + 1]``."""
    ta, tb = _check_window(L, horizon)
    mats = s.matrices(ta, tb)
    sums = sliding_window_view(mats, L, axis=0).sum(axis=-1)
    return np.arange(ta, tb - L + 2), sums


def arc_balance_Kmin(
    s: WeightSchedule,
    Ep: Iterable[Arc],
    L: int,
    horizon: tuple[int, int],
    source: str = "caller",
) -> BalanceReport:
    """Largest ratio of two persistent arcs' window masses over all sliding windows."""
    Ep = sorted(set(Ep))
    if not Ep:
        raise ValidationError("arc balance needs a nonempty persistent arc set")
    starts, sums = window_sums(s, L, horizon)
    cols = np.array([j for j, _ in Ep])
    rows = np.array([i for _, i in Ep])
    masses = sums[:, rows, cols]  # (windows, arcs)
    hi = masses.argmax(axis=1)
    lo = masses.argmin(axis=1)
    w_idx = np.arange(len(starts))
    r = _ratios(masses[w_idx, hi], masses[w_idx, lo])
    w = int(np.argmax(r))
    big, small = Ep[hi[w]], Ep[lo[w]]
    return BalanceReport(
        condition="arc-balance",
        L=L,
        K_min=float(r[w]),
        horizon=tuple(horizon),
        witness={
            "window_start": int(starts[w]),
            "heavier_arc": _one_based(big),
            "lighter_arc": _one_based(small),
            "heavier_mass": float(masses[w, hi[w]]),
            "lighter_mass": float(masses[w, lo[w]]),
        },
        source=source,
    )


def cut_flows(w: np.ndarray, ind: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For stacked matrices ``w`` and subset indicators, return
    ``sum_{i not in S, j in S} w_ij`` and ``sum_{i in S, j not in S} w_ij``."""
    out = 1.0 - ind
    into_outside = np.einsum("mi,...ij,mj->...m", out, w, ind)
    into_inside = np.einsum("mi,...ij,mj->...m", ind, w, out)
    return into_outside, into_inside


def cut_balance_Kmin(s: WeightSchedule, L: int, horizon: tuple[int, int], chunk: int = 256) -> BalanceReport:
    """Smallest K with ``sum_{i not in S, j in S} <= K sum_{i in S, j not in S}``
    on every sliding L-window and every nonempty proper S."""
    if s.n > CUT_GUARD:
        raise GuardError(f"cut enumeration guard: N={s.n} exceeds {CUT_GUARD}")
    starts, sums = window_sums(s, L, horizon)
    subsets, ind = subset_indicators(s.n)
    best, where = -1.0, (0, 0, 0.0, 0.0)
    for c0 in range(0, len(starts), chunk):
        lhs, rhs = cut_flows(sums[c0:c0 + chunk], ind)
        r = _ratios(lhs, rhs)
        w, k = np.unravel_index(int(np.argmax(r)), r.shape)
        if r[w, k] > best:
            best = float(r[w, k])
            where = (c0 + int(w), int(k), float(lhs[w, k]), float(rhs[w, k]))
    w, k, lhs, rhs = where
    return BalanceReport(
        condition="cut-balance",
        L=L,
        K_min=best,
        horizon=tuple(horizon),
        witness={
            "window_start": int(starts[w]),
            "subset": _one_based(subsets[k]),
            "flow_out_of_S": lhs,
            "flow_into_S": rhs,
        },
    )


def balanced_asymmetry_ratio(a: np.ndarray, s1: Iterable[int], s2: Iterable[int]) -> float:
    """``sum_{i not in S1, j in S2} a_ij / sum_{i in S1, j not in S2} a_ij``."""
    n = a.shape[0]
    s1, s2 = as_subset(s1, n), as_subset(s2, n)
    if len(s1) != len(s2):
        raise ValidationError("balanced asymmetry compares subsets of equal cardinality")
    in1 = np.zeros(n, bool)
    in1[list(s1)] = True
    in2 = np.zeros(n, bool)
    in2[list(s2)] = True
    lhs = float(a[np.ix_(~in1, in2)].sum())
    rhs = float(a[np.ix_(in1, ~in2)].sum())
    return ratio(lhs, rhs)


def balanced_asymmetry_Mmin(a: np.ndarray) -> BalanceReport:
    """Max of :func:`balanced_asymmetry_ratio` over all equal-cardinality pairs."""
    n = a.shape[0]
    if n > ASYM_GUARD:
        raise GuardError(f"subset-pair enumeration guard: N={n} exceeds {ASYM_GUARD}")
    best, where = -1.0, None
    for c in range(1, n):
        subsets, ind = subset_indicators(n, c)
        lhs = (1.0 - ind) @ a @ ind.T  # [S1, S2]
        rhs = ind @ a @ (1.0 - ind).T
        r = _ratios(lhs, rhs)
        p, q = np.unravel_index(int(np.argmax(r)), r.shape)
        if r[p, q] > best:
            best = float(r[p, q])
            where = (subsets[p], subsets[q], float(lhs[p, q]), float(rhs[p, q]))
    s1, s2, lhs, rhs = where
    return BalanceReport(
        condition="balanced-asymmetry",
        L=None,
        K_min=best,
        horizon=None,
        witness={"S1": _one_based(s1), "S2": _one_based(s2), "lhs": lhs, "rhs": rhs},
    )


class FlowDP:
    """Min over equal-cardinality subset sequences of accumulated cross-flow.

    After steps with weights ``w_0, ..., w_{k-1}`` :meth:`value` is
    ``min sum_t cost_t(S(t), S(t+1))`` over sequences ``S(0..k)`` of one
    cardinality, further minimised over ``sizes``. One-sided cost is
    ``sum_{i not in S(t+1), j in S(t)} w_ij``; two-sided adds
    ``sum_{i in S(t+1), j not in S(t)} w_ij``.
    """

    def __init__(self, n: int, sizes: Sequence[int], two_sided: bool = False, track_path: bool = False):
        if n > DP_GUARD:
            raise GuardError(f"subset-state DP guard: N={n} exceeds {DP_GUARD}")
        sizes = list(sizes)
        if not sizes or any(not 0 < c < n for c in sizes):
            raise ValidationError(f"cardinalities must lie in 1..{n - 1}, got {sizes}")
        self.n = n
        self.two_sided = two_sided
        self.track_path = track_path
        self.sizes = sizes
        self.subsets = {}
        self.ind = {}
        self.values = {}
        self.back = {c: [] for c in sizes}
        for c in sizes:
            self.subsets[c], self.ind[c] = subset_indicators(n, c)
            self.values[c] = np.zeros(len(self.subsets[c]))
        self.steps = 0

    def cost(self, c: int, w: np.ndarray) -> np.ndarray:
        """cost[S, S'] for the transition S -> S' under weights ``w``."""
        p = self.ind[c]
        x = (1.0 - p) @ w @ p.T  # [S', S]
        if self.two_sided:
            x = x + p @ w @ (1.0 - p).T
        return x.T

    def step(self, w: np.ndarray) -> float:
        for c in self.sizes:
            total = self.values[c][:, None] + self.cost(c, w)
            arg = np.argmin(total, axis=0)
            self.values[c] = total[arg, np.arange(total.shape[1])]
            if self.track_path:
                self.back[c].append(arg)
        self.steps += 1
        return self.value()

    def value(self) -> float:
        return min(float(self.values[c].min()) for c in self.sizes)

    def best_path(self) -> tuple[int, list[tuple[int, ...]]]:
        """Cardinality and minimising subset sequence S(0..steps)."""
        if not self.track_path:
            raise ValidationError("path tracking was not enabled")
        c = min(self.sizes, key=lambda c: (float(self.values[c].min()), c))
        k = int(np.argmin(self.values[c]))
        path = [k]
        for arg in reversed(self.back[c]):
            k = int(arg[k])
            path.append(k)
        return c, [self.subsets[c][k] for k in reversed(path)]


@dataclass
class FlowResult:
    cardinality: int
    min_flow: float
    sequence: list[tuple[int, ...]]
    horizon: tuple[int, int]

    def as_dict(self) -> dict:
        return {
            "cardinality": self.cardinality,
            "min_flow": self.min_flow,
            "horizon": list(self.horizon),
            "sequence": [_one_based(s) for s in self.sequence],
        }


def aif_partial(s: WeightSchedule, horizon: tuple[int, int], c: int | None = None) -> FlowResult:
    """Minimal two-sided flow ``sum_{t=ta}^{tb}`` over sequences S(ta..tb+1).

    With ``c=None`` the minimum is also taken over cardinalities
    ``1..floor(N/2)``; larger cardinalities mirror smaller ones through
    complements, which leave the two-sided flow unchanged.
    """
    ta, tb = horizon
    if tb < ta:
        raise ValidationError(f"empty horizon [{ta}, {tb}]")
    sizes = list(range(1, s.n // 2 + 1)) if c is None else [c]
    dp = FlowDP(s.n, sizes, two_sided=True, track_path=True)
    for t in range(ta, tb + 1):
        dp.step(s.matrix_at(t))
    card, seq = dp.best_path()
    return FlowResult(card, dp.value(), seq, (ta, tb))
