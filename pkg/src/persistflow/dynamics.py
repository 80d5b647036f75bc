"""The consensus iteration x(t+1) = A(t) x(t) and the sorted-state machinery."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from persistflow.errors import InvariantViolation, ValidationError
from persistflow.matrix_core import SLACK, InequalityReport, as_subset, check_stochastic
from persistflow.schedule import WeightSchedule

STATE_CAP = 10**6
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class SortedRecords:
    sigma: np.ndarray  # (T+1, n) permutations, 0-based
    z: np.ndarray  # (T+1, n) sorted states
    C: np.ndarray  # (T, n, n), C(t)_ij = A(t)[sigma_{t+1}(i), sigma_t(j)]
    C_prime: np.ndarray  # (T, n, n), C'(t)_ij = A(t)[sigma_t(i), sigma_t(j)]


@dataclass(frozen=True)
class Trajectory:
    t0: int
    H: np.ndarray
    h: np.ndarray
    Psi: np.ndarray
    states: np.ndarray | None = None
    sorted_records: SortedRecords | None = None

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + len(self.Psi))

    @property
    def t_end(self) -> int:
        return self.t0 + len(self.Psi) - 1

    def psi(self, t: int) -> float:
        if not self.t0 <= t <= self.t_end:
            raise ValidationError(f"t={t} outside the simulated range [{self.t0}, {self.t_end}]")
        return float(self.Psi[t - self.t0])

    def x(self, t: int) -> np.ndarray:
        if self.states is None:
            raise ValidationError("full states were not retained (state cap exceeded)")
        return self.states[t - self.t0]

    def write_csv(self, path) -> None:
        """Columns t, x_1..x_n (when retained), H, h, Psi; 17 significant digits."""
        n = 0 if self.states is None else self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"x_{i + 1}" for i in range(n)] + ["H", "h", "Psi"])
            for k, t in enumerate(self.times):
                xs = [] if self.states is None else list(self.states[k])
                w.writerow([int(t)] + [_fmt(v) for v in [*xs, self.H[k], self.h[k], self.Psi[k]]])

    def write_sorted_csv(self, path) -> None:
        """Companion file: t, sigma_1..sigma_n (1-based), z_1..z_n."""
        rec = self.sorted_records
        if rec is None:
            raise ValidationError("trajectory has no sorted-state records")
        n = rec.z.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"sigma_{i + 1}" for i in range(n)] + [f"z_{i + 1}" for i in range(n)])
            for k, t in enumerate(self.times):
                w.writerow([int(t)] + [int(v) + 1 for v in rec.sigma[k]] + [_fmt(v) for v in rec.z[k]])


def _fmt(v: float) -> str:
    return "%.17g" % v


def sort_permutation(x) -> np.ndarray:
    """sigma with x[sigma] nondecreasing; equal values keep index order."""
    return np.argsort(np.asarray(x, dtype=float), kind="stable")


def _check_perm(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=int)
    if p.shape != (n,) or sorted(p.tolist()) != list(range(n)):
        raise ValidationError(f"{p.tolist()} is not a permutation of 0..{n - 1}")
    return p


def reindex_C(b: np.ndarray, sigma_next, sigma_now) -> np.ndarray:
    """``C_ij = B[sigma_next(i), sigma_now(j)]``, so that z(t+1) = C z(t)."""
    n = b.shape[0]
    return b[np.ix_(_check_perm(sigma_next, n), _check_perm(sigma_now, n))]


def reindex_C_prime(b: np.ndarray, sigma) -> np.ndarray:
    """``C'_ij = B[sigma(i), sigma(j)]``. Does not propagate sorted states in discrete time."""
    return reindex_C(b, sigma, sigma)


def simulate(
    s: WeightSchedule,
    x0,
    steps: int,
    record_sorted: bool = False,
    state_cap: int = STATE_CAP,
) -> Trajectory:
    """Run ``steps`` iterations from x(t0) = x0.

    Raises :class:`InvariantViolation` if the max grows, the min shrinks, or
    (with ``record_sorted``) the sorted vector fails z(t+1) = C(t) z(t).
    """
    x = np.array(x0, dtype=float)
    if x.shape != (s.n,):
        raise ValidationError(f"initial state has shape {x.shape}, expected ({s.n},)")
    if steps < 0:
        raise ValidationError("steps must be nonnegative")
    keep = (steps + 1) * s.n <= state_cap
    states = np.empty((steps + 1, s.n)) if keep else None
    H = np.empty(steps + 1)
    h = np.empty(steps + 1)
    tol = EXACT_TOL * max(1.0, float(np.max(np.abs(x))))
    if record_sorted:
        sig = np.empty((steps + 1, s.n), dtype=int)
        z = np.empty((steps + 1, s.n))
        C = np.empty((steps, s.n, s.n))
        Cp = np.empty((steps, s.n, s.n))
    a = None  # A(t0 + k - 1) inside the loop
    for k in range(steps + 1):
        H[k], h[k] = x.max(), x.min()
        if keep:
            states[k] = x
        if record_sorted:
            sig[k] = sort_permutation(x)
            z[k] = x[sig[k]]
        if k > 0:
            if H[k] > H[k - 1] + tol or h[k] < h[k - 1] - tol:
                raise InvariantViolation(f"disagreement grew at t={s.t0 + k}: H {H[k - 1]}->{H[k]}, h {h[k - 1]}->{h[k]}")
            if record_sorted:
                C[k - 1] = reindex_C(a, sig[k], sig[k - 1])
                Cp[k - 1] = reindex_C_prime(a, sig[k - 1])
                if np.max(np.abs(C[k - 1] @ z[k - 1] - z[k])) > tol:
                    raise InvariantViolation(f"sorted-state recursion failed at t={s.t0 + k - 1}")
        if k == steps:
            break
        a = s.matrix_at(s.t0 + k)
        x = a @ x
    records = SortedRecords(sig, z, C, Cp) if record_sorted else None
    for arr in (H, h):
        arr.setflags(write=False)
    return Trajectory(t0=s.t0, H=H, h=h, Psi=H - h, states=states, sorted_records=records)


def check_lemma8(
    b: np.ndarray,
    sigma_next,
    sigma_now,
    M: float,
    s1: Iterable[int],
    s2: Iterable[int],
) -> InequalityReport:
    """Balanced asymmetry of the reindexed matrix C for the pair (S1, S2)."""
    n = b.shape[0]
    s1, s2 = as_subset(s1, n), as_subset(s2, n)
    if len(s1) != len(s2):
        raise ValidationError("S1 and S2 must have the same cardinality")
    c = reindex_C(b, sigma_next, sigma_now)
    in1 = np.zeros(n, bool)
    in1[list(s1)] = True
    in2 = np.zeros(n, bool)
    in2[list(s2)] = True
    lhs = float(c[np.ix_(~in1, in2)].sum())
    rhs = M * float(c[np.ix_(in1, ~in2)].sum())
    return InequalityReport(lhs, rhs, lhs <= rhs + SLACK)


def check_lemma9(b: np.ndarray, sigma, mu, z, M: float, l: int) -> InequalityReport:
    """Chained inequality for a sorted vector z and the first ``l`` positions.

    With ``c_ij = B[mu(i), sigma(j)]`` and positions counted from 1::

        sum_{i<=l} M^-i sum_j c_ij (z_j - z_i)
            >= (z_{l+1} - z_l) M^-l sum_{i>l} sum_{j<=l} c_ji >= 0
    """
    check_stochastic(b, tol=1e-9)
    n = b.shape[0]
    z = np.asarray(z, dtype=float)
    if z.shape != (n,):
        raise ValidationError(f"z has shape {z.shape}, expected ({n},)")
    if np.any(np.diff(z) < 0):
        raise ValidationError("z must be sorted nondecreasing")
    if not 1 <= l <= n - 1:
        raise ValidationError(f"l must lie in 1..{n - 1}, got {l}")
    if M < 1:
        raise ValidationError("M must be at least 1")
    c = b[np.ix_(_check_perm(mu, n), _check_perm(sigma, n))]
    lhs = sum(M ** -(i + 1) * float(c[i] @ (z - z[i])) for i in range(l))
    mid = (z[l] - z[l - 1]) * M**-l * float(c[:l, l:].sum())
    tol = SLACK * max(1.0, float(np.max(np.abs(z))))
    return InequalityReport(lhs, 0.0, lhs >= mid - tol and mid >= -tol, mid=mid)
