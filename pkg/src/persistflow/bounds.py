"""Explicit contraction-rate certificates and the inequalities behind them.

Two certificates are evaluated here. The arc-balance certificate contracts
the disagreement by ``1 - Q^(2 d0) R^(d0) / 2`` every ``d0`` stages, where a
stage ends once one node has gathered ``delta`` units of persistent
in-weight. The cut-balance certificate works on the L-step lifted system and
contracts by ``1 - K*^(-floor(N/2)) / (8 N^2)^floor(N/2)`` every
``floor(N/2)`` sub-stages, a sub-stage ending once every equal-cardinality
subset sequence has carried unit (weighted) flow.

All constants are conservative by many orders of magnitude, so the final
guarantee time is usually far beyond anything that can be simulated. When a
forward scan cannot reach it, a rigorous lower bound on that time is
reported instead and the check against a trajectory falls back on the fact
that the disagreement never increases.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from persistflow.balance import FlowDP, arc_balance_Kmin, cut_balance_Kmin
from persistflow.dynamics import EXACT_TOL, Trajectory
from persistflow.errors import HorizonError, MissingEtaError, ValidationError
from persistflow.graph_analysis import diameter, has_spanning_tree, t_eps
from persistflow.matrix_core import SLACK, InequalityReport
from persistflow.schedule import Arc, LiftedSchedule, WeightSchedule

SCAN_LIMIT = 200_000


def _eta_of(s: WeightSchedule) -> float:
    if s.eta is None:
        raise MissingEtaError("this schedule declares no diagonal lower bound eta")
    if not 0 < s.eta < 1:
        raise ValidationError(f"eta must lie in (0, 1), got {s.eta}")
    return float(s.eta)


def _log_ratio(eta: float) -> float:
    # ln(eta) / (eta - 1) > 0
    return math.log(eta) / (eta - 1.0)


def lemma1_bound(eta: float, zeta: float) -> float:
    """Lower bound ``exp(-zeta ln(eta) / (eta - 1))`` on a product of numbers in [eta, 1]
    whose total shortfall from 1 is at most ``zeta``."""
    if not 0 < eta < 1:
        raise ValidationError(f"eta must lie in (0, 1), got {eta}")
    if zeta < 0:
        raise ValidationError("zeta must be nonnegative")
    return math.exp(-zeta * _log_ratio(eta))


def check_lemma1(b: Sequence[float], eta: float, zeta: float) -> InequalityReport:
    b = np.asarray(b, dtype=float)
    if np.any(b < eta) or np.any(b > 1):
        raise ValidationError("sequence entries must lie in [eta, 1]")
    if float(np.sum(1.0 - b)) > zeta + SLACK:
        raise ValidationError("sequence shortfall exceeds zeta")
    prod = float(np.prod(b))
    bound = lemma1_bound(eta, zeta)
    return InequalityReport(prod, bound, prod >= bound - SLACK)


def check_lemma2(traj: Trajectory, s: WeightSchedule, i: int, start: int, mu: float, T: int) -> InequalityReport:
    """Upper bound on x_i(start + tau), tau <= T, from a head start
    ``x_i(start) <= mu h(start) + (1 - mu) H(start)``.

    ``lhs`` is the largest observed x_i over the window, ``rhs`` the bound.
    """
    if not 0 <= mu < 1:
        raise ValidationError("mu must lie in [0, 1)")
    if start + T > traj.t_end:
        raise ValidationError("trajectory too short for this window")
    H0, h0 = traj.H[start - traj.t0], traj.h[start - traj.t0]
    tol = EXACT_TOL * max(1.0, abs(H0), abs(h0))
    if traj.x(start)[i] > mu * h0 + (1 - mu) * H0 + tol:
        raise ValidationError("precondition x_i(s) <= mu h(s) + (1 - mu) H(s) fails")
    prod = math.prod(float(s.matrix_at(start + k)[i, i]) for k in range(T))
    bound = mu * prod * h0 + (1 - mu * prod) * H0
    worst = max(float(traj.x(start + tau)[i]) for tau in range(T + 1))
    return InequalityReport(worst, bound, worst <= bound + tol)


def incoming_persistent_mass(a: np.ndarray, Ep: Iterable[Arc], i: int) -> float:
    """``sum_{j != i, (j, i) in Ep} a_ij``."""
    return float(sum(a[i, j] for j, k in Ep if k == i and j != i))


@dataclass
class StageTimes:
    """Stage boundaries (offsets from ``T0``) and the mass gathered in each stage."""

    T0: int
    times: list[int]
    masses: list[float]
    before: list[float]  # mass one step before each boundary (minimality witness)


def t_sequence(
    s: WeightSchedule,
    i1: int,
    Ep: Iterable[Arc],
    delta: float,
    T0: int,
    count: int,
    limit: int = SCAN_LIMIT,
) -> StageTimes:
    """Times ``t_1 < t_2 < ...``: stage r ends at the first t with
    ``sum_{k=t_{r-1}}^{t-1} A_{i1}(T0 + k) >= delta``, starting from t_0 = 0."""
    Ep = [arc for arc in Ep if arc[1] == i1 and arc[0] != i1]
    if not Ep:
        raise ValidationError(f"node {i1 + 1} has no incoming persistent arc")
    if delta <= 0:
        raise ValidationError("delta must be positive")
    times, masses, before = [], [], []
    k, acc, prev = 0, 0.0, 0.0
    while len(times) < count:
        if k >= limit or (s.horizon is not None and T0 + k > s.horizon):
            raise HorizonError(
                f"stage {len(times) + 1} unfinished after {k} steps from T0={T0}: "
                f"accumulated {acc:.6g} of delta={delta}"
            )
        prev = acc
        acc += incoming_persistent_mass(s.matrix_at(T0 + k), Ep, i1)
        k += 1
        if acc >= delta:
            times.append(k)
            masses.append(acc)
            before.append(prev)
            acc = 0.0
    return StageTimes(T0, times, masses, before)


def omega(eps_target: float, contraction: float, log_contraction: float | None = None) -> float | None:
    """Stages needed so that ``(1 - contraction)^omega <= eps_target``.

    ``None`` when the contraction is vacuous (>= 1 or <= 0). Returns a float
    so astronomically large counts survive; it is an integer value or inf.
    """
    if eps_target <= 0:
        raise ValidationError("eps_target must be positive")
    if eps_target >= 1:
        return 0.0
    if not 0 < contraction < 1:
        if contraction == 0 and log_contraction is not None and math.isfinite(log_contraction):
            # underflowed: -log1p(-x) == x
            e = math.log(math.log(1 / eps_target)) - log_contraction
            return float(math.ceil(math.exp(e))) if e < 709 else math.inf
        return None
    per_stage = -math.log1p(-contraction)
    val = math.log(1.0 / eps_target) / per_stage
    return float(math.ceil(val)) if math.isfinite(val) else math.inf


@dataclass
class GuaranteeCheck:
    eps_target: float
    guarantee_time: float
    psi_t0: float
    evaluated_at: int
    psi_evaluated: float
    holds: bool
    via_monotonicity: bool

    def as_dict(self):
        return asdict(self)


def check_guarantee(traj: Trajectory, start: int, guarantee_time: float, eps_target: float) -> GuaranteeCheck:
    """Compare Psi(guarantee_time) with eps_target * Psi(start).

    When the guarantee time lies past the trajectory, the last simulated
    value stands in for it: the disagreement is nonincreasing (asserted at
    every simulated step), so Psi(guarantee_time) <= Psi(t_end).
    """
    psi0 = traj.psi(start)
    beyond = guarantee_time > traj.t_end
    at = traj.t_end if beyond else int(guarantee_time)
    val = traj.psi(at)
    tol = EXACT_TOL * max(1.0, abs(float(traj.H[0])), abs(float(traj.h[0])))
    return GuaranteeCheck(eps_target, guarantee_time, psi0, at, val, val <= eps_target * psi0 + tol, beyond)


@dataclass
class StageCheck:
    r: int
    time: int
    predicted: float
    observed: float
    ok: bool
    step_ok: bool


@dataclass
class StageReport:
    factor: float
    stages: list[StageCheck]
    trivial: bool = False

    @property
    def ok(self) -> bool:
        return all(st.ok and st.step_ok for st in self.stages)

    def as_dict(self):
        return {"factor": self.factor, "trivial": self.trivial, "ok": self.ok,
                "stages": [asdict(st) for st in self.stages]}

    def csv_rows(self):
        return [(st.r, st.predicted, st.observed) for st in self.stages]


def stagewise_contraction_check(traj: Trajectory, stage_times: Sequence[int], factor: float) -> StageReport:
    """Check ``Psi(stage_r) <= factor^r Psi(stage_0)`` and the per-stage step
    ``Psi(stage_r) <= factor Psi(stage_{r-1})``, with float-noise allowance."""
    if not 0 < factor <= 1:
        raise ValidationError(f"contraction factor must lie in (0, 1], got {factor}")
    stage_times = list(stage_times)
    if not stage_times:
        raise ValidationError("no stage times given")
    psi0 = traj.psi(stage_times[0])
    tol = EXACT_TOL * max(1.0, abs(float(traj.H[0])), abs(float(traj.h[0])))
    out = []
    prev = psi0
    for r, t in enumerate(stage_times):
        cur = traj.psi(t)
        pred = factor**r
        observed = cur / psi0 if psi0 > 0 else 0.0
        step_ok = r == 0 or cur <= factor * prev + tol
        out.append(StageCheck(r, int(t), pred, observed, cur <= pred * psi0 + tol, step_ok))
        prev = cur
    return StageReport(factor, out, trivial=psi0 == 0)


@dataclass
class Theorem1Bound:
    n: int
    eta: float
    K: float
    L: int
    eps_target: float
    eps_tail: float
    T_eps: int
    T_eps_horizon_limited: bool
    delta: float
    d0: int
    root: int
    i1: int
    S_const: float
    Q_const: float
    R_const: float
    log_Q: float
    contraction: float  # Q^(2 d0) R^(d0) / 2
    log_contraction: float
    omega1: float | None
    threshold: float | None
    t_star: int | None
    t_star_lower: float
    t_star_exact: bool
    stages: StageTimes | None
    arc_balance_K_min: float | None
    vacuous: bool
    notes: list[str] = field(default_factory=list)

    @property
    def factor(self) -> float:
        return 1.0 if self.vacuous else 1.0 - self.contraction

    @property
    def guarantee_time(self) -> float:
        return self.T_eps + (self.t_star if self.t_star_exact else self.t_star_lower)

    def stage_boundaries(self) -> list[int]:
        """Absolute times T_eps + t_{r d0}, r = 0, 1, ..."""
        if self.stages is None:
            return [self.T_eps]
        ts = self.stages.times
        return [self.T_eps] + [self.T_eps + ts[r * self.d0 - 1] for r in range(1, len(ts) // self.d0 + 1)]

    def as_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "stages"}
        d["root"] += 1
        d["i1"] += 1
        d["factor"] = self.factor
        d["guarantee_time"] = self.guarantee_time
        d["stages"] = None if self.stages is None else asdict(self.stages)
        return _finite(d)


def _finite(obj):
    """Replace inf/nan floats so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _ep_of(s: WeightSchedule, Ep) -> frozenset[Arc]:
    if Ep is None:
        Ep = s.persistent_arcs
    if Ep is None:
        raise ValidationError("persistent arc set unknown: pass Ep explicitly")
    return frozenset(Ep)


def theorem1_bound(
    s: WeightSchedule,
    K: float,
    L: int,
    eps_target: float,
    eps_tail: float | None = None,
    delta: float | None = None,
    Ep: Iterable[Arc] | None = None,
    check_windows: int = 50,
    n_rounds: int = 10,
    scan_limit: int = SCAN_LIMIT,
) -> Theorem1Bound:
    """Evaluate the arc-balance certificate on schedule ``s``.

    Arc balance is certified at (L, K) on the first ``check_windows`` sliding
    windows after t0. ``n_rounds`` rounds of ``d0`` stages are laid out
    after ``T_eps`` for stagewise checking.
    """
    eta = _eta_of(s)
    n = s.n
    if K < 1 or int(L) != L or L < 1:
        raise ValidationError("need K >= 1 and integer L >= 1")
    Ep = _ep_of(s, Ep)
    ok, _ = has_spanning_tree(Ep, n)
    if not ok:
        raise ValidationError("persistent graph has no directed spanning tree")
    notes = []
    min_delta = L * (n - 1) * (1 - eta)
    if delta is None:
        delta = 2.0 * min_delta
        notes.append("delta defaulted to 2 L (N-1) (1-eta)")
    if delta <= min_delta:
        raise ValidationError(f"delta={delta} must exceed L(N-1)(1-eta)={min_delta} (R would be <= 0)")

    hz_end = s.t0 + check_windows + L - 2
    if s.horizon is not None:
        hz_end = min(hz_end, s.horizon)
    kmin = None
    if hz_end - s.t0 + 1 >= L:
        rep = arc_balance_Kmin(s, Ep, L, (s.t0, hz_end), source="ground-truth" if s.persistent_arcs else "caller")
        kmin = rep.K_min
        if kmin > K + SLACK:
            raise ValidationError(f"arc balance fails at (L={L}, K={K}): observed K_min={kmin}")
    if eps_tail is None:
        floor = s.window_mass_floor
        if floor is None:
            if kmin is None:
                raise ValidationError("cannot default eps_tail: horizon shorter than one window")
            from persistflow.balance import window_sums

            _, sums = window_sums(s, L, (s.t0, hz_end))
            floor = float(min(sums[:, i, j].min() for j, i in Ep))
        eps_tail = 0.1 * floor
        notes.append("eps_tail defaulted to 0.1 x smallest persistent window mass")
    T_e, limited = t_eps(s, Ep, eps_tail)
    if limited:
        notes.append("T_eps computed from the available horizon only")

    dia = diameter(Ep, n)
    d0, root = dia.d0, dia.root
    i1 = min(i for j, i in Ep if j == root and i != root)

    c = _log_ratio(eta)
    log_S = -(1 - eta + delta + eps_tail * (n - 1)) * c
    log_Q = -(n - 1) * (K * (1 - eta + delta) + L * (1 - eta) + eps_tail) * c
    R = (delta / (n - 1) - L * (1 - eta)) / K
    S_const, Q_const = math.exp(log_S), math.exp(log_Q)
    if log_Q > log_S:
        raise ValidationError("internal: Q exceeds S")
    log_x = -math.log(2) + 2 * d0 * log_Q + d0 * math.log(R)
    x = math.exp(log_x) if log_x < 700 else math.inf
    vacuous = x >= 1
    om = None if vacuous else omega(eps_target, x, log_x)
    if vacuous:
        notes.append("bound vacuous for these constants: Q^(2 d0) R^d0 / 2 >= 1")

    stages = None
    try:
        stages = t_sequence(s, i1, Ep, delta, T_e, n_rounds * d0, limit=scan_limit)
    except HorizonError as exc:
        notes.append(f"stage layout truncated: {exc}")

    threshold = None if om is None else om * d0 * (delta + 1)
    t_star, t_lower, exact = None, math.inf, False
    if om == 0:
        t_star, t_lower, exact = 0, 0.0, True
    elif threshold is not None:
        # A_i1(t) <= 1 - eta per step, so the threshold cannot be met sooner
        t_lower = float(math.ceil(threshold / (1 - eta)))
        if t_lower <= scan_limit:
            acc, k = 0.0, 0
            Ep_in = [arc for arc in Ep if arc[1] == i1]
            while k < scan_limit and (s.horizon is None or T_e + k <= s.horizon):
                acc += incoming_persistent_mass(s.matrix_at(T_e + k), Ep_in, i1)
                k += 1
                if acc >= threshold:
                    t_star, t_lower, exact = k, float(k), True
                    break
            if not exact:
                t_lower = max(t_lower, float(k + 1))
        if not exact:
            notes.append("t* beyond scan range; guarantee time uses a rigorous lower bound")
    return Theorem1Bound(
        n=n, eta=eta, K=K, L=L, eps_target=eps_target, eps_tail=eps_tail,
        T_eps=T_e, T_eps_horizon_limited=limited, delta=delta, d0=d0, root=root, i1=i1,
        S_const=S_const, Q_const=Q_const, R_const=R, log_Q=log_Q,
        contraction=x, log_contraction=log_x, omega1=om, threshold=threshold,
        t_star=t_star, t_star_lower=t_lower, t_star_exact=exact, stages=stages,
        arc_balance_K_min=kmin, vacuous=vacuous, notes=notes,
    )


@dataclass
class NestedStages:
    """Nested stage times ``k_p^q`` (lifted-step indices) with DP witnesses.

    ``groups[p]`` is ``[k_p^0, ..., k_p^h]`` with h = floor(N/2) and
    ``k_{p+1}^0 = k_p^h``. ``values[p][q]`` is the minimal flow accumulated
    over sub-stage q (>= 1), ``before[p][q]`` the same one step earlier (< 1).
    """

    groups: list[list[int]]
    values: list[list[float]]
    before: list[list[float]]

    @property
    def outer(self) -> list[int]:
        """k_0, k_1, ... ."""
        return [g[0] for g in self.groups] + ([self.groups[-1][-1]] if self.groups else [])


def nested_stage_times(
    weights,
    n: int,
    n_outer: int,
    limit: int = SCAN_LIMIT,
    threshold: float = 1.0,
) -> NestedStages:
    """Lay out nested stages: each sub-stage ends once the minimal one-sided
    flow over equal-cardinality subset sequences reaches ``threshold``.

    ``weights(k)`` gives the (already scaled) flow matrix of step k.
    """
    h = n // 2
    sizes = range(1, n)
    groups, values, before = [], [], []
    k = 0
    for _ in range(n_outer):
        g, v, b = [k], [], []
        for _ in range(h):
            dp = FlowDP(n, sizes)
            prev = 0.0
            start = k
            while True:
                if k - start >= limit:
                    raise HorizonError(f"sub-stage starting at k={start} unfinished after {limit} steps (flow {prev:.6g})")
                val = dp.step(weights(k))
                k += 1
                if val >= threshold:
                    break
                prev = val
            g.append(k)
            v.append(val)
            b.append(prev)
        groups.append(g)
        values.append(v)
        before.append(b)
    return NestedStages(groups, values, before)


def window_weight_fn(s: WeightSchedule, L: int, scale: float = 1.0):
    """k -> scale * sum_{u<L} A(kL + u + t0)."""

    def w(k: int) -> np.ndarray:
        base = k * L + s.t0
        return scale * sum(s.matrix_at(base + u) for u in range(L))

    return w


def ba_factor(M: float, n: int) -> float:
    h = n // 2
    return 1.0 - M**-h / (8.0 * n * n) ** h


@dataclass
class Theorem2Bound:
    n: int
    eta: float
    K: float
    L: int
    t0: int
    eps_target: float
    W_const: float
    K_star: float
    contraction_factor: float
    omega2: float | None
    threshold: float
    k_star: int | None
    k_star_lower: float
    k_star_exact: bool
    k_sequence: NestedStages | None
    cut_balance_K_min: float | None
    notes: list[str] = field(default_factory=list)

    @property
    def guarantee_time(self) -> float:
        k = self.k_star if self.k_star_exact else self.k_star_lower
        return k * self.L + self.t0

    def stage_boundaries(self) -> list[int]:
        """Absolute times k_p L + t0."""
        if self.k_sequence is None:
            return [self.t0]
        return [k * self.L + self.t0 for k in self.k_sequence.outer]

    def as_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "k_sequence"}
        d["guarantee_time"] = self.guarantee_time
        d["k_sequence"] = None if self.k_sequence is None else asdict(self.k_sequence)
        return _finite(d)


def theorem2_bound(
    s: WeightSchedule,
    K: float,
    L: int,
    eps_target: float,
    Ep: Iterable[Arc] | None = None,
    check_windows: int = 50,
    n_outer: int = 5,
    scan_limit: int = SCAN_LIMIT,
) -> Theorem2Bound:
    """Evaluate the cut-balance certificate on schedule ``s``.

    Cut balance is certified at (L, K) on the first ``check_windows``
    sliding windows; ``n_outer`` outer stages k_1..k_{n_outer} are laid out.
    """
    eta = _eta_of(s)
    n = s.n
    if K < 1 or int(L) != L or L < 1:
        raise ValidationError("need K >= 1 and integer L >= 1")
    notes = []
    Ep = s.persistent_arcs if Ep is None else frozenset(Ep)
    if Ep is not None:
        if not has_spanning_tree(Ep, n)[0]:
            raise ValidationError("persistent graph has no directed spanning tree")
    else:
        notes.append("persistent graph not supplied; spanning-tree precondition unchecked")
    hz_end = s.t0 + check_windows + L - 2
    if s.horizon is not None:
        hz_end = min(hz_end, s.horizon)
    kmin = None
    if hz_end - s.t0 + 1 >= L:
        kmin = cut_balance_Kmin(s, L, (s.t0, hz_end)).K_min
        if kmin > K + SLACK:
            raise ValidationError(f"cut balance fails at (L={L}, K={K}): observed K_min={kmin}")

    h = n // 2
    W = eta**L / ((n - 1) * L)
    K_star = max((n - 1) * K / eta ** (L - 1), (n - 1) / eta**L)
    x = K_star**-h / (8.0 * n * n) ** h
    factor = 1.0 - x
    om = omega(eps_target, x)
    threshold = om * h * (eta**L + 1)
    weights = window_weight_fn(s, L, W)

    kseq = None
    try:
        kseq = nested_stage_times(weights, n, n_outer, limit=scan_limit)
    except HorizonError as exc:
        notes.append(f"stage layout truncated: {exc}")

    k_star, k_lower, exact = None, math.inf, False
    if om == 0:
        k_star, k_lower, exact = 0, 0.0, True
    else:
        # each lifted step adds at most W L (N-1) = eta^L of weighted flow
        k_lower = float(math.ceil(threshold / eta**L))
        if k_lower <= scan_limit:
            dp = FlowDP(n, range(1, n))
            k = 0
            while k < scan_limit and (s.horizon is None or (k + 1) * L + s.t0 - 1 <= s.horizon):
                val = dp.step(weights(k))
                k += 1
                if val >= threshold:
                    k_star, k_lower, exact = k, float(k), True
                    break
            if not exact:
                k_lower = max(k_lower, float(k + 1))
        if not exact:
            notes.append("k* beyond scan range; guarantee time uses a rigorous lower bound")
    return Theorem2Bound(
        n=n, eta=eta, K=K, L=L, t0=s.t0, eps_target=eps_target, W_const=W, K_star=K_star,
        contraction_factor=factor, omega2=om, threshold=threshold,
        k_star=k_star, k_star_lower=k_lower, k_star_exact=exact, k_sequence=kseq,
        cut_balance_K_min=kmin, notes=notes,
    )


@dataclass
class LiftedCertificate:
    """Per-matrix facts about the L-step lift of a windowed cut-balanced schedule."""

    gamma: float
    M_star: float
    M: float
    factor: float
    stages: NestedStages | None


def proposition2_stages(lifted: LiftedSchedule, K: float, n_outer: int = 5, limit: int = SCAN_LIMIT) -> LiftedCertificate:
    """Stage times t_p for the lifted system (unit one-sided flow of B per
    sub-stage) and the balanced-asymmetry contraction factor with
    ``M = max((N-1) K eta^(1-L), (N-1) / eta^L)``."""
    base = lifted.base
    eta = _eta_of(base)
    n, L = lifted.n, lifted.L
    gamma = eta**L
    M_star = (n - 1) * K * eta ** (-L + 1)
    M = max(M_star, (n - 1) / gamma)
    stages = nested_stage_times(lifted.matrix_at, n, n_outer, limit=limit)
    return LiftedCertificate(gamma, M_star, M, ba_factor(M, n), stages)


@dataclass
class CounterexampleReport:
    psi1: float
    psi2: float
    horizon: int
    worst_step_margin: float  # min over t >= 2 of Psi(t+1) - (1 - 1/t^2) Psi(t)
    steps_ok: bool
    partial_product: float
    partial_product_closed_form: float
    psi_end: float
    end_ok: bool
    limit_product: float = 0.5

    @property
    def ok(self) -> bool:
        return self.psi1 == 1.0 and self.psi2 == 1.0 and self.steps_ok and self.end_ok

    def as_dict(self):
        d = asdict(self)
        d["ok"] = self.ok
        return d


def counterexample_lower_bound(traj: Trajectory, tol: float = 1e-12) -> CounterexampleReport:
    """Lower-bound chain for the three-agent example started at x(1) = [1, 1, 0]:
    Psi(t+1) >= (1 - 1/t^2) Psi(t) for t >= 2, hence
    Psi(T) >= prod_{t=2}^{T-1} (1 - 1/t^2) = T / (2 (T - 1)) > 1/2."""
    if traj.t0 != 1 or traj.t_end < 3:
        raise ValidationError("expected a trajectory of the three-agent example starting at t=1")
    if traj.states is not None and not np.array_equal(traj.x(1), [1.0, 1.0, 0.0]):
        raise ValidationError("expected the initial state x(1) = [1, 1, 0]")
    t = np.arange(2, traj.t_end)
    psi = traj.Psi
    cur = psi[t - 1]
    nxt = psi[t]
    margin = nxt - (1.0 - 1.0 / t.astype(float) ** 2) * cur
    T = traj.t_end
    partial = math.prod(1.0 - 1.0 / k**2 for k in range(2, T))
    end = float(psi[-1])
    return CounterexampleReport(
        psi1=float(psi[0]), psi2=float(psi[1]), horizon=T,
        worst_step_margin=float(margin.min()), steps_ok=bool(margin.min() >= -tol),
        partial_product=partial, partial_product_closed_form=T / (2.0 * (T - 1)),
        psi_end=end, end_ok=end >= partial - tol,
    )
