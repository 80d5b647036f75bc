"""Weight schedules: the source of A(t) for every time t >= t0.

Built-ins cover the two worked examples (the four-agent sorted-state
example and the three-agent counterexample without a diagonal floor),
parametric random families with windowed balance by construction, and
explicit finite lists loaded from JSON files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from persistflow.errors import HorizonError, ValidationError
from persistflow.matrix_core import product_chain, stochastic

Arc = tuple[int, int]  # (j, i): j influences i, i.e. a_ij > 0; 0-based


class WeightSchedule:
    """Base class. Subclasses implement ``_matrix(t)``.

    Attributes every schedule carries: ``n``, ``eta`` (diagonal floor or
    ``None`` when no floor is declared), ``t0`` and ``horizon`` (last valid
    time, ``None`` when unbounded). Generators with a known persistent arc
    set expose it as ``persistent_arcs``.
    """

    n: int
    eta: float | None
    t0: int
    horizon: int | None = None
    persistent_arcs: frozenset[Arc] | None = None
    # lower bound on the mass any persistent arc receives in any L-window
    window_mass_floor: float | None = None

    def _matrix(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def matrix_at(self, t: int) -> np.ndarray:
        t = int(t)
        if t < self.t0:
            raise HorizonError(f"t={t} is before t0={self.t0}")
        if self.horizon is not None and t > self.horizon:
            raise HorizonError(f"t={t} is beyond the schedule horizon {self.horizon}")
        return self._matrix(t)

    def matrices(self, ta: int, tb: int) -> np.ndarray:
        """Stack of A(ta), ..., A(tb) (inclusive), shape ``(tb - ta + 1, n, n)``."""
        if tb < ta:
            return np.zeros((0, self.n, self.n))
        return np.stack([self.matrix_at(t) for t in range(ta, tb + 1)])

    def tail_mass(self, T: int) -> float | None:
        """Max over non-persistent arcs of ``sum_{t >= T} a_ij(t)`` when known in closed form."""
        return None

    def config(self) -> dict:
        raise NotImplementedError


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IdentitySchedule(WeightSchedule):
    n: int
    t0: int = 0
    eta: float | None = 1.0

    persistent_arcs: frozenset = frozenset()

    def _matrix(self, t):
        return _freeze(np.eye(self.n))

    def tail_mass(self, T):
        return 0.0

    def config(self):
        return {"generator": "identity", "n": self.n, "t0": self.t0}


@dataclass(frozen=True, eq=False)
class ExplicitSchedule(WeightSchedule):
    """Finite list of matrices for times t0, t0+1, ..."""

    mats: tuple
    t0: int = 0
    n: int = field(init=False)
    eta: float | None = field(init=False)
    horizon: int | None = field(init=False)

    def __post_init__(self):
        if len(self.mats) == 0:
            raise ValidationError("explicit schedule needs at least one matrix")
        mats = tuple(stochastic(m) for m in self.mats)
        n = mats[0].shape[0]
        for k, m in enumerate(mats):
            if m.shape != (n, n):
                raise ValidationError(f"matrix {k} has shape {m.shape}, expected {(n, n)}")
        min_diag = min(float(np.min(np.diag(m))) for m in mats)
        object.__setattr__(self, "mats", mats)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "eta", min_diag if min_diag > 0 else None)
        object.__setattr__(self, "horizon", self.t0 + len(mats) - 1)

    def _matrix(self, t):
        return self.mats[t - self.t0]

    def config(self):
        return {"generator": "explicit", "n": self.n, "t0": self.t0, "length": len(self.mats)}


def _support_arcs(mats) -> frozenset:
    """Arcs (j, i) with a_ij > 0 in at least one matrix."""
    pos = np.any(np.stack(mats) > 0, axis=0)
    return frozenset((j, i) for i, j in zip(*np.nonzero(pos)) if i != j)


@dataclass(frozen=True, eq=False)
class PeriodicSchedule(WeightSchedule):
    """Cycles through ``mats``: A(t) = mats[(t - t0) mod len(mats)].

    An arc that is positive anywhere in the period recurs forever, so the
    persistent arcs are exactly the support and every other arc is zero.
    """

    mats: tuple
    t0: int = 0
    n: int = field(init=False)
    eta: float | None = field(init=False)

    def __post_init__(self):
        inner = ExplicitSchedule(self.mats, self.t0)
        object.__setattr__(self, "mats", inner.mats)
        object.__setattr__(self, "n", inner.n)
        object.__setattr__(self, "eta", inner.eta)
        object.__setattr__(self, "persistent_arcs", _support_arcs(inner.mats))

    def _matrix(self, t):
        return self.mats[(t - self.t0) % len(self.mats)]

    def tail_mass(self, T):
        return 0.0

    def config(self):
        return {
            "generator": "periodic",
            "t0": self.t0,
            "matrices": [[[repr(float(v)) for v in row] for row in m] for m in self.mats],
        }


_SEC4_EVEN = _freeze(np.array([[.5, 0, .5, 0], [0, .5, 0, .5], [.5, 0, .5, 0], [0, .5, 0, .5]]))
_SEC4_ODD = _freeze(np.array([[.5, .5, 0, 0], [.5, .5, 0, 0], [0, 0, .5, .5], [0, 0, .5, .5]]))


@dataclass(frozen=True)
class Sec4Schedule(WeightSchedule):
    """Four agents; B(t) alternates between two pairing matrices."""

    n: int = 4
    t0: int = 0
    eta: float | None = 0.5

    persistent_arcs: frozenset = _support_arcs([_SEC4_EVEN, _SEC4_ODD])

    def _matrix(self, t):
        return _SEC4_EVEN if (t - self.t0) % 2 == 0 else _SEC4_ODD

    def tail_mass(self, T):
        return 0.0

    def config(self):
        return {"generator": "paper-sec4"}


def sec5_entries(t: int) -> list[list[Fraction]]:
    """Exact rational entries of the three-agent counterexample at time t >= 1."""
    if t < 1:
        raise HorizonError("the three-agent counterexample starts at t=1")
    one = Fraction(1)
    r = (t - 1) % 3
    s = Fraction(1, t)
    q = s * s
    if r == 0:
        return [[s, one - s, 0], [one - q, q, 0], [0, 0, one]]
    if r == 1:
        return [[q, 0, one - q], [0, one, 0], [one - s, 0, s]]
    return [[one, 0, 0], [0, s, one - s], [0, one - q, q]]


@dataclass(frozen=True)
class Sec5Schedule(WeightSchedule):
    """Three agents, period-3 switching, diagonals decaying like 1/t or 1/t^2.

    No uniform diagonal floor exists, so ``eta`` is ``None``. Every
    off-diagonal arc gets weight at least ``1 - 1/t`` once per period, so all
    six arcs are persistent.
    """

    n: int = 3
    t0: int = 1
    eta: float | None = None
    persistent_arcs: frozenset = frozenset((j, i) for j in range(3) for i in range(3) if i != j)

    def tail_mass(self, T):
        return 0.0

    def _matrix(self, t):
        # each entry is the correctly rounded value of the exact rational
        a = [[float(v) for v in row] for row in sec5_entries(t)]
        return _freeze(np.array(a))

    def config(self):
        return {"generator": "paper-sec5"}


@dataclass(frozen=True, eq=False)
class LiftedSchedule(WeightSchedule):
    """L-step products B(t) = A((t+1)L-1+t0) ... A(tL+t0), indexed from 0."""

    base: WeightSchedule
    L: int
    n: int = field(init=False)
    t0: int = field(init=False, default=0)
    eta: float | None = field(init=False)
    horizon: int | None = field(init=False)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValidationError(f"window length L must be a positive integer, got {self.L}")
        b = self.base
        object.__setattr__(self, "n", b.n)
        object.__setattr__(self, "t0", 0)
        object.__setattr__(self, "eta", None if b.eta is None else b.eta**self.L)
        hz = None if b.horizon is None else (b.horizon - b.t0 + 1) // self.L - 1
        object.__setattr__(self, "horizon", hz)

    def base_time(self, t: int) -> int:
        return t * self.L + self.base.t0

    def _matrix(self, t):
        start = self.base_time(t)
        return product_chain([self.base.matrix_at(start + u) for u in reversed(range(self.L))])

    def config(self):
        return {"generator": "lift", "L": self.L, "base": self.base.config()}


def lift(s: WeightSchedule, L: int) -> LiftedSchedule:
    return LiftedSchedule(s, L)


def _structure_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0,)))


def _time_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1, int(t))))


def _check_gen_params(n, K, L, eta):
    if n < 2:
        raise ValidationError("need at least two agents")
    if K < 1:
        raise ValidationError(f"K must be >= 1, got {K}")
    if int(L) != L or L < 1:
        raise ValidationError(f"L must be a positive integer, got {L}")
    if not 0 < eta < 1:
        raise ValidationError(f"eta must lie in (0, 1), got {eta}")


@dataclass(frozen=True, eq=False)
class CutBalancedSchedule(WeightSchedule):
    """Random schedule satisfying windowed cut-balance with constants (K, L).

    A connected undirected edge set is drawn once. Each edge {i, j} yields the
    two arcs (j, i) and (i, j); each arc fires at one fixed phase of the
    period L, and for L > 1 the two directions fire at different phases, so
    reciprocity is only visible over a full window. A firing arc gets weight
    ``u * (1 - eta) / (n - 1)`` with ``u`` uniform on ``[1/K, 1]``. Every
    length-L sliding window therefore sees each arc exactly once, which bounds
    every cut ratio by K.
    """

    n: int
    K: float
    L: int
    eta: float
    seed: int
    edge_prob: float = 0.3
    t0: int = 0

    def __post_init__(self):
        _check_gen_params(self.n, self.K, self.L, self.eta)
        rng = _structure_rng(self.seed)
        n, L = self.n, self.L
        order = rng.permutation(n)
        edges = set()
        for k in range(1, n):
            other = order[rng.integers(0, k)]
            edges.add(tuple(sorted((int(order[k]), int(other)))))
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) not in edges and rng.random() < self.edge_prob:
                    edges.add((i, j))
        arcs, phases = [], []
        for i, j in sorted(edges):
            p = int(rng.integers(0, L))
            q = int((p + rng.integers(1, L)) % L) if L > 1 else p
            arcs += [(j, i), (i, j)]
            phases += [p, q]
        hi = (1.0 - self.eta) / (n - 1)
        object.__setattr__(self, "_arcs", tuple(arcs))
        object.__setattr__(self, "_phases", np.array(phases))
        object.__setattr__(self, "_hi", hi)
        object.__setattr__(self, "persistent_arcs", frozenset(arcs))
        object.__setattr__(self, "window_mass_floor", hi / self.K)

    def _matrix(self, t):
        u = _time_rng(self.seed, t).uniform(1.0 / self.K, 1.0, size=len(self._arcs))
        phase = (t - self.t0) % self.L
        a = np.zeros((self.n, self.n))
        for k, (j, i) in enumerate(self._arcs):
            if self._phases[k] == phase:
                a[i, j] = u[k] * self._hi
        np.fill_diagonal(a, 1.0 - a.sum(axis=1))
        return _freeze(a)

    def tail_mass(self, T):
        return 0.0

    def config(self):
        return {
            "generator": "cut-balanced", "n": self.n, "K": self.K, "L": self.L,
            "eta": self.eta, "seed": self.seed, "edge_prob": self.edge_prob, "t0": self.t0,
        }


@dataclass(frozen=True, eq=False)
class ArcBalancedSchedule(WeightSchedule):
    """Random schedule satisfying windowed arc-balance with constants (K, L).

    The persistent arc set is a random arborescence (so it has a directed
    spanning tree) plus extra arcs drawn with ``extra_prob``. Each persistent
    arc spreads its window mass over the L phases with a fixed random profile;
    at time t it carries ``profile[phase] * u * hi`` with ``u`` uniform on
    ``[1/K, 1]``, so every sliding window holds between ``hi/K`` and ``hi``.
    Transient arcs decay geometrically with ratio 1/2 and have finite total
    weight.
    """

    n: int
    K: float
    L: int
    eta: float
    seed: int
    extra_prob: float = 0.2
    transient_prob: float = 0.5
    t0: int = 0

    def __post_init__(self):
        _check_gen_params(self.n, self.K, self.L, self.eta)
        rng = _structure_rng(self.seed)
        n, L = self.n, self.L
        order = rng.permutation(n)
        ep = set()
        for k in range(1, n):
            parent = int(order[rng.integers(0, k)])
            ep.add((parent, int(order[k])))
        for j in range(n):
            for i in range(n):
                if i != j and (j, i) not in ep and rng.random() < self.extra_prob:
                    ep.add((j, i))
        arcs = sorted(ep)
        profiles = np.zeros((len(arcs), L))
        for k in range(len(arcs)):
            active = rng.choice(L, size=int(rng.integers(1, L + 1)), replace=False)
            profiles[k, active] = rng.dirichlet(np.ones(len(active)))
        scale = (1.0 - self.eta) / (n - 1)
        transients = []
        for j in range(n):
            for i in range(n):
                if i != j and (j, i) not in ep and rng.random() < self.transient_prob:
                    transients.append((j, i, float(rng.uniform(0.05, 1.0)) * 0.2 * scale))
        hi = 0.8 * scale
        object.__setattr__(self, "_arcs", tuple(arcs))
        object.__setattr__(self, "_profiles", profiles)
        object.__setattr__(self, "_transients", tuple(transients))
        object.__setattr__(self, "_hi", hi)
        object.__setattr__(self, "persistent_arcs", frozenset(arcs))
        object.__setattr__(self, "window_mass_floor", hi / self.K)

    def _matrix(self, t):
        u = _time_rng(self.seed, t).uniform(1.0 / self.K, 1.0, size=len(self._arcs))
        phase = (t - self.t0) % self.L
        a = np.zeros((self.n, self.n))
        for k, (j, i) in enumerate(self._arcs):
            a[i, j] = self._profiles[k, phase] * u[k] * self._hi
        decay = 0.5 ** (t - self.t0)
        for j, i, c in self._transients:
            a[i, j] = c * decay
        np.fill_diagonal(a, 1.0 - a.sum(axis=1))
        return _freeze(a)

    def tail_mass(self, T):
        if not self._transients:
            return 0.0
        cmax = max(c for _, _, c in self._transients)
        return 2.0 * cmax * 0.5 ** (max(T, self.t0) - self.t0)

    def config(self):
        return {
            "generator": "arc-balanced", "n": self.n, "K": self.K, "L": self.L,
            "eta": self.eta, "seed": self.seed, "extra_prob": self.extra_prob,
            "transient_prob": self.transient_prob, "t0": self.t0,
        }


BUILTIN_IDS = ("paper-sec4", "paper-sec5")


def builtin(name: str) -> WeightSchedule:
    if name == "paper-sec4":
        return Sec4Schedule()
    if name == "paper-sec5":
        return Sec5Schedule()
    raise ValidationError(f"unknown built-in schedule {name!r}; choose from {BUILTIN_IDS}")


def _parse_matrix_list(raw, where: str) -> list[np.ndarray]:
    mats = []
    for k, m in enumerate(raw):
        if not isinstance(m, (list, tuple)) or len({len(r) if isinstance(r, (list, tuple)) else -1 for r in m}) != 1:
            raise ValidationError(f"{where}: matrix {k} is ragged or not a list of rows")
        try:
            a = np.array([[float(v) for v in row] for row in m], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: matrix {k}: {exc}") from exc
        if a.ndim != 2:
            raise ValidationError(f"{where}: matrix {k} is ragged")
        mats.append(a)
    return mats


def schedule_from_config(cfg: dict) -> WeightSchedule:
    """Build a schedule from a generator config (as written by ``config()``)."""
    cfg = dict(cfg)
    gen = cfg.pop("generator", None)
    try:
        if gen in BUILTIN_IDS:
            return builtin(gen)
        if gen == "identity":
            return IdentitySchedule(int(cfg["n"]), int(cfg.get("t0", 0)))
        if gen == "cut-balanced":
            return CutBalancedSchedule(**cfg)
        if gen == "arc-balanced":
            return ArcBalancedSchedule(**cfg)
        if gen == "periodic":
            return PeriodicSchedule(tuple(_parse_matrix_list(cfg["matrices"], "config")), int(cfg.get("t0", 0)))
        if gen == "lift":
            return LiftedSchedule(schedule_from_config(cfg["base"]), int(cfg["L"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad parameters for generator {gen!r}: {exc}") from exc
    raise ValidationError(f"unknown generator {gen!r}")


def dump_schedule(s: WeightSchedule, horizon: int | None = None) -> dict:
    """Explicit-list document for times t0..horizon; values as shortest round-trip strings."""
    end = s.horizon if horizon is None else horizon
    if end is None:
        raise ValidationError("an unbounded schedule needs an explicit horizon to export")
    mats = s.matrices(s.t0, end)
    return {
        "n": s.n,
        "t0": s.t0,
        "matrices": [[[repr(float(v)) for v in row] for row in m] for m in mats],
    }


def save_schedule(s: WeightSchedule, path, horizon: int | None = None) -> None:
    Path(path).write_text(json.dumps(dump_schedule(s, horizon), indent=1) + "\n")


def load_schedule(path) -> ExplicitSchedule:
    """Read a schedule file ``{"n", "t0", "matrices"}``; entries may be strings or numbers."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read schedule file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "matrices" not in doc:
        raise ValidationError(f"{path}: expected an object with a 'matrices' list")
    mats = _parse_matrix_list(doc["matrices"], str(path))
    n = doc.get("n", mats[0].shape[0] if mats else None)
    for k, m in enumerate(mats):
        if m.shape != (n, n):
            raise ValidationError(f"{path}: matrix {k} has shape {m.shape}, expected {(n, n)}")
    try:
        return ExplicitSchedule(tuple(mats), int(doc.get("t0", 0)))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def constant_schedule(a: Sequence[Sequence[float]], t0: int = 0) -> PeriodicSchedule:
    return PeriodicSchedule((np.asarray(a, dtype=float),), t0)


# Values the four-agent example must reproduce after one step from y(0) = [0, 1, 2, 3]
SEC4_EXPECTED = {
    "y0": [0.0, 1.0, 2.0, 3.0],
    "y1": [1.0, 2.0, 1.0, 2.0],
    "sigma1": [1, 3, 2, 4],
    "z1": [1.0, 1.0, 2.0, 2.0],
    "C0": [[0.5, 0, 0.5, 0], [0.5, 0, 0.5, 0], [0, 0.5, 0, 0.5], [0, 0.5, 0, 0.5]],
}
