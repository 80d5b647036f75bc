"""Finite-horizon persistent-graph estimation and digraph facts.

Arcs are ``(j, i)`` pairs meaning node j influences node i (``a_ij > 0``),
so reachability follows influence: a root reaches every node along arcs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx
import numpy as np

from persistflow.errors import ValidationError
from persistflow.schedule import Arc, WeightSchedule

PERSISTENT, VANISHING, UNDETERMINED = "persistent", "vanishing", "undetermined"

# last-half mass below this marks an arc as vanishing
VANISH_THRESHOLD = 1e-6
# persistence threshold when the schedule declares no diagonal floor
ABSENT_ETA_THRESHOLD = 0.05


def _digraph(arcs: Iterable[Arc], n: int) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    for j, i in arcs:
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"arc {(j, i)} has endpoints outside 0..{n - 1}")
        if i != j:
            g.add_edge(j, i)
    return g


def spanning_tree_roots(arcs: Iterable[Arc], n: int) -> list[int]:
    """All nodes that reach every other node along arcs."""
    g = _digraph(arcs, n)
    return [r for r in range(n) if len(nx.descendants(g, r)) == n - 1]


def has_spanning_tree(arcs: Iterable[Arc], n: int) -> tuple[bool, list[int]]:
    roots = spanning_tree_roots(arcs, n)
    return bool(roots), roots


def is_strongly_connected(arcs: Iterable[Arc], n: int) -> bool:
    return nx.is_strongly_connected(_digraph(arcs, n))


@dataclass(frozen=True)
class DiameterReport:
    d0: int
    root: int
    root_eccentricity: int
    convention: str = "max shortest-path length over reachable ordered pairs"


def diameter(arcs: Iterable[Arc], n: int) -> DiameterReport:
    """Diameter of a digraph that has a directed spanning tree.

    ``d0`` is the longest finite shortest path over all ordered pairs. The
    report also names the root with the smallest eccentricity; ``d0`` is
    never below that eccentricity, so it is a safe layer count from that root.
    """
    arcs = list(arcs)
    roots = spanning_tree_roots(arcs, n)
    if not roots:
        raise ValidationError("graph has no directed spanning tree; diameter undefined")
    g = _digraph(arcs, n)
    ecc = {}
    d0 = 0
    for u in range(n):
        lengths = nx.single_source_shortest_path_length(g, u)
        far = max(lengths.values())
        d0 = max(d0, far)
        if u in roots:
            ecc[u] = far
    root = min(roots, key=lambda r: (ecc[r], r))
    return DiameterReport(d0=d0, root=root, root_eccentricity=ecc[root])


@dataclass
class PersistentGraphEstimate:
    n: int
    t_start: int
    horizon_T: int
    arc_partial_sums: np.ndarray
    last_half_sums: np.ndarray
    classification: dict[Arc, str]
    persistent_threshold: float
    vanishing_threshold: float
    declared_Ep: frozenset[Arc] | None = None
    source: str = "heuristic"
    notes: list[str] = field(default_factory=list)

    def arcs(self, label: str = PERSISTENT) -> frozenset[Arc]:
        return frozenset(a for a, lab in self.classification.items() if lab == label)

    def as_dict(self) -> dict:
        """JSON-shaped report with 1-based node numbering."""
        return {
            "n": self.n,
            "horizon": [self.t_start, self.horizon_T],
            "source": self.source,
            "thresholds": {
                "persistent_last_half_mass": self.persistent_threshold,
                "vanishing_last_half_mass": self.vanishing_threshold,
            },
            "arcs": [
                {
                    "from": j + 1,
                    "to": i + 1,
                    "partial_sum": float(self.arc_partial_sums[i, j]),
                    "last_half_sum": float(self.last_half_sums[i, j]),
                    "label": self.classification[(j, i)],
                }
                for (j, i) in sorted(self.classification)
            ],
            "declared_Ep": None if self.declared_Ep is None
            else [[j + 1, i + 1] for j, i in sorted(self.declared_Ep)],
            "notes": list(self.notes),
        }


def accumulate(s: WeightSchedule, T: int, *, use_ground_truth: bool = True) -> PersistentGraphEstimate:
    """Partial sums of every arc weight over [t0, T] and a persistence label per arc.

    Heuristic labels: persistent when the mass over the last half of the
    horizon reaches ``0.5 * eta`` (``0.05`` without a floor), vanishing when
    that mass is below ``1e-6``, undetermined otherwise. Generators that know
    their persistent arcs override the heuristic.
    """
    if T < s.t0:
        raise ValidationError(f"horizon T={T} precedes t0={s.t0}")
    mats = s.matrices(s.t0, T)
    mid = s.t0 + (T - s.t0 + 1) // 2
    total = mats.sum(axis=0)
    last = mats[mid - s.t0:].sum(axis=0)
    theta_p = ABSENT_ETA_THRESHOLD if s.eta is None else 0.5 * s.eta
    theta_v = VANISH_THRESHOLD
    labels: dict[Arc, str] = {}
    truth = s.persistent_arcs if use_ground_truth else None
    for i in range(s.n):
        for j in range(s.n):
            if i == j:
                continue
            if truth is not None:
                labels[(j, i)] = PERSISTENT if (j, i) in truth else VANISHING
            elif last[i, j] >= theta_p:
                labels[(j, i)] = PERSISTENT
            elif last[i, j] < theta_v:
                labels[(j, i)] = VANISHING
            else:
                labels[(j, i)] = UNDETERMINED
    notes = [f"last-half window is [{mid}, {T}]"]
    if truth is None:
        notes.append("persistence estimated from a finite prefix; labels are heuristic")
    return PersistentGraphEstimate(
        n=s.n, t_start=s.t0, horizon_T=T,
        arc_partial_sums=total, last_half_sums=last,
        classification=labels,
        persistent_threshold=theta_p, vanishing_threshold=theta_v,
        declared_Ep=truth, source="ground-truth" if truth is not None else "heuristic",
        notes=notes,
    )


def t_eps(s: WeightSchedule, Ep: Iterable[Arc], eps_tail: float, horizon: int | None = None) -> tuple[int, bool]:
    """First T >= t0 after which every non-persistent arc carries at most ``eps_tail``.

    Returns ``(T, horizon_limited)``. Closed-form tails are used when the
    schedule provides them; otherwise tails are summed up to ``horizon`` only.
    """
    if eps_tail <= 0:
        raise ValidationError("eps_tail must be positive")
    if s.tail_mass(s.t0) is not None:
        T = s.t0
        while s.tail_mass(T) > eps_tail:
            T += 1
        return T, False
    end = s.horizon if horizon is None else horizon
    if end is None:
        raise ValidationError("tail time needs a finite horizon for this schedule")
    Ep = set(Ep)
    mask = np.ones((s.n, s.n), dtype=bool)
    np.fill_diagonal(mask, False)
    for j, i in Ep:
        mask[i, j] = False
    mats = s.matrices(s.t0, end)
    # suffix sums: tail[k] = sum_{t >= t0 + k} over the available horizon
    tail = np.cumsum(mats[::-1], axis=0)[::-1]
    for k in range(len(mats)):
        if not mask.any() or np.max(tail[k][mask]) <= eps_tail:
            return s.t0 + k, True
    return end + 1, True
