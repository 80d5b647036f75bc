"""Seeded randomized property suites for the supporting inequalities.

Trial ``k`` of lemma ``name`` draws from ``SeedSequence(seed, spawn_key=(tag, k))``,
so results do not depend on the number of workers or on trial order.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from persistflow.balance import balanced_asymmetry_Mmin
from persistflow.bounds import check_lemma1
from persistflow.dynamics import check_lemma8, check_lemma9, sort_permutation
from persistflow.matrix_core import check_lemma4, check_lemma5, proper_subsets, random_stochastic

LEMMAS = ("lemma1", "lemma4", "lemma5", "lemma8", "lemma9")


def _rng(seed: int, tag: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag, k)))


def _positive_diag(rng, n):
    # dense enough that every balanced-asymmetry ratio is finite
    a = rng.uniform(0.05, 1.0, size=(n, n))
    a *= rng.random((n, n)) < rng.uniform(0.5, 1.0)
    np.fill_diagonal(a, rng.uniform(0.2, 1.0, size=n))
    return a / a.sum(axis=1, keepdims=True)


def trial_lemma1(rng):
    eta = float(rng.uniform(0.05, 0.95))
    zeta = float(rng.uniform(0.0, 5.0))
    m = int(rng.integers(1, 51))
    short = rng.uniform(0.0, 1.0 - eta, size=m)
    if short.sum() > zeta:
        short *= zeta / short.sum()
    b = np.clip(1.0 - short, eta, 1.0)
    rep = check_lemma1(b, eta, zeta)
    return [rep.lhs - rep.rhs]


def trial_lemma4(rng):
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 6))
    eta = float(rng.uniform(0.05, 0.9))
    mats = [random_stochastic(rng, n, eta=eta, density=float(rng.uniform(0.2, 1.0))) for _ in range(m)]
    out = []
    for s in proper_subsets(n):
        rep = check_lemma4(mats, eta, s)
        out.append(rep.lhs - rep.rhs)
    return out


def trial_lemma5(rng):
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 6))
    mats = [random_stochastic(rng, n, density=float(rng.uniform(0.2, 1.0))) for _ in range(m)]
    out = []
    for s in proper_subsets(n):
        rep = check_lemma5(mats, s)
        out.append(rep.rhs - rep.lhs)
    return out


def trial_lemma8(rng):
    n = int(rng.integers(2, 6))
    b = _positive_diag(rng, n)
    M = max(1.0, balanced_asymmetry_Mmin(b).K_min)
    nxt, now = rng.permutation(n), rng.permutation(n)
    out = []
    for c in range(1, n):
        subs = list(proper_subsets(n, c))
        for s1, s2 in itertools.product(subs, subs):
            rep = check_lemma8(b, nxt, now, M, s1, s2)
            out.append(rep.rhs - rep.lhs)
    return out


def trial_lemma9(rng):
    n = int(rng.integers(2, 6))
    b = _positive_diag(rng, n)
    M = max(1.0, balanced_asymmetry_Mmin(b).K_min)
    sigma, mu = rng.permutation(n), rng.permutation(n)
    # coarse grid values produce ties in about half the draws
    x = rng.integers(0, 4, size=n).astype(float) if rng.random() < 0.5 else rng.normal(size=n)
    z = x[sort_permutation(x)]
    out = []
    for l in range(1, n):
        rep = check_lemma9(b, sigma, mu, z, M, l)
        out.append(min(rep.lhs - rep.mid, rep.mid))
    return out


TRIALS = {
    "lemma1": trial_lemma1,
    "lemma4": trial_lemma4,
    "lemma5": trial_lemma5,
    "lemma8": trial_lemma8,
    "lemma9": trial_lemma9,
}


@dataclass
class SuiteResult:
    lemma: str
    trials: int
    checks: int
    violations: int
    worst_margin: float
    failing_trials: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def as_dict(self):
        d = asdict(self)
        d["ok"] = self.ok
        return d


def _run_chunk(args):
    name, seed, start, stop, slack = args
    tag = LEMMAS.index(name)
    checks, bad, worst, failing = 0, 0, np.inf, []
    for k in range(start, stop):
        margins = TRIALS[name](_rng(seed, tag, k))
        checks += len(margins)
        # margins are "how far the inequality holds"; below -slack is a violation
        nbad = sum(m < -slack for m in margins)
        if nbad:
            bad += nbad
            failing.append(k)
        worst = min(worst, min(margins))
    return checks, bad, float(worst), failing


def run_suite(name: str, trials: int = 1000, seed: int = 0, workers: int = 1, slack: float = 1e-9) -> SuiteResult:
    if name not in TRIALS:
        raise ValueError(f"unknown lemma suite {name!r}; choose from {', '.join(LEMMAS)}")
    if workers is None or workers <= 0:
        workers = os.cpu_count() or 1
    step = max(1, -(-trials // (4 * workers)))
    chunks = [(name, seed, a, min(a + step, trials), slack) for a in range(0, trials, step)]
    if workers == 1 or len(chunks) == 1:
        parts = [_run_chunk(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, chunks))
    checks = sum(p[0] for p in parts)
    bad = sum(p[1] for p in parts)
    worst = min((p[2] for p in parts), default=float("inf"))
    failing = [k for p in parts for k in p[3]]
    return SuiteResult(name, trials, checks, bad, worst, failing)


def run_all(trials: int = 1000, seed: int = 0, workers: int = 1, slack: float = 1e-9) -> list[SuiteResult]:
    return [run_suite(name, trials, seed, workers, slack) for name in LEMMAS]
