"""Small dense row-stochastic matrix arithmetic.

A "stochastic matrix" here is a read-only float64 ``ndarray`` of shape
``(n, n)`` that passed :func:`stochastic`. Node subsets are iterables of
0-based indices; 1-based numbering only appears in file and CLI I/O.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from persistflow.errors import ValidationError

ROW_TOL = 1e-12
RENORM_TOL = 1e-9
SLACK = 1e-9


@dataclass(frozen=True)
class InequalityReport:
    """Both sides of a checked inequality ``lhs >= rhs`` (or ``<=``).

    ``mid`` is used by chained inequalities ``lhs >= mid >= rhs``.
    """

    lhs: float
    rhs: float
    holds: bool
    mid: float | None = None

    def as_dict(self) -> dict:
        d = {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}
        if self.mid is not None:
            d["mid"] = self.mid
        return d


def stochastic(entries, *, renorm_tol: float = RENORM_TOL) -> np.ndarray:
    """Validate ``entries`` as a row-stochastic matrix and freeze it.

    Rows whose sum is off by more than ``ROW_TOL`` but at most ``renorm_tol``
    are rescaled; anything worse is rejected with the offending row index.
    """
    a = np.array(entries, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValidationError("empty matrix")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    neg = np.argwhere(a < 0)
    if len(neg):
        i, j = neg[0]
        raise ValidationError(f"negative entry at row {i + 1}, column {j + 1}: {a[i, j]!r}")
    sums = a.sum(axis=1)
    dev = np.abs(sums - 1.0)
    bad = np.flatnonzero(dev > renorm_tol)
    if len(bad):
        i = bad[0]
        raise ValidationError(f"row {i + 1} sums to {sums[i]!r}, not 1")
    fix = dev > ROW_TOL
    if fix.any():
        a[fix] /= sums[fix, None]
    a.setflags(write=False)
    return a


def check_stochastic(a: np.ndarray, tol: float = ROW_TOL) -> None:
    """Raise unless ``a`` is square, nonnegative and row-stochastic within ``tol``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if np.any(a < 0):
        raise ValidationError("matrix has negative entries")
    dev = np.abs(a.sum(axis=1) - 1.0)
    if np.any(dev > tol):
        i = int(np.argmax(dev))
        raise ValidationError(f"row {i + 1} deviates from 1 by {dev[i]:.3g}")


def as_subset(members: Iterable[int], n: int, *, proper: bool = True) -> tuple[int, ...]:
    """Normalise a node subset to a sorted tuple of 0-based indices."""
    s = tuple(sorted(set(int(m) for m in members)))
    if s and (s[0] < 0 or s[-1] >= n):
        raise ValidationError(f"subset {s} has indices outside 0..{n - 1}")
    if proper and not 0 < len(s) < n:
        raise ValidationError(f"subset {s} is not a nonempty proper subset of {n} nodes")
    return s


def complement(members: Iterable[int], n: int) -> tuple[int, ...]:
    inside = set(members)
    return tuple(i for i in range(n) if i not in inside)


def cut_sum(a: np.ndarray, into: Iterable[int], frm: Iterable[int]) -> float:
    """Sum of ``a[i, j]`` over ``i`` in ``into`` and ``j`` in ``frm``."""
    n = a.shape[0]
    rows = list(as_subset(into, n, proper=False))
    cols = list(as_subset(frm, n, proper=False))
    if not rows or not cols:
        return 0.0
    return float(a[np.ix_(rows, cols)].sum())


def out_cut(a: np.ndarray, s: Iterable[int]) -> float:
    """``sum_{i in S, j not in S} a_ij``: the weight S places on the outside."""
    n = a.shape[0]
    s = as_subset(s, n)
    return cut_sum(a, s, complement(s, n))


def product_chain(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """``M_1 M_2 ... M_m`` in list order."""
    if len(matrices) == 0:
        raise ValidationError("empty matrix chain")
    n = np.shape(matrices[0])[0]
    out = np.array(matrices[0], dtype=np.float64)
    for m in matrices[1:]:
        if np.shape(m) != (n, n):
            raise ValidationError(f"dimension mismatch in chain: {np.shape(m)} vs {(n, n)}")
        out = out @ m
    out.setflags(write=False)
    return out


def proper_subsets(n: int, size: int | None = None) -> Iterator[tuple[int, ...]]:
    """All nonempty proper subsets (optionally of one cardinality), lexicographic."""
    sizes = range(1, n) if size is None else [size]
    for c in sizes:
        yield from itertools.combinations(range(n), c)


def subset_indicators(n: int, size: int | None = None) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Subsets from :func:`proper_subsets` and their 0/1 membership matrix."""
    subsets = list(proper_subsets(n, size))
    ind = np.zeros((len(subsets), n))
    for k, s in enumerate(subsets):
        ind[k, list(s)] = 1.0
    return subsets, ind


def _check_chain(matrices: Sequence[np.ndarray]) -> int:
    if len(matrices) == 0:
        raise ValidationError("empty matrix chain")
    for m in matrices:
        check_stochastic(m, tol=RENORM_TOL)
    return np.shape(matrices[0])[0]


def check_lemma4(matrices: Sequence[np.ndarray], eta: float, s: Iterable[int]) -> InequalityReport:
    """Product cut vs sum cut with diagonal floor ``eta``.

    Checks ``cut(A_1...A_m, S) >= eta^(m-1) * cut(A_1+...+A_m, S)`` where
    ``cut(X, S) = sum_{i in S, j not in S} X_ij``.
    """
    if not 0 < eta < 1:
        raise ValidationError(f"eta must lie in (0, 1), got {eta}")
    n = _check_chain(matrices)
    s = as_subset(s, n)
    for k, m in enumerate(matrices):
        if np.min(np.diag(m)) < eta:
            raise ValidationError(f"matrix {k + 1} has a diagonal entry below eta={eta}")
    lhs = out_cut(product_chain(matrices), s)
    rhs = eta ** (len(matrices) - 1) * out_cut(np.sum(matrices, axis=0), s)
    return InequalityReport(lhs, rhs, lhs >= rhs - SLACK)


def check_lemma5(matrices: Sequence[np.ndarray], s: Iterable[int]) -> InequalityReport:
    """``cut(A_1...A_m, S) <= (N-1) * cut(A_1+...+A_m, S)`` for any stochastic chain."""
    n = _check_chain(matrices)
    s = as_subset(s, n)
    lhs = out_cut(product_chain(matrices), s)
    rhs = (n - 1) * out_cut(np.sum(matrices, axis=0), s)
    return InequalityReport(lhs, rhs, lhs <= rhs + SLACK)


def random_stochastic(
    rng: np.random.Generator,
    n: int,
    eta: float | None = None,
    density: float = 0.6,
) -> np.ndarray:
    """Random row-stochastic matrix with sparse off-diagonals.

    With ``eta`` given every diagonal entry is at least ``eta``; otherwise
    diagonals may be zero.
    """
    a = np.zeros((n, n))
    for i in range(n):
        diag = rng.uniform(eta, 1.0) if eta is not None else rng.uniform(0.0, 1.0) * rng.integers(0, 2)
        others = [j for j in range(n) if j != i and rng.random() < density]
        if not others:
            a[i, i] = 1.0
            continue
        w = rng.dirichlet(np.ones(len(others)))
        a[i, others] = (1.0 - diag) * w
        a[i, i] = max(eta or 0.0, 1.0 - a[i, others].sum())
    return stochastic(a)
