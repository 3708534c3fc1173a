"""Frechet function and mean partitions of a sample."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alignment import enumerate_alignments
from .errors import DimensionMismatchError
from .partition import (
    ENUM_MAX_ELL,
    TOL,
    Partition,
    _row_order,
    align_stack,
    best_permutations,
)


@dataclass(frozen=True)
class Sample:
    """Ordered tuple of partitions sharing ``ell`` and ``m``."""

    elements: tuple

    def __post_init__(self):
        elems = tuple(x if isinstance(x, Partition) else Partition(x) for x in self.elements)
        if not elems:
            raise ValueError("a sample needs at least one partition")
        shape = elems[0].matrix.shape
        for x in elems[1:]:
            if x.matrix.shape != shape:
                raise DimensionMismatchError(f"shapes {shape} and {x.matrix.shape} differ")
        object.__setattr__(self, "elements", elems)

    @classmethod
    def from_labels(cls, rows, ell: int) -> "Sample":
        return cls(tuple(Partition.from_labels(r, ell) for r in rows))

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def ell(self) -> int:
        return self.elements[0].ell

    @property
    def m(self) -> int:
        return self.elements[0].m

    def stack(self) -> np.ndarray:
        return np.stack([x.matrix for x in self.elements])

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


def as_sample(sample) -> Sample:
    return sample if isinstance(sample, Sample) else Sample(tuple(sample))


@dataclass(frozen=True)
class MeanResult:
    mean: Partition
    frechet_value: float
    iterations: int
    converged: bool
    minimizer_count: int | None = None
    history: tuple = field(default=(), repr=False)


def _check(sample: Sample, Z: Partition):
    if (sample.ell, sample.m) != (Z.ell, Z.m):
        raise DimensionMismatchError(
            f"sample is {sample.ell}x{sample.m}, partition is {Z.ell}x{Z.m}"
        )


def frechet(sample, Z: Partition) -> float:
    """``(1/n) sum_i delta(X_i, Z)^2``."""
    sample = as_sample(sample)
    _check(sample, Z)
    _, _, d2 = align_stack(sample.stack(), Z.matrix)
    return float(d2.mean())


def pairwise_sq_delta(stack: np.ndarray) -> np.ndarray:
    """Matrix of squared quotient distances between all matrices in ``stack``."""
    stack = np.asarray(stack, dtype=float)
    n, ell, _ = stack.shape
    if ell <= ENUM_MAX_ELL:
        profits = np.einsum("ikm,jlm->ijkl", stack, stack)
        _, vals = best_permutations(profits)
        sq = np.einsum("ikm,ikm->i", stack, stack)
        d2 = sq[:, None] + sq[None, :] - 2.0 * vals
    else:
        d2 = np.empty((n, n))
        for i in range(n):
            _, _, d2[i] = align_stack(stack, stack[i])
    d2 = np.maximum(d2, 0.0)
    np.fill_diagonal(d2, 0.0)
    return 0.5 * (d2 + d2.T)


def _sorted_rows(a: np.ndarray) -> np.ndarray:
    return a[_row_order(a)]


def _fixed_point(stack, start, max_iter, tol):
    m_rep = _sorted_rows(start)
    history = []
    for it in range(1, max_iter + 1):
        aligned, _, d2 = align_stack(stack, m_rep)
        history.append(float(d2.mean()))
        nxt = _sorted_rows(aligned.mean(axis=0))
        if np.max(np.abs(nxt - m_rep)) <= tol:
            return m_rep, history, it, True
        m_rep = nxt
    _, _, d2 = align_stack(stack, m_rep)
    history.append(float(d2.mean()))
    return m_rep, history, max_iter, False


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def mean_heuristic(
    sample,
    init: Partition | None = None,
    max_iter: int = 100,
    tol: float = TOL,
    restarts: int | None = None,
    seed=0,
) -> MeanResult:
    """Local mean partition by alternating alignment and averaging.

    Each pass aligns every sample element to the current estimate and replaces
    the estimate with the entrywise average.  A pass that moves no entry by
    more than ``tol`` means the estimate reproduces itself, which is the
    stationarity condition for a local minimum of the Frechet function.

    Without ``init`` the search starts from the sample medoid and from further
    randomly drawn sample elements, ``min(n, 8)`` starts in total.
    """
    sample = as_sample(sample)
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    stack = sample.stack()
    n = sample.n
    rng = _rng(seed)
    if init is not None:
        _check(sample, init)
        starts = [init.matrix]
        k = 1 if restarts is None else restarts
        pool = list(range(n))
    else:
        medoid = int(np.argmin(pairwise_sq_delta(stack).mean(axis=1)))
        starts = [stack[medoid]]
        k = min(n, 8) if restarts is None else restarts
        pool = [i for i in range(n) if i != medoid]
    extra = max(k - 1, 0)
    if extra and pool:
        picks = rng.choice(len(pool), size=min(extra, len(pool)), replace=False)
        starts += [stack[pool[i]] for i in picks]

    best = None
    for start in starts:
        rep, history, iters, converged = _fixed_point(stack, start, max_iter, tol)
        if best is None or history[-1] < best[1][-1] - TOL:
            best = (rep, history, iters, converged)
    rep, history, iters, converged = best
    return MeanResult(
        mean=Partition._trusted(rep),
        frechet_value=history[-1],
        iterations=iters,
        converged=converged,
        history=tuple(history),
    )


def mean_set(sample, budget: int | None = None) -> list:
    """All distinct mean partitions, sorted by canonical matrix."""
    enum = enumerate_alignments(as_sample(sample), budget)
    means = [Partition._trusted(np.clip(a, 0.0, 1.0)) for a in enum.means]
    return sorted(means, key=lambda p: p.sort_key())


def mean_exact(sample, budget: int | None = None) -> MeanResult:
    """Mean partition from exhaustive multiple-alignment search.

    Every optimal multiple alignment projects to a mean partition and every
    mean partition arises this way, so the distinct projections form the whole
    mean set.  The lexicographically smallest one is returned.
    """
    sample = as_sample(sample)
    enum = enumerate_alignments(sample, budget)
    means = sorted(
        (Partition._trusted(np.clip(a, 0.0, 1.0)) for a in enum.means),
        key=lambda p: p.sort_key(),
    )
    mean = means[0]
    return MeanResult(
        mean=mean,
        frechet_value=frechet(sample, mean),
        iterations=enum.enumerated,
        converged=True,
        minimizer_count=len(means),
    )


def fixed_point_residual(sample, mean: Partition) -> float:
    """Largest entry change when the mean is re-derived from aligned sample elements."""
    sample = as_sample(sample)
    _check(sample, mean)
    aligned, _, _ = align_stack(sample.stack(), mean.matrix)
    return float(np.max(np.abs(aligned.mean(axis=0) - mean.matrix)))

