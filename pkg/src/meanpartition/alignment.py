"""Multiple alignments of a sample and the pairwise alignment cost."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import BudgetExceededError, DimensionMismatchError
from .partition import LabeledPartition, Partition, _row_order, align_stack, permutation_table

DEFAULT_BUDGET = 10**6
BUDGET_ENV = "MEANPARTITION_BUDGET"
# combined alignments of the trailing elements evaluated in one vectorized block
_BLOCK = 4096
# cost values within this tolerance count as equal minima
COST_TOL = 1e-9
DEDUP_TOL = 1e-7


def default_budget() -> int:
    value = os.environ.get(BUDGET_ENV)
    return int(value) if value else DEFAULT_BUDGET


@dataclass(frozen=True)
class MultipleAlignment:
    """One concrete representative per sample element."""

    reps: tuple

    def __post_init__(self):
        reps = tuple(r if isinstance(r, LabeledPartition) else LabeledPartition(r) for r in self.reps)
        if not reps:
            raise ValueError("an alignment needs at least one representative")
        shape = reps[0].matrix.shape
        for r in reps[1:]:
            if r.matrix.shape != shape:
                raise DimensionMismatchError(f"shapes {shape} and {r.matrix.shape} differ")
        object.__setattr__(self, "reps", reps)

    def __len__(self):
        return len(self.reps)

    def stack(self) -> np.ndarray:
        return np.stack([r.matrix for r in self.reps])

    def mean(self) -> LabeledPartition:
        return LabeledPartition._trusted(self.stack().mean(axis=0))

    def is_alignment_of(self, sample) -> bool:
        if len(sample) != len(self.reps):
            return False
        return all(Partition(r) == x for r, x in zip(self.reps, sample))


def alignment_cost(a: MultipleAlignment) -> float:
    """Average pairwise squared distance ``(1/n^2) sum_i sum_j ||X_i - X_j||^2``."""
    s = a.stack()
    n = s.shape[0]
    # sum_ij ||Xi - Xj||^2 = 2 n sum_i ||Xi||^2 - 2 ||sum_i Xi||^2
    total = 2 * n * float(np.sum(s * s)) - 2 * float(np.sum(s.sum(axis=0) ** 2))
    return max(total, 0.0) / n**2


def _elements(sample):
    return [x if isinstance(x, Partition) else Partition(x) for x in sample]


def align_sample_to(sample, z_rep) -> MultipleAlignment:
    """Put every sample element into optimal position with ``z_rep``."""
    z = z_rep.matrix if isinstance(z_rep, (LabeledPartition, Partition)) else np.asarray(z_rep, float)
    elems = _elements(sample)
    stack = np.stack([x.matrix for x in elems]) if elems else np.empty((0,) + z.shape)
    aligned, _, _ = align_stack(stack, z)
    return MultipleAlignment(tuple(LabeledPartition._trusted(a) for a in aligned))


@dataclass
class AlignmentEnumeration:
    """Outcome of exhaustively enumerating multiple alignments."""

    cost: float
    best: MultipleAlignment
    permutations: tuple
    means: list  # distinct projected means of all minimizers, canonical matrices
    alignment_minimizers: int
    enumerated: int


def required_enumeration(ell: int, n: int) -> int:
    return math.factorial(ell) ** max(n - 1, 0)


def _distinct_reps(a: np.ndarray):
    table = permutation_table(a.shape[0])
    reps, perms = [], []
    for p in table:
        r = a[p]
        if not any(np.array_equal(r, q) for q in reps):
            reps.append(r)
            perms.append(tuple(int(v) for v in p))
    return np.stack(reps), perms


def _canonical_matrix(a: np.ndarray) -> np.ndarray:
    return a[_row_order(a)]


def _dedupe(mats, tol=DEDUP_TOL):
    kept = []
    for a in mats:
        c = _canonical_matrix(a)
        if not any(np.allclose(c, k, rtol=0.0, atol=tol) for k in kept):
            kept.append(c)
    return kept


def enumerate_alignments(sample, budget: int | None = None) -> AlignmentEnumeration:
    """Exhaustive search over multiple alignments with the first element pinned.

    Pinning is harmless because the cost is unchanged when one permutation is
    applied to every representative.  Minimizing the cost is the same as
    maximizing ``||sum_i X_i||^2``; the search is ordered lexicographically by
    permutation tuple so the first minimizer found wins ties.
    """
    budget = default_budget() if budget is None else budget
    elems = _elements(sample)
    if not elems:
        raise ValueError("empty sample")
    shape = elems[0].matrix.shape
    for x in elems[1:]:
        if x.matrix.shape != shape:
            raise DimensionMismatchError(f"shapes {shape} and {x.matrix.shape} differ")
    n = len(elems)
    ell = shape[0]
    required = required_enumeration(ell, n)
    if required > budget:
        raise BudgetExceededError(required, budget)

    base = elems[0].matrix
    sq_norms = sum(float(np.sum(x.matrix**2)) for x in elems)
    options = [_distinct_reps(x.matrix) for x in elems[1:]]
    dim = base.size

    # trailing elements are combined into one block evaluated with a matvec
    split = len(options)
    block = 1
    while split > 0 and block * len(options[split - 1][1]) <= _BLOCK:
        split -= 1
        block *= len(options[split][1])
    suffix = np.zeros((1, dim))
    for reps, _ in options[split:]:
        flat = reps.reshape(len(reps), dim)
        suffix = (suffix[:, None, :] + flat[None, :, :]).reshape(-1, dim)
    suffix_sq = np.einsum("ij,ij->i", suffix, suffix)
    suffix_sizes = [len(p) for _, p in options[split:]]

    total_tol = COST_TOL * n * n / 2
    best = -np.inf
    candidates = []  # (prefix indices, suffix flat index, total) in enumeration order
    count = 0
    for prefix in product(*(range(len(p)) for _, p in options[:split])):
        s = base.ravel().copy()
        for (reps, _), k in zip(options[:split], prefix):
            s += reps[k].ravel()
        totals = s @ s + 2.0 * (suffix @ s) + suffix_sq
        count += totals.size
        top = totals.max()
        if top > best:
            best = top
            candidates = [c for c in candidates if c[2] >= best - total_tol]
        if top >= best - total_tol:
            for idx in np.flatnonzero(totals >= best - total_tol):
                candidates.append((prefix, int(idx), float(totals[idx])))

    def reps_of(prefix, flat_idx):
        sidx = np.unravel_index(flat_idx, suffix_sizes) if suffix_sizes else ()
        idxs = list(prefix) + [int(v) for v in sidx]
        mats = [base] + [options[i][0][k] for i, k in enumerate(idxs)]
        perms = [tuple(range(ell))] + [options[i][1][k] for i, k in enumerate(idxs)]
        return mats, tuple(perms)

    means = []
    for prefix, flat_idx, _ in candidates:
        mats, _ = reps_of(prefix, flat_idx)
        means.append(np.mean(mats, axis=0))
    mats, perms = reps_of(*candidates[0][:2])
    best_alignment = MultipleAlignment(tuple(LabeledPartition._trusted(a) for a in mats))
    cost = max(2.0 * sq_norms / n - 2.0 * best / n**2, 0.0)
    return AlignmentEnumeration(
        cost=cost,
        best=best_alignment,
        permutations=perms,
        means=_dedupe(means),
        alignment_minimizers=len(candidates),
        enumerated=count,
    )


def exact_optimal_alignment(sample, budget: int | None = None):
    """Globally optimal multiple alignment and its cost."""
    result = enumerate_alignments(sample, budget)
    return result.best, alignment_cost(result.best)
