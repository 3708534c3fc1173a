"""Votes of partitions on single data points and majority votes via mean partitions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alignment import default_budget, required_enumeration
from .errors import DimensionMismatchError, EllTooLargeError, IndexOutOfRangeError, InvalidMatrixError
from .frechet import as_sample, mean_heuristic, mean_set
from .partition import TIE_TOL, LabeledPartition, Partition, lex_optimal_permutation, permutation_table

MAX_VOTE_ELL = 8
_LOG_DOMAIN_N = 500


@dataclass(frozen=True)
class GroundTruth:
    """Hard ground-truth partition with one fixed representative."""

    partition: Partition
    fixed_rep: LabeledPartition

    def __post_init__(self):
        if not self.partition.is_hard:
            raise InvalidMatrixError("the ground truth must be a hard partition")
        if Partition(self.fixed_rep) != self.partition:
            raise InvalidMatrixError("fixed_rep does not represent the partition")

    @classmethod
    def from_labels(cls, labels, ell: int) -> "GroundTruth":
        rep = LabeledPartition.from_labels(labels, ell)
        return cls(Partition(rep), rep)

    @classmethod
    def of(cls, x) -> "GroundTruth":
        if isinstance(x, GroundTruth):
            return x
        if isinstance(x, Partition):
            return cls(x, x.canonical)
        rep = x if isinstance(x, LabeledPartition) else LabeledPartition(x)
        return cls(Partition(rep), rep)

    @property
    def ell(self) -> int:
        return self.fixed_rep.ell

    @property
    def m(self) -> int:
        return self.fixed_rep.m


@dataclass(frozen=True)
class VoteOutcome:
    point_index: int
    agreement: float
    vote: int


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _check(shape, truth: GroundTruth, j=None):
    if shape != truth.fixed_rep.matrix.shape:
        raise DimensionMismatchError(f"shapes {shape} and {truth.fixed_rep.matrix.shape} differ")
    if j is not None and not 0 <= j < shape[1]:
        raise IndexOutOfRangeError(f"point index {j} outside [0, {shape[1]})")


def agreement(rep: LabeledPartition, truth: GroundTruth, j: int) -> float:
    """Inner product of column ``j`` of ``rep`` with column ``j`` of the truth."""
    a = rep.matrix if isinstance(rep, LabeledPartition) else np.asarray(rep, float)
    _check(a.shape, truth, j)
    return float(a[:, j] @ truth.fixed_rep.matrix[:, j])


def optimal_permutations(x: np.ndarray, target: np.ndarray, max_ell: int = MAX_VOTE_ELL) -> np.ndarray:
    """Every permutation putting ``x`` in optimal position with ``target``."""
    ell = x.shape[0]
    if ell > max_ell:
        raise EllTooLargeError(f"ell={ell} exceeds the enumeration cap {max_ell}")
    table = permutation_table(ell)
    profits = target @ x.T
    vals = profits[np.arange(ell), table].sum(axis=1)
    return table[vals >= vals.max() - TIE_TOL]


def select_representation(x: np.ndarray, truth: GroundTruth, rng, max_ell=MAX_VOTE_ELL, fallback=False):
    """Uniformly chosen representation of ``x`` in optimal position with the truth.

    Returns ``(matrix, exhaustive)``; ``exhaustive`` is False when ``ell``
    exceeds the cap and ``fallback`` substituted the tie-broken optimum.
    """
    target = truth.fixed_rep.matrix
    if x.shape[0] > max_ell:
        if not fallback:
            raise EllTooLargeError(f"ell={x.shape[0]} exceeds the enumeration cap {max_ell}")
        perm = lex_optimal_permutation(target @ x.T)
        return x[list(perm)], False
    options = optimal_permutations(x, target, max_ell)
    pick = options[rng.integers(len(options))] if len(options) > 1 else options[0]
    return x[pick], True


def point_votes(rep: np.ndarray, truth: GroundTruth):
    """Agreements and votes of a representative on every data point."""
    agree = np.einsum("km,km->m", rep, truth.fixed_rep.matrix)
    return agree, (agree > 0.5).astype(int)


def vote(X: Partition, truth: GroundTruth, j: int, rng_seed=None, max_ell: int = MAX_VOTE_ELL) -> VoteOutcome:
    """Vote of ``X`` on point ``j``: 1 iff its agreement strictly exceeds 0.5."""
    _check(X.matrix.shape, truth, j)
    rep, _ = select_representation(X.matrix, truth, _rng(rng_seed), max_ell)
    k = float(rep[:, j] @ truth.fixed_rep.matrix[:, j])
    return VoteOutcome(point_index=j, agreement=k, vote=int(k > 0.5))


def consensus_means(sample, budget: int | None = None, seed=0) -> tuple:
    """Mean partitions used for majority votes, and how they were found.

    Exhaustive when the alignment enumeration fits the budget, otherwise a
    single multi-restart heuristic mean.
    """
    sample = as_sample(sample)
    budget = default_budget() if budget is None else budget
    if required_enumeration(sample.ell, sample.n) <= budget:
        return mean_set(sample, budget), "exact"
    return [mean_heuristic(sample, seed=seed).mean], "heuristic"


def majority_vote(
    sample,
    truth: GroundTruth,
    j: int,
    rng_seed=None,
    budget: int | None = None,
    max_ell: int = MAX_VOTE_ELL,
) -> VoteOutcome:
    """Vote of a randomly selected mean partition of ``sample`` on point ``j``."""
    sample = as_sample(sample)
    _check((sample.ell, sample.m), truth, j)
    rng = _rng(rng_seed)
    means, _ = consensus_means(sample, budget, seed=rng)
    mean = means[rng.integers(len(means))] if len(means) > 1 else means[0]
    return vote(mean, truth, j, rng, max_ell)


def binomial_majority_prob(n: int, p: float) -> float:
    """Probability that more than half of ``n`` independent voters are correct."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    r = n // 2 + 1
    if p in (0.0, 1.0):
        return float(p)
    if n <= _LOG_DOMAIN_N:
        return min(1.0, math.fsum(math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(r, n + 1)))
    lp, lq = math.log(p), math.log1p(-p)
    logs = np.array([
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq
        for i in range(r, n + 1)
    ])
    top = logs.max()
    return float(min(1.0, math.exp(top) * math.fsum(np.exp(logs - top))))


def condorcet_limit(p: float) -> float:
    """Limit of the majority-correct probability as the jury grows."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p > 0.5:
        return 1.0
    if p < 0.5:
        return 0.0
    return 0.5
