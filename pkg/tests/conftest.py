"""Shared generators and brute-force oracles.

The oracles deliberately avoid the package's assignment code: they enumerate
permutations of full matrices with itertools.
"""

import itertools
import math

import numpy as np
import pytest

from meanpartition import LabeledPartition, Partition


def random_hard(rng, ell, m):
    return LabeledPartition.from_labels(rng.integers(ell, size=m), ell)


def random_soft(rng, ell, m):
    a = rng.random((ell, m)) ** 2
    return LabeledPartition(a / a.sum(axis=0))


def random_rep(rng, ell, m, hard):
    return random_hard(rng, ell, m) if hard else random_soft(rng, ell, m)


def brute_delta(a, b):
    """min over all row permutations P of ||a - P b||."""
    a = np.asarray(getattr(a, "matrix", a))
    b = np.asarray(getattr(b, "matrix", b))
    return min(
        math.sqrt(float(np.sum((a - b[list(p)]) ** 2)))
        for p in itertools.permutations(range(a.shape[0]))
    )


def brute_optimal_perms(a, b, tol=1e-11):
    a = np.asarray(getattr(a, "matrix", a))
    b = np.asarray(getattr(b, "matrix", b))
    costs = {p: float(np.sum((a - b[list(p)]) ** 2)) for p in itertools.permutations(range(a.shape[0]))}
    best = min(costs.values())
    return sorted(p for p, c in costs.items() if c <= best + tol)


def brute_asymmetry(z):
    z = np.asarray(getattr(z, "matrix", z))
    ell = z.shape[0]
    ident = tuple(range(ell))
    return min(
        math.sqrt(float(np.sum((z - z[list(p)]) ** 2)))
        for p in itertools.permutations(range(ell))
        if p != ident
    )


def brute_alignment_min(mats):
    """Minimum of the average pairwise squared distance over every alignment."""
    mats = [np.asarray(getattr(x, "matrix", x)) for x in mats]
    n = len(mats)
    ell = mats[0].shape[0]
    perms = list(itertools.permutations(range(ell)))
    best = math.inf
    for choice in itertools.product(perms, repeat=n):
        reps = [x[list(p)] for x, p in zip(mats, choice)]
        total = sum(float(np.sum((reps[i] - reps[j]) ** 2)) for i in range(n) for j in range(n))
        best = min(best, total / n**2)
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def pair_xy():
    """Clusters {1,2}{3} and {1}{2,3} over three points."""
    return Partition.from_labels([0, 0, 1], 2), Partition.from_labels([0, 1, 1], 2)


@pytest.fixture
def ambiguous_pair():
    """Two partitions with two distinct mean partitions (found by enumeration)."""
    return Partition.from_labels([0, 0, 0, 0], 2), Partition.from_labels([0, 0, 1, 1], 2)


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
