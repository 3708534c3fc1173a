"""Diversity of samples and mean sets, homogeneity certificates, and losses."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .alignment import default_budget, required_enumeration
from .errors import DimensionMismatchError, EmptySetError
from .frechet import as_sample, frechet, mean_exact, mean_heuristic, pairwise_sq_delta
from .jury import GroundTruth
from .partition import Partition, degree_of_asymmetry, delta, in_asymmetry_ball


@dataclass(frozen=True)
class DiversityReport:
    pairwise_g: float
    variation_f: float
    homogeneous: bool
    certifying_center: Partition | None = None
    asymmetry_bound: float | None = None

    def to_dict(self) -> dict:
        return {
            "pairwise_g": self.pairwise_g,
            "variation_f": self.variation_f,
            "homogeneous": self.homogeneous,
            "certifying_center": None if self.certifying_center is None else self.certifying_center.to_dict(),
            "asymmetry_bound": self.asymmetry_bound,
        }


@dataclass(frozen=True)
class HomogeneityCertificate:
    homogeneous: bool
    certifying_center: Partition | None = None
    asymmetry_bound: float | None = None


@dataclass(frozen=True)
class LossReport:
    worst: float
    best: float
    estimation: float
    approximation: float

    def to_dict(self) -> dict:
        return asdict(self)


def _partitions(items) -> list:
    items = [x if isinstance(x, Partition) else Partition(x) for x in items]
    if not items:
        raise EmptySetError("expected at least one partition")
    shape = items[0].matrix.shape
    for x in items[1:]:
        if x.matrix.shape != shape:
            raise DimensionMismatchError(f"shapes {shape} and {x.matrix.shape} differ")
    return items


def pairwise_diversity(partitions) -> float:
    """Average squared quotient distance over all ordered pairs, diagonal included."""
    items = _partitions(partitions)
    d2 = pairwise_sq_delta(np.stack([x.matrix for x in items]))
    return float(d2.sum() / len(items) ** 2)


def variation(sample, M: Partition) -> float:
    """Average squared distance of the sample to ``M``."""
    return frechet(as_sample(sample), M)


def _mean(items, budget, seed) -> Partition:
    budget = default_budget() if budget is None else budget
    if required_enumeration(items[0].ell, len(items)) <= budget:
        return mean_exact(items, budget).mean
    return mean_heuristic(items, seed=seed).mean


def certify_homogeneous(partitions, candidates=(), budget: int | None = None, seed=0) -> HomogeneityCertificate:
    """Look for an asymmetric center whose open asymmetry ball holds every partition.

    Candidates are tried in order: those supplied, the mean of the partitions,
    then each partition itself.  Failing to find one means "not certified";
    some untried center could still work.
    """
    items = _partitions(partitions)
    for z in candidates:
        if z.matrix.shape != items[0].matrix.shape:
            raise DimensionMismatchError(f"candidate shape {z.matrix.shape} differs")

    def tries():
        yield from candidates
        yield _mean(items, budget, seed)
        yield from items

    for z in tries():
        alpha = degree_of_asymmetry(z)
        if alpha > 0 and all(in_asymmetry_ball(x, z, strict=True) for x in items):
            return HomogeneityCertificate(True, z, alpha / 4)
    return HomogeneityCertificate(False)


def diversity_report(sample, mean: Partition | None = None, candidates=(), budget=None, seed=0) -> DiversityReport:
    items = _partitions(as_sample(sample))
    if mean is None:
        mean = _mean(items, budget, seed)
    cert = certify_homogeneous(items, candidates, budget, seed)
    return DiversityReport(
        pairwise_g=pairwise_diversity(items),
        variation_f=variation(items, mean),
        homogeneous=cert.homogeneous,
        certifying_center=cert.certifying_center,
        asymmetry_bound=cert.asymmetry_bound,
    )


def loss(X: Partition, truth) -> float:
    """Distance from ``X`` to the ground truth."""
    truth = GroundTruth.of(truth)
    return delta(X, truth.partition).distance


def _split(worst: float, best: float) -> float:
    # pick the float gap whose sum with best rounds back to worst exactly
    gap = worst - best
    if gap + best == worst:
        return gap
    for direction in (math.inf, -math.inf):
        g = gap
        for _ in range(4):
            g = math.nextafter(g, direction)
            if g + best == worst:
                return max(g, 0.0)
    return gap


def loss_decomposition(mean_set, truth) -> LossReport:
    """Worst-case loss split into estimation error and approximation error."""
    items = list(mean_set)
    if not items:
        raise EmptySetError("the mean set is empty")
    truth = GroundTruth.of(truth)
    losses = [loss(x, truth) for x in items]
    worst, best = max(losses), min(losses)
    return LossReport(worst=worst, best=best, estimation=_split(worst, best), approximation=best)
