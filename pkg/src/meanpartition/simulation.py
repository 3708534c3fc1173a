"""Monte Carlo checks of the jury theorem for mean partitions.

Sample partitions are produced by a flip-noise model: every data point keeps
its ground-truth cluster with probability ``p_j`` and otherwise moves to one of
the other clusters uniformly at random.  In ``ball`` mode draws outside the
open asymmetry ball of the center are rejected, which changes the per-point
marginals, so every comparison uses the measured marginals ``p_hat``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .alignment import default_budget
from .errors import InvalidMatrixError, RejectionExhaustedError
from .frechet import Sample
from .jury import MAX_VOTE_ELL, GroundTruth, binomial_majority_prob, condorcet_limit, consensus_means, point_votes
from .partition import TIE_TOL, TOL, Partition, align_stack, asymmetry_squared, in_asymmetry_ball, permutation_table

MODES = ("unconstrained", "ball")
SAMPLER = "flip-noise: keep true cluster with prob p_j, else uniform over the other clusters"


def balanced_labels(ell: int, m: int) -> np.ndarray:
    """Contiguous blocks of (nearly) equal size."""
    return np.repeat(np.arange(ell), [m // ell + (k < m % ell) for k in range(ell)])


@dataclass(frozen=True)
class EnsembleModel:
    truth: GroundTruth
    per_point_correct_prob: np.ndarray
    homogeneity_mode: str = "unconstrained"
    ball_center: Partition | None = None
    max_retries: int = 10_000

    def __post_init__(self):
        m = self.truth.m
        p = np.broadcast_to(np.asarray(self.per_point_correct_prob, dtype=float), (m,)).copy()
        if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
            raise InvalidMatrixError("probabilities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "per_point_correct_prob", p)
        if self.homogeneity_mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.homogeneity_mode == "ball":
            center = self.truth.partition if self.ball_center is None else self.ball_center
            if center.matrix.shape != self.truth.fixed_rep.matrix.shape:
                raise InvalidMatrixError("ball center has the wrong shape")
            if asymmetry_squared(center) == 0.0:
                raise InvalidMatrixError("ball center must be asymmetric")
            object.__setattr__(self, "ball_center", center)
        if self.max_retries < 1:
            raise ValueError("max_retries must be positive")

    @classmethod
    def balanced(cls, ell: int, m: int, p, mode: str = "unconstrained", **kw) -> "EnsembleModel":
        return cls(GroundTruth.from_labels(balanced_labels(ell, m), ell), p, mode, **kw)

    @property
    def ell(self) -> int:
        return self.truth.ell

    @property
    def m(self) -> int:
        return self.truth.m

    def to_dict(self) -> dict:
        p = self.per_point_correct_prob
        return {
            "ell": self.ell,
            "m": self.m,
            "truth_labels": self.truth.fixed_rep.labels().tolist(),
            "p": float(p[0]) if np.all(p == p[0]) else p.tolist(),
            "mode": self.homogeneity_mode,
            "ball_center": None if self.ball_center is None else self.ball_center.to_dict(),
            "max_retries": self.max_retries,
            "sampler": SAMPLER,
        }


def _draw_labels(model: EnsembleModel, rng, count: int) -> np.ndarray:
    truth = model.truth.fixed_rep.labels()
    ell = model.ell
    keep = rng.random((count, model.m)) < model.per_point_correct_prob
    if ell == 1:
        return np.broadcast_to(truth, (count, model.m)).copy()
    shift = 1 + rng.integers(ell - 1, size=(count, model.m))
    return np.where(keep, truth, (truth + shift) % ell)


def _to_matrices(labels: np.ndarray, ell: int) -> np.ndarray:
    count, m = labels.shape
    out = np.zeros((count, ell, m))
    out[np.arange(count)[:, None], labels, np.arange(m)[None, :]] = 1.0
    return out


def _inside_ball(stack: np.ndarray, center: Partition) -> np.ndarray:
    _, _, d2 = align_stack(stack, center.matrix)
    return d2 < asymmetry_squared(center) / 16.0 - TOL


def sample_partitions(model: EnsembleModel, n: int, rng, stats: dict | None = None) -> np.ndarray:
    """Draw ``n`` hard partitions as an ``(n, ell, m)`` stack of representatives."""
    if model.homogeneity_mode == "unconstrained":
        out = _to_matrices(_draw_labels(model, rng, n), model.ell)
        if stats is not None:
            stats["draws"] = stats.get("draws", 0) + n
        return out
    accepted = []
    misses = 0
    while len(accepted) < n:
        need = n - len(accepted)
        batch = _to_matrices(_draw_labels(model, rng, max(2 * need, 8)), model.ell)
        ok = _inside_ball(batch, model.ball_center)
        for mat, good in zip(batch, ok):
            if stats is not None:
                stats["draws"] = stats.get("draws", 0) + 1
            if good:
                accepted.append(mat)
                misses = 0
                if len(accepted) == n:
                    break
            else:
                misses += 1
                if misses >= model.max_retries:
                    raise RejectionExhaustedError(
                        f"{misses} consecutive draws fell outside the asymmetry ball"
                    )
    return np.stack(accepted)


def sample_partition(model: EnsembleModel, rng) -> Partition:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return Partition._trusted(sample_partitions(model, 1, rng)[0])


def select_representations(stack: np.ndarray, truth: GroundTruth, rng, max_ell: int = MAX_VOTE_ELL):
    """Per-row uniformly chosen representation in optimal position with the truth.

    Beyond ``max_ell`` the lexicographic tie-break is used instead, and the
    second return value is False.
    """
    target = truth.fixed_rep.matrix
    ell = stack.shape[1]
    if ell > max_ell:
        aligned, _, _ = align_stack(stack, target)
        return aligned, False
    table = permutation_table(ell)
    profits = np.einsum("km,nlm->nkl", target, stack)
    vals = profits[:, np.arange(ell), table].sum(axis=-1)
    ties = vals >= vals.max(axis=1, keepdims=True) - TIE_TOL
    choice = np.argmax(ties, axis=1)
    for i in np.flatnonzero(ties.sum(axis=1) > 1):
        options = np.flatnonzero(ties[i])
        choice[i] = options[rng.integers(len(options))]
    perms = table[choice]
    return np.take_along_axis(stack, perms[:, :, None], axis=1), True


@dataclass
class _Accumulator:
    m: int
    trials: int = 0
    votes: np.ndarray = None
    voter_correct: np.ndarray = None
    voters: int = 0
    trial_means: list = field(default_factory=list)
    recoveries: int = 0
    exact_matches: int = 0
    methods: set = field(default_factory=set)
    max_mean_set: int = 0
    ball_violations: int = 0
    exhaustive: bool = True
    draws: int = 0
    soft_distance: float = 0.0

    def __post_init__(self):
        self.votes = np.zeros(self.m, dtype=np.int64)
        self.voter_correct = np.zeros(self.m, dtype=np.int64)


def _trial_rng(seed: int, n: int, t: int):
    return np.random.default_rng(np.random.SeedSequence([seed, n, t]))


def _run_trials(model: EnsembleModel, n: int, trials: int, seed: int, budget: int, max_ell: int) -> _Accumulator:
    acc = _Accumulator(model.m)
    truth = model.truth
    for t in range(trials):
        rng = _trial_rng(seed, n, t)
        stats = {}
        stack = sample_partitions(model, n, rng, stats)
        acc.draws += stats["draws"]

        reps, exhaustive = select_representations(stack, truth, rng, max_ell)
        acc.exhaustive &= exhaustive
        agree = np.einsum("nkm,km->nm", reps, truth.fixed_rep.matrix)
        acc.voter_correct += (agree > 0.5).sum(axis=0)
        acc.voters += n

        sample = Sample(tuple(Partition._trusted(x) for x in stack))
        means, method = consensus_means(sample, budget, seed=rng)
        acc.methods.add(method)
        acc.max_mean_set = max(acc.max_mean_set, len(means))
        mean = means[rng.integers(len(means))] if len(means) > 1 else means[0]

        rep, exhaustive = select_representations(mean.matrix[None], truth, rng, max_ell)
        acc.exhaustive &= exhaustive
        _, votes = point_votes(rep[0], truth)
        acc.votes += votes
        acc.trial_means.append(float(votes.mean()))
        # the mean is soft; recovery means its strict-majority hardening is the truth
        acc.recoveries += int(votes.all())
        acc.exact_matches += int(np.array_equal(rep[0], truth.fixed_rep.matrix))
        acc.soft_distance += float(np.linalg.norm(rep[0] - truth.fixed_rep.matrix))
        if model.homogeneity_mode == "ball" and not in_asymmetry_ball(mean, model.ball_center, strict=True):
            acc.ball_violations += 1
        acc.trials += 1
    return acc


def _stderr(rate, trials):
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / trials)


@dataclass(frozen=True)
class VoteEstimate:
    """Monte Carlo estimate of the majority-correct probability at one point."""

    rate: float
    stderr: float
    p_hat: float
    n: int
    trials: int

    def __float__(self):
        return self.rate


def estimate_vote_probability(
    model: EnsembleModel,
    n: int,
    trials: int,
    j: int,
    seed: int = 0,
    budget: int | None = None,
    max_ell: int = MAX_VOTE_ELL,
) -> VoteEstimate:
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be at least 1")
    if not 0 <= j < model.m:
        raise IndexError(f"point index {j} outside [0, {model.m})")
    budget = default_budget() if budget is None else budget
    acc = _run_trials(model, n, trials, seed, budget, max_ell)
    rate = acc.votes[j] / trials
    return VoteEstimate(
        rate=float(rate),
        stderr=_stderr(rate, trials),
        p_hat=float(acc.voter_correct[j] / acc.voters),
        n=n,
        trials=trials,
    )


@dataclass
class GridResult:
    n: int
    point_rates: list
    point_stderr: list
    binomial_ref: list
    mean_rate: float
    mean_rate_stderr: float
    mean_binomial_ref: float
    recovery_rate: float
    recovery_stderr: float
    exact_match_rate: float
    mean_soft_distance: float
    method: str
    max_mean_set_size: int
    ball_violations: int | None
    acceptance_rate: float


@dataclass
class ExperimentReport:
    n_grid: list
    trials: int
    seed: int
    model: dict
    p_hat: list
    condorcet_limits: list
    grid: list
    even_n: list
    reduced_fidelity: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **extra) -> str:
        payload = self.to_dict()
        payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True)

    def csv_rows(self):
        for g in self.grid:
            for j, rate in enumerate(g.point_rates):
                yield {
                    "n": g.n,
                    "point": j,
                    "rate": rate,
                    "stderr": g.point_stderr[j],
                    "binomial_ref": g.binomial_ref[j],
                    "recovery_rate": g.recovery_rate,
                }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, ["n", "point", "rate", "stderr", "binomial_ref", "recovery_rate"], lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(self.csv_rows())
        return buf.getvalue()


def run_convergence_experiment(
    model: EnsembleModel,
    n_grid,
    trials: int,
    seed: int = 0,
    budget: int | None = None,
    max_ell: int = MAX_VOTE_ELL,
) -> ExperimentReport:
    """Majority-correct and exact-recovery rates of the mean partition across sample sizes."""
    n_grid = [int(n) for n in n_grid]
    if not n_grid or any(n < 1 for n in n_grid):
        raise ValueError("n_grid must be a non-empty list of positive sizes")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    budget = default_budget() if budget is None else budget

    accs = [_run_trials(model, n, trials, seed, budget, max_ell) for n in n_grid]
    voters = sum(a.voters for a in accs)
    p_hat = sum(a.voter_correct for a in accs) / voters

    grid = []
    for n, acc in zip(n_grid, accs):
        rates = acc.votes / trials
        refs = [binomial_majority_prob(n, float(p)) for p in p_hat]
        trial_means = np.array(acc.trial_means)
        recovery = acc.recoveries / trials
        grid.append(GridResult(
            n=n,
            point_rates=rates.tolist(),
            point_stderr=[_stderr(r, trials) for r in rates],
            binomial_ref=refs,
            mean_rate=float(trial_means.mean()),
            mean_rate_stderr=float(trial_means.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
            mean_binomial_ref=float(np.mean(refs)),
            recovery_rate=recovery,
            recovery_stderr=_stderr(recovery, trials),
            exact_match_rate=acc.exact_matches / trials,
            mean_soft_distance=acc.soft_distance / trials,
            method="+".join(sorted(acc.methods)),
            max_mean_set_size=acc.max_mean_set,
            ball_violations=acc.ball_violations if model.homogeneity_mode == "ball" else None,
            acceptance_rate=acc.voters / acc.draws,
        ))
    return ExperimentReport(
        n_grid=n_grid,
        trials=trials,
        seed=seed,
        model=model.to_dict(),
        p_hat=p_hat.tolist(),
        condorcet_limits=[condorcet_limit(float(p)) for p in p_hat],
        grid=grid,
        even_n=[n for n in n_grid if n % 2 == 0],
        reduced_fidelity=not all(a.exhaustive for a in accs),
    )
