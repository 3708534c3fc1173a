"""Partition representations, the quotient metric and asymmetry geometry.

A labeled partition is an ``ell x m`` column-stochastic matrix.  Permuting its
rows relabels the clusters without changing the clustering, so an (unlabeled)
partition is an orbit under row permutations.  Orbits are stored through a
canonical representative whose rows are sorted lexicographically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatchError, InvalidMatrixError, SymmetricCenterError

TOL = 1e-9
# profits within TIE_TOL of the optimum count as ties for the lexicographic rule
TIE_TOL = 1e-11
# largest ell for which the batched path enumerates every permutation (6! = 720)
ENUM_MAX_ELL = 6
_SORT_DECIMALS = 9


@dataclass(frozen=True, eq=False)
class LabeledPartition:
    """A concrete membership matrix; entry ``[k, j]`` is the degree to which
    point ``j`` belongs to cluster ``k``."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidMatrixError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidMatrixError("matrix contains non-finite entries")
        if a.min() < -TOL or a.max() > 1 + TOL:
            raise InvalidMatrixError("entries must lie in [0, 1]")
        sums = a.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > TOL)
        if bad.size:
            raise InvalidMatrixError(
                f"column {int(bad[0])} sums to {sums[bad[0]]!r}, expected 1"
            )
        np.clip(a, 0.0, 1.0, out=a)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "LabeledPartition":
        # internal constructor for matrices already known to be valid
        obj = object.__new__(cls)
        a = np.array(a, dtype=float)
        a.setflags(write=False)
        object.__setattr__(obj, "matrix", a)
        return obj

    @classmethod
    def from_labels(cls, labels, ell: int) -> "LabeledPartition":
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.size == 0:
            raise InvalidMatrixError("labels must be a non-empty 1-d sequence")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise InvalidMatrixError("labels must be integers")
            labels = labels.astype(int)
        if ell < 1 or labels.min() < 0 or labels.max() >= ell:
            raise InvalidMatrixError(f"labels must lie in [0, {ell})")
        a = np.zeros((ell, labels.size))
        a[labels, np.arange(labels.size)] = 1.0
        return cls._trusted(a)

    @property
    def ell(self) -> int:
        return self.matrix.shape[0]

    @property
    def m(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_hard(self) -> bool:
        return bool(np.all((self.matrix == 0.0) | (self.matrix == 1.0)))

    def labels(self) -> np.ndarray:
        if not self.is_hard:
            raise InvalidMatrixError("only hard partitions have label vectors")
        return self.matrix.argmax(axis=0)

    def permuted(self, perm) -> "LabeledPartition":
        """Row ``a`` of the result is row ``perm[a]`` of this matrix."""
        return LabeledPartition._trusted(self.matrix[list(perm)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def to_dict(self) -> dict:
        return {"ell": self.ell, "m": self.m, "rows": self.matrix.tolist()}

    def __eq__(self, other):
        if not isinstance(other, LabeledPartition):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and _matrices_equal(self.matrix, other.matrix)

    __hash__ = None

    def __repr__(self):
        return f"LabeledPartition(ell={self.ell}, m={self.m}, rows={self.matrix.tolist()})"


def _matrices_equal(a, b, atol=TOL) -> bool:
    if np.array_equal(a, b):
        return True
    hard = np.all((a == 0) | (a == 1)) and np.all((b == 0) | (b == 1))
    return (not hard) and bool(np.allclose(a, b, rtol=0.0, atol=atol))


def _row_order(a: np.ndarray) -> np.ndarray:
    keys = np.round(a, _SORT_DECIMALS) + 0.0  # + 0.0 folds -0.0 into 0.0
    return np.lexsort(keys.T[::-1])


@dataclass(frozen=True, eq=False)
class Partition:
    """Unlabeled partition, held as its row-sorted representative.

    Building one from any representative sorts the rows, so two partitions
    compare equal exactly when their canonical matrices agree.
    """

    canonical: LabeledPartition

    def __post_init__(self):
        rep = self.canonical
        if not isinstance(rep, LabeledPartition):
            rep = LabeledPartition(rep)
        order = _row_order(rep.matrix)
        if np.any(order != np.arange(order.size)):
            rep = LabeledPartition._trusted(rep.matrix[order])
        object.__setattr__(self, "canonical", rep)

    @classmethod
    def from_labels(cls, labels, ell: int) -> "Partition":
        return cls(LabeledPartition.from_labels(labels, ell))

    @classmethod
    def from_matrix(cls, matrix) -> "Partition":
        return cls(LabeledPartition(matrix))

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "Partition":
        return cls(LabeledPartition._trusted(a))

    @property
    def matrix(self) -> np.ndarray:
        return self.canonical.matrix

    @property
    def ell(self) -> int:
        return self.canonical.ell

    @property
    def m(self) -> int:
        return self.canonical.m

    @property
    def is_hard(self) -> bool:
        return self.canonical.is_hard

    def sort_key(self, decimals: int = _SORT_DECIMALS) -> tuple:
        return tuple((np.round(self.matrix, decimals) + 0.0).ravel().tolist())

    def to_dict(self) -> dict:
        return self.canonical.to_dict()

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.canonical == other.canonical

    __hash__ = None

    def __repr__(self):
        if self.is_hard:
            return f"Partition(ell={self.ell}, labels={self.canonical.labels().tolist()})"
        return f"Partition(ell={self.ell}, m={self.m}, rows={self.matrix.tolist()})"


@dataclass(frozen=True)
class AlignmentResult:
    distance: float
    permutation: tuple
    aligned: LabeledPartition


def canonicalize(rep: LabeledPartition) -> Partition:
    if not isinstance(rep, LabeledPartition):
        rep = LabeledPartition(rep)
    return Partition(rep)


def _check_dims(a, b):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")


@lru_cache(maxsize=None)
def permutation_table(ell: int) -> np.ndarray:
    """All permutations of ``range(ell)`` as rows, in lexicographic order."""
    return np.array(list(permutations(range(ell))), dtype=np.intp).reshape(-1, ell)


def lex_optimal_permutation(profit: np.ndarray, tol: float = TIE_TOL) -> tuple:
    """Lexicographically smallest permutation maximizing ``sum_a profit[a, perm[a]]``.

    The optimum comes from the Hungarian solver; positions are then fixed one
    at a time to the smallest column that still admits an optimal completion.
    """
    profit = np.asarray(profit, dtype=float)
    ell = profit.shape[0]
    rows, cols = linear_sum_assignment(profit, maximize=True)
    best = profit[rows, cols].sum()
    ident = np.trace(profit)
    if ident >= best - tol:
        return tuple(range(ell))
    perm = []
    fixed = 0.0
    free = list(range(ell))
    for a in range(ell):
        for b in free:
            rest_rows = list(range(a + 1, ell))
            rest_cols = [c for c in free if c != b]
            rest = 0.0
            if rest_rows:
                sub = profit[np.ix_(rest_rows, rest_cols)]
                r, c = linear_sum_assignment(sub, maximize=True)
                rest = sub[r, c].sum()
            if fixed + profit[a, b] + rest >= best - tol:
                perm.append(b)
                fixed += profit[a, b]
                free.remove(b)
                break
        else:  # pragma: no cover - the optimal column always exists
            raise RuntimeError("tie-break search failed")
    return tuple(perm)


def align(x, y) -> AlignmentResult:
    """Put representative ``y`` into optimal position with representative ``x``."""
    xm = x.matrix if isinstance(x, (LabeledPartition, Partition)) else np.asarray(x, float)
    ym = y.matrix if isinstance(y, (LabeledPartition, Partition)) else np.asarray(y, float)
    _check_dims(xm, ym)
    perm = lex_optimal_permutation(xm @ ym.T)
    aligned = ym[list(perm)]
    return AlignmentResult(
        distance=float(np.linalg.norm(xm - aligned)),
        permutation=perm,
        aligned=LabeledPartition._trusted(aligned),
    )


def optimal_position(X: Partition, Y: Partition) -> AlignmentResult:
    """Optimal position of ``Y``'s canonical representative against ``X``'s.

    ``permutation[a]`` is the row of ``Y.canonical`` moved to row ``a``.
    """
    return align(X.canonical, Y.canonical)


def delta(X: Partition, Y: Partition) -> AlignmentResult:
    """Quotient distance: the smallest Frobenius norm over all relabelings."""
    return optimal_position(X, Y)


def best_permutations(profits: np.ndarray, tol: float = TIE_TOL):
    """Vectorized lexicographic-optimal permutations for a stack of profit matrices.

    Returns ``(perms, values)`` with ``perms`` of shape ``(..., ell)``.
    """
    profits = np.asarray(profits, dtype=float)
    ell = profits.shape[-1]
    lead = profits.shape[:-2]
    if ell <= ENUM_MAX_ELL:
        table = permutation_table(ell)
        vals = profits[..., np.arange(ell), table].sum(axis=-1)
        best = vals.max(axis=-1, keepdims=True)
        idx = np.argmax(vals >= best - tol, axis=-1)
        return table[idx], np.take_along_axis(vals, idx[..., None], -1)[..., 0]
    flat = profits.reshape(-1, ell, ell)
    perms = np.array([lex_optimal_permutation(p) for p in flat], dtype=np.intp)
    vals = np.take_along_axis(flat, perms[:, :, None], 2)[:, :, 0].sum(-1)
    return perms.reshape(*lead, ell), vals.reshape(lead)


def align_stack(stack: np.ndarray, target: np.ndarray):
    """Align every matrix in ``stack`` (n, ell, m) to ``target`` (ell, m).

    Returns the aligned stack, the permutations and the squared distances.
    """
    stack = np.asarray(stack, dtype=float)
    target = np.asarray(target, dtype=float)
    if stack.shape[1:] != target.shape:
        raise DimensionMismatchError(f"shapes {stack.shape[1:]} and {target.shape} differ")
    profits = np.einsum("km,nlm->nkl", target, stack)
    perms, _ = best_permutations(profits)
    aligned = np.take_along_axis(stack, perms[:, :, None], axis=1)
    diff = aligned - target
    return aligned, perms, np.einsum("nkm,nkm->n", diff, diff)


def _row_sq_dists(a: np.ndarray) -> np.ndarray:
    g = a @ a.T
    d = np.diag(g)
    return np.maximum(d[:, None] + d[None, :] - 2 * g, 0.0)


def asymmetry_squared(Z) -> float:
    a = Z.matrix if isinstance(Z, (Partition, LabeledPartition)) else np.asarray(Z, float)
    ell = a.shape[0]
    if ell < 2:
        return math.inf
    d = _row_sq_dists(a)
    return 2.0 * float(d[np.triu_indices(ell, 1)].min())


def degree_of_asymmetry(Z: Partition) -> float:
    """Distance from ``Z`` to its nearest non-trivial relabeling.

    Every non-identity permutation moves at least two rows, so the closest
    pair of rows swapped gives the minimum: ``sqrt(2) * min ||row_i - row_j||``.
    A single-row partition has no non-identity relabeling; ``inf`` is returned.
    """
    return math.sqrt(asymmetry_squared(Z))


def in_asymmetry_ball(X: Partition, Z: Partition, strict: bool = False) -> bool:
    """Whether ``delta(X, Z) <= alpha_Z / 4`` (``<`` when ``strict``)."""
    _check_dims(X.matrix, Z.matrix)
    a2 = asymmetry_squared(Z)
    if a2 == 0.0:
        return False if strict else bool(delta(X, Z).distance == 0.0)
    d2 = delta(Z, X).distance ** 2
    r2 = a2 / 16.0
    if strict:
        return bool(d2 < r2 - TOL)
    return bool(d2 <= r2 + TOL)


def in_dirichlet_domain(rep: LabeledPartition, z_rep: LabeledPartition) -> bool:
    """Whether ``rep`` is at least as close to ``z_rep`` as to any relabeling of it."""
    _check_dims(rep.matrix, z_rep.matrix)
    if asymmetry_squared(z_rep) == 0.0:
        raise SymmetricCenterError("the center represents a symmetric partition")
    direct = float(np.linalg.norm(rep.matrix - z_rep.matrix))
    return abs(direct - align(z_rep, rep).distance) <= TOL
