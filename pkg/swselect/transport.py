"""
Optimal transport between equal-cardinality empirical distributions.

Contains the closed-form 1-D distance, its Monte-Carlo sliced extension, an
exact permutation/assignment oracle for desk-scale checks, and the
single-sample transport bounds for leave-one-out pairs.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass
from dataclasses import field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidArgumentError
from .errors import SizeLimitError
from .seeding import DIRECTIONS_STREAM
from .seeding import check_seed
from .seeding import substream

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 8
ASSIGNMENT_LIMIT = 512
UNIT_NORM_TOL = 1e-12


class Norm(str, enum.Enum):
    L1 = 'l1'
    L2 = 'l2'


def _as_norm(norm: Norm | str) -> Norm:
    try:
        return Norm(norm)
    except ValueError:
        raise InvalidArgumentError(f'Unknown norm: {norm!r}; expected l1 or l2')


def check_order(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 1:
        raise InvalidArgumentError(f'Transport order t must be a finite real >= 1, got {t!r}')
    return t


def _finite_matrix(values: np.ndarray | Sequence[Sequence[float]], what: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2 or array.shape[1] < 1:
        raise InvalidArgumentError(
            f'{what} must be a 2-D array with d >= 1, got shape {array.shape!r}'
        )
    if not np.isfinite(array).all():
        raise InvalidArgumentError(f'{what} contains NaN or infinite coordinates')
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class EmpiricalDistribution:
    """
    Equal-weight distribution over ``atoms`` (an m x d matrix).

    ``source_indices`` remembers which dataset rows the atoms came from.
    """

    atoms: np.ndarray
    source_indices: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        atoms = _finite_matrix(self.atoms, 'atoms')
        if atoms.shape[0] < 1:
            raise InvalidArgumentError('An empirical distribution needs at least one atom')
        object.__setattr__(self, 'atoms', atoms)
        indices = tuple(int(i) for i in self.source_indices) or tuple(range(atoms.shape[0]))
        if len(indices) != atoms.shape[0]:
            raise InvalidArgumentError(
                f'{len(indices)} source indices given for {atoms.shape[0]} atoms'
            )
        object.__setattr__(self, 'source_indices', indices)

    @property
    def size(self) -> int:
        return int(self.atoms.shape[0])

    @property
    def dim(self) -> int:
        return int(self.atoms.shape[1])

    @classmethod
    def leave_one_out(cls, rows: np.ndarray, index: int) -> EmpiricalDistribution:
        """The distribution of ``rows`` with row ``index`` removed."""
        n_rows = len(rows)
        if not 0 <= index < n_rows:
            raise InvalidArgumentError(f'Row index {index!r} out of range for {n_rows} rows')
        if n_rows < 2:
            raise InvalidArgumentError('Leaving one out needs at least two rows')
        keep = [i for i in range(n_rows) if i != index]
        return cls(np.asarray(rows)[keep], tuple(keep))


@dataclass(frozen=True)
class DirectionSet:
    directions: np.ndarray
    seed: int
    n_directions: int

    @property
    def dim(self) -> int:
        return int(self.directions.shape[1])


@dataclass(frozen=True)
class TransportBounds:
    lower: float
    upper: float


def sample_unit_directions(d: int, n_directions: int, seed: int) -> DirectionSet:
    """
    Draw ``n_directions`` unit vectors uniformly on the sphere in R^d.

    Standard-normal draws are normalized; an all-zero draw is redrawn.
    The result depends only on ``(seed, d, n_directions)``.
    """
    if d < 1 or n_directions < 1:
        raise InvalidArgumentError(
            f'Need d >= 1 and at least one direction, got d={d!r}, L={n_directions!r}'
        )
    rng = substream(check_seed(seed), DIRECTIONS_STREAM)
    draws = rng.standard_normal((n_directions, d))
    norms = np.linalg.norm(draws, axis=1)
    while (zero := norms == 0.0).any():
        draws[zero] = rng.standard_normal((int(zero.sum()), d))
        norms = np.linalg.norm(draws, axis=1)
    directions = draws / norms[:, None]
    directions.setflags(write=False)
    return DirectionSet(directions=directions, seed=seed, n_directions=n_directions)


def project(dist: EmpiricalDistribution, direction: np.ndarray | Sequence[float]) -> np.ndarray:
    """Sorted scalar projections of the atoms onto ``direction``."""
    theta = np.asarray(direction, dtype=np.float64).reshape(-1)
    if theta.shape[0] != dist.dim:
        raise InvalidArgumentError(
            f'Direction has length {theta.shape[0]} but atoms live in R^{dist.dim}'
        )
    if abs(float(np.linalg.norm(theta)) - 1.0) > 1e-9:
        raise InvalidArgumentError('Projection direction must have unit Euclidean norm')
    return np.sort(dist.atoms @ theta)


def project_rows(rows: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """
    N x L matrix of unsorted projections.

    Coordinates are accumulated one at a time so each entry depends only on
    its own row, never on where the row sits in the matrix.
    """
    out = rows[:, :1] * directions[None, :, 0]
    for k in range(1, rows.shape[1]):
        out += rows[:, k : k + 1] * directions[None, :, k]
    return out


def _power_cost(u: np.ndarray, v: np.ndarray, t: float) -> float:
    gaps = np.abs(np.ascontiguousarray(u) - np.ascontiguousarray(v))
    return math.fsum((gaps**t).tolist()) / gaps.shape[0]


def wasserstein_1d(
    u: np.ndarray | Sequence[float],
    v: np.ndarray | Sequence[float],
    t: float,
) -> float:
    """
    Order-t distance between two equal-weight 1-D empiricals.

    Both inputs must already be sorted ascending; the optimal plan then
    matches them rank by rank.
    """
    t = check_order(t)
    u_arr = np.asarray(u, dtype=np.float64).reshape(-1)
    v_arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if u_arr.shape[0] != v_arr.shape[0]:
        raise InvalidArgumentError(
            f'1-D inputs must have equal length, got {u_arr.shape[0]} and {v_arr.shape[0]}'
        )
    if u_arr.shape[0] == 0:
        raise InvalidArgumentError('1-D inputs must not be empty')
    if (np.diff(u_arr) < 0).any() or (np.diff(v_arr) < 0).any():
        raise InvalidArgumentError('1-D inputs must be sorted ascending')
    return _power_cost(u_arr, v_arr, t) ** (1.0 / t)


def _check_pair(a: EmpiricalDistribution, b: EmpiricalDistribution) -> None:
    if a.size != b.size:
        raise InvalidArgumentError(f'Cardinality mismatch: {a.size} vs {b.size} atoms')
    if a.dim != b.dim:
        raise InvalidArgumentError(f'Dimension mismatch: R^{a.dim} vs R^{b.dim}')


def sliced_wasserstein(
    a: EmpiricalDistribution,
    b: EmpiricalDistribution,
    t: float,
    dirs: DirectionSet,
) -> float:
    """
    Monte-Carlo sliced distance over the directions in ``dirs``.

    Per-direction t-th powers are reduced in direction order, so the value
    is the same however the projections are computed.
    """
    t = check_order(t)
    _check_pair(a, b)
    if dirs.dim != a.dim:
        raise InvalidArgumentError(
            f'Directions live in R^{dirs.dim} but atoms live in R^{a.dim}'
        )
    proj_a = np.sort(a.atoms @ dirs.directions.T, axis=0)
    proj_b = np.sort(b.atoms @ dirs.directions.T, axis=0)
    per_direction = [
        _power_cost(proj_a[:, l], proj_b[:, l], t) for l in range(dirs.n_directions)
    ]
    return (math.fsum(per_direction) / dirs.n_directions) ** (1.0 / t)


def pairwise_costs(
    u: np.ndarray,
    v: np.ndarray,
    t: float,
    norm: Norm | str = Norm.L2,
) -> np.ndarray:
    diff = u[:, None, :] - v[None, :, :]
    if _as_norm(norm) is Norm.L1:
        dist = np.abs(diff).sum(axis=-1)
    else:
        dist = np.sqrt((diff**2).sum(axis=-1))
    return dist**t


def exact_wasserstein(
    a: EmpiricalDistribution,
    b: EmpiricalDistribution,
    t: float,
    norm: Norm | str = Norm.L2,
) -> float:
    """
    Exact order-t distance, minimized over all atom matchings.

    Small inputs are enumerated permutation by permutation; larger ones go
    through a linear assignment solver on the cost matrix ``|u_i - v_j|^t``.
    Only meant as a desk-scale oracle.
    """
    t = check_order(t)
    _check_pair(a, b)
    m = a.size
    if m > ASSIGNMENT_LIMIT:
        raise SizeLimitError(
            f'Exact transport is limited to {ASSIGNMENT_LIMIT} atoms, got {m}'
        )
    # fixed argument order keeps the result bit-identical under swapping
    if a.atoms.tobytes() > b.atoms.tobytes():
        a, b = b, a
    costs = pairwise_costs(a.atoms, b.atoms, t, norm)
    if m <= BRUTE_FORCE_LIMIT:
        perms = np.array(list(itertools.permutations(range(m))), dtype=np.intp)
        totals = costs[np.arange(m), perms].sum(axis=1)
        best = float(totals.min())
    else:
        logger.debug('Solving %d x %d assignment problem', m, m)
        rows, cols = linear_sum_assignment(costs)
        best = float(costs[rows, cols].sum())
    return (best / m) ** (1.0 / t)


def single_sample_bounds(
    z_k: np.ndarray | Sequence[float],
    z_l: np.ndarray | Sequence[float],
    n_samples: int,
    t: float,
    norm: Norm | str = Norm.L2,
) -> TransportBounds:
    """
    Bounds on the distance between the two leave-one-out distributions that
    drop ``z_k`` and ``z_l`` from an ``n_samples`` dataset.

    The upper bound is the plan that moves only the differing atom; at
    ``t == 1`` it is optimal and both bounds coincide.
    """
    t = check_order(t)
    if n_samples < 2:
        raise InvalidArgumentError(f'Need at least two samples, got N={n_samples!r}')
    zk = np.asarray(z_k, dtype=np.float64).reshape(-1)
    zl = np.asarray(z_l, dtype=np.float64).reshape(-1)
    if zk.shape != zl.shape:
        raise InvalidArgumentError(f'Sample dimension mismatch: {zk.shape[0]} vs {zl.shape[0]}')
    diff = zk - zl
    if _as_norm(norm) is Norm.L1:
        gap = float(np.abs(diff).sum())
    else:
        gap = float(np.linalg.norm(diff))
    lower = gap / (n_samples - 1)
    upper = lower if t == 1.0 else gap / (n_samples - 1) ** (1.0 / t)
    return TransportBounds(lower=lower, upper=upper)
