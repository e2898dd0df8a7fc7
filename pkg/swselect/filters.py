"""
Voting filters for unsupervised outlier detection.

Every filter shares one voting structure: sample ``z_i`` gets ``n`` votes,
one per randomly chosen other sample ``z_j``, and a vote is positive when a
distance between the two leave-one-out distributions reaches a threshold.
A sample is an outlier when at least a fraction ``p`` of its votes are
positive.

- SWAD scores a vote with the sliced distance between the leave-one-out
  distributions.
- FEAD scores it with ``|z_i - z_j| / (N - 1)^(1/t)``, the single-sample
  transport bound.
- sSWAD runs SWAD on cluster-stratified splits with proportionally scaled
  ``n`` and ``epsilon`` and takes the union of the flagged sets.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any
from typing import Protocol

import numpy as np

from .dataio import Dataset
from .errors import InvalidArgumentError
from .seeding import check_seed
from .seeding import substream
from .splitting import deal_splits
from .splitting import kmeans
from .transport import DirectionSet
from .transport import check_order
from .transport import project_rows
from .transport import sample_unit_directions

logger = logging.getLogger(__name__)

# Rows per work unit. Fixed so the split of work never depends on the thread count.
CHUNK_SIZE = 512


class Method(str, enum.Enum):
    SWAD = 'SWAD'
    SSWAD = 'sSWAD'
    FEAD = 'FEAD'


def _check_common(t: float, threshold: float, name: str, n_votes: int, p: float) -> None:
    check_order(t)
    if not math.isfinite(threshold) or threshold < 0:
        raise InvalidArgumentError(f'{name} must be a finite real >= 0, got {threshold!r}')
    if isinstance(n_votes, bool) or int(n_votes) != n_votes or n_votes < 1:
        raise InvalidArgumentError(f'n_votes must be a positive integer, got {n_votes!r}')
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f'p_threshold must lie in [0, 1], got {p!r}')


@dataclass(frozen=True)
class SwadParams:
    epsilon: float
    t: float = 2.0
    n_votes: int = 150
    p_threshold: float = 0.8
    n_projections: int = 40
    seed: int = 0

    def __post_init__(self) -> None:
        _check_common(self.t, self.epsilon, 'epsilon', self.n_votes, self.p_threshold)
        if self.n_projections < 1:
            raise InvalidArgumentError(
                f'n_projections must be >= 1, got {self.n_projections!r}'
            )
        check_seed(self.seed)


@dataclass(frozen=True)
class FeadParams:
    eta: float
    t: float = 2.0
    n_votes: int = 150
    p_threshold: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        _check_common(self.t, self.eta, 'eta', self.n_votes, self.p_threshold)
        check_seed(self.seed)


@dataclass(frozen=True)
class SswadParams:
    """SWAD parameters for the whole dataset plus the clustering and split counts."""

    base: SwadParams
    k_clusters: int = 3
    s_splits: int = 3

    def __post_init__(self) -> None:
        if self.k_clusters < 1 or self.s_splits < 1:
            raise InvalidArgumentError(
                f'K and S must be >= 1, got K={self.k_clusters!r}, S={self.s_splits!r}'
            )

    @property
    def seed(self) -> int:
        return self.base.seed


@dataclass(frozen=True)
class OutlierReport:
    """
    Per-sample vote fractions and outlier labels of one filter run.

    ``vote_fraction`` doubles as a confidence score; arrays are aligned with
    the rows of the filtered dataset and with ``row_ids``.
    """

    vote_fraction: np.ndarray
    is_outlier: np.ndarray
    params_echo: dict[str, Any]
    seed: int
    method: Method
    row_ids: np.ndarray

    @property
    def n_outliers(self) -> int:
        return int(np.count_nonzero(self.is_outlier))

    @property
    def outlier_ids(self) -> np.ndarray:
        return self.row_ids[np.asarray(self.is_outlier, dtype=bool)]


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise InvalidArgumentError(f'threads must be >= 0, got {threads!r}')
    return threads or os.cpu_count() or 1


def vote_indices(
    i: int,
    n_samples: int,
    n_votes: int,
    seed: int,
    key: int | None = None,
) -> np.ndarray:
    """
    ``n_votes`` distinct indices of ``range(n_samples)`` other than ``i``.

    Drawn without replacement from a substream of ``seed`` keyed on ``key``
    (``i`` by default), so the draw for one sample never depends on any
    other.
    """
    if not 0 <= i < n_samples:
        raise InvalidArgumentError(f'Index {i!r} out of range for N={n_samples!r}')
    if not 1 <= n_votes <= n_samples - 1:
        raise InvalidArgumentError(
            f'n_votes must lie in [1, N-1] = [1, {n_samples - 1}], got {n_votes!r}'
        )
    rng = substream(seed, i if key is None else key)
    picks = rng.choice(n_samples - 1, size=n_votes, replace=False)
    picks[picks >= i] += 1
    return picks


class Scorer(Protocol):
    def distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Vote distances for rows ``i`` (shape (c,)) against ``j`` (shape (c, n))."""


class LeaveOneOutSliced:
    """
    Sliced distances between leave-one-out distributions of one dataset.

    Each direction's projections are sorted once. Dropping ``z_i`` or ``z_j``
    from the sorted array shifts only the entries between their two ranks
    ``a < b``, so the 1-D cost is the sum of ``gap^t`` over the consecutive
    gaps from ``a`` to ``b``. At ``t == 1`` the gaps telescope to
    ``x[b] - x[a]``; otherwise the range is summed from a segment tree, which
    only ever adds gaps inside the range.
    """

    def __init__(self, rows: np.ndarray, t: float, dirs: DirectionSet) -> None:
        self.t = check_order(t)
        self.n_samples = rows.shape[0]
        self.n_directions = dirs.n_directions
        projected = project_rows(rows, dirs.directions)
        order = np.argsort(projected, axis=0, kind='stable')
        self.sorted = np.take_along_axis(projected, order, axis=0)
        self.rank = np.empty_like(order)
        np.put_along_axis(self.rank, order, np.arange(self.n_samples)[:, None], axis=0)
        gaps = np.diff(self.sorted, axis=0) ** self.t
        # leaves start at ``width``; node k holds the sum of nodes 2k and 2k + 1
        self.width = 1 << max(0, (gaps.shape[0] - 1).bit_length())
        self.tree = np.zeros((2 * self.width, self.n_directions), dtype=np.float64)
        self.tree[self.width : self.width + gaps.shape[0]] = gaps
        level = self.width // 2
        while level >= 1:
            children = self.tree[2 * level : 4 * level]
            self.tree[level : 2 * level] = children[0::2] + children[1::2]
            level //= 2

    def _range_sums(self, direction: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Sum of the gaps ``lo .. hi - 1`` along one direction, elementwise."""
        tree = self.tree[:, direction]
        left = lo + self.width
        right = hi + self.width
        total = np.zeros(lo.shape, dtype=np.float64)
        active = left < right
        while active.any():
            take = active & (left % 2 == 1)
            total[take] += tree[left[take]]
            left = left + take
            take = active & (right % 2 == 1)
            right = right - take
            total[take] += tree[right[take]]
            left //= 2
            right //= 2
            active = left < right
        return total

    def distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        total = np.zeros(j.shape, dtype=np.float64)
        for direction in range(self.n_directions):
            rank_i = self.rank[i, direction][:, None]
            rank_j = self.rank[j, direction]
            lo = np.minimum(rank_i, rank_j)
            hi = np.maximum(rank_i, rank_j)
            if self.t == 1.0:
                column = self.sorted[:, direction]
                total += column[hi] - column[lo]
            else:
                total += self._range_sums(direction, lo, hi)
        mean_cost = total / (self.n_directions * (self.n_samples - 1))
        return mean_cost ** (1.0 / self.t)


class EuclideanBound:
    """``|z_i - z_j|_2 / (N - 1)^(1/t)``, the single-sample transport bound."""

    def __init__(self, rows: np.ndarray, t: float) -> None:
        self.rows = rows
        self.scale = (rows.shape[0] - 1) ** (1.0 / check_order(t))

    def distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        squared = np.zeros(j.shape, dtype=np.float64)
        for k in range(self.rows.shape[1]):
            column = self.rows[:, k]
            squared += (column[j] - column[i][:, None]) ** 2
        return np.sqrt(squared) / self.scale


class VoteEngine:
    """
    Draws the votes of one run and scores them once.

    ``report`` then turns the stored distances into an OutlierReport for any
    threshold, which is what threshold sweeps reuse. Rows are keyed by row
    id: the vote candidates of a row are ranks in row-id order, so
    reordering the dataset reorders the report and nothing else.
    """

    def __init__(
        self,
        data: Dataset,
        scorer: Scorer,
        n_votes: int,
        seed: int,
        threads: int = 1,
    ) -> None:
        n_samples = data.n_samples
        if n_samples < 2 or n_votes > n_samples - 1:
            raise InvalidArgumentError(
                f'n_votes={n_votes!r} needs at least {n_votes + 1} samples, got N={n_samples}'
            )
        self.data = data
        self.scorer = scorer
        self.n_votes = n_votes
        self.seed = check_seed(seed)
        self.by_id = np.argsort(data.row_ids, kind='stable')
        self.id_rank = np.empty(n_samples, dtype=np.intp)
        self.id_rank[self.by_id] = np.arange(n_samples)

        self.votes = np.empty((n_samples, n_votes), dtype=np.intp)
        self.distances = np.empty((n_samples, n_votes), dtype=np.float64)
        chunks = [
            np.arange(start, min(start + CHUNK_SIZE, n_samples))
            for start in range(0, n_samples, CHUNK_SIZE)
        ]
        started = time.perf_counter()
        workers = min(resolve_threads(threads), len(chunks))
        if workers == 1:
            for chunk in chunks:
                self._score_chunk(chunk)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(self._score_chunk, chunks))
        logger.debug(
            'Scored %d x %d votes on %d thread(s) in %.3fs',
            n_samples,
            n_votes,
            workers,
            time.perf_counter() - started,
        )

    def _score_chunk(self, chunk: np.ndarray) -> None:
        n_samples = self.data.n_samples
        for i in chunk:
            ranks = vote_indices(
                int(self.id_rank[i]),
                n_samples,
                self.n_votes,
                self.seed,
                key=int(self.data.row_ids[i]),
            )
            self.votes[i] = self.by_id[ranks]
        self.distances[chunk] = self.scorer.distances(chunk, self.votes[chunk])

    def positive_votes(self, threshold: float) -> np.ndarray:
        return self.distances >= threshold

    def report(
        self,
        threshold: float,
        p_threshold: float,
        method: Method,
        params_echo: dict[str, Any],
    ) -> OutlierReport:
        positives = np.count_nonzero(self.positive_votes(threshold), axis=1)
        vote_fraction = positives / self.n_votes
        return OutlierReport(
            vote_fraction=vote_fraction,
            is_outlier=vote_fraction >= p_threshold,
            params_echo=params_echo,
            seed=self.seed,
            method=method,
            row_ids=self.data.row_ids,
        )


def _echo(params: Any) -> dict[str, Any]:
    return dataclasses.asdict(params)


def swad_engine(
    data: Dataset,
    params: SwadParams,
    threads: int = 1,
    dirs: DirectionSet | None = None,
) -> VoteEngine:
    if dirs is None:
        dirs = sample_unit_directions(data.n_features, params.n_projections, params.seed)
    scorer = LeaveOneOutSliced(data.rows, params.t, dirs)
    return VoteEngine(data, scorer, params.n_votes, params.seed, threads)


def fead_engine(data: Dataset, params: FeadParams, threads: int = 1) -> VoteEngine:
    scorer = EuclideanBound(data.rows, params.t)
    return VoteEngine(data, scorer, params.n_votes, params.seed, threads)


def swad_filter(data: Dataset, params: SwadParams, threads: int = 1) -> OutlierReport:
    """
    Flag ``z_i`` when the sliced distance between the dataset without
    ``z_i`` and the dataset without ``z_j`` is at least ``epsilon`` for at
    least a fraction ``p_threshold`` of the voted ``z_j``.

    One set of ``n_projections`` directions, drawn from ``seed``, serves every
    vote of the run.
    """
    engine = swad_engine(data, params, threads)
    return engine.report(params.epsilon, params.p_threshold, Method.SWAD, _echo(params))


def fead_filter(data: Dataset, params: FeadParams, threads: int = 1) -> OutlierReport:
    """
    Flag ``z_i`` when ``|z_i - z_j|_2 / (N - 1)^(1/t) >= eta`` for at least
    a fraction ``p_threshold`` of the voted ``z_j``.
    """
    engine = fead_engine(data, params, threads)
    return engine.report(params.eta, params.p_threshold, Method.FEAD, _echo(params))


def split_params(base: SwadParams, split_size: int, n_samples: int) -> SwadParams:
    """
    Scale ``n_votes`` and ``epsilon`` by the split's share of the dataset.

    ``n_votes`` is rounded half up with a floor of 1 and clamped to
    ``split_size - 1``; ``epsilon`` is not rounded.
    """
    share = split_size / n_samples
    n_votes = max(1, math.floor(base.n_votes * share + 0.5))
    if n_votes > split_size - 1:
        logger.warning(
            'Split of %d samples cannot hold %d votes; clamping to %d',
            split_size,
            n_votes,
            split_size - 1,
        )
        n_votes = split_size - 1
    return dataclasses.replace(base, epsilon=base.epsilon * share, n_votes=n_votes)


def sswad_filter(data: Dataset, params: SswadParams, threads: int = 1) -> OutlierReport:
    """
    SWAD on ``s_splits`` cluster-stratified splits, united.

    Rows are clustered with k-means into ``k_clusters`` groups, each group is
    dealt over the splits and every split is filtered on its own with scaled
    parameters. A row's vote fraction is the one from its own split. A split
    with at most one row cannot vote and flags nothing; with more splits than
    rows some splits are empty.
    """
    base = params.base
    n_samples = data.n_samples
    if params.k_clusters > n_samples:
        raise InvalidArgumentError(
            f'K={params.k_clusters!r} clusters requested for N={n_samples} samples'
        )
    assignment = kmeans(data, params.k_clusters, base.seed)
    splits = deal_splits(assignment, params.s_splits, base.seed)

    vote_fraction = np.zeros(n_samples, dtype=np.float64)
    is_outlier = np.zeros(n_samples, dtype=bool)
    split_echo = []
    for index, at in enumerate(splits):
        if at.shape[0] <= 1:
            logger.warning(
                'Split %d has %d sample(s); it contributes no outliers', index, at.shape[0]
            )
            split_echo.append({'size': int(at.shape[0]), 'n_votes': 0, 'epsilon': None})
            continue
        split = data.subset(at)
        scaled = split_params(base, split.n_samples, n_samples)
        split_echo.append({
            'size': split.n_samples,
            'n_votes': scaled.n_votes,
            'epsilon': scaled.epsilon,
        })
        report = swad_filter(split, scaled, threads)
        vote_fraction[at] = report.vote_fraction
        is_outlier[at] = report.is_outlier

    echo = _echo(params)
    echo['splits'] = split_echo
    echo['cluster_sizes'] = np.bincount(assignment.labels, minlength=params.k_clusters).tolist()
    return OutlierReport(
        vote_fraction=vote_fraction,
        is_outlier=is_outlier,
        params_echo=echo,
        seed=base.seed,
        method=Method.SSWAD,
        row_ids=data.row_ids,
    )
