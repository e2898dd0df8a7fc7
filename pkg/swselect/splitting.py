"""
Cluster-stratified splitting of a dataset.

``kmeans`` groups the rows, ``smart_split`` deals each group's members over
S splits so every split is a smaller copy of the whole dataset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataio import Dataset
from .errors import InvalidArgumentError
from .seeding import KMEANS_STREAM
from .seeding import SPLIT_STREAM
from .seeding import check_seed
from .seeding import substream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    iterations_run: int
    inertia: float

    @property
    def n_clusters(self) -> int:
        return int(self.centroids.shape[0])


def _squared_distances(rows: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((rows[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=-1)


def _plus_plus_seeds(rows: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    n_rows = rows.shape[0]
    chosen = [int(rng.integers(n_rows))]
    nearest = ((rows - rows[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, n_clusters):
        total = float(nearest.sum())
        if total > 0.0:
            pick = int(rng.choice(n_rows, p=nearest / total))
        else:
            # fewer distinct rows than clusters: take the first unused row
            pick = next(i for i in range(n_rows) if i not in chosen)
        chosen.append(pick)
        nearest = np.minimum(nearest, ((rows - rows[pick]) ** 2).sum(axis=1))
    return rows[chosen].copy()


def kmeans(data: Dataset, n_clusters: int, seed: int, max_iters: int = 100) -> ClusterAssignment:
    """
    Lloyd iterations from k-means++ seeds.

    Stops once the labels no longer change or after ``max_iters`` rounds.
    A cluster that runs empty is re-seeded at the row farthest from its
    own centroid among the clusters with more than one member, so no
    cluster is left empty. Deterministic in ``seed``.
    """
    rows = data.rows
    n_rows = data.n_samples
    if not 1 <= n_clusters <= n_rows:
        raise InvalidArgumentError(f'Need 1 <= K <= N, got K={n_clusters!r} for N={n_rows}')
    if max_iters < 1:
        raise InvalidArgumentError(f'max_iters must be >= 1, got {max_iters!r}')

    rng = substream(check_seed(seed), KMEANS_STREAM)
    centroids = _plus_plus_seeds(rows, n_clusters, rng)
    labels = np.full(n_rows, -1, dtype=np.intp)
    iterations = 0
    for iterations in range(1, max_iters + 1):
        distances = _squared_distances(rows, centroids)
        new_labels = distances.argmin(axis=1)
        own = distances[np.arange(n_rows), new_labels]
        counts = np.bincount(new_labels, minlength=n_clusters)
        for cluster in np.flatnonzero(counts == 0):
            # only clusters with a member to spare give one up
            spare = np.where(counts[new_labels] > 1, own, -np.inf)
            farthest = int(spare.argmax())
            logger.warning('Cluster %d ran empty; re-seeding at row %d', cluster, farthest)
            centroids[cluster] = rows[farthest]
            counts[new_labels[farthest]] -= 1
            counts[cluster] = 1
            new_labels[farthest] = cluster
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for cluster in range(n_clusters):
            members = labels == cluster
            if members.any():
                centroids[cluster] = rows[members].mean(axis=0)

    inertia = float(((rows - centroids[labels]) ** 2).sum())
    logger.debug('k-means: K=%d, %d iterations, inertia %.6g', n_clusters, iterations, inertia)
    labels.setflags(write=False)
    centroids.setflags(write=False)
    return ClusterAssignment(labels, centroids, iterations, inertia)


def deal_splits(assignment: ClusterAssignment, n_splits: int, seed: int) -> list[np.ndarray]:
    """
    Row positions of ``n_splits`` cluster-stratified splits.

    Each cluster's members are shuffled and dealt round-robin over the
    splits. The deal carries on from one cluster to the next, so small
    clusters do not all land in the first split and split sizes differ by at
    most one. Splits are disjoint and cover every row; with more splits than
    rows the trailing ones are empty.
    """
    if n_splits < 1:
        raise InvalidArgumentError(f'Need S >= 1, got {n_splits!r}')
    labels = np.asarray(assignment.labels)
    rng = substream(check_seed(seed), SPLIT_STREAM)
    parts: list[list[int]] = [[] for _ in range(n_splits)]
    dealt = 0
    for cluster in range(assignment.n_clusters):
        members = rng.permutation(np.flatnonzero(labels == cluster))
        if 0 < members.shape[0] < n_splits:
            logger.debug(
                'Cluster %d has %d members for %d splits', cluster, members.shape[0], n_splits
            )
        for member in members:
            parts[dealt % n_splits].append(int(member))
            dealt += 1
    return [np.array(part, dtype=np.intp) for part in parts]


def smart_split(
    data: Dataset,
    assignment: ClusterAssignment,
    n_splits: int,
    seed: int,
) -> list[Dataset]:
    """
    Partition ``data`` into ``n_splits`` cluster-stratified sub-datasets.

    Same deal as ``deal_splits``. Every split must hold a row, so ``n_splits``
    may not exceed the number of rows.
    """
    if n_splits > data.n_samples:
        raise InvalidArgumentError(f'Cannot deal {data.n_samples} rows into {n_splits} splits')
    if np.asarray(assignment.labels).shape[0] != data.n_samples:
        raise InvalidArgumentError('Cluster labels do not match the dataset')
    return [data.subset(part) for part in deal_splits(assignment, n_splits, seed)]
