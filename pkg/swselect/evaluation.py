"""
Classification metrics, bound verification and threshold sweeps.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Sequence
from typing import Union

import numpy as np

from .dataio import Dataset
from .dataio import MixtureComponent
from .dataio import MixtureSpec
from .errors import InvalidArgumentError
from .errors import SizeLimitError
from .filters import FeadParams
from .filters import Method
from .filters import OutlierReport
from .filters import SwadParams
from .filters import fead_engine
from .filters import swad_engine
from .seeding import PAIRS_STREAM
from .seeding import check_seed
from .seeding import substream
from .transport import ASSIGNMENT_LIMIT
from .transport import EmpiricalDistribution
from .transport import Norm
from .transport import check_order
from .transport import exact_wasserstein
from .transport import single_sample_bounds

logger = logging.getLogger(__name__)

REL_TOL = 1e-9
ABS_TOL = 1e-12

FilterParams = Union[SwadParams, FeadParams]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(
    predicted: Sequence[bool] | np.ndarray,
    truth: Sequence[bool] | np.ndarray,
) -> ConfusionCounts:
    """Counts with "outlier" as the positive class."""
    pred = np.asarray(predicted, dtype=bool).reshape(-1)
    true = np.asarray(truth, dtype=bool).reshape(-1)
    if pred.shape != true.shape:
        raise InvalidArgumentError(
            f'Predictions and truth differ in length: {pred.shape[0]} vs {true.shape[0]}'
        )
    return ConfusionCounts(
        tp=int(np.count_nonzero(pred & true)),
        fp=int(np.count_nonzero(pred & ~true)),
        tn=int(np.count_nonzero(~pred & ~true)),
        fn=int(np.count_nonzero(~pred & true)),
    )


def accuracy(counts: ConfusionCounts) -> float:
    if counts.total == 0:
        raise InvalidArgumentError('Accuracy of an empty evaluation is undefined')
    return (counts.tp + counts.tn) / counts.total


def precision(counts: ConfusionCounts) -> float | None:
    """Precision, or None when nothing was flagged."""
    if counts.total == 0:
        raise InvalidArgumentError('Precision of an empty evaluation is undefined')
    flagged = counts.tp + counts.fp
    if flagged == 0:
        return None
    return counts.tp / flagged


def within(lower: float, value: float, upper: float) -> bool:
    """``lower <= value <= upper`` up to rel 1e-9 with an absolute floor of 1e-12."""
    slack_low = max(REL_TOL * abs(lower), ABS_TOL)
    slack_high = max(REL_TOL * abs(upper), ABS_TOL)
    return lower - slack_low <= value <= upper + slack_high


@dataclass(frozen=True)
class BoundCheckRecord:
    k: int
    l: int  # noqa: E741
    t: float
    lower: float
    exact: float
    upper: float
    satisfied: bool


@dataclass(frozen=True)
class BoundSummary:
    n_records: int
    n_satisfied: int
    max_gap_at_order_one: float

    @property
    def fraction_satisfied(self) -> float:
        return self.n_satisfied / self.n_records if self.n_records else 1.0

    @property
    def all_satisfied(self) -> bool:
        return self.n_satisfied == self.n_records


def _random_pairs(n_samples: int, n_pairs: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    all_pairs = n_samples * (n_samples - 1) // 2
    if n_pairs >= all_pairs:
        return [(k, l) for k in range(n_samples) for l in range(k + 1, n_samples)]  # noqa: E741
    chosen: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    while len(chosen) < n_pairs:
        k, l = (int(x) for x in rng.choice(n_samples, size=2, replace=False))  # noqa: E741
        pair = (min(k, l), max(k, l))
        if pair not in seen:
            seen.add(pair)
            chosen.append(pair)
    return chosen


def verify_bounds(
    n_samples: int = 100,
    dim: int = 2,
    t_values: Sequence[float] = (1.0, 2.0),
    n_pairs: int = 200,
    seed: int = 0,
    norm: Norm | str = Norm.L2,
) -> list[BoundCheckRecord]:
    """
    Check the single-sample transport bounds against the exact oracle.

    Draws ``n_samples`` standard-Gaussian points in R^dim, picks ``n_pairs``
    distinct pairs ``(k, l)`` (all pairs when fewer exist) and, for each
    order, compares the exact distance between the dataset without ``z_k``
    and the dataset without ``z_l`` to its bounds.
    """
    if n_samples < 2:
        raise InvalidArgumentError(f'Need at least two samples, got N={n_samples!r}')
    if n_samples > ASSIGNMENT_LIMIT:
        raise SizeLimitError(
            f'N={n_samples} exceeds the exact oracle limit of {ASSIGNMENT_LIMIT} samples'
        )
    if dim < 1 or n_pairs < 1:
        raise InvalidArgumentError(f'Need d >= 1 and n_pairs >= 1, got {dim!r}, {n_pairs!r}')
    orders = [check_order(t) for t in t_values]
    if not orders:
        raise InvalidArgumentError('At least one transport order is required')

    rng = substream(check_seed(seed), PAIRS_STREAM)
    rows = rng.standard_normal((n_samples, dim))
    pairs = _random_pairs(n_samples, n_pairs, rng)

    records = []
    for k, l in pairs:  # noqa: E741
        without_k = EmpiricalDistribution.leave_one_out(rows, k)
        without_l = EmpiricalDistribution.leave_one_out(rows, l)
        for t in orders:
            bounds = single_sample_bounds(rows[k], rows[l], n_samples, t, norm)
            exact = exact_wasserstein(without_k, without_l, t, norm)
            records.append(
                BoundCheckRecord(
                    k=k,
                    l=l,
                    t=t,
                    lower=bounds.lower,
                    exact=exact,
                    upper=bounds.upper,
                    satisfied=within(bounds.lower, exact, bounds.upper),
                )
            )
    failed = sum(not r.satisfied for r in records)
    if failed:
        logger.error('%d of %d bound records violated', failed, len(records))
    return records


def summarize_bounds(records: Sequence[BoundCheckRecord]) -> BoundSummary:
    gaps = [
        max(abs(r.exact - r.lower), abs(r.upper - r.exact)) / max(r.upper, ABS_TOL)
        for r in records
        if r.t == 1.0
    ]
    return BoundSummary(
        n_records=len(records),
        n_satisfied=sum(r.satisfied for r in records),
        max_gap_at_order_one=max(gaps, default=0.0),
    )


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    n_flagged: int
    accuracy: float
    precision: float | None
    report: OutlierReport = dataclasses.field(repr=False, compare=False)

    @property
    def epsilon(self) -> float:
        return self.threshold


def threshold_sweep(
    data: Dataset,
    truth: Sequence[bool] | np.ndarray,
    thresholds: Sequence[float] | np.ndarray,
    params: FilterParams,
    threads: int = 1,
) -> list[SweepRow]:
    """
    Filter once per threshold, all else fixed, and score each run.

    Votes are drawn and scored once; every threshold then reads the same
    distances, which gives exactly the reports of separate runs with the
    same seed. Rows come out in grid order.
    """
    truth_arr = np.asarray(truth, dtype=bool)
    if truth_arr.shape[0] != data.n_samples:
        raise InvalidArgumentError(
            f'{truth_arr.shape[0]} truth labels given for {data.n_samples} rows'
        )
    if len(thresholds) == 0:
        raise InvalidArgumentError('The threshold grid is empty')
    for value in thresholds:
        if not math.isfinite(value) or value < 0:
            raise InvalidArgumentError(f'Thresholds must be finite and >= 0, got {value!r}')

    if isinstance(params, SwadParams):
        engine = swad_engine(data, params, threads)
        method, field_name = Method.SWAD, 'epsilon'
    else:
        engine = fead_engine(data, params, threads)
        method, field_name = Method.FEAD, 'eta'

    rows = []
    for value in thresholds:
        swept = dataclasses.replace(params, **{field_name: float(value)})
        report = engine.report(
            float(value), params.p_threshold, method, dataclasses.asdict(swept)
        )
        counts = confusion(report.is_outlier, truth_arr)
        rows.append(
            SweepRow(
                threshold=float(value),
                n_flagged=report.n_outliers,
                accuracy=accuracy(counts),
                precision=precision(counts),
                report=report,
            )
        )
    return rows


def epsilon_sweep(
    data: Dataset,
    truth: Sequence[bool] | np.ndarray,
    epsilons: Sequence[float] | np.ndarray,
    params: SwadParams,
    threads: int = 1,
) -> list[SweepRow]:
    """One SWAD run per ``epsilon`` with everything else held fixed."""
    return threshold_sweep(data, truth, epsilons, params, threads)


def default_mixture_spec(seed: int = 0) -> MixtureSpec:
    """
    The three-group scenario: a large majority, a smaller minority nearby
    and a handful of far statistical outliers.
    """
    return MixtureSpec(
        components=(
            MixtureComponent(100, (0.0, 0.0), (1.0, 1.0), 'majority'),
            MixtureComponent(20, (4.0, 4.0), (0.5, 0.5), 'minority'),
            MixtureComponent(5, (12.0, -12.0), (1.0, 1.0), 'outlier'),
        ),
        seed=seed,
    )
