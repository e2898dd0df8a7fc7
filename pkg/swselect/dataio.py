"""
Dataset model, CSV ingestion and serialization, scaling and synthetic data.
"""

from __future__ import annotations

import io
import logging
import math
import re
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import TYPE_CHECKING
from typing import Any
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import DataParseError
from .errors import InvalidArgumentError
from .seeding import MIXTURE_STREAM
from .seeding import NOISE_STREAM
from .seeding import check_seed
from .seeding import substream

if TYPE_CHECKING:
    from .filters import OutlierReport

logger = logging.getLogger(__name__)

DEFAULT_ENCODING = 'UTF-8'
CONSTANT_STD = 1e-12
VOTE_DECIMALS = 9
LABEL_COLUMN = 'label'
OUTLIER_TAGS = frozenset({'outlier', '1', 'true', 'yes'})
TAGS = ('majority', 'minority', 'outlier')


@dataclass(frozen=True)
class Dataset:
    """
    An N x d matrix of finite reals with column names and stable row ids.

    Row ids key the per-sample random streams of the filters, so a row keeps
    its votes when the dataset is reordered or split.
    """

    rows: np.ndarray
    column_names: tuple[str, ...] = ()
    row_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise InvalidArgumentError(
                f'A dataset needs N >= 1 rows and d >= 1 columns, got shape {rows.shape!r}'
            )
        if not np.isfinite(rows).all():
            bad_row, bad_col = (int(x) for x in np.argwhere(~np.isfinite(rows))[0])
            raise InvalidArgumentError(
                f'Non-finite value at row {bad_row}, column {bad_col}'
            )
        rows.setflags(write=False)
        object.__setattr__(self, 'rows', rows)

        names = tuple(self.column_names) or tuple(f'c{j}' for j in range(rows.shape[1]))
        if len(names) != rows.shape[1]:
            raise InvalidArgumentError(
                f'{len(names)} column names given for {rows.shape[1]} columns'
            )
        object.__setattr__(self, 'column_names', names)

        ids = np.asarray(self.row_ids, dtype=np.int64).reshape(-1)
        if ids.shape[0] == 0:
            ids = np.arange(rows.shape[0], dtype=np.int64)
        if ids.shape[0] != rows.shape[0]:
            raise InvalidArgumentError(f'{ids.shape[0]} row ids given for {rows.shape[0]} rows')
        if (ids < 0).any():
            raise InvalidArgumentError('Row ids must be non-negative')
        if np.unique(ids).shape[0] != ids.shape[0]:
            raise InvalidArgumentError('Row ids must be unique')
        ids = ids.copy()
        ids.setflags(write=False)
        object.__setattr__(self, 'row_ids', ids)

    @property
    def n_samples(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.rows.shape[1])

    def __len__(self) -> int:
        return self.n_samples

    def subset(self, positions: Sequence[int] | np.ndarray) -> Dataset:
        """Rows at ``positions``, keeping their row ids."""
        index = np.asarray(positions, dtype=np.intp)
        return Dataset(self.rows[index], self.column_names, self.row_ids[index])

    def with_rows(self, rows: np.ndarray) -> Dataset:
        return Dataset(rows, self.column_names, self.row_ids)


@dataclass(frozen=True)
class ScalingState:
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.std < CONSTANT_STD

    def transform(self, rows: np.ndarray) -> np.ndarray:
        scale = np.where(self.constant, 1.0, self.std)
        shift = np.where(self.constant, 0.0, self.mean)
        return (rows - shift) / scale

    def inverse_transform(self, rows: np.ndarray) -> np.ndarray:
        scale = np.where(self.constant, 1.0, self.std)
        shift = np.where(self.constant, 0.0, self.mean)
        return rows * scale + shift


@dataclass(frozen=True)
class MixtureComponent:
    count: int
    mean: tuple[float, ...]
    variance: tuple[float, ...]
    tag: str


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple[MixtureComponent, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.components:
            raise InvalidArgumentError('A mixture needs at least one component')
        dim = len(self.components[0].mean)
        for component in self.components:
            if component.count < 1:
                raise InvalidArgumentError(
                    f'Component count must be >= 1, got {component.count!r}'
                )
            if len(component.mean) != dim or len(component.variance) != dim:
                raise InvalidArgumentError(
                    'All component means and variances must share one dimension'
                )
            if any(v <= 0 for v in component.variance):
                raise InvalidArgumentError(f'Variances must be > 0, got {component.variance!r}')
            if component.tag not in TAGS:
                raise InvalidArgumentError(
                    f'Unknown tag: {component.tag!r}; valid tags are {TAGS!r}'
                )
        check_seed(self.seed)

    @property
    def n_samples(self) -> int:
        return sum(c.count for c in self.components)


def _cell_error(text: object, path: str | Path, row: int, column: int) -> DataParseError:
    try:
        value: float | None = float(str(text))
    except ValueError:
        value = None
    kind = 'non-numeric' if value is None or math.isfinite(value) else 'non-finite'
    return DataParseError(f'{kind} cell {text!r}', path, row, column)


def _decode(path: str | Path, has_header: bool) -> str:
    raw = Path(path).read_bytes()
    try:
        return raw.decode(DEFAULT_ENCODING)
    except UnicodeDecodeError as exc:
        lines = [line for line in raw[: exc.start].split(b'\n')[:-1] if line.strip(b'\r')]
        row = len(lines) - int(has_header)
        raise DataParseError(
            f'not valid {DEFAULT_ENCODING} (byte offset {exc.start})',
            path,
            row if row >= 0 else None,
        )


def _read_table(path: str | Path, has_header: bool) -> tuple[list[str] | None, pd.DataFrame]:
    """
    Read every cell as text. The header, when present, is the first record
    so that a data row wider than the header is an error rather than an
    index column.
    """
    text = _decode(path, has_header)
    try:
        frame = pd.read_csv(io.StringIO(text), header=None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataParseError('file has no data rows', path)
    except pd.errors.ParserError as exc:
        match = re.search(r'line (\d+)', str(exc))
        row = int(match.group(1)) - 1 - int(has_header) if match else None
        raise DataParseError(f'malformed row ({exc})', path, row)
    header = None
    if has_header:
        header = [str(name).strip() for name in frame.iloc[0]]
        frame = frame.iloc[1:].reset_index(drop=True)
    if frame.empty:
        raise DataParseError('file has no data rows', path)
    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        i = int(np.flatnonzero(short)[0])
        found = int(frame.iloc[i].notna().sum())
        raise DataParseError(f'expected {frame.shape[1]} cells, found {found}', path, i)
    return header, frame.apply(lambda column: column.str.strip())


def _numeric_block(frame: pd.DataFrame, path: str | Path, columns: Sequence[int]) -> np.ndarray:
    """
    Validate the cells with ``pd.to_numeric`` and convert them with float()
    so written reprs read back bit-exact. ``columns`` are the file
    positions reported in errors.
    """
    checked = frame.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    bad = ~np.isfinite(checked)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        raise _cell_error(frame.iat[i, j], path, i, columns[j])
    try:
        return frame.to_numpy(dtype=object).astype(np.float64)
    except ValueError as exc:
        raise DataParseError(str(exc), path)


def load_csv(path: str | Path, has_header: bool = False) -> Dataset:
    """
    Read a numeric CSV file into a Dataset.

    Without a header, columns are named ``c0 .. c{d-1}``. Rows get ids
    ``0 .. N-1`` in file order.
    """
    header, frame = _read_table(path, has_header)
    rows = _numeric_block(frame, path, range(frame.shape[1]))
    logger.debug('Loaded %d rows x %d columns from %s', rows.shape[0], rows.shape[1], path)
    return Dataset(rows, tuple(header or ()))


def load_labeled_csv(
    path: str | Path,
    label_column: str = LABEL_COLUMN,
) -> tuple[Dataset, np.ndarray, list[str]]:
    """
    Read a CSV with a header and one label column.

    Returns the numeric features, the ground-truth outlier mask and the raw
    label tags. A row is a true outlier when its tag is one of
    ``OUTLIER_TAGS`` (case-insensitive).
    """
    header, frame = _read_table(path, has_header=True)
    assert header is not None
    if label_column not in header:
        raise DataParseError(f'label column {label_column!r} not in header {header!r}', path)
    label_at = header.index(label_column)
    feature_at = [j for j in range(len(header)) if j != label_at]
    if not feature_at:
        raise DataParseError('no feature columns besides the label', path)
    rows = _numeric_block(frame.iloc[:, feature_at], path, feature_at)
    tags = frame.iloc[:, label_at].tolist()
    truth = np.array([tag.lower() in OUTLIER_TAGS for tag in tags], dtype=bool)
    names = tuple(header[j] for j in feature_at)
    return Dataset(rows, names), truth, tags


def _format_value(value: float) -> str:
    return repr(float(value))


def write_table(path: str | Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    """Write preformatted cells; None becomes an empty cell."""
    cells = [['' if value is None else str(value) for value in row] for row in rows]
    frame = pd.DataFrame(cells, columns=list(header), dtype=object)
    frame.to_csv(path, index=False, encoding=DEFAULT_ENCODING, lineterminator='\n')


def save_dataset(
    data: Dataset,
    path: str | Path,
    labels: Sequence[str] | None = None,
) -> None:
    """Write features (shortest round-trip decimals) with an optional label column."""
    if labels is not None and len(labels) != data.n_samples:
        raise InvalidArgumentError(f'{len(labels)} labels given for {data.n_samples} rows')
    header = list(data.column_names)
    rows = [[_format_value(x) for x in row] for row in data.rows]
    if labels is not None:
        header.append(LABEL_COLUMN)
        for row, label in zip(rows, labels):
            row.append(label)
    write_table(path, header, rows)


def save_report(report: OutlierReport, data: Dataset, path: str | Path) -> None:
    """
    Write ``row_id, vote_fraction, is_outlier`` followed by the features.

    Vote fractions use fixed 9-decimal formatting so reruns diff cleanly.
    """
    if len(report.is_outlier) != data.n_samples:
        raise InvalidArgumentError(
            f'Report has {len(report.is_outlier)} rows but the dataset has {data.n_samples}'
        )
    if not np.array_equal(report.row_ids, data.row_ids):
        raise InvalidArgumentError('Report and dataset row ids do not match')
    rows = [
        [
            str(int(data.row_ids[i])),
            f'{report.vote_fraction[i]:.{VOTE_DECIMALS}f}',
            '1' if report.is_outlier[i] else '0',
            *(_format_value(x) for x in row),
        ]
        for i, row in enumerate(data.rows)
    ]
    write_table(path, ['row_id', 'vote_fraction', 'is_outlier', *data.column_names], rows)


def standardize(data: Dataset) -> tuple[Dataset, ScalingState]:
    """
    Shift and scale every column to mean 0 and population stddev 1.

    Columns with stddev below 1e-12 pass through unchanged and are flagged
    in the returned state.
    """
    if data.n_samples < 2:
        raise InvalidArgumentError(f'Standardizing needs at least two rows, got {data.n_samples}')
    mean = data.rows.mean(axis=0)
    std = data.rows.std(axis=0)
    state = ScalingState(mean=mean, std=std)
    constant = state.constant
    if constant.any():
        names = [data.column_names[j] for j in np.flatnonzero(constant)]
        logger.warning('Constant columns left unscaled: %s', ', '.join(names))
    return data.with_rows(state.transform(data.rows)), state


def inverse_standardize(data: Dataset, state: ScalingState) -> Dataset:
    if state.mean.shape[0] != data.n_features:
        raise InvalidArgumentError(
            f'Scaling state has {state.mean.shape[0]} columns, dataset has {data.n_features}'
        )
    return data.with_rows(state.inverse_transform(data.rows))


def generate_mixture(spec: MixtureSpec) -> tuple[Dataset, np.ndarray]:
    """
    Draw a shuffled Gaussian mixture with per-row component tags.

    Draws come from numpy's Generator (ziggurat normals), component by
    component, followed by one shuffle from the same stream.
    """
    rng = substream(spec.seed, MIXTURE_STREAM)
    blocks = []
    tags: list[str] = []
    for component in spec.components:
        mean = np.asarray(component.mean, dtype=np.float64)
        scale = np.sqrt(np.asarray(component.variance, dtype=np.float64))
        blocks.append(mean + scale * rng.standard_normal((component.count, mean.shape[0])))
        tags.extend([component.tag] * component.count)
    order = rng.permutation(spec.n_samples)
    rows = np.concatenate(blocks)[order]
    labels = np.asarray(tags, dtype=object)[order]
    return Dataset(rows), labels


def add_gaussian_noise(data: Dataset, variance: float = 0.05, seed: int = 0) -> Dataset:
    """Perturb every cell with centred Gaussian noise of the given variance."""
    if not math.isfinite(variance) or variance < 0:
        raise InvalidArgumentError(f'Noise variance must be finite and >= 0, got {variance!r}')
    rng = substream(seed, NOISE_STREAM)
    noise = math.sqrt(variance) * rng.standard_normal(data.rows.shape)
    return data.with_rows(data.rows + noise)


def select_inliers(data: Dataset, report: OutlierReport) -> Dataset:
    """The rows the report did not flag, in their original order."""
    if len(report.is_outlier) != data.n_samples or not np.array_equal(
        report.row_ids, data.row_ids
    ):
        raise InvalidArgumentError('Report does not belong to this dataset')
    keep = np.flatnonzero(~np.asarray(report.is_outlier, dtype=bool))
    if keep.shape[0] == 0:
        raise InvalidArgumentError('Every row was flagged; nothing left to select')
    return data.subset(keep)
