"""
Command-line entry point: ``swselect {filter,bench,verify-bounds,synth}``.

Every default comes from the run settings (environment, ``swselect.ini`` or
``.env``) before falling back to the values below; flags override both.
Data goes to files, stdout carries the summary table only and logs go to
stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any
from typing import Callable
from typing import Sequence

import numpy as np

from . import settings
from .dataio import Dataset
from .dataio import add_gaussian_noise
from .dataio import generate_mixture
from .dataio import load_csv
from .dataio import load_labeled_csv
from .dataio import save_dataset
from .dataio import save_report
from .dataio import select_inliers
from .dataio import standardize
from .dataio import write_table
from .errors import DataParseError
from .errors import InvalidArgumentError
from .errors import UndefinedValueError
from .evaluation import accuracy
from .evaluation import confusion
from .evaluation import default_mixture_spec
from .evaluation import precision
from .evaluation import summarize_bounds
from .evaluation import threshold_sweep
from .evaluation import verify_bounds
from .filters import FeadParams
from .filters import OutlierReport
from .filters import SswadParams
from .filters import SwadParams
from .filters import fead_filter
from .filters import sswad_filter
from .filters import swad_filter
from .settings import Choices
from .settings import Csv
from .settings import setting
from .version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

SCHEMA_VERSION = 1
COMMANDS = ('filter', 'bench', 'verify-bounds', 'synth')
METHODS = ['swad', 'sswad', 'fead']
LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one CLI run; serialized into every sidecar."""

    command: str
    method: str = 'swad'
    input: Path | None = None
    output: Path | None = None
    inliers_output: Path | None = None
    header: bool = False
    label_column: str = 'label'
    t: float = 2.0
    epsilon: float | None = None
    eta: float | None = None
    n_votes: int = 150
    p: float = 0.8
    projections: int = 40
    k: int = 3
    s: int = 3
    seed: int = 0
    standardize: bool = False
    threads: int = 0
    epsilon_grid: tuple[float, ...] = ()
    eta_grid: tuple[float, ...] = ()
    n_samples: int = 100
    dim: int = 2
    t_values: tuple[float, ...] = (1.0, 2.0)
    pairs: int = 200
    norm: str = 'l2'
    noise_variance: float = 0.0
    log_level: str = 'WARNING'

    def to_json(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, Path):
                out[key] = str(value)
            elif isinstance(value, tuple):
                out[key] = list(value)
        return out


def _grid(value: str) -> tuple[float, ...]:
    return tuple(Csv(float)(value))


def _optional_float(value: str) -> float | None:
    return float(value) if value.strip() else None


def _add_filter_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        '--method',
        type=Choices(METHODS),
        default=setting('method', 'swad', Choices(METHODS)),
        help='filter to run',
    )
    parser.add_argument('--t', type=float, default=setting('t', 2.0, float), help='transport order')
    parser.add_argument(
        '--epsilon',
        type=float,
        default=setting('epsilon', '', _optional_float),
        help='SWAD/sSWAD distance threshold',
    )
    parser.add_argument(
        '--eta',
        type=float,
        default=setting('eta', '', _optional_float),
        help='FEAD distance threshold',
    )
    parser.add_argument('--n-votes', type=int, default=setting('n_votes', 150, int))
    parser.add_argument('--p', type=float, default=setting('p', 0.8, float),
                        help='voting threshold')
    parser.add_argument('--projections', type=int, default=setting('projections', 40, int))
    parser.add_argument('--k', type=int, default=setting('k', 3, int), help='sSWAD clusters')
    parser.add_argument('--s', type=int, default=setting('s', 3, int), help='sSWAD splits')
    parser.add_argument('--standardize', action=argparse.BooleanOptionalAction,
                        default=setting('standardize', False, bool))
    parser.add_argument('--threads', type=int, default=setting('threads', 0, int),
                        help='worker threads, 0 for one per CPU')


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, default=setting('seed', 0, int))
    parser.add_argument('--output', type=Path)
    parser.add_argument(
        '--log-level',
        type=Choices(LOG_LEVELS, cast=str.upper),
        default=setting('log_level', 'WARNING', Choices(LOG_LEVELS, cast=str.upper)),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='swselect',
        description='Sliced-Wasserstein outlier filtering for training-data selection.',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    filter_cmd = commands.add_parser('filter', help='flag outliers in a CSV file')
    filter_cmd.add_argument('--input', type=Path, required=True)
    filter_cmd.add_argument('--header', action='store_true', help='first line holds column names')
    filter_cmd.add_argument('--inliers-output', type=Path, help='also write the unflagged rows')
    _add_filter_options(filter_cmd)
    _add_common_options(filter_cmd)

    bench = commands.add_parser('bench', help='score a filter against labeled data')
    bench.add_argument('--input', type=Path, required=True)
    bench.add_argument('--label-column', default='label')
    bench.add_argument('--epsilon-grid', type=_grid,
                       default=setting('epsilon_grid', '', _grid))
    bench.add_argument('--eta-grid', type=_grid, default=())
    _add_filter_options(bench)
    _add_common_options(bench)

    verify = commands.add_parser('verify-bounds', help='check the single-sample bounds')
    verify.add_argument('--n', dest='n_samples', type=int, default=100)
    verify.add_argument('--d', dest='dim', type=int, default=2)
    verify.add_argument('--t', dest='t_values', type=_grid, default=(1.0, 2.0))
    verify.add_argument('--pairs', type=int, default=200)
    verify.add_argument('--norm', type=Choices(['l1', 'l2']), default='l2')
    _add_common_options(verify)

    synth = commands.add_parser('synth', help='write the three-group synthetic scenario')
    synth.add_argument('--noise-variance', type=float, default=0.0)
    _add_common_options(synth)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    values = {key: value for key, value in vars(args).items() if key in fields}
    for key in ('epsilon_grid', 'eta_grid', 't_values'):
        if key in values:
            values[key] = tuple(values[key])
    return RunConfig(**values)


def _load_input(config: RunConfig) -> Dataset:
    assert config.input is not None
    data = load_csv(config.input, has_header=config.header)
    if config.standardize:
        data, _ = standardize(data)
    return data


def _run_filter(data: Dataset, config: RunConfig) -> OutlierReport:
    threads = config.threads
    if config.method == 'fead':
        if config.eta is None:
            raise InvalidArgumentError('--eta is required for --method fead')
        fead = FeadParams(eta=config.eta, t=config.t, n_votes=config.n_votes,
                          p_threshold=config.p, seed=config.seed)
        return fead_filter(data, fead, threads)

    if config.epsilon is None:
        raise InvalidArgumentError(f'--epsilon is required for --method {config.method}')
    swad = SwadParams(
        epsilon=config.epsilon,
        t=config.t,
        n_votes=config.n_votes,
        p_threshold=config.p,
        n_projections=config.projections,
        seed=config.seed,
    )
    if config.method == 'sswad':
        return sswad_filter(data, SswadParams(swad, config.k, config.s), threads)
    return swad_filter(data, swad, threads)


def _sidecar_path(output: Path) -> Path:
    return output.with_name(output.name + '.json')


def _write_sidecar(output: Path, config: RunConfig, summary: dict[str, Any]) -> None:
    payload = {
        'schema': SCHEMA_VERSION,
        'version': __version__,
        'config': config.to_json(),
        'seed': config.seed,
        **summary,
    }
    _sidecar_path(output).write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n')


def _print_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    cells = [list(header)] + [['-' if v is None else str(v) for v in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    for row in cells:
        print('  '.join(cell.rjust(widths[i]) for i, cell in enumerate(row)))


def _fmt(value: float | None) -> str | None:
    return None if value is None else f'{value:.6f}'


def cmd_filter(config: RunConfig) -> int:
    if config.output is None:
        raise InvalidArgumentError('--output is required')
    data = _load_input(config)
    started = time.perf_counter()
    report = _run_filter(data, config)
    elapsed = time.perf_counter() - started

    save_report(report, data, config.output)
    if config.inliers_output is not None:
        save_dataset(select_inliers(data, report), config.inliers_output)
    _write_sidecar(
        config.output,
        config,
        {
            'method': report.method.value,
            'params': report.params_echo,
            'n_samples': data.n_samples,
            'n_outliers': report.n_outliers,
            'wall_time_s': elapsed,
        },
    )
    _print_table(
        ['method', 'N', '|O|', 'seconds'],
        [[report.method.value, data.n_samples, report.n_outliers, f'{elapsed:.3f}']],
    )
    return EXIT_OK


def _write_sweep(path: Path, rows: Sequence[Sequence[Any]]) -> None:
    write_table(path, ['threshold', 'n_flagged', 'accuracy', 'precision'], rows)


def cmd_bench(config: RunConfig) -> int:
    assert config.input is not None
    data, truth, _ = load_labeled_csv(config.input, config.label_column)
    if config.standardize:
        data, _ = standardize(data)

    grid = config.eta_grid if config.method == 'fead' else config.epsilon_grid
    started = time.perf_counter()
    if grid:
        if config.method == 'sswad':
            raise InvalidArgumentError('Threshold grids are supported for swad and fead only')
        params: SwadParams | FeadParams
        if config.method == 'fead':
            params = FeadParams(eta=grid[0], t=config.t, n_votes=config.n_votes,
                                p_threshold=config.p, seed=config.seed)
        else:
            params = SwadParams(epsilon=grid[0], t=config.t, n_votes=config.n_votes,
                                p_threshold=config.p, n_projections=config.projections,
                                seed=config.seed)
        sweep = threshold_sweep(data, truth, grid, params, config.threads)
        rows = [[r.threshold, r.n_flagged, _fmt(r.accuracy), _fmt(r.precision)] for r in sweep]
        elapsed = time.perf_counter() - started
        if config.output is not None:
            _write_sweep(config.output, rows)
            _write_sidecar(config.output, config, {'wall_time_s': elapsed, 'n_samples': len(truth)})
        _print_table(['threshold', '|O|', 'A', 'P'], rows)
        return EXIT_OK

    report = _run_filter(data, config)
    elapsed = time.perf_counter() - started
    counts = confusion(report.is_outlier, truth)
    summary = {
        'method': report.method.value,
        'n_samples': data.n_samples,
        'n_outliers': report.n_outliers,
        'accuracy': accuracy(counts),
        'precision': precision(counts),
        'wall_time_s': elapsed,
    }
    if config.output is not None:
        save_report(report, data, config.output)
        _write_sidecar(config.output, config, summary)
    _print_table(
        ['method', 'A', 'P', '|O|', 'seconds'],
        [[
            report.method.value,
            _fmt(summary['accuracy']),
            _fmt(summary['precision']),
            report.n_outliers,
            f'{elapsed:.3f}',
        ]],
    )
    return EXIT_OK


def cmd_verify_bounds(config: RunConfig) -> int:
    records = verify_bounds(
        config.n_samples,
        config.dim,
        config.t_values,
        config.pairs,
        config.seed,
        config.norm,
    )
    summary = summarize_bounds(records)
    if config.output is not None:
        write_table(config.output, ['k', 'l', 't', 'lower', 'exact', 'upper', 'satisfied'], [
            [r.k, r.l, r.t, repr(r.lower), repr(r.exact), repr(r.upper), int(r.satisfied)]
            for r in records
        ])
        _write_sidecar(config.output, config, {
            'n_records': summary.n_records,
            'fraction_satisfied': summary.fraction_satisfied,
        })
    _print_table(
        ['records', 'satisfied', 'max gap at t=1'],
        [[summary.n_records, f'{summary.fraction_satisfied:.2%}',
          f'{summary.max_gap_at_order_one:.3e}']],
    )
    return EXIT_OK if summary.all_satisfied else EXIT_NUMERIC


def cmd_synth(config: RunConfig) -> int:
    if config.output is None:
        raise InvalidArgumentError('--output is required')
    data, labels = generate_mixture(default_mixture_spec(config.seed))
    if config.noise_variance > 0:
        data = add_gaussian_noise(data, config.noise_variance, config.seed)
    save_dataset(data, config.output, labels=[str(tag) for tag in labels])
    n_outliers = int(np.count_nonzero(labels == 'outlier'))
    _write_sidecar(config.output, config, {
        'n_samples': data.n_samples,
        'n_outliers': n_outliers,
        'components': sorted(set(labels.tolist())),
    })
    _print_table(['N', 'outliers'], [[data.n_samples, n_outliers]])
    return EXIT_OK


HANDLERS: dict[str, Callable[[RunConfig], int]] = {
    'filter': cmd_filter,
    'bench': cmd_bench,
    'verify-bounds': cmd_verify_bounds,
    'synth': cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    settings.config.reset()
    try:
        parser = build_parser()
    except (ValueError, UndefinedValueError) as exc:
        print(f'swselect: invalid setting: {exc}', file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    config = resolve_config(args)
    logging.basicConfig(
        level=config.log_level,
        stream=sys.stderr,
        format='%(levelname)s %(name)s: %(message)s',
    )
    try:
        return HANDLERS[config.command](config)
    except DataParseError as exc:
        logger.error('%s', exc)
        return EXIT_NUMERIC
    except InvalidArgumentError as exc:
        logger.error('%s', exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error('%s', exc)
        return EXIT_IO
    except (ValueError, ArithmeticError) as exc:
        logger.error('%s', exc)
        return EXIT_NUMERIC
