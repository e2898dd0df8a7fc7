from __future__ import annotations

from .dataio import Dataset
from .dataio import MixtureComponent
from .dataio import MixtureSpec
from .dataio import ScalingState
from .dataio import add_gaussian_noise
from .dataio import generate_mixture
from .dataio import inverse_standardize
from .dataio import load_csv
from .dataio import load_labeled_csv
from .dataio import save_dataset
from .dataio import save_report
from .dataio import select_inliers
from .dataio import standardize
from .dataio import write_table
from .errors import DataParseError
from .errors import InvalidArgumentError
from .errors import SizeLimitError
from .errors import SwselectError
from .errors import UndefinedValueError
from .evaluation import BoundCheckRecord
from .evaluation import BoundSummary
from .evaluation import ConfusionCounts
from .evaluation import SweepRow
from .evaluation import accuracy
from .evaluation import confusion
from .evaluation import default_mixture_spec
from .evaluation import epsilon_sweep
from .evaluation import precision
from .evaluation import summarize_bounds
from .evaluation import threshold_sweep
from .evaluation import verify_bounds
from .filters import FeadParams
from .filters import Method
from .filters import OutlierReport
from .filters import SswadParams
from .filters import SwadParams
from .filters import VoteEngine
from .filters import fead_filter
from .filters import resolve_threads
from .filters import split_params
from .filters import sswad_filter
from .filters import swad_filter
from .filters import vote_indices
from .splitting import ClusterAssignment
from .splitting import deal_splits
from .splitting import kmeans
from .splitting import smart_split
from .transport import DirectionSet
from .transport import EmpiricalDistribution
from .transport import Norm
from .transport import TransportBounds
from .transport import exact_wasserstein
from .transport import project
from .transport import sample_unit_directions
from .transport import single_sample_bounds
from .transport import sliced_wasserstein
from .transport import wasserstein_1d
from .version import __version__

__all__ = (
    'BoundCheckRecord',
    'BoundSummary',
    'ClusterAssignment',
    'ConfusionCounts',
    'DataParseError',
    'Dataset',
    'DirectionSet',
    'EmpiricalDistribution',
    'FeadParams',
    'InvalidArgumentError',
    'Method',
    'MixtureComponent',
    'MixtureSpec',
    'Norm',
    'OutlierReport',
    'ScalingState',
    'SizeLimitError',
    'SswadParams',
    'SwadParams',
    'SweepRow',
    'SwselectError',
    'TransportBounds',
    'UndefinedValueError',
    'VoteEngine',
    '__version__',
    'accuracy',
    'add_gaussian_noise',
    'confusion',
    'deal_splits',
    'default_mixture_spec',
    'epsilon_sweep',
    'exact_wasserstein',
    'fead_filter',
    'generate_mixture',
    'inverse_standardize',
    'kmeans',
    'load_csv',
    'load_labeled_csv',
    'precision',
    'project',
    'resolve_threads',
    'sample_unit_directions',
    'save_dataset',
    'save_report',
    'select_inliers',
    'single_sample_bounds',
    'sliced_wasserstein',
    'smart_split',
    'split_params',
    'sswad_filter',
    'standardize',
    'summarize_bounds',
    'swad_filter',
    'threshold_sweep',
    'verify_bounds',
    'vote_indices',
    'wasserstein_1d',
    'write_table',
)
