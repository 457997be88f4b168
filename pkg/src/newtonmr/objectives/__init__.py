"""Test objectives, datasets and Hessian sub-sampling."""

from .base import DomainError, Problem, SampleSelector, subsampled_operator
from .data import (DataParseError, Dataset, GmmGroundTruth, estimation_error, gen_gmm_data,
                   gen_softmax_data, load_csv)
from .gmm import GmmProblem, make_gmm
from .simple import (FractionProblem, QuadraticProblem, make_cubic_quadratic, make_fraction,
                     make_quadratic)
from .softmax import SoftmaxProblem, make_softmax

__all__ = [
    "DataParseError", "Dataset", "DomainError", "FractionProblem", "GmmGroundTruth", "GmmProblem",
    "Problem", "QuadraticProblem", "SampleSelector", "SoftmaxProblem", "estimation_error",
    "gen_gmm_data", "gen_softmax_data", "load_csv", "make_cubic_quadratic", "make_fraction",
    "make_gmm", "make_quadratic", "make_softmax", "subsampled_operator",
]
