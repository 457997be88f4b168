"""Newton-MR driver, baselines, line searches and oracle accounting."""

from .accounting import FIRST_ORDER, METHODS, SECOND_ORDER, oracle_cost
from .config import (TERMINATIONS, TRACE_COLUMNS, IterationRecord, OptimizerConfig, RunResult, Trace,
                     read_trace, write_trace)
from .first_order import FirstOrderConfig, first_order_run, tune_step
from .lbfgs import lbfgs_run, push_pair, two_loop
from .linesearch import LineSearchResult, armijo_f, armijo_gradnorm
from .newton import curvature_operator, gauss_newton_run, newton_cg_run, newton_mr_run, subsampled_config

__all__ = [
    "FIRST_ORDER", "METHODS", "SECOND_ORDER", "TERMINATIONS", "TRACE_COLUMNS", "FirstOrderConfig",
    "IterationRecord", "LineSearchResult", "OptimizerConfig", "RunResult", "Trace", "armijo_f",
    "armijo_gradnorm", "curvature_operator", "first_order_run", "gauss_newton_run", "lbfgs_run",
    "newton_cg_run", "newton_mr_run", "oracle_cost", "push_pair", "read_trace", "subsampled_config", "tune_step",
    "two_loop", "write_trace",
]
