"""Per-iteration oracle-call cost model.

One unit is a component function evaluation; a component gradient costs one
more unit and a component Hessian-vector product two more, so a full
gradient costs 2 and a full Hessian-vector product 2 per term of the sum.
"""

from __future__ import annotations

FIRST_ORDER = ("sgd", "momentum", "adagrad", "adadelta", "rmsprop", "adam")
SECOND_ORDER = ("newton_mr", "newton_cg", "gauss_newton", "ssnewton_mr", "ssnewton_cg", "lbfgs")
METHODS = SECOND_ORDER + FIRST_ORDER


def oracle_cost(method: str, t=0, ls=0, s_over_n=1, b_over_n=1):
    """Cost of one iteration with ``t`` inner iterations and ``ls`` line-search trials.

    Integer and :class:`fractions.Fraction` inputs give exact results.
    """
    for name, v in (("t", t), ("ls", ls), ("s_over_n", s_over_n), ("b_over_n", b_over_n)):
        if v < 0:
            raise ValueError(f"{name} must be non-negative")
    if method == "newton_mr":
        return 2 * (t + ls + 1)
    if method in ("newton_cg", "gauss_newton"):
        return 2 * t + ls + 2
    if method == "ssnewton_mr":
        return 2 * t * s_over_n + 2 * (ls + 1)
    if method == "ssnewton_cg":
        return 2 * t * s_over_n + ls + 2
    if method == "lbfgs":
        return 2 * (ls + 1)
    if method in FIRST_ORDER:
        return 2 * b_over_n
    raise ValueError(f"unknown method {method!r}")
