"""Central finite-difference oracles shared by the objective tests."""

import numpy as np


def grad_fd_error(problem, x):
    """Relative error of eval_g against central differences of eval_f."""
    h = 1e-6 * (1 + np.linalg.norm(x))
    g = problem.eval_g(x)
    fd = np.array([(problem.eval_f(x + h * e) - problem.eval_f(x - h * e)) / (2 * h)
                   for e in np.eye(x.size)])
    return np.linalg.norm(g - fd) / max(np.linalg.norm(fd), np.linalg.norm(g), 1e-300)


def hvp_fd_error(problem, x, v):
    """Relative error of hvp against central differences of eval_g along v."""
    h = 1e-6 * (1 + np.linalg.norm(x)) / np.linalg.norm(v)
    fd = (problem.eval_g(x + h * v) - problem.eval_g(x - h * v)) / (2 * h)
    hv = problem.hvp(x, v)
    return np.linalg.norm(hv - fd) / max(np.linalg.norm(fd), np.linalg.norm(hv), 1e-300)


def hvp_symmetry_defect(problem, x, u, v):
    """|<u, Hv> - <v, Hu>| / (||u|| ||v|| ||H||), with ||H|| from the densified Hessian."""
    Hn = np.linalg.norm(problem.hessian(x), 2)
    gap = abs(u @ problem.hvp(x, v) - v @ problem.hvp(x, u))
    return gap / (np.linalg.norm(u) * np.linalg.norm(v) * max(Hn, 1e-300))
