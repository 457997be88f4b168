"""Newton-MR under inexact and perturbed Hessians.

Subpackages
-----------
linalg, krylov
    Matrix-free operators, pseudo-inverse and MINRES-QLP.
perturb
    Hessian perturbations and predicted stability constants.
objectives
    Softmax, Gaussian mixture and closed-form test problems.
optim
    Newton-MR and the baseline optimizers.
bench
    Experiment runner, performance profiles, plots and the CLI.
"""

__version__ = "0.1.0"
