"""Step sizes of Newton-MR on the fraction function under Hessian noise.

The Hessian of f(x) = a x1^2 / (b - x2)^2 is singular everywhere and the
gradient is not in its range, so a perturbation of size eps turns the tiny
null-space component of g into a direction of length ~1/eps. The line
search then has to cut the step down to roughly eps.

Run from the repository root::

    python3 demos/unstable_steps.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from newtonmr.bench import load_config, plot_traces, run_experiment
from newtonmr.optim import read_trace

here = Path(__file__).parent
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/unstable")

manifest = run_experiment(load_config(here / "unstable.toml", output_dir=out))
print("manifest:", manifest)

labels = ["newton_mr_eps1e-02", "newton_mr_eps1e-05", "newton_mr_eps1e-13", "newton_mr_unperturbed"]
print(f"{'label':<24}{'median first step':>20}{'runs reaching 10% of ||g0||':>30}")
for label in labels:
    traces = [read_trace(out / f"{label}__seed{s}.csv") for s in range(10)]
    first = np.median([tr["alpha"][0] for tr in traces])
    reached = sum(bool(np.any(tr["grad_norm"] <= 0.1 * tr["grad_norm"][0])) for tr in traces)
    print(f"{label:<24}{first:>20.2e}{reached:>27}/10")

# one seed, all noise levels
seed0 = [read_trace(out / f"{label}__seed0.csv") for label in labels]
plot_traces(seed0, "iteration", "alpha", log_y=True, path=out / "alpha_seed0.svg",
            title="accepted step size, seed 0")
plot_traces(seed0, "iteration", "grad_norm", log_y=True, path=out / "grad_norm_seed0.svg",
            title="gradient norm, seed 0")
print("plots:", out / "alpha_seed0.svg", out / "grad_norm_seed0.svg")
