"""Newton-MR against Newton-CG, L-BFGS and Adam on softmax regression.

Sub-sampled variants draw a fresh Hessian sample each outer iteration;
gradients are always exact for the second-order methods. Costs are counted
in oracle calls (one pass over the data = 1).

    python3 demos/softmax_compare.py [output_dir]
"""

import csv
import sys
from pathlib import Path

from newtonmr.bench import load_config, plot_traces, run_experiment
from newtonmr.optim import read_trace

here = Path(__file__).parent
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/softmax_compare")

run_experiment(load_config(here / "softmax_compare.toml", output_dir=out))

with open(out / "final_metrics.csv") as fh:
    rows = list(csv.DictReader(fh))
print(f"{'label':<22}{'iters':>7}{'oracle calls':>14}{'f':>14}{'||g||':>11}  termination")
for r in rows:
    print(f"{r['label']:<22}{r['iterations']:>7}{float(r['oracle_calls']):>14.1f}"
          f"{float(r['f']):>14.6f}{float(r['grad_norm']):>11.2e}  {r['termination']}")

traces = [read_trace(out / f"{r['label']}__seed0.csv") for r in rows]
plot_traces(traces, "oracle_calls", "f", path=out / "f_vs_oracle_calls.svg", title="softmax, n=1000")
plot_traces(traces, "oracle_calls", "grad_norm", log_y=True, path=out / "grad_vs_oracle_calls.svg")
print("plots in", out)
