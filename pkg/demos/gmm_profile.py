"""Parameter recovery on a Gaussian mixture: ssNewton-MR against L-BFGS.

Each run draws its own data set and ground truth. Both methods start at
zero; the estimation error compares the final mixing weight and means to
the truth. Performance profiles are written for f, ||g|| and the error.
Takes a minute or two.

    python3 demos/gmm_profile.py [output_dir]
"""

import csv
import statistics
import sys
from pathlib import Path

from newtonmr.bench import load_config, run_experiment

here = Path(__file__).parent
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/gmm_profile")

run_experiment(load_config(here / "gmm_profile.toml", output_dir=out))

errors = {}
with open(out / "final_metrics.csv") as fh:
    for r in csv.DictReader(fh):
        errors.setdefault(r["label"], []).append(float(r["estimation_error"]))
for label, errs in errors.items():
    print(f"{label:<20} median estimation error {statistics.median(errs):.3f}")

with open(out / "profile_estimation_error.csv") as fh:
    rows = list(csv.reader(fh))
print("\nprofile (estimation error), first rows:")
for row in rows[:6]:
    print("  ".join(f"{c:>18}" for c in row))
