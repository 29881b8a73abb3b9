"""Power and interval length: what finer conditioning buys.

Both conditional methods are valid, but the over-conditioned variant
conditions on every sub-problem of the alignment recursion, leaving a much
smaller truncation region.  Less conditional mass means lower power and
wider confidence intervals; this sweep makes the gap visible.  Timing per
call is recorded along the way.
"""

import numpy as np

from dtwsi import ExperimentConfig, run_ci

TRIALS = 40

print(f"{'shift':>5s} {'rej si':>7s} {'rej oc':>7s} {'med len si':>11s} "
      f"{'med len oc':>11s} {'cover si':>9s} {'ms/trial':>9s}")
for delta in (2.0, 3.0, 4.0, 5.0):
    cfg = ExperimentConfig(n=8, m=8, delta=delta, trials=TRIALS, seed=23)
    report = run_ci(cfg)  # paired: both methods see identical data
    si = report.results["si-dtw"]
    oc = report.results["si-dtw-oc"]
    print(
        f"{delta:5.1f} {si.rejection_rate:7.3f} {oc.rejection_rate:7.3f} "
        f"{si.median_ci_length:11.2f} {oc.median_ci_length:11.2f} "
        f"{si.coverage_rate:9.2f} {1e3 * float(np.mean(si.seconds)):9.2f}"
    )

print("\nrejection rates rise with the shift, the exact method leads the")
print("over-conditioned one, and its intervals are consistently shorter")
