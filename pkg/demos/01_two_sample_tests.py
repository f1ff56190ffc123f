"""Five two-sample tests on one small data set.

Run: python demos/01_two_sample_tests.py
"""

import numpy as np

from bfexact import bf_tests as bt
from bfexact.dist import RngStream

rng = np.random.default_rng(7)
x = rng.normal(10.0, 1.0, 12)   # tight population
y = rng.normal(8.5, 4.0, 6)     # noisy and small

print(f"x: m={x.size}, mean {x.mean():.3f}, sd {x.std(ddof=1):.3f}")
print(f"y: n={y.size}, mean {y.mean():.3f}, sd {y.std(ddof=1):.3f}\n")
print(f"{'method':8s} {'stat':>9s} {'df':>7s} {'p':>8s}   95% interval")
for method in bt.Method:
    if method is bt.Method.TP:
        continue
    out = bt.run_test(method, x, y, rng=RngStream(1))
    print(f"{method.value:8s} {out.statistic:9.4f} {out.df:7.2f} {out.p_value:8.4f}   "
          f"[{out.ci_low:7.3f}, {out.ci_high:7.3f}]")

# T_e uses min(m, n) - 1 degrees of freedom, and with equal sizes it is the
# paired t-test on the observations in their given order.
a, b = x[:6], y
te, paired = bt.te_test(a, b), bt.paired_test(a, b)
print(f"\nequal sizes: T_e {te.statistic:.12f}  paired {paired.statistic:.12f}")
