"""Expected interval length of the t_p family as a function of p.

The t_p test replaces the sum of squares in T_e by a sum of p-th powers.
Every member is exact; this demo tabulates the expected interval length
l(p) and shows that p = 2 gives the shortest one.

Run: python demos/03_tp_interval_length.py
"""

from bfexact import tp_family as tp

grid = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0)
for n, alpha in ((3, 0.05), (5, 0.05), (10, 0.1)):
    rep = tp.stationarity_check(n, alpha, grid=grid)
    cells = "  ".join(f"{p:g}:{v:.4f}" for p, v in rep.l_values)
    print(f"n={n:2d} alpha={alpha:.2f}  {cells}")
    print(f"           argmin p = {rep.argmin():g}, |l'(2)|/l(2) = {rep.relative_derivative:.1e}")

# the constants that enter the derivative of l at p = 2
lc = tp.lemma_constants_mc(5, sample_count=10**6, seed=0)
print("\nn=5 constants:", ", ".join(f"{k}={getattr(lc, k):.4f}" for k in "ABCDGF"))
for name, (est, se) in lc.residuals.items():
    print(f"  identity {name:8s} residual {est:+.4f} (SE {se:.4f})")
