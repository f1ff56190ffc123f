"""Type I error and power of the five tests over the variance grid.

Writes one CSV and one SVG per (m, n) setting into ``demo_out/``. The
default 4,000 replications per point take a minute or so; pass a larger
number as the first argument (the published figures use 100,000).

Run: python demos/02_size_and_power.py [reps]
"""

import pathlib
import sys

from bfexact import cli, sim

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 4000
out = pathlib.Path("demo_out")
out.mkdir(exist_ok=True)

tables = sim.figure_tables(reps=reps, seed=1)
for (m, n), pair in tables.items():
    for label, result in pair.items():
        stem = out / f"{label}_{m}_{n}"
        result.to_csv(f"{stem}.csv")
        cfg = sim.SweepConfig(m=m, n=n, reps=reps, mu_diff=2.0 if label == "power" else 0.0)
        (stem.with_suffix(".svg")).write_text(cli.sweep_svg(result, cfg))
    size = pair["size"]
    worst = {mth.value: abs(size.rates(mth) - 0.05).max() for mth in sim.SWEEP_METHODS}
    print(f"(m, n) = ({m:2d}, {n:2d})  worst |size - 0.05|: "
          + "  ".join(f"{k} {v:.4f}" for k, v in worst.items()))

print(f"\nCSV and SVG files written to {out}/")
