"""
Sweeping the free parameters P, R, w
====================================

Runs the same scripted conversation at every grid point and reports the
mean selected correlation, subcontext drift and candidate duplication.
With nested candidate streams, more candidates can only help: mean
selected rho is non-decreasing in P.
"""

import io
from pathlib import Path

from subcontext.corpus import ingest
from subcontext.engine import EngineConfig, parse_grid, sweep, write_sweep_csv

HERE = Path(__file__).parent

index = ingest(HERE / "corpus")
script = [
    "unjustified amount of paddy in a godown",
    "where was the rice being smuggled to",
    "what did the court finally order",
]

grid = parse_grid("P=1,2,5;R=1,4;w=0,2")
print(f"sweeping {len(grid)} grid points over a {len(script)}-turn script\n")

rows, failures = sweep(index, script, grid, EngineConfig(seed=42))
buffer = io.StringIO()
write_sweep_csv(rows, buffer)
print(buffer.getvalue())

if failures:
    print("failed grid points:", failures)

# The monotonicity check, explicitly: fix R=1 so scoring histories are
# identical across P, then compare the mean selected rho.
by_p = {row["P"]: row["mean_rho"] for row in rows if row["R"] == 1 and row["w"] == 2}
print("mean selected rho by P (R=1, w=2):")
for p in sorted(by_p):
    print(f"  P={p}: {by_p[p]:.4f}")
