"""Coarse transmission map over ground-state decay and trapping ratio.

Each cell is a full propagation of the baseline pulse. The coarse 5 x 5
grid runs in about half a minute; use ``denseeit scan`` for the full map.

Run: python3 demos/04_transmission_map.py   (SIM_WORKERS sets the process count)
"""

import numpy as np

from denseeit.config import load_preset
from denseeit.scan import monotonicity_violations, run_scan

base = load_preset("fig3-baseline")
tmap = run_scan(base, steps=(5, 5))

print("peak ratio; rows gamma_s, columns trap ratio")
print("gamma_s    " + "".join(f"{r:8.3f}" for r in tmap.trap))
for g, row in zip(tmap.gs, tmap.ratio):
    print(f"{g:9.1e}  " + "".join(f"{v:8.3f}" for v in row))
print(f"monotonicity violations: {len(monotonicity_violations(tmap.ratio))}")
for level, lines in tmap.contours.items():
    n = sum(len(line) for line in lines)
    print(f"contour {level:.2f}: {len(lines)} polyline(s), {n} vertices")
print(f"baseline point gamma_s={base.gamma_s:g}, trap={base.trap_ratio}")
