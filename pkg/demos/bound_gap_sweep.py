"""Where the two bounds disagree.

Slides one vehicle's start position across a range and classifies each state.
The Undecided band is the price of the conservative upper bound.  The nested
shrunk, nominal and inflated intervals are printed as well.

    python3 demos/bound_gap_sweep.py
"""

# %%
from __future__ import annotations

import numpy as np

from sentinel.dynamics import VehicleState
from sentinel.intersection import nominal_variant
from sentinel.scenarios import routes_model
from sentinel.schedparams import inflated_areas, shrunk_areas
from sentinel.verifier import verify

model = routes_model({1: (1,), 2: (1,)}, 8.0, 10.0)
variants = [shrunk_areas(model), nominal_variant(model), inflated_areas(model)]
for op in model.ops():
    cells = [v.intervals[op] for v in variants]
    print(op, "  ".join(f"{v.tag}={iv[0]:.3f}..{iv[1]:.3f}" if iv else f"{v.tag}=empty" for v, iv in zip(variants, cells)))

# %% vehicle 1 fixed at the origin, vehicle 2 starts further and further back
print()
print("gap(m)  s_lower   s_upper   verdict")
for gap in np.arange(0.0, 2.25, 0.125):
    states = [VehicleState(0.0, 9.0), VehicleState(-gap, 9.0)]
    v = verify(model, states)
    print(f"{gap:6.3f}  {v.s_lower:8.4f}  {v.s_upper:8.4f}  {v.classification.value}")
