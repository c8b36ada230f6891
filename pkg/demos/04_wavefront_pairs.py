"""Pair wavefront scans of the vacuum two-point function and propagation along strips."""
# %%
import numpy as np

from passivewf import microlocal as ml
from passivewf.geometry import minkowski_1p1
from passivewf.states import FieldState

mink = minkowski_1p1()
vac = FieldState(mink, 1.0)
grid = ml.DirectionGrid.hopf(16, 5)
tol = 2 * grid.dtheta
print(len(grid.directions), "directions on S^3")

# %% A null-related pair: singular directions sit on the cone of R.
q, q2 = (0.0, 0.0), (1.0, 1.0)
rep = ml.wf_pair_scan(vac, q, q2, grid)
comp = ml.wf_to_R_compare(rep, mink, q, q2, angle_tol=tol)
print("null pair:", rep.counts(), " contained:", comp.passed, " killing residual:", comp.killing_residual_max)

# %% A spacelike pair is smooth in every direction.
print("spacelike pair:", ml.wf_pair_scan(vac, (0.0, 0.0), (0.0, 3.0), grid).counts())

# %% Move a singular direction forward by one and two time units; it stays singular.
i = rep.singular()[0]
for r in ml.propagate_pair(vac, q, q2, rep.directions[i], [1.0, 2.0], grid):
    print(f"shift {r.time_shift}: q={np.round(r.q, 3).tolist()} verdict {r.verdict} drift {r.nullity_drift:.1e}")
