"""Pair correlation spectra of the 1+1 vacuum, a thermal field and a finite matrix system."""
# %%
import numpy as np

from passivewf import microlocal as ml
from passivewf.geometry import minkowski_1p1
from passivewf.states import FieldState, MatrixTrace

grid = ml.DirectionGrid.circle(32)
fam = ml.SmearingFamily((0.0, 0.0))

# %% Vacuum and a beta = 1 thermal state: singular only along the antidiagonal half-line.
for beta in (None, 1.0):
    rep = ml.acs_scan(FieldState(minkowski_1p1(), 1.0, beta), fam, fam, grid)
    hits = [np.round(rep.directions[i], 3).tolist() for i in rep.singular()]
    print(f"beta={beta}: counts {rep.counts()}  singular {hits}")
    ok, _ = ml.acs_containment(rep, 2 * grid.dtheta)
    print("   contained in the half-line:", ok)

# %% The decay orders behind the verdicts. A slope near zero means no decay.
i_minus, i_plus = grid.nearest((-1.0, 1.0)), grid.nearest((1.0, -1.0))
print(f"order at (-1, 1): {rep.orders[i_minus]:.2f}  order at (1, -1): {rep.orders[i_plus]:.2f}")

# %% A trace state on C^3 is symmetric under xi -> -xi, so no asymmetric directions appear.
H = np.diag([0.0, 0.7, 1.9])
X = np.roll(np.eye(3), 1, axis=0) + np.roll(np.eye(3), -1, axis=0)
rep = ml.acs_scan(MatrixTrace(H), ml.ConstantFamily(X), ml.ConstantFamily(X), grid)
print("matrix trace: singular", len(rep.singular()), " asymmetric", ml.acs_symmetry(rep))
