"""Spectral certificates for ground and thermal states, mixtures and the suppression rate."""
# %%
import math

from passivewf import passivity as pv
from passivewf.geometry import minkowski_1p1
from passivewf.states import FieldState, MatrixTrace, SingleModeState, SmearingFunction

import numpy as np

# %% Ground check: no spectral weight at negative frequencies.
ground, thermal = SingleModeState(1.0), SingleModeState(1.0, math.log(2))
probes = pv.default_ground_probes(1.0)
print("ground state :", pv.ground_check(ground.kernel("adag", "a"), probes).passed)
print("thermal state:", pv.ground_check(thermal.kernel("adag", "a"), probes).passed)

# %% KMS check on the field with a 10 percent error in the occupation numbers.
f = SmearingFunction((0.0, 0.0), 0.5)
for scale in (1.0, 1.1):
    st = FieldState(minkowski_1p1(), 1.0, 1.0, occupation_scale=scale)
    rep = pv.kms_check(st.kernel(f, f), st.kernel(f, f), 1.0, pv.default_kms_probes())
    print(f"occupation x{scale}: passed={rep.passed} worst relative={max(r['relative'] for r in rep.rows):.2e}")

# %% Trace states satisfy omega(AB) = omega(BA); a single-mode ground state does not.
rng = np.random.default_rng(1)
A, B = rng.normal(size=(2, 3, 3))
tr = MatrixTrace(np.diag([0.0, 1.0, 2.0]))
print("trace state :", pv.trace_check([(tr.kernel(A, B), tr.kernel(B, A))], state=tr).passed)
print("ground state:", pv.trace_check([(ground.kernel("a", "adag"), ground.kernel("adag", "a"))]).passed)

# %% A half-half mixture is passive but neither ground nor thermal.
m = pv.mix([(0.5, ground), (0.5, SingleModeState(1.0, 1.0))])
print("mixture passes ground check:", pv.ground_check(m.kernel("adag", "a"), probes).passed)

# %% At a negative frequency the thermal spectrum decays like exp(-beta |k2| / lambda).
for beta in (0.5, 1.0, 2.0):
    r = pv.exp_suppression_probe(SingleModeState(1.0, beta))
    print(f"beta={beta}: log-slope {r.slope:+.3f}")
