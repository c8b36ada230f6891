"""Null covectors, bicharacteristic strips and the relation R on two 1+1 spacetimes."""
# %%
import numpy as np

from passivewf import geometry as geo

mink = geo.minkowski_1p1()
cyl = geo.cylinder(2 * np.pi)

# %% A covector is null when g^{-1}(xi, xi) vanishes; the raised time component fixes the cone.
for xi in [(-1.0, 1.0), (1.0, 1.0), (1.0, 0.5)]:
    p = geo.CovectorPoint((0.0, 0.0), xi)
    print(f"xi={xi}: null form {geo.null_form(mink, p):+.3f}, class {geo.classify_null(mink, p).value}")

# %% Follow a past-directed null covector for two units of affine length.
seed = geo.CovectorPoint((0.0, 0.0), (1.0, -1.0))
strip = geo.integrate_bicharacteristic(mink, seed, (0.0, 2.0))
nf = strip.null_forms()
print("end point", strip.samples[-1][1].q, "max nullity drift", float(np.max(np.abs(nf - nf[0]))))

# %% On the cylinder the same strip wraps; the Cauchy surface t = 3pi is met once.
strip = geo.integrate_bicharacteristic(cyl, geo.CovectorPoint((0.0, 0.0), (1.0, -1.0)), (0.0, 12.0))
s, hit = geo.cauchy_intersection(cyl, strip, 3 * np.pi)
print(f"cylinder: s={s:.6f} at q={np.round(hit.q, 6)}")

# %% Pairs in R: same strip, first slot past-directed, second slot carries minus the transported covector.
a = geo.CovectorPoint((0.0, 0.0), (-1.0, 1.0))
b = geo.CovectorPoint((1.0, 1.0), (1.0, -1.0))
print("in_R(a, b) =", geo.in_R(mink, a, b), " swapped:", geo.in_R(mink, b, a))

# %% The direction cones of R between two points: null-related points carry directions, spacelike ones none.
for q2 in [(1.0, 1.0), (0.0, 3.0), (0.0, 0.0)]:
    cone = geo.r_cone_directions(mink, (0.0, 0.0), q2)
    print(f"q2={q2}: {len(cone)} direction(s)", [np.round(c, 3).tolist() for c in cone])
