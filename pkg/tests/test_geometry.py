import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as hs

from passivewf.geometry import (CovectorPoint, GeometryError, NullClass, RangeExceeded, causally_separated,
                                cauchy_intersection, classify_null, count_cauchy_roots, cylinder, in_R,
                                integrate_bicharacteristic, minkowski_1p1, minkowski_1p3, null_form, related,
                                rk4_flow)

EXACT = 1e-12
DRIFT_PER_LENGTH = 1e-9
TWO_PI = 2 * math.pi

MINK = minkowski_1p1()
CYL = cylinder(TWO_PI)


def cp(q, xi):
    return CovectorPoint(tuple(q), tuple(xi))


def test_model_invariants_hold_on_samples():
    rng = np.random.default_rng(1)
    for model in (MINK, CYL, minkowski_1p3()):
        pts = rng.uniform(-3, 3, size=(20, model.dim))
        assert model.check_invariants(pts)
        assert np.array_equal(model.killing_field, np.eye(model.dim)[0])


def test_null_form_examples():
    assert null_form(MINK, cp((0, 0), (1, 1))) == 0.0
    assert null_form(MINK, cp((0, 0), (1, 0))) == 1.0
    for q in [(0.0, 0.0), (1.3, 5.9), (-2.0, 3.1)]:
        assert null_form(CYL, cp(q, (2, 2))) == 0.0


def test_classify_null_examples():
    assert classify_null(MINK, cp((0, 0), (1, 1))) is NullClass.NPLUS
    assert classify_null(MINK, cp((0, 0), (-1, 1))) is NullClass.NMINUS
    assert classify_null(MINK, cp((0, 0), (1, 0))) is NullClass.NOT_NULL
    with pytest.raises(GeometryError):
        classify_null(MINK, cp((0, 0), (0, 0)))


def test_classify_null_relative_tolerance():
    # relative deviation 1e-11 is null, 1e-6 is not
    assert classify_null(MINK, cp((0, 0), (1e3, 1e3 * (1 + 5e-12)))) is NullClass.NPLUS
    assert classify_null(MINK, cp((0, 0), (1.0, 1.0 + 1e-6))) is NullClass.NOT_NULL


def test_minkowski_orbit_is_straight_line():
    b = integrate_bicharacteristic(MINK, cp((0, 0), (-1, 1)), (0.0, 2.0))
    assert np.allclose(b.q, np.stack([-b.s, -b.s], axis=1), atol=EXACT, rtol=0)
    assert np.allclose(b.xi, [-1.0, 1.0], atol=0)
    b = integrate_bicharacteristic(MINK, cp((0, 0), (1, 1)), (0.0, 1.0))
    assert np.allclose(b.q[-1], [1.0, -1.0], atol=EXACT)


def test_cylinder_orbit_wraps():
    b = integrate_bicharacteristic(CYL, cp((0, 0), (1, -1)), (0.0, TWO_PI))
    assert b.s[-1] == pytest.approx(TWO_PI, abs=EXACT)
    q = b.q[-1]
    assert q[0] == pytest.approx(TWO_PI, abs=1e-10)
    assert min(q[1], TWO_PI - q[1]) < 1e-10
    assert np.allclose(b.xi[-1], [1.0, -1.0])


def test_bicharacteristic_errors():
    with pytest.raises(GeometryError):
        integrate_bicharacteristic(MINK, cp((0, 0), (1, 0)), (0.0, 1.0))
    with pytest.raises(GeometryError):
        integrate_bicharacteristic(MINK, cp((0, 0), (1, 1)), (0.0, 1.0), step=0.0)


def test_tangent_matches_raised_covector():
    b = integrate_bicharacteristic(CYL, cp((0.3, 1.0), (2.0, 2.0)), (-1.0, 1.0), step=1e-2)
    dq = np.diff(b.q_cover, axis=0) / np.diff(b.s)[:, None]
    raised = np.array([CYL.inverse_metric(q) @ x for q, x in zip(b.q_cover[:-1], b.xi[:-1])])
    assert np.max(np.abs(dq - raised)) < 1e-10


def test_csv_export_columns():
    b = integrate_bicharacteristic(MINK, cp((0, 0), (-1, 1)), (0.0, 0.01))
    lines = b.to_csv().splitlines()
    assert lines[0] == "s,q0,q1,xi0,xi1,null_form"
    assert len(lines) == len(b.s) + 1
    row = [float(v) for v in lines[-1].split(",")]
    assert row[0] == pytest.approx(0.01) and row[-1] == 0.0


def test_cauchy_intersection_examples():
    b = integrate_bicharacteristic(MINK, cp((0, 0), (-1, 1)), (0.0, 2.0))
    s, hit = cauchy_intersection(MINK, b, -2.0)
    assert s == pytest.approx(2.0, abs=EXACT)
    assert np.allclose(hit.q, [-2.0, -2.0], atol=EXACT) and np.allclose(hit.xi, [-1.0, 1.0])
    b = integrate_bicharacteristic(MINK, cp((0, 0), (1, 1)), (-1.0, 1.0))
    s, hit = cauchy_intersection(MINK, b, 0.0)
    assert s == pytest.approx(0.0, abs=EXACT)
    b = integrate_bicharacteristic(CYL, cp((0, 0), (1, -1)), (0.0, 3 * math.pi + 0.1))
    s, hit = cauchy_intersection(CYL, b, 3 * math.pi)
    assert s == pytest.approx(3 * math.pi, abs=1e-10)
    assert hit.q[1] == pytest.approx(math.pi, abs=1e-10)


def test_cauchy_intersection_range_exceeded():
    b = integrate_bicharacteristic(MINK, cp((0, 0), (1, 1)), (0.0, 1.0))
    with pytest.raises(RangeExceeded):
        cauchy_intersection(MINK, b, 5.0)


def test_related_examples():
    p = cp((0, 0), (-1, 1))
    assert related(MINK, p, cp((-1, -1), (-1, 1)))
    assert not related(MINK, p, cp((1, 0), (-1, 1)))
    assert related(MINK, p, p)


def test_related_cylinder_any_winding():
    p = cp((0, 0), (1, -1))
    # reached after one full winding: (2 pi + 0.5, 0.5)
    assert related(CYL, p, cp((TWO_PI + 0.5, 0.5), (1, -1)))
    assert not related(CYL, p, cp((0.5, 1.0), (1, -1)))


def test_in_R_examples():
    assert in_R(MINK, cp((0, 0), (-1, 1)), cp((-1, -1), (1, -1)))
    assert in_R(MINK, cp((0, 0), (-1, 1)), cp((0, 0), (1, -1)))
    assert not in_R(MINK, cp((0, 0), (1, 1)), cp((-1, -1), (1, -1)))


def test_causal_separation_examples():
    assert causally_separated(MINK, (0, 0), (0, 1))
    assert not causally_separated(MINK, (0, 0), (2, 1))
    assert causally_separated(CYL, (0, 0), (0.1, math.pi))
    # on the circle the short way round counts: x = 5.5 is 0.78 away
    assert not causally_separated(CYL, (0, 0), (1.0, 5.5))
    # the light cone itself belongs to the closed causal future
    assert not causally_separated(MINK, (0, 0), (1, 1))
    assert not causally_separated(CYL, (0, 0), (math.pi, math.pi))


def _null_seed(rng, model):
    q = rng.uniform(-2, 2, size=model.dim)
    a = rng.uniform(0.2, 3.0) * rng.choice([-1, 1])
    return cp(q, (a, a * rng.choice([-1, 1])))


def test_nullity_drift_per_unit_length():
    rng = np.random.default_rng(4)
    for model in (MINK, CYL):
        for _ in range(10):
            seed = _null_seed(rng, model)
            b = integrate_bicharacteristic(model, seed, (-3.0, 3.0))
            xi2 = float(seed.xi_arr @ seed.xi_arr)
            assert np.max(np.abs(b.null_forms())) / 6.0 <= DRIFT_PER_LENGTH * xi2


def test_related_is_an_equivalence_on_orbits():
    rng = np.random.default_rng(5)
    for model in (MINK, CYL):
        for _ in range(5):
            seed = _null_seed(rng, model)
            b = integrate_bicharacteristic(model, seed, (-2.0, 2.0), step=1e-2)
            i, j, k = sorted(rng.choice(len(b.s), size=3, replace=False))
            pts = [cp(b.q[n], b.xi[n]) for n in (i, j, k)]
            assert related(model, pts[0], pts[0])
            assert related(model, pts[0], pts[1]) and related(model, pts[1], pts[0])
            assert related(model, pts[1], pts[2]) and related(model, pts[0], pts[2])


def test_cauchy_uniqueness_on_random_seeds():
    rng = np.random.default_rng(6)
    n = 1000
    # one vectorised RK4 run for all seeds; flat charts give dt/ds = xi_0
    a = rng.uniform(0.2, 3.0, n) * rng.choice([-1, 1], n)
    xi = np.stack([a, a * rng.choice([-1, 1], n)], axis=1)
    q0 = rng.uniform(-2, 2, (n, 2))
    s, qs, _ = rk4_flow(MINK, q0, xi, 2.0, 1e-2)
    t0 = q0[:, 0] + rng.uniform(0.05, 0.95, n) * 2.0 * a
    roots = [count_cauchy_roots(qs[:, i, 0], t0[i]) for i in range(n)]
    assert roots == [1] * n
    for i in rng.choice(n, 20, replace=False):
        seed = cp(q0[i], xi[i])
        b = integrate_bicharacteristic(MINK, seed, (0.0, 2.0), step=1e-2)
        sh, hit = cauchy_intersection(MINK, b, t0[i])
        assert hit.q[0] == pytest.approx(t0[i], abs=1e-12)


def test_root_count_handles_hits():
    assert count_cauchy_roots([1.0, 0.0, -1.0], 0.0) == 1
    assert count_cauchy_roots([1.0, 2.0], 0.0) == 0
    assert count_cauchy_roots([1.0, -1.0, 1.0], 0.0) == 2


_coord = hs.floats(-3, 3, allow_nan=False)
_sign = hs.sampled_from([-1.0, 1.0])


@settings(max_examples=60, deadline=None)
@given(_coord, _coord, _coord, hs.floats(0.1, 3.0), _sign, _sign, hs.floats(-5, 5))
def test_R_asymmetry_and_killing_invariance(t, x, s, a, s1, s2, dt):
    # first slot in N-, second slot on its orbit with the covector negated or not
    p = cp((t, x), (-a, s1 * a))
    b = integrate_bicharacteristic(MINK, p, (min(0.0, s), max(0.0, s) + 1e-3), step=1e-2)
    i = int(np.argmin(np.abs(b.s - s)))
    q2 = b.q[i]
    p2 = cp(q2, tuple(s2 * np.asarray(p.xi)))
    r = in_R(MINK, p, p2)
    assert r == (s2 < 0)
    if r:
        assert not in_R(MINK, p2, p)
        assert not in_R(MINK, p.negated(), p2.negated())
    assert in_R(MINK, p.translated(dt), p2.translated(dt)) == r


@settings(max_examples=60, deadline=None)
@given(_coord, _coord, _coord, _coord, hs.floats(-5, 5))
def test_causal_separation_is_time_translation_invariant(t, x, t2, x2, dt):
    for model in (MINK, CYL):
        # on the light cone the strict inequality is decided by round-off
        assume(abs(abs(t2 - t) - model.spatial_separation((t, x), (t2, x2))) > 1e-9)
        a = causally_separated(model, (t, x), (t2, x2))
        assert causally_separated(model, (t + dt, x), (t2 + dt, x2)) == a
