import math

import numpy as np
import pytest

from passivewf.geometry import cylinder, minkowski_1p1
from passivewf.states import (FieldState, Mixture, SingleModeState, SmearingFunction, StateError,
                              check_stationarity, field_two_point, fock_density, fock_operators,
                              klein_gordon_fd, matrix_trace_corr, mode_kernel, quasifree_npoint,
                              regularized_kernel, wave_residual)

# independent Hankel-transform quadrature (Gauss-Legendre in the bump radius,
# J0 angular reduction), vacuum m=1, f=g centred at the origin, scale 0.5
FIELD_VACUUM_ORACLE = 0.2763049825941767
ORACLE_RTOL = 1e-10
ORDER_RTOL = 1e-8
COMMUTATOR_TOL = 1e-8
CUTOFF_RTOL = 1e-10
FOCK_TOL = 1e-10
HERMITIAN_RTOL = 1e-9
POSITIVITY_SLACK = 1e-10
STATIONARY_RTOL = 1e-10
WAVE_RESIDUAL_MAX = 1e-3

MINK = minkowski_1p1()
CYL = cylinder(2 * math.pi)
LN2 = math.log(2.0)


def smear(c, scale=0.5, **kw):
    return SmearingFunction(tuple(c), scale=scale, **kw)


# ------------------------------------------------------------ single mode

def test_single_mode_examples():
    g = SingleModeState(1.0)
    assert g.corr("a", "adag", 0.0) == 1.0
    for t in (0.0, 0.3, -7.0):
        assert g.corr("adag", "a", t) == 0.0
        assert g.corr("a", "a", t) == 0.0
    kms = SingleModeState(1.0, LN2)
    assert kms.nbar == pytest.approx(1.0, rel=1e-14)
    assert kms.corr("adag", "a", 0.0) == pytest.approx(1.0, rel=1e-14)
    t = 0.9
    assert kms.corr("a", "adag", t) == pytest.approx(2 * np.exp(1j * t), rel=1e-14)
    assert kms.corr("adag", "a", t) == pytest.approx(np.exp(-1j * t), rel=1e-14)


def test_single_mode_rejects_bad_parameters():
    with pytest.raises(StateError):
        SingleModeState(1.0, 0.0)
    with pytest.raises(StateError):
        SingleModeState(1.0, -1.0)
    with pytest.raises(StateError):
        SingleModeState(0.0)


def test_single_mode_matches_truncated_fock_trace():
    dim = 64
    a, N = fock_operators(dim)
    ad = a.T
    ops = {"a": a, "adag": ad}
    for st in (SingleModeState(1.0, LN2), SingleModeState(1.3, 2.0), SingleModeState(0.7)):
        rho = fock_density(st, dim)
        for t in (0.0, 0.4, -2.2):
            U = np.diag(np.exp(1j * t * st.omega0 * np.arange(dim)))
            for X in ops:
                for Y in ops:
                    Yt = U @ ops[Y] @ U.conj().T
                    ref = np.trace(rho @ ops[X] @ Yt)
                    assert abs(st.corr(X, Y, t) - ref) < FOCK_TOL


def test_single_mode_detailed_balance():
    for w0, beta in [(1.0, LN2), (0.4, 3.0), (2.5, 0.2)]:
        st = SingleModeState(w0, beta)
        up = st.kernel("a", "adag")
        down = st.kernel("adag", "a")
        assert down.weights[0] == pytest.approx(math.exp(-beta * w0) * up.weights[0], rel=1e-13)


# ---------------------------------------------------------------- field

def test_field_vacuum_matches_hankel_oracle():
    st = FieldState(MINK, 1.0)
    f = smear((0, 0))
    val = field_two_point(st, f, f)
    assert abs(val.imag) < 1e-15
    assert val.real > 0
    assert abs(val.real - FIELD_VACUUM_ORACLE) <= ORACLE_RTOL * FIELD_VACUUM_ORACLE


def test_field_quadrature_orders_agree():
    st = FieldState(MINK, 1.0)
    f = smear((0, 0))
    a = field_two_point(st, f, f, order=8)
    b = field_two_point(st, f, f, order=12)
    assert abs(a - b) <= ORDER_RTOL * abs(a)


def test_field_reports_cutoff_and_tail():
    st = FieldState(MINK, 1.0, 1.0)
    _, info = field_two_point(st, smear((0, 0)), smear((0.5, 0.2)), return_info=True)
    assert info["kmax"] > 0
    assert info["tail_bound"] <= 1e-12 * info["abs_integral"]


@pytest.mark.parametrize("beta", [None, 1.0])
def test_commutator_vanishes_at_causal_separation(beta):
    st = FieldState(MINK, 1.0, beta)
    f, g = smear((0, 0)), smear((0, 3))
    assert abs(field_two_point(st, f, g) - field_two_point(st, g, f)) < COMMUTATOR_TOL
    # at timelike separation the commutator is visibly non-zero
    h = smear((3, 0))
    assert abs(field_two_point(st, f, h) - field_two_point(st, h, f)) > 1e-4


def test_cylinder_mode_sum_converged():
    st = FieldState(CYL, 1.0)
    f = smear((0, 0))
    a = field_two_point(st, f, f, kmax=200)
    b = field_two_point(st, f, f, kmax=400)
    assert abs(a - b) <= CUTOFF_RTOL * abs(b)


def _random_smearings(rng, n):
    out = []
    for _ in range(n):
        c = rng.uniform(-1, 1, 2)
        mod = tuple(rng.uniform(-3, 3, 2))
        amp = complex(rng.normal(), rng.normal())
        out.append(smear(c, scale=rng.uniform(0.3, 0.8), modulation=mod, amplitude=amp))
    return out


@pytest.mark.parametrize("model", [MINK, CYL], ids=["minkowski", "cylinder"])
def test_hermiticity_and_positivity(model):
    rng = np.random.default_rng(11)
    for beta in (None, 0.7):
        st = FieldState(model, 1.0, beta)
        fs = _random_smearings(rng, 3)
        for f in fs:
            for g in fs:
                lhs = field_two_point(st, f, g)
                rhs = np.conj(field_two_point(st, g.conj(), f.conj()))
                assert abs(lhs - rhs) <= HERMITIAN_RTOL * max(abs(lhs), 1e-300)
            v = field_two_point(st, f.conj(), f)
            assert abs(v.imag) <= HERMITIAN_RTOL * abs(v)
            assert v.real >= -POSITIVITY_SLACK * abs(f.amplitude) ** 2


def test_time_translation_invariance():
    st = FieldState(MINK, 1.0, 2.0)
    f, g = smear((0, 0)), smear((0.4, 1.0))
    base = field_two_point(st, f, g)
    for dt in (0.7, -3.0):
        moved = field_two_point(st, f.translated(dt), g.translated(dt))
        assert abs(moved - base) <= STATIONARY_RTOL * abs(base)
    dev, ok = check_stationarity(st.kernel(f, g))
    assert ok and dev <= STATIONARY_RTOL


def test_field_detailed_balance_on_mode_lines():
    beta = 1.5
    st = FieldState(MINK, 1.0, beta)
    f, g = smear((0, 0)), smear((0.3, 0.6))
    k = np.linspace(-4, 4, 9)
    dmu = np.ones_like(k)
    nu_fg, w_fg = st.mode_lines(f, g, k, dmu)
    nu_gf, w_gf = st.mode_lines(g, f, k, dmu)
    n = len(k)
    om = nu_fg[:n]
    # weight of <f g> at -omega_k against that of <g f> at +omega_k
    assert np.allclose(w_fg[n:], np.exp(-beta * om) * w_gf[:n], rtol=1e-13, atol=0)


def test_mixture_is_linear():
    a, b = SingleModeState(1.0, 1.0), SingleModeState(1.0, 3.0)
    mixed = Mixture(((0.3, a), (0.7, b)))
    t = np.linspace(-2, 2, 7)
    for X, Y in [("a", "adag"), ("adag", "a")]:
        assert np.allclose(mixed.corr(X, Y, t), 0.3 * a.corr(X, Y, t) + 0.7 * b.corr(X, Y, t), atol=1e-15)
        assert np.allclose(mixed.kernel(X, Y).lag(t), 0.3 * a.corr(X, Y, t) + 0.7 * b.corr(X, Y, t), atol=1e-15)
    f1, f2 = FieldState(MINK, 1.0, 1.0), FieldState(MINK, 1.0, 2.0)
    fm = Mixture(((0.5, f1), (0.5, f2)))
    f, g = smear((0, 0)), smear((0.2, 0.1))
    assert fm.two_point(f, g) == pytest.approx(0.5 * f1.two_point(f, g) + 0.5 * f2.two_point(f, g), rel=1e-14)
    with pytest.raises(StateError):
        Mixture(((0.5, a), (0.6, b)))


def test_field_state_rejections():
    with pytest.raises(StateError):
        FieldState(MINK, 0.0)
    with pytest.raises(StateError):
        FieldState(MINK, 1.0, -1.0)


# ------------------------------------------------------------- smearings

def test_smearing_support():
    f = smear((0.3, -0.2), scale=0.4, radius=1.5)
    rng = np.random.default_rng(2)
    pts = np.array(f.center) + rng.normal(size=(4000, 2))
    r = np.linalg.norm(pts - np.array(f.center), axis=1)
    vals = np.abs(f(pts))
    assert np.all(vals[r >= f.support_radius] == 0.0)
    assert np.all(vals[r < 0.9 * f.support_radius] > 0.0)


def test_smearing_fourier_at_origin_is_normalised():
    for sigma in (0.0, 0.5):
        for lam in (1.0, 0.25):
            f = smear((1.0, 2.0), scale=lam, sigma=sigma)
            assert abs(f.fourier(np.zeros(2))) == pytest.approx(lam ** (-sigma), rel=1e-10)


def test_smearing_seminorm_growth():
    # sup |d^k f_lam| / sup |f_lam| grows no faster than lam^-k
    for k in (1, 2):
        ratios = []
        for lam in (1.0, 0.5, 0.25, 0.125):
            f = smear((0, 0), scale=lam)
            ratios.append(f.sup_derivative(k) / f.sup_derivative(0) * lam ** k)
        assert max(ratios) / min(ratios) < 1.05


# --------------------------------------------------------- matrix trace

def test_matrix_trace_examples():
    H = np.diag([0.0, 1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    t = np.linspace(-3, 3, 13)
    assert np.allclose(matrix_trace_corr(H, sx, sx, t), np.cos(t), atol=1e-14)
    one = np.eye(2)
    assert np.allclose(matrix_trace_corr(H, one, one, t), 1.0, atol=1e-14)
    rng = np.random.default_rng(3)
    H = rng.normal(size=(4, 4))
    H = H + H.T
    A, B = rng.normal(size=(2, 4, 4)) + 1j * rng.normal(size=(2, 4, 4))
    assert matrix_trace_corr(H, A, B, 0.0) == pytest.approx(matrix_trace_corr(H, B, A, 0.0), abs=1e-13)
    with pytest.raises(StateError):
        matrix_trace_corr(H, np.eye(3), np.eye(3), 0.0)


# ------------------------------------------------------------- quasifree

def _fock_npoint(state, ops, dim):
    a, _ = fock_operators(dim)
    mats = {"a": a, "adag": a.T}
    rho = fock_density(state, dim)
    prod = np.eye(dim)
    for o in ops:
        prod = prod @ mats[o]
    return np.trace(rho @ prod)


def test_quasifree_small_orders():
    st = SingleModeState(1.0)
    tp = lambda x, y: st.corr(x, y, 0.0)  # noqa: E731
    assert quasifree_npoint(tp, "bosonic", ["a", "adag", "a"]) == 0
    assert quasifree_npoint(tp, "bosonic", ["a"]) == 0
    assert quasifree_npoint(tp, "bosonic", ["a", "adag"]) == tp("a", "adag")
    with pytest.raises(StateError):
        quasifree_npoint(tp, "anyonic", ["a", "adag"])


@pytest.mark.parametrize("ops", [
    ("a", "adag", "a", "adag"),
    ("a", "a", "adag", "adag"),
    ("adag", "a", "a", "adag"),
    ("a", "adag", "a", "adag", "a", "adag"),
    ("a", "a", "a", "adag", "adag", "adag"),
])
@pytest.mark.parametrize("beta", [None, LN2])
def test_quasifree_bosonic_matches_fock(ops, beta):
    st = SingleModeState(1.0, beta)
    dim = 16 if beta is None else 64
    tp = lambda x, y: st.corr(x, y, 0.0)  # noqa: E731
    assert abs(quasifree_npoint(tp, "bosonic", ops) - _fock_npoint(st, ops, dim)) < FOCK_TOL


def _two_fermion_modes():
    # Jordan-Wigner on C^4
    c = np.array([[0.0, 1.0], [0.0, 0.0]])
    z = np.diag([1.0, -1.0])
    c1 = np.kron(c, np.eye(2))
    c2 = np.kron(z, c)
    return c1, c2


def test_quasifree_fermionic_two_mode_toy():
    c1, c2 = _two_fermion_modes()
    ops = {"c1": c1, "c1d": c1.T, "c2": c2, "c2d": c2.T}
    H = 0.8 * c1.T @ c1 + 1.7 * c2.T @ c2
    rho = np.diag(np.exp(-np.diag(H)))
    rho /= np.trace(rho)
    tp = lambda x, y: np.trace(rho @ ops[x] @ ops[y])  # noqa: E731
    for word in [("c1d", "c2d", "c2", "c1"), ("c1", "c2", "c2d", "c1d"), ("c1", "c1d", "c2", "c2d"),
                 ("c2", "c1", "c1d", "c2d")]:
        prod = np.eye(4)
        for w in word:
            prod = prod @ ops[w]
        ref = np.trace(rho @ prod)
        assert abs(quasifree_npoint(tp, "fermionic", word) - ref) < FOCK_TOL
    # a crossed contraction: the bosonic rule gets the sign wrong
    word = ("c1d", "c2d", "c1", "c2")
    ref = np.trace(rho @ ops["c1d"] @ ops["c2d"] @ ops["c1"] @ ops["c2"])
    assert ref < 0
    assert quasifree_npoint(tp, "fermionic", word) == pytest.approx(ref, abs=FOCK_TOL)
    assert quasifree_npoint(tp, "bosonic", word) == pytest.approx(-ref, abs=FOCK_TOL)


# --------------------------------------------------- regularised kernels

@pytest.mark.parametrize("model,beta", [(MINK, None), (MINK, 1.0), (CYL, None), (CYL, 2.0)],
                         ids=["mink-vac", "mink-kms", "cyl-vac", "cyl-kms"])
def test_closed_form_kernel_matches_mode_sum(model, beta):
    st = FieldState(model, 1.0, beta)
    t = np.array([0.0, 0.3, -0.8, 1.5])
    x = np.array([0.5, -1.2, 0.1, 2.0])
    eps = 0.2
    a = regularized_kernel(st, t, x, eps)
    b = mode_kernel(st, t, x, eps)
    assert np.max(np.abs(a - b)) <= 1e-8 * np.max(np.abs(a))


def _spacelike_pairs(n, rng):
    x = rng.uniform(-1, 1, (n, 2))
    dx = rng.uniform(0.5, 1.5, n) * rng.choice([-1, 1], n)
    dt = rng.uniform(-0.3, 0.3, n)
    return np.stack([x, x + np.stack([dt, dx], axis=1)], axis=1)


def test_wave_residual_vacuum():
    st = FieldState(MINK, 1.0)
    pairs = _spacelike_pairs(16, np.random.default_rng(8))
    assert wave_residual(st, pairs, 1e-3, 1e-2) <= WAVE_RESIDUAL_MAX


def test_wave_residual_is_second_order():
    st = FieldState(MINK, 1.0, 1.0)
    pairs = _spacelike_pairs(8, np.random.default_rng(9))
    hs = np.array([4e-3, 2e-3, 1e-3])
    res = np.array([wave_residual(st, pairs, h, 1e-2) for h in hs])
    order = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert 1.8 <= order <= 2.2


def test_wave_residual_detects_mass_mismatch():
    st = FieldState(MINK, 1.0)
    pairs = _spacelike_pairs(8, np.random.default_rng(10))
    res = wave_residual(st, pairs, 1e-3, 1e-2, operator_mass=1.5)
    # the residual is of order |m^2 - m'^2| |w2| / |w2|
    assert 0.5 * 1.25 <= res <= 1.25 * 1.01


def test_wave_residual_rejects_coarse_grid():
    st = FieldState(MINK, 1.0)
    with pytest.raises(StateError):
        wave_residual(st, _spacelike_pairs(2, np.random.default_rng(0)), 0.2, 1e-2)


def test_plane_wave_residual_is_truncation_only():
    m, k = 1.0, 3.0
    om = math.hypot(k, m)
    u = lambda t, x: np.exp(-1j * om * t + 1j * k * x)  # noqa: E731
    for h in (1e-2, 5e-3):
        r, _ = klein_gordon_fd(u, np.array([0.2]), np.array([-0.4]), h, m)
        # leading error h^2 (om^4 - k^4) / 12
        assert abs(r[0]) <= h * h * (om ** 4 + k ** 4) / 12 * 1.01
