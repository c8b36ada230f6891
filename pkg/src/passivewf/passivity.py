"""Spectral certification of ground, KMS and trace conditions; passive mixtures.

Probes are Gaussians ``f(p) = exp(-(p-p0)^2 / 2 s^2)`` with time-side transform
``h(t) = (2pi)^{-1/2} int e^{-ipt} f(p) dp``.  For a kernel line ``e^{iEt}``
this gives ``int h(t) e^{iEt} dt = sqrt(2pi) f(E)`` and, for the strip-shifted
transform, ``int h(t + i beta) e^{iEt} dt = sqrt(2pi) e^{beta E} f(E)``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _numerics as nm
from .microlocal import NOISE_FLOOR, window_ft
from .states import (CorrelationKernel, FieldState, MatrixTrace, Mixture, SingleModeState, StateError,
                     check_stationarity)

TOL_GROUND = 1e-8
TOL_KMS = 1e-6
TOL_TRACE = 1e-12
KMS_FLOOR = 1e-300
PROBE_GUARD = 5.0
SQRT2PI = math.sqrt(2 * math.pi)
# kernel lines whose probe weight falls below this are dropped before quadrature
BAND_CUT = 1e-30


class PassivityError(ValueError):
    """Invalid probe, kernel or mixture input."""


@dataclass(frozen=True)
class SpectralTestFunction:
    center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise PassivityError("probe width must be positive")

    def f(self, p):
        p = np.asarray(p, dtype=float)
        return np.exp(-((p - self.center) ** 2) / (2 * self.width ** 2))

    def h(self, t):
        """``s exp(-i p0 t - s^2 t^2 / 2)``."""
        t = np.asarray(t, dtype=complex)
        s = self.width
        return s * np.exp(-1j * self.center * t - 0.5 * s * s * t * t)

    def h_shifted(self, t, beta):
        """Analytic continuation ``h(t + i beta)``."""
        return self.h(np.asarray(t, dtype=float) + 1j * beta)

    def h_shifted_numeric(self, t, beta, n=4001):
        """``h(t + i beta)`` from the frequency side: multiply ``f`` by ``e^{beta p}`` and transform."""
        s, p0 = self.width, self.center
        # the multiplied profile is a Gaussian centred at p0 + beta s^2
        c = p0 + beta * s * s
        p = np.linspace(c - 40 * s, c + 40 * s, n)
        g = self.f(p) * np.exp(beta * p)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ker = np.exp(-1j * np.outer(t, p))
        return np.trapezoid(ker * g, p, axis=1) / SQRT2PI

    def leakage_bound(self):
        """Max of ``sqrt(2pi) f`` on ``[0, inf)`` for a probe with ``p0 < 0``."""
        return SQRT2PI * float(self.f(0.0)) if self.center < 0 else SQRT2PI


def default_ground_probes(omega=1.0, n=5, width=None):
    """Probes at ``p0 = -omega, -2 omega, ...`` with width ``0.15 omega`` (so ``p0 + 5 width < 0``)."""
    width = 0.15 * omega if width is None else width
    return [SpectralTestFunction(-omega * (j + 1.0), width) for j in range(n)]


def default_kms_probes(centers=(-2.0, -1.0, 0.5, 1.0, 2.0), width=0.5):
    return [SpectralTestFunction(float(c), width) for c in centers]


def _probe_nodes(probe, bandwidth, beta=0.0):
    """Gauss-Legendre nodes on the effective support of the (shifted) probe."""
    s = probe.width
    T = math.sqrt(2 * (45.0 + 0.5 * (s * beta) ** 2)) / s
    omega = abs(probe.center) + bandwidth + s * s * beta + 10 * s
    npan = int(math.ceil(2 * T * omega / math.pi)) + 16
    return nm.gauss_panels(-T, T, 2 * T / npan, 16)


def band_limit(C, probe, beta=None, reverse=False):
    """Drop kernel lines the probe cannot see.

    Evaluated as ``C.lag`` a line ``w e^{i nu t}`` contributes
    ``sqrt(2pi) |w| f(nu)``; as ``C.reverse_lag`` under the shifted probe it
    contributes ``sqrt(2pi) |w| e^{-beta nu} f(-nu)``.  Lines whose factor is
    below ``BAND_CUT`` are removed; returns the reduced kernel and the bound
    on what was dropped.
    """
    if not isinstance(C, CorrelationKernel) or not C.has_lines:
        return C, 0.0
    nu = -C.freqs if reverse else C.freqs
    expo = -((nu - probe.center) ** 2) / (2 * probe.width ** 2)
    if beta is not None:
        expo = expo + beta * nu
    fac = np.exp(np.minimum(expo, 700.0))
    keep = fac >= BAND_CUT
    dropped = SQRT2PI * float(np.sum(np.abs(C.weights[~keep]) * fac[~keep]))
    return CorrelationKernel.from_lines(C.freqs[keep], C.weights[keep], C.info), dropped


def probe_integral(probe, C, beta=None):
    """``int h(t) C(t) dt`` (or ``h(t + i beta)``) by quadrature."""
    bw = C.bandwidth() if isinstance(C, CorrelationKernel) else 0.0
    fn = C.lag if isinstance(C, CorrelationKernel) else C
    t, w = _probe_nodes(probe, bw, beta or 0.0)
    hv = probe.h(t) if beta is None else probe.h_shifted(t, beta)
    return complex(np.sum(w * hv * fn(t)))


@dataclass
class CertReport:
    check: str
    passed: bool
    rows: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)

    def to_dict(self):
        return {"check": self.check, "passed": self.passed, "rows": self.rows, "tolerances": self.tolerances}


def _lag_fn(kernel):
    return kernel.lag if isinstance(kernel, CorrelationKernel) else kernel


def ground_check(C, probes, tol=TOL_GROUND):
    """``int h(t) w(A alpha_t(B)) dt`` must vanish for negative-frequency probes.

    ``C`` is a two-time kernel (``C.lag`` is used) or a plain function of ``t``.
    The tolerance is ``tol * ||C||`` plus the Gaussian leakage of the probe
    into ``[0, inf)`` (times the total spectral weight).
    """
    norm = C.bound if isinstance(C, CorrelationKernel) else 1.0
    lag = _lag_fn(C)
    rows = []
    ok = True
    for pr in probes:
        if not pr.center + PROBE_GUARD * pr.width < 0:
            raise PassivityError("ground probes need p0 + 5 width < 0")
        dropped = 0.0
        if isinstance(C, CorrelationKernel):
            Cb, dropped = band_limit(C, pr)
            t, w = _probe_nodes(pr, Cb.bandwidth())
            val = complex(np.sum(w * pr.h(t) * Cb.lag(t)))
        else:
            val = probe_integral(pr, lag)
        allowed = tol * norm + pr.leakage_bound() * norm + dropped
        passed = abs(val) <= allowed
        ok &= passed
        rows.append({"p0": pr.center, "width": pr.width, "value": abs(val),
                     "relative": abs(val) / max(norm, 1e-300), "allowed": allowed, "pass": bool(passed)})
    return CertReport("ground", bool(ok), rows, {"tol_ground": tol, "probe_guard": PROBE_GUARD})


def kms_check(C_ab, C_ba, beta, probes, tol=TOL_KMS, floor=None):
    """Compare ``L = int h(t) w(A alpha_t(B))`` with ``R = int h(t + i beta) w(alpha_t(B) A)``.

    ``C_ab`` and ``C_ba`` are the kernels of the ordered pairs ``(A, B)`` and
    ``(B, A)``; ``w(alpha_t(B) A)`` is ``C_ba`` evaluated at ``(t, 0)``.
    """
    if beta is None or not beta > 0:
        raise PassivityError("KMS check needs beta > 0")
    if floor is None:
        floor = 1e-14 * max(C_ab.bound, C_ba.bound, 1e-300)
    rows = []
    ok = True
    for pr in probes:
        Ab, d1 = band_limit(C_ab, pr)
        Bb, d2 = band_limit(C_ba, pr, beta, reverse=True)
        t, w = _probe_nodes(pr, max(Ab.bandwidth(), Bb.bandwidth()), beta)
        L = complex(np.sum(w * pr.h(t) * Ab.lag(t)))
        R = complex(np.sum(w * pr.h_shifted(t, beta) * Bb.reverse_lag(t)))
        rel = (abs(L - R) + d1 + d2) / (abs(L) + abs(R) + floor)
        passed = rel <= tol
        ok &= passed
        rows.append({"p0": pr.center, "width": pr.width, "L": [L.real, L.imag], "R": [R.real, R.imag],
                     "relative": rel, "pass": bool(passed)})
    return CertReport("kms", bool(ok), rows, {"tol_kms": tol, "floor": floor, "beta": beta})


def trace_check(pairs, times=(0.0, 0.7, -2.3), tol=TOL_TRACE, state=None):
    """Tracial property ``w(AB) = w(BA)`` on operator samples, plus time invariance.

    ``pairs`` is a list of ``(C_ab, C_ba)`` kernels.  Time invariance is
    checked both as stationarity of the kernels and, when a matrix ``state``
    is given, as invariance of the functional itself: ``w(alpha_t(X)) = w(X)``.
    """
    rows = []
    ok = True
    for C_ab, C_ba in pairs:
        ab = complex(C_ab(0.0, 0.0))
        ba = complex(C_ba(0.0, 0.0))
        dev, stationary = check_stationarity(C_ab, np.asarray(times))
        passed = abs(ab - ba) <= tol and stationary
        ok &= passed
        rows.append({"ab": [ab.real, ab.imag], "ba": [ba.real, ba.imag], "difference": abs(ab - ba),
                     "stationarity": dev, "pass": bool(passed)})
    if state is not None and isinstance(state, MatrixTrace):
        rng = np.random.default_rng(7)
        n = state.n
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        drift = max(abs(state.expectation(state.evolve(X, t)) - state.expectation(X)) for t in times)
        inv = drift <= tol * max(1.0, np.abs(X).max())
        ok &= bool(inv)
        rows.append({"invariance_drift": float(drift), "pass": bool(inv)})
    return CertReport("trace", bool(ok), rows, {"tol_trace": tol})


def derivation_positivity(state, operators, tol=1e-12):
    """``w(A^* [H, A]) >= 0`` for matrix models, the infinitesimal ground condition."""
    if not isinstance(state, MatrixTrace):
        raise PassivityError("derivation positivity is available for matrix models")
    vals = [state.expectation(np.conj(A).T @ (state.H @ A - A @ state.H)) for A in operators]
    ok = all(v.real >= -tol and abs(v.imag) <= tol * max(1.0, abs(v)) for v in vals)
    return CertReport("derivation", bool(ok), [{"value": [v.real, v.imag]} for v in vals], {"tol": tol})


def fock_matrix_model(state, dim):
    """Truncated-Fock matrix realisation of a single-mode state."""
    from .states import fock_density, fock_operators
    a, N = fock_operators(dim)
    return MatrixTrace(state.omega0 * N, density=fock_density(state, dim)), a


# ---------------------------------------------------------------- mixture

@dataclass(frozen=True)
class PassiveMixture(Mixture):
    """Strictly passive state: finite convex mixture of ground and positive-temperature KMS states."""

    strictly_passive: bool = True

    def __post_init__(self):
        super().__post_init__()
        for _, s in self.components:
            if isinstance(s, (SingleModeState, FieldState)):
                if getattr(s, "occupation_scale", 1.0) != 1.0:
                    raise PassivityError("component is not a ground or KMS state")
                continue
            if isinstance(s, MatrixTrace):
                raise PassivityError("a tracial (beta = 0) component is not admitted")
            raise PassivityError(f"unsupported component {type(s).__name__}")
        kinds = {type(s) for _, s in self.components}
        if len(kinds) > 1:
            raise PassivityError("components must share one model")


def mix(components):
    """Build a :class:`PassiveMixture` from ``(weight, state)`` pairs."""
    try:
        return PassiveMixture(tuple(components))
    except StateError as exc:
        raise PassivityError(str(exc)) from exc


# -------------------------------------------------------- suppression

@dataclass
class SuppressionResult:
    rate: float
    slope: float
    inverse_lambdas: list
    magnitudes: list
    used: list
    passed: bool
    floor_pass: bool
    expected_rate: float

    def to_dict(self):
        return dict(self.__dict__)


def exp_suppression_probe(state, direction=(1.0, -1.0), lambdas=None, halfwidth=4.0, sharpness=4.0,
                          noise_floor=NOISE_FLOOR, factor=0.5):
    """Exponential decay of the thermal pair integral for ``k2 < 0``.

    The channel is ``Phi = a + a^dagger`` of an oscillator whose frequency
    follows the testing family, ``omega(lam) = omega0 + |k2| / lam``.  For
    ``k = lam^{-1} direction`` the negative-frequency line sits at the centre
    of the window transform and carries the weight ``n(omega(lam))``, so
    ``log|I|`` falls off linearly in ``1/lam`` with slope ``-beta |k2|``.
    Passes when the fitted slope lies in ``[-beta |k2| / factor, -factor beta |k2|]``; if the
    magnitudes are at the floor the result is a floor pass.
    """
    if not isinstance(state, SingleModeState):
        raise PassivityError("suppression probe runs on the single-mode channel")
    k1, k2 = map(float, direction)
    if not k2 < 0:
        raise PassivityError("direction needs a negative second component")
    if lambdas is None:
        lambdas = tuple(1.0 / x for x in np.arange(4.0, 17.0, 2.0))
    ft = window_ft(sharpness, halfwidth)
    inv = [1.0 / lam for lam in lambdas]
    mags = []
    for lam in lambdas:
        st = SingleModeState(state.omega0 + abs(k2) / lam, state.beta, state.occupation_scale)
        ker = st.kernel({"a": 1.0, "adag": 1.0}, {"a": 1.0, "adag": 1.0})
        K1, K2 = k1 / lam, k2 / lam
        mags.append(float(abs(np.sum(ker.weights * ft(K1 + ker.freqs) * ft(K2 - ker.freqs)))))
    mags = np.array(mags)
    used = mags >= noise_floor
    expected = (state.beta or 0.0) * abs(k2)
    floor_pass = bool(mags[-1] < noise_floor)
    if np.count_nonzero(used) < 3:
        return SuppressionResult(math.inf, -math.inf, inv, mags.tolist(), used.tolist(), floor_pass, floor_pass,
                                 expected)
    x = np.array(inv)[used]
    y = np.log(mags[used])
    slope = float(np.polyfit(x, y, 1)[0])
    if state.beta is None:
        passed = floor_pass
    else:
        passed = -expected / factor <= slope <= -factor * expected
    return SuppressionResult(-slope, slope, inv, mags.tolist(), used.tolist(), bool(passed), floor_pass, expected)
