"""Passive state models and their correlation functions.

Conventions
-----------
Fourier transforms of smearings are Euclidean, ``F(p) = int f(x) e^{-i p.x} dx``.
For a field mode of spatial momentum ``k`` write ``P = (omega_k, -k)``.  The
two-point function of a quasifree ground or KMS state of the Klein-Gordon
field is then

    w2(f x g) = int dmu(k) / (2 omega) [ (1+n) F(P) G(-P) + n F(-P) G(P) ],

with ``dmu = dk/2pi`` on Minkowski space and ``(1/L) sum_{k in 2pi Z / L}``
on the cylinder.  Translating a smearing forward in time by ``t`` multiplies
``F(P)`` by ``e^{-i omega t}``, so ``t -> w2(f x T_t g)`` contains the positive
frequency ``e^{+i omega t}``, matching ``w(a alpha_t(a^dagger)) = e^{i omega_0 t}``
for a single oscillator.

Every correlation kernel built here is a finite sum of spectral lines
``C(t1, t2) = sum_j w_j exp(i nu_j (t2 - t1))``; mode integrals are
discretised by Gauss-Legendre nodes (Minkowski) or are already sums
(cylinder).
"""
import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import kv

from . import _numerics as nm
from .geometry import SpacetimeModel

TAIL_TOL = 1e-12
HERMITIAN_TOL = 1e-9
STATIONARITY_TOL = 1e-10


class StateError(ValueError):
    """Invalid state parameters or unsupported evaluation."""


class QuadratureError(RuntimeError):
    """A mode integral or oscillatory integral failed its convergence check."""


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class CorrelationKernel:
    """``(t1, t2) -> w(alpha_{t1}(A) alpha_{t2}(B))``.

    ``freqs``/``weights`` give the spectral-line representation when it is
    known; ``two_time`` is then derived from it.  ``bound`` is an upper bound
    for ``sup |C|`` (the total line weight when lines are present).
    """

    two_time: Callable
    freqs: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    bound: float = 1.0
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_lines(cls, freqs, weights, info=None):
        freqs = np.asarray(freqs, dtype=float).ravel()
        weights = np.asarray(weights, dtype=complex).ravel()

        def two_time(t1, t2):
            tau = np.asarray(t2, dtype=float) - np.asarray(t1, dtype=float)
            shape = tau.shape
            tau = tau.ravel()
            out = np.empty(tau.shape, dtype=complex)
            chunk = max(1, 2_000_000 // max(1, len(freqs)))
            for i in range(0, len(tau), chunk):
                out[i:i + chunk] = np.exp(1j * np.outer(tau[i:i + chunk], freqs)) @ weights
            return out.reshape(shape)

        return cls(two_time, freqs, weights, float(np.sum(np.abs(weights))), dict(info or {}))

    @property
    def has_lines(self):
        return self.freqs is not None

    def __call__(self, t1, t2):
        return self.two_time(t1, t2)

    def lag(self, t):
        """``w(A alpha_t(B))``."""
        return self.two_time(np.zeros_like(np.asarray(t, dtype=float)), t)

    def reverse_lag(self, t):
        """``w(alpha_t(A) B)``."""
        return self.two_time(t, np.zeros_like(np.asarray(t, dtype=float)))

    def scaled(self, c):
        if self.has_lines:
            return CorrelationKernel.from_lines(self.freqs, c * self.weights, self.info)
        return CorrelationKernel(lambda t1, t2: c * self.two_time(t1, t2), None, None, abs(c) * self.bound)

    def bandwidth(self):
        return float(np.max(np.abs(self.freqs))) if self.has_lines and len(self.freqs) else 0.0


def combine_kernels(parts):
    """Convex (or any linear) combination ``sum_i c_i K_i`` of kernels."""
    parts = list(parts)
    if all(k.has_lines for _, k in parts):
        freqs = np.concatenate([k.freqs for _, k in parts])
        weights = np.concatenate([c * k.weights for c, k in parts])
        return CorrelationKernel.from_lines(freqs, weights)

    def two_time(t1, t2):
        return sum(c * k.two_time(t1, t2) for c, k in parts)

    return CorrelationKernel(two_time, None, None, float(sum(abs(c) * k.bound for c, k in parts)))


def check_stationarity(kernel, times=None, shifts=(0.3, -1.7, 5.0), tol=STATIONARITY_TOL):
    """Max relative deviation of ``C(t1+s, t2+s)`` from ``C(t1, t2)`` on a sample grid."""
    if times is None:
        times = np.linspace(-3.0, 3.0, 13)
    t1, t2 = np.meshgrid(times, times, indexing="ij")
    base = kernel(t1, t2)
    scale = max(np.max(np.abs(base)), 1e-300)
    dev = max(np.max(np.abs(kernel(t1 + s, t2 + s) - base)) for s in shifts) / scale
    return dev, bool(dev <= tol)


# ------------------------------------------------------------ single mode

_OPS = ("a", "adag")


@dataclass(frozen=True)
class SingleModeState:
    """Harmonic oscillator of frequency ``omega0`` in its ground (``beta=None``) or Gibbs state.

    ``occupation_scale`` rescales the occupation number; values other than 1
    give a deliberately non-KMS functional used as a negative control.
    """

    omega0: float
    beta: Optional[float] = None
    occupation_scale: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise StateError("omega0 must be positive")
        if self.beta is not None and not self.beta > 0:
            raise StateError("KMS inverse temperature must be positive")

    @property
    def kind(self):
        return "SingleModeGround" if self.beta is None else "SingleModeKMS"

    @property
    def nbar(self):
        return self.occupation_scale * float(nm.bose(self.beta, self.omega0))

    def lines(self, X, Y):
        """Spectral lines of ``t -> w(X alpha_t(Y))`` for ``X, Y`` in {a, adag}."""
        if X not in _OPS or Y not in _OPS:
            raise StateError(f"unknown ladder operator {X!r}/{Y!r}")
        n = self.nbar
        if X == "a" and Y == "adag":
            return [self.omega0], [1.0 + n]
        if X == "adag" and Y == "a":
            return [-self.omega0], [n]
        return [], []

    def corr(self, X, Y, t):
        return single_mode_corr(self, X, Y, t)

    def kernel(self, X, Y):
        """Kernel for ladder operators or linear combinations ``{"a": c1, "adag": c2}``."""
        xs = X if isinstance(X, dict) else {X: 1.0}
        ys = Y if isinstance(Y, dict) else {Y: 1.0}
        freqs, weights = [], []
        for (x, cx), (y, cy) in itertools.product(xs.items(), ys.items()):
            f, w = self.lines(x, y)
            freqs += f
            weights += [cx * cy * v for v in w]
        return CorrelationKernel.from_lines(freqs, weights, {"state": self.kind})


def single_mode_corr(state, X, Y, t):
    """``w(X alpha_t(Y))`` with ``alpha_t(a) = e^{-i omega0 t} a``."""
    freqs, weights = state.lines(X, Y)
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for nu, w in zip(freqs, weights):
        out = out + w * np.exp(1j * nu * t)
    return out if out.ndim else complex(out)


def fock_operators(dim):
    """Truncated annihilation operator and number operator on ``C^dim``."""
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return a, np.diag(np.arange(dim, dtype=float))


def fock_density(state, dim):
    """Truncated-Fock density matrix of a single-mode state (renormalised)."""
    if state.beta is None:
        rho = np.zeros((dim, dim))
        rho[0, 0] = 1.0
        return rho
    w = np.exp(-state.beta * state.omega0 * np.arange(dim))
    return np.diag(w / w.sum())


# ------------------------------------------------------------- smearings

@lru_cache(maxsize=8)
def _ball_bump_integral(dim):
    sphere = 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)
    val, _ = quad(lambda r: r ** (dim - 1) * math.exp(-1.0 / (1.0 - r * r)) if r < 1 else 0.0, 0, 1,
                  epsabs=0, epsrel=1e-13, limit=200)
    return sphere * val


@dataclass(frozen=True)
class SmearingFunction:
    """``f(x) = A e^{i kappa.x} lam^{-sigma} (lam r0)^{-n} b(|x-c|/(lam r0)) / int b``.

    ``b`` is the radial bump ``exp(-1/(1-rho^2))``.  The normalisation makes
    ``F(kappa) = A lam^{-sigma}``; ``sigma`` sets the growth of the family as
    the scale shrinks.
    """

    center: tuple
    scale: float = 1.0
    radius: float = 1.0
    sigma: float = 0.0
    amplitude: complex = 1.0
    modulation: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if self.modulation is not None:
            object.__setattr__(self, "modulation", tuple(float(v) for v in self.modulation))
            if len(self.modulation) != len(self.center):
                raise StateError("modulation and center dimensions differ")
        if not (self.scale > 0 and self.radius > 0):
            raise StateError("smearing scale and radius must be positive")

    @property
    def dim(self):
        return len(self.center)

    @property
    def support_radius(self):
        return self.scale * self.radius

    @property
    def kappa(self):
        return np.zeros(self.dim) if self.modulation is None else np.array(self.modulation)

    def _norm(self):
        rho = self.support_radius
        return self.amplitude * self.scale ** (-self.sigma) * rho ** (-self.dim) / _ball_bump_integral(self.dim)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = x - np.array(self.center)
        rho = np.linalg.norm(d, axis=-1) / self.support_radius
        val = self._norm() * nm.radial_bump(rho)
        if self.modulation is not None:
            val = val * np.exp(1j * (x @ self.kappa))
        return val

    def fourier(self, p):
        """``F(p)`` for ``p`` of shape ``(..., n)``."""
        p = np.asarray(p, dtype=float)
        q = p - self.kappa
        radial = nm.radial_transform(self.dim)(self.support_radius * np.linalg.norm(q, axis=-1))
        phase = np.exp(-1j * (q @ np.array(self.center)))
        return self.amplitude * self.scale ** (-self.sigma) * radial * phase

    def envelope(self, pnorm):
        """Upper bound for ``|F(p)|`` over ``|p - kappa| >= pnorm``."""
        return abs(self.amplitude) * self.scale ** (-self.sigma) * nm.radial_transform(self.dim).envelope(
            self.support_radius * np.asarray(pnorm))

    def translated(self, shift):
        shift = np.asarray(shift, dtype=float)
        if shift.ndim == 0:
            shift = np.eye(self.dim)[0] * float(shift)
        c = np.array(self.center) + shift
        # keep e^{i kappa.(x - shift)} so that the translate is f(x - shift)
        amp = self.amplitude * np.exp(-1j * float(self.kappa @ shift)) if self.modulation is not None else self.amplitude
        return replace(self, center=tuple(c), amplitude=amp)

    def conj(self):
        mod = None if self.modulation is None else tuple(-v for v in self.modulation)
        return replace(self, amplitude=complex(np.conj(self.amplitude)), modulation=mod)

    def sup_derivative(self, order, npts=20001):
        """``max |d^k f|`` along the line through the centre in the first coordinate."""
        rho = self.support_radius
        u = np.linspace(-rho, rho, npts)
        x = np.tile(np.array(self.center), (npts, 1))
        x[:, 0] += u
        vals = self(x)
        for _ in range(order):
            vals = np.gradient(vals, u)
        return float(np.max(np.abs(vals)))


# ------------------------------------------------------------ field states

SUPPORTED_FIELD_MODELS = ("Minkowski1p1", "CylinderRxS1", "Minkowski1p3")


@dataclass(frozen=True)
class FieldState:
    """Quasifree vacuum (``beta=None``) or KMS state of the Klein-Gordon field."""

    model: SpacetimeModel
    mass: float
    beta: Optional[float] = None
    occupation_scale: float = 1.0

    def __post_init__(self):
        if self.model.name not in SUPPORTED_FIELD_MODELS:
            raise StateError(f"no field state on {self.model.name}")
        if not self.mass > 0:
            raise StateError("mass must be positive")
        if self.beta is not None and not self.beta > 0:
            raise StateError("KMS inverse temperature must be positive")

    @property
    def kind(self):
        return "FieldVacuum" if self.beta is None else "FieldKMS"

    def omega(self, k):
        return np.sqrt(np.asarray(k, dtype=float) ** 2 + self.mass ** 2)

    def occupation(self, omega):
        return self.occupation_scale * nm.bose(self.beta, omega)

    def k_nodes(self, kmax, width=0.5, order=8, kmin=None):
        """Nodes and measure weights ``dmu`` for ``|k| <= kmax`` (1+1 models)."""
        if self.model.periodic:
            L = self.model.circumference
            j = np.arange(-int(np.floor(kmax * L / (2 * np.pi))), int(np.floor(kmax * L / (2 * np.pi))) + 1)
            k = 2 * np.pi * j / L
            if kmin is not None:
                k = k[np.abs(k) >= kmin]
            return k, np.full(k.shape, 1.0 / L)
        if kmin is None:
            k, w = nm.gauss_panels(-kmax, kmax, width, order)
        else:
            kp, wp = nm.gauss_panels(kmin, kmax, width, order)
            k, w = np.concatenate([-kp[::-1], kp]), np.concatenate([wp[::-1], wp])
        return k, w / (2 * np.pi)

    def mode_lines(self, f, g, k, dmu):
        """Spectral lines of ``(t1, t2) -> w2(T_{t1} f x T_{t2} g)`` on the given nodes."""
        om = self.omega(k)
        n = self.occupation(om)
        P = np.stack([om, -k], axis=-1)
        pos = dmu * (1 + n) * f.fourier(P) * g.fourier(-P) / (2 * om)
        neg = dmu * n * f.fourier(-P) * g.fourier(P) / (2 * om)
        return np.concatenate([om, -om]), np.concatenate([pos, neg])

    def kernel(self, f, g, tol=TAIL_TOL, order=8):
        kmax, width = _field_cutoff(self, f, g, tol)
        k, dmu = self.k_nodes(kmax, width, order)
        freqs, weights = self.mode_lines(f, g, k, dmu)
        return CorrelationKernel.from_lines(freqs, weights, {"state": self.kind, "kmax": kmax})

    def two_point(self, f, g, **kw):
        return field_two_point(self, f, g, **kw)


def _field_cutoff(state, f, g, tol):
    """Momentum cutoff from the smearing envelopes, and a panel width resolving the phases."""
    rad = nm.radial_transform(f.dim)
    pf = rad.cutoff(tol * 1e-2) / f.support_radius + np.linalg.norm(f.kappa)
    pg = rad.cutoff(tol * 1e-2) / g.support_radius + np.linalg.norm(g.kappa)
    kmax = min(pf, pg)
    spread = np.abs(np.array(f.center) - np.array(g.center)).sum() + 2 * (f.support_radius + g.support_radius)
    width = min(0.5, 0.5 / (1.0 + spread)) if not state.model.periodic else None
    return float(kmax), width


def _tail_bound(state, f, g, kmax):
    """Envelope bound on the discarded part ``|k| > kmax`` of the mode integral."""
    if state.model.periodic:
        L = state.model.circumference
        j0 = int(np.floor(kmax * L / (2 * np.pi))) + 1
        kk = 2 * np.pi * np.arange(j0, j0 + 20000) / L
    else:
        kk = np.linspace(kmax, kmax * 4 + 50, 4001)
    om = state.omega(kk)
    pn = np.sqrt(om ** 2 + kk ** 2)
    dens = f.envelope(np.maximum(pn - np.linalg.norm(f.kappa), 0)) * g.envelope(
        np.maximum(pn - np.linalg.norm(g.kappa), 0)) * (1 + 2 * state.occupation(om)) / (2 * om)
    if state.model.periodic:
        return float(2 * np.sum(dens) / L)
    if state.model.name == "Minkowski1p3":
        return float(np.trapezoid(dens * kk ** 2 / (2 * np.pi ** 2), kk))
    return float(np.trapezoid(dens * 2 / (2 * np.pi), kk))


def field_two_point(state, f, g, kmax=None, order=8, tol=TAIL_TOL, return_info=False):
    """``w2(f x g)`` by mode integration with a reported tail bound.

    On Minkowski 1+3 the smearings must be unmodulated radial bumps; the
    angular integral then reduces to ``sinc(|k| |dx|)``.
    """
    if f.dim != state.model.dim or g.dim != state.model.dim:
        raise StateError("smearing dimension does not match the spacetime")
    kcut, width = _field_cutoff(state, f, g, tol)
    kmax = kcut if kmax is None else float(kmax)
    if state.model.name == "Minkowski1p3":
        value, absval = _two_point_1p3(state, f, g, kmax, width, order)
    else:
        k, dmu = state.k_nodes(kmax, width, order)
        _, w = state.mode_lines(f, g, k, dmu)
        value = complex(np.sum(w))
        absval = float(np.sum(np.abs(w)))
    tail = _tail_bound(state, f, g, kmax)
    info = {"kmax": kmax, "tail_bound": tail, "abs_integral": absval, "order": order}
    if tail > tol * max(absval, 1e-300) and tail > 1e-300:
        if kmax >= kcut:
            raise QuadratureError(f"mode integral tail {tail:.3e} above tolerance")
        info["truncated"] = True
    return (value, info) if return_info else value


def _two_point_1p3(state, f, g, kmax, width, order):
    if f.modulation is not None or g.modulation is not None:
        raise StateError("1+3 evaluation supports unmodulated radial smearings only")
    k, w = nm.gauss_panels(0.0, kmax, width, order)
    om = state.omega(k)
    n = state.occupation(om)
    dc = np.array(f.center) - np.array(g.center)
    r = np.linalg.norm(dc[1:])
    rad = nm.radial_transform(4)
    pn = np.sqrt(om ** 2 + k ** 2)
    amp = (f.amplitude * g.amplitude * f.scale ** (-f.sigma) * g.scale ** (-g.sigma)
           * rad(f.support_radius * pn) * rad(g.support_radius * pn))
    sinc = np.sinc(k * r / np.pi)
    dt = dc[0]
    dens = amp * sinc * ((1 + n) * np.exp(-1j * om * dt) + n * np.exp(1j * om * dt)) / (2 * om)
    meas = w * k ** 2 / (2 * np.pi ** 2)
    return complex(np.sum(meas * dens)), float(np.sum(np.abs(meas * dens)))


# ----------------------------------------------------------- matrix trace

@dataclass(frozen=True)
class MatrixTrace:
    """Normalised trace (or a supplied density) on ``n x n`` matrices, evolved by ``H``."""

    H: np.ndarray
    density: Optional[np.ndarray] = None

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or not np.allclose(H, H.conj().T, atol=1e-12):
            raise StateError("H must be a square hermitian matrix")
        object.__setattr__(self, "H", H)
        if self.density is not None:
            rho = np.asarray(self.density, dtype=complex)
            if rho.shape != H.shape:
                raise StateError("density has the wrong shape")
            object.__setattr__(self, "density", rho)

    kind = "MatrixTrace"

    @property
    def n(self):
        return self.H.shape[0]

    def rho(self):
        return np.eye(self.n) / self.n if self.density is None else self.density

    def evolve(self, B, t):
        E, V = np.linalg.eigh(self.H)
        U = (V * np.exp(1j * t * E)) @ V.conj().T
        return U @ B @ U.conj().T

    def expectation(self, X):
        return complex(np.trace(self.rho() @ X))

    def kernel(self, A, B):
        A = np.asarray(A, dtype=complex)
        B = np.asarray(B, dtype=complex)
        if A.shape != self.H.shape or B.shape != self.H.shape:
            raise StateError("operator dimension mismatch")
        E, V = np.linalg.eigh(self.H)
        rho_e = V.conj().T @ self.rho() @ V
        if np.max(np.abs(rho_e - np.diag(np.diag(rho_e)))) > 1e-12:
            state = self

            def two_time(t1, t2):
                t1 = np.broadcast_to(np.asarray(t1, dtype=float), np.broadcast(t1, t2).shape)
                t2 = np.broadcast_to(np.asarray(t2, dtype=float), t1.shape)
                out = np.empty(t1.shape, dtype=complex)
                for idx in np.ndindex(t1.shape):
                    out[idx] = state.expectation(state.evolve(A, t1[idx]) @ state.evolve(B, t2[idx]))
                return out

            bound = float(np.linalg.norm(A, 2) * np.linalg.norm(B, 2) * np.abs(np.trace(self.rho())))
            return CorrelationKernel(two_time, None, None, bound, {"state": self.kind})
        Ae = V.conj().T @ A @ V
        Be = V.conj().T @ B @ V
        p = np.real(np.diag(rho_e))
        # w(alpha_{t1}(A) alpha_{t2}(B)) = sum_{mn} p_n A_nm B_mn e^{i(E_m - E_n)(t2 - t1)}
        w = p[:, None] * Ae * Be.T
        freqs = E[None, :] - E[:, None]
        return CorrelationKernel.from_lines(freqs.ravel(), w.ravel(), {"state": self.kind})


def matrix_trace_corr(H, A, B, t):
    """``tr(A e^{itH} B e^{-itH}) / n``."""
    H = np.asarray(H)
    A = np.asarray(A)
    B = np.asarray(B)
    if not (A.shape == B.shape == H.shape):
        raise StateError("operator dimension mismatch")
    st = MatrixTrace(H)
    val = st.kernel(A, B).lag(np.asarray(t, dtype=float))
    return val if np.ndim(val) else complex(val)


# ---------------------------------------------------------------- mixture

@dataclass(frozen=True)
class Mixture:
    """Finite convex combination ``sum_i rho_i w_i``; every evaluator is linear."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise StateError("empty mixture")
        if any(w <= 0 for w, _ in comps):
            raise StateError("mixture weights must be positive")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-15 * len(comps) + 1e-15:
            raise StateError("mixture weights must sum to 1")
        object.__setattr__(self, "components", comps)

    kind = "Mixture"

    def kernel(self, *args, **kw):
        return combine_kernels([(w, s.kernel(*args, **kw)) for w, s in self.components])

    def corr(self, X, Y, t):
        return sum(w * s.corr(X, Y, t) for w, s in self.components)

    def two_point(self, f, g, **kw):
        return sum(w * field_two_point(s, f, g, **kw) for w, s in self.components)

    def mode_lines(self, f, g, k, dmu):
        parts = [s.mode_lines(f, g, k, dmu) for _, s in self.components]
        return (np.concatenate([p[0] for p in parts]),
                np.concatenate([w * p[1] for (w, _), p in zip(self.components, parts)]))

    def __getattr__(self, name):
        # shared model data (mass, spacetime) of field mixtures
        if name in ("model", "mass", "k_nodes", "omega"):
            return getattr(self.components[0][1], name)
        raise AttributeError(name)


# -------------------------------------------------------------- quasifree

def pairings(n):
    """Complete pairings of ``range(n)`` with the sign of the pairing permutation."""
    def rec(items):
        if not items:
            yield [], 1
            return
        first, rest = items[0], items[1:]
        for j, other in enumerate(rest):
            remaining = rest[:j] + rest[j + 1:]
            for sub, sgn in rec(remaining):
                yield [(first, other)] + sub, sgn * (-1) ** j
    yield from rec(list(range(n)))


def quasifree_npoint(two_point, statistics, smearings):
    """Sum over complete pairings of products of ordered two-point values."""
    if statistics not in ("bosonic", "fermionic"):
        raise StateError("statistics must be 'bosonic' or 'fermionic'")
    items = list(smearings)
    n = len(items)
    if n < 1:
        raise StateError("need at least one argument")
    if n % 2:
        return 0j
    cache = {}
    total = 0j
    for pairs, sgn in pairings(n):
        term = 1.0 + 0j
        for i, j in pairs:
            if (i, j) not in cache:
                cache[(i, j)] = complex(two_point(items[i], items[j]))
            term *= cache[(i, j)]
        total += (sgn if statistics == "fermionic" else 1) * term
    return total


# ----------------------------------------------------- regularised kernel

def _w0_minkowski(mass, t, x):
    """Vacuum kernel at complexified time: ``K_0(m sqrt(x^2 - t^2)) / 2pi`` (principal branch)."""
    s = np.sqrt(x * x - t * t + 0j)
    return kv(0, mass * s) / (2 * np.pi)


def regularized_kernel(state, t, x, eps):
    """``w2`` at separation ``(t, x)`` with every mode damped by ``e^{-eps omega}``.

    Closed forms: the vacuum is a modified Bessel function; thermal states add
    imaginary-time images at multiples of ``beta``; the cylinder adds spatial
    images at multiples of ``L``.
    """
    if state.model.dim != 2:
        raise StateError("regularised kernels are implemented for 1+1 models")
    if not eps > 0:
        raise StateError("eps must be positive")
    if state.occupation_scale != 1.0:
        raise StateError("closed-form kernel needs the unperturbed occupation")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    m = state.mass
    if state.model.periodic:
        L = state.model.circumference
        nimg = int(np.ceil(40.0 / (m * L) + (np.max(np.abs(t)) + np.max(np.abs(x))) / L)) + 2
        shifts = L * np.arange(-nimg, nimg + 1)
    else:
        shifts = np.zeros(1)
    jmax = 0 if state.beta is None else int(np.ceil(40.0 / (m * state.beta))) + 1
    out = np.zeros(np.broadcast(t, x).shape, dtype=complex)
    for sh in shifts:
        xs = x + sh
        out = out + _w0_minkowski(m, t - 1j * eps, xs)
        for j in range(1, jmax + 1):
            out = out + _w0_minkowski(m, t - 1j * (eps + j * state.beta), xs)
            out = out + _w0_minkowski(m, -t - 1j * (eps + j * state.beta), xs)
    return out


def mode_kernel(state, t, x, eps, kmax=None, width=0.02):
    """Same kernel as :func:`regularized_kernel` by direct mode summation (independent oracle)."""
    if kmax is None:
        kmax = state.mass + 40.0 / eps
    k, dmu = state.k_nodes(kmax, width, 8)
    om = state.omega(k)
    n = state.occupation(om)
    t = np.asarray(t, dtype=float)[..., None]
    x = np.asarray(x, dtype=float)[..., None]
    damp = np.exp(-eps * om)
    val = dmu * damp / (2 * om) * ((1 + n) * np.exp(-1j * om * t + 1j * k * x) + n * np.exp(1j * om * t - 1j * k * x))
    return val.sum(axis=-1)


def klein_gordon_fd(func, t, x, h, mass):
    """Five-point ``(d_t^2 - d_x^2 + m^2) u`` at ``(t, x)`` by central differences."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    u = func(t, x)
    utt = (func(t + h, x) - 2 * u + func(t - h, x)) / h ** 2
    uxx = (func(t, x + h) - 2 * u + func(t, x - h)) / h ** 2
    return utt - uxx + mass ** 2 * u, u


def wave_residual(state, pair_grid, h, eps, operator_mass=None):
    """Relative Klein-Gordon residual of the sampled regularised kernel in both arguments.

    ``pair_grid`` is an array of shape ``(N, 2, 2)`` of point pairs
    ``(x, x')``.  The kernel depends on ``x - x'`` only, so derivatives in
    ``x'`` are taken through the separation with the opposite sign.
    """
    if not h > 0 or h * h >= eps:
        raise StateError("grid spacing incompatible with regularisation: need h^2 < eps")
    m_op = state.mass if operator_mass is None else float(operator_mass)
    pairs = np.asarray(pair_grid, dtype=float).reshape(-1, 2, 2)
    dt = pairs[:, 0, 0] - pairs[:, 1, 0]
    dx = pairs[:, 0, 1] - pairs[:, 1, 1]

    def first(t, x):
        return regularized_kernel(state, t, x, eps)

    def second(t, x):
        return regularized_kernel(state, -t, -x, eps)

    r1, u = klein_gordon_fd(first, dt, dx, h, m_op)
    r2, _ = klein_gordon_fd(second, -dt, -dx, h, m_op)
    scale = float(np.max(np.abs(u)))
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))) / scale)


def sample_kernel_csv(state, t_axis, x_axis, eps):
    """Regularised kernel on a separation grid as CSV rows ``t, x, re, im``."""
    T, X = np.meshgrid(np.asarray(t_axis, float), np.asarray(x_axis, float), indexing="ij")
    W = regularized_kernel(state, T, X, eps)
    lines = ["t,x,re,im"]
    for tv, xv, wv in zip(T.ravel(), X.ravel(), W.ravel()):
        lines.append(f"{tv!r},{xv!r},{wv.real!r},{wv.imag!r}")
    return "\n".join(lines) + "\n"
