"""Shared numerical kernels: compact bumps, their Fourier transforms, quadrature rules.

Transforms are tabulated once (FFT of the sampled profile, which is exact up
to aliasing for a compactly supported smooth function) and then interpolated
with cubic splines.  Tables are cached per parameter set and never mutated.
"""
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma as _gamma

# transform tables are built up to this frequency; beyond it values are < 1e-40
_PMAX = 3000.0
_DP = 0.005


def bump(u, sharpness=1.0):
    """``exp(-a u^2/(1-u^2))`` on ``|u| < 1``, zero outside; equals 1 at the origin.

    With ``a = 1`` this is ``e * exp(-1/(1-u^2))``, the standard compact bump.
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-sharpness * ui * ui / (1.0 - ui * ui))
    return out


def radial_bump(rho):
    """Standard radial bump ``exp(-1/(1-|u|^2))`` as a function of the radius."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = rho < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - rho[inside] ** 2))
    return out


def _fft_table(samples, hu, pmax, dp):
    n = int(round(2 * np.pi / dp / hu))
    n += n % 2
    padded = np.zeros(n)
    m = len(samples)
    # samples are centred on u = 0 at index m // 2
    padded[: m - m // 2] = samples[m // 2:]
    padded[n - m // 2:] = samples[: m // 2]
    spec = np.fft.rfft(padded).real * hu
    p = 2 * np.pi * np.fft.rfftfreq(n, d=hu)
    keep = p <= pmax
    return p[keep], spec[keep]


class EvenTransform:
    """Interpolated Fourier transform of an even, compactly supported profile.

    ``values`` are the exact transform on the uniform grid ``p``; calls
    evaluate the spline at ``|p|`` and return 0 beyond the table.
    """

    def __init__(self, p, values):
        self.p = p
        self.values = values
        self._spline = CubicSpline(p, values)
        self.pmax = float(p[-1])
        # running maximum from the right: a monotone envelope of |F|
        env = np.maximum.accumulate(np.abs(values)[::-1])[::-1]
        self._log_env = np.log(np.maximum(env, 1e-300))

    def __call__(self, p):
        p = np.abs(np.asarray(p, dtype=float))
        out = np.zeros_like(p)
        inside = p < self.pmax
        out[inside] = self._spline(p[inside])
        return out

    def envelope(self, p):
        """Monotone upper bound for ``|F(q)|`` over ``|q| >= |p|``."""
        p = np.abs(np.asarray(p, dtype=float))
        return np.exp(np.interp(p, self.p, self._log_env, right=-690.0))

    def cutoff(self, rel):
        """Smallest ``p`` beyond which the envelope stays below ``rel * F(0)``."""
        target = np.log(rel * abs(self.values[0]))
        idx = np.nonzero(self._log_env > target)[0]
        return float(self.p[idx[-1] + 1]) if len(idx) and idx[-1] + 1 < len(self.p) else self.pmax


@lru_cache(maxsize=16)
def window_transform(sharpness):
    """1D transform ``int exp(-a u^2/(1-u^2)) e^{-ipu} du`` (unit half-width)."""
    hu = np.pi / (2 * _PMAX)
    m = int(1.0 / hu) + 1
    u = hu * np.arange(-m, m + 1)
    p, vals = _fft_table(bump(u, sharpness), hu, _PMAX, _DP)
    return EvenTransform(p, vals)


@lru_cache(maxsize=8)
def radial_transform(dim):
    """Fourier transform of the L1-normalised radial bump in ``dim`` dimensions.

    Radial transforms reduce to the 1D transform of the projection
    ``P(u) = |S^{n-2}| int_0^inf f(sqrt(u^2+s^2)) s^{n-2} ds``.  Normalised so
    that the value at the origin is 1.
    """
    hu = np.pi / (2 * _PMAX)
    m = int(1.0 / hu) + 1
    u = hu * np.arange(-m, m + 1)
    if dim == 1:
        proj = radial_bump(np.abs(u))
    else:
        sphere = 2 * np.pi ** ((dim - 1) / 2) / _gamma((dim - 1) / 2)
        x, w = np.polynomial.legendre.leggauss(200)
        proj = np.zeros_like(u)
        inside = np.abs(u) < 1
        ui = u[inside][:, None]
        smax = np.sqrt(1 - ui ** 2)
        s = 0.5 * smax * (x + 1)
        vals = radial_bump(np.sqrt(ui ** 2 + s ** 2)) * s ** (dim - 2)
        proj[inside] = sphere * (vals * (0.5 * smax) * w).sum(axis=1)
    p, vals = _fft_table(proj, hu, _PMAX, _DP)
    return EvenTransform(p, vals / vals[0])


def gauss_panels(a, b, width, order=8):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    npan = max(1, int(np.ceil((b - a) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, npan + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def bose(beta, omega):
    """Bose occupation ``1/(e^{beta omega}-1)``; ``beta=None`` is the vacuum."""
    omega = np.asarray(omega, dtype=float)
    if beta is None:
        return np.zeros_like(omega)
    x = beta * omega
    return np.exp(-x) / -np.expm1(-x)
