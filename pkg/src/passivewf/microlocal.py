"""Decay of rescaled oscillatory integrals: wavefront-set and pair-spectrum scans.

For a direction ``k`` and scale ``lam`` the engine evaluates

    I(lam, k) = int e^{-i k.t / lam} h(t) C_lam(t) dt

(or its spatial analogue for sampled distributions), takes the maximum of
``|I|`` over a small set of neighbouring grid directions, fits the slope of
``log|I|`` against ``log lam`` and classifies the direction:

* ``Regular``      fitted order ``>= s_star`` (rapid decay),
* ``Singular``     fitted order ``<= s_low`` (no decay),
* ``Inconclusive`` anything in between.

Windows are products of compact bumps ``exp(-a u^2/(1-u^2))`` with ``h(0)=1``.
"""
import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import numpy as np

from . import _numerics as nm
from .geometry import CovectorPoint, cauchy_intersection, integrate_bicharacteristic, null_form, r_cone_directions
from .states import CorrelationKernel, QuadratureError, SmearingFunction, regularized_kernel

REGULAR = "Regular"
SINGULAR = "Singular"
INCONCLUSIVE = "Inconclusive"

NOISE_FLOOR = 1e-13
# window transforms are truncated where their envelope falls below this (relative)
WINDOW_TAIL = 1e-13
NEAR_FLOOR_FACTOR = 100.0
QUAD_RTOL = 1e-10
REG_EPS_RATIO = 0.1
THREADS_ENV = "PASSIVEWF_THREADS"


class ScanError(ValueError):
    """Scan inputs violate a resolution or support requirement."""


def thread_count():
    """Worker threads for data-parallel loops; ``PASSIVEWF_THREADS`` overrides."""
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def ordered_map(fn, items):
    """``map`` with a thread pool; results come back in input order."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------ directions

@dataclass(frozen=True)
class DirectionGrid:
    """Unit directions on ``S^{d-1}``, closed under the antipodal map."""

    directions: np.ndarray
    dtheta: float
    kind: str = "custom"

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        norms = np.linalg.norm(d, axis=1)
        if np.max(np.abs(norms - 1)) > 1e-14:
            raise ScanError("grid directions must have unit norm")
        object.__setattr__(self, "directions", d)

    @classmethod
    def circle(cls, n=64):
        th = 2 * np.pi * np.arange(n) / n
        d = np.stack([np.cos(th), np.sin(th)], axis=1)
        # snap the axis and diagonal directions to exact values
        d[np.abs(d) < 1e-15] = 0.0
        d /= np.linalg.norm(d, axis=1)[:, None]
        return cls(d, 2 * np.pi / n, f"circle{n}")

    @classmethod
    def line(cls):
        return cls(np.array([[1.0], [-1.0]]), np.pi, "line")

    @classmethod
    def hopf(cls, n_angle=16, n_chi=5):
        """``(cos chi (cos a, sin a), sin chi (cos b, sin b))`` on a product grid, poles deduplicated."""
        ang = 2 * np.pi * np.arange(n_angle) / n_angle
        ca, sa = np.cos(ang), np.sin(ang)
        ca[np.abs(ca) < 1e-15] = 0.0
        sa[np.abs(sa) < 1e-15] = 0.0
        rows = []
        for chi in np.linspace(0, np.pi / 2, n_chi):
            c, s = math.cos(chi), math.sin(chi)
            if abs(c) < 1e-15:
                c = 0.0
            if c == 0.0:
                rows += [[0.0, 0.0, s * cb, s * sb] for cb, sb in zip(ca, sa)]
            elif abs(s) < 1e-15:
                rows += [[c * a, c * b, 0.0, 0.0] for a, b in zip(ca, sa)]
            else:
                rows += [[c * a, c * b, s * cb, s * sb] for a, b in zip(ca, sa) for cb, sb in zip(ca, sa)]
        d = np.array(rows)
        d /= np.linalg.norm(d, axis=1)[:, None]
        return cls(d, 2 * np.pi / n_angle, f"hopf{n_angle}x{n_chi}")

    @property
    def dim(self):
        return self.directions.shape[1]

    def __len__(self):
        return len(self.directions)

    def antipode_index(self):
        d = self.directions
        idx = np.empty(len(d), dtype=int)
        for i, v in enumerate(d):
            j = int(np.argmin(np.linalg.norm(d + v, axis=1)))
            if np.linalg.norm(d[j] + v) > 1e-12:
                raise ScanError("direction grid is not closed under antipodes")
            idx[i] = j
        return idx

    def neighbourhood(self, i, radius):
        """Indices within ``radius`` grid steps (angular distance ``radius * dtheta``)."""
        if radius <= 0:
            return np.array([i])
        cosang = np.clip(self.directions @ self.directions[i], -1, 1)
        return np.nonzero(np.arccos(cosang) <= radius * self.dtheta * (1 + 1e-9))[0]

    def nearest(self, v):
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        return int(np.argmax(self.directions @ v))


def angle_between(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(max(-1.0, min(1.0, c)))


# ---------------------------------------------------------------- config

def default_lambdas(n=7, lam_max=0.25, ratio=2.0):
    return tuple(lam_max / ratio ** j for j in range(n))


@dataclass(frozen=True)
class ScanConfig:
    lambdas: tuple = default_lambdas()
    window_sharpness: float = 4.0
    window_halfwidth: float = 2.0
    s_star: float = 4.0
    s_low: float = 1.0
    neighbourhood: int = 1
    noise_floor: float = NOISE_FLOOR
    family_sigma: float = 0.5
    family_radius: float = 1.0
    offsets: tuple = (0.0, 0.5)
    k_scale: float = 1.0

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "offsets", tuple(float(v) for v in self.offsets))
        if len(lam) < 4:
            raise ScanError("need at least 4 lambda values")
        if any(b >= a for a, b in zip(lam, lam[1:])) or lam[-1] <= 0:
            raise ScanError("lambda grid must be positive and strictly decreasing")
        if not self.s_low < self.s_star:
            raise ScanError("s_low must be below s_star")
        if not self.window_halfwidth > 0:
            raise ScanError("window half-width must be positive")

    def window_value_at_origin(self):
        return float(nm.bump(np.zeros(1), self.window_sharpness)[0])

    def to_dict(self):
        return asdict(self)


def window_ft(sharpness, halfwidth):
    """1D transform of ``u -> bump(u / R)``; products give the 2D window transform."""
    tab = nm.window_transform(float(sharpness))

    def ft(p):
        return halfwidth * tab(halfwidth * np.asarray(p, dtype=float))

    return ft


# ------------------------------------------------------------ decay fits

@dataclass(frozen=True)
class DecayFit:
    order: float
    residual: float
    noise_flag: bool
    excluded: tuple
    near_floor: tuple


def fit_decay(magnitudes, lambdas, noise_floor=NOISE_FLOOR):
    """Least-squares slope of ``log|I|`` against ``log lam`` above the noise floor.

    Points below ``noise_floor`` are excluded; ``noise_flag`` marks that more
    than half the points were excluded, in which case the order is reported
    as ``inf`` (decay down to the floor).
    """
    mags = np.asarray(magnitudes, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    if mags.shape != lam.shape or len(lam) < 4:
        raise ScanError("need at least 4 (lambda, magnitude) pairs")
    if np.any(mags < 0) or not np.all(np.isfinite(mags)):
        raise ScanError("magnitudes must be finite and non-negative")
    excluded = mags < noise_floor
    near = mags < NEAR_FLOOR_FACTOR * noise_floor
    if np.count_nonzero(excluded) * 2 > len(mags) or np.count_nonzero(~excluded) < 2:
        return DecayFit(math.inf, 0.0, True, tuple(bool(v) for v in excluded), tuple(bool(v) for v in near))
    x = np.log(lam[~excluded])
    y = np.log(mags[~excluded])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return DecayFit(float(coef[0]), resid, False, tuple(bool(v) for v in excluded), tuple(bool(v) for v in near))


def classify(fit, s_star=4.0, s_low=1.0):
    if fit.noise_flag or fit.order >= s_star:
        return REGULAR
    if fit.order <= s_low:
        return SINGULAR
    return INCONCLUSIVE


# ---------------------------------------------------------------- report

@dataclass
class DecayReport:
    """Per-direction magnitudes, fitted orders and verdicts."""

    directions: np.ndarray
    lambdas: tuple
    magnitudes: np.ndarray
    orders: np.ndarray
    residuals: np.ndarray
    verdicts: list
    floor_flags: list
    near_floor: np.ndarray
    header: dict = field(default_factory=dict)

    @classmethod
    def from_magnitudes(cls, directions, lambdas, raw, grid, cfg, header=None, failed=None):
        """Apply the neighbourhood sup and the decay classification to raw ``|I|`` values."""
        raw = np.asarray(raw, dtype=float)
        n = len(directions)
        mags = np.empty_like(raw)
        for i in range(n):
            mags[i] = raw[grid.neighbourhood(i, cfg.neighbourhood)].max(axis=0)
        orders = np.empty(n)
        resid = np.empty(n)
        verdicts, floors = [], []
        near = np.zeros(raw.shape, dtype=bool)
        for i in range(n):
            if failed is not None and failed[i]:
                orders[i], resid[i] = math.nan, math.nan
                verdicts.append(INCONCLUSIVE)
                floors.append(False)
                continue
            fit = fit_decay(mags[i], lambdas, cfg.noise_floor)
            orders[i], resid[i] = fit.order, fit.residual
            verdicts.append(classify(fit, cfg.s_star, cfg.s_low))
            floors.append(fit.noise_flag)
            near[i] = fit.near_floor
        hdr = {"config": cfg.to_dict(), "grid": grid.kind, "dtheta": grid.dtheta}
        hdr.update(header or {})
        return cls(np.asarray(directions, dtype=float), tuple(lambdas), mags, orders, resid, verdicts, floors,
                   near, hdr)

    def indices(self, verdict):
        return [i for i, v in enumerate(self.verdicts) if v == verdict]

    def singular(self):
        return self.indices(SINGULAR)

    def counts(self):
        return {v: len(self.indices(v)) for v in (REGULAR, SINGULAR, INCONCLUSIVE)}

    def to_rows(self):
        d = self.directions.shape[1] if len(self.directions) else 0
        head = [f"k{j}" for j in range(d)] + [f"I_lam{j}" for j in range(len(self.lambdas))] + [
            "order", "residual", "verdict", "floor"]
        rows = []
        for i in range(len(self.directions)):
            rows.append([_fmt(v) for v in self.directions[i]] + [_fmt(v) for v in self.magnitudes[i]]
                        + [_fmt(self.orders[i]), _fmt(self.residuals[i]), self.verdicts[i],
                           str(bool(self.floor_flags[i]))])
        return head, rows

    def to_csv(self):
        head, rows = self.to_rows()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(head)
        w.writerows(rows)
        return buf.getvalue()

    def to_dict(self):
        return {
            "dim": int(self.directions.shape[1]) if self.directions.ndim == 2 else 0,
            "header": self.header,
            "lambdas": list(self.lambdas),
            "directions": self.directions.tolist(),
            "magnitudes": self.magnitudes.tolist(),
            "orders": [None if not math.isfinite(v) else float(v) for v in self.orders],
            "verdicts": list(self.verdicts),
            "floor": [bool(v) for v in self.floor_flags],
            "counts": self.counts(),
        }


def report_from_dict(data):
    """Rebuild a :class:`DecayReport` from its ``to_dict`` form (used by rendering)."""
    dim = int(data.get("dim", 0))
    dirs = np.asarray(data.get("directions", []), dtype=float).reshape(-1, dim)
    lambdas = tuple(data.get("lambdas", ()))
    mags = np.asarray(data.get("magnitudes", []), dtype=float).reshape(len(dirs), len(lambdas))
    orders = np.array([math.inf if v is None else v for v in data.get("orders", [])], dtype=float)
    n = len(dirs)
    return DecayReport(dirs, lambdas, mags, orders, np.full(n, math.nan), list(data.get("verdicts", [])),
                       list(data.get("floor", [])), np.zeros(mags.shape, dtype=bool), dict(data.get("header", {})))


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12e}"


# --------------------------------------------------- oscillatory integral

def line_integral(kernel, K, ft):
    """``sum_j w_j H(K1 + nu_j, K2 - nu_j)`` for a line kernel; ``K`` has shape ``(N, 2)``."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    nu = kernel.freqs
    w = kernel.weights
    out = np.empty(len(K), dtype=complex)
    for i, (k1, k2) in enumerate(K):
        out[i] = np.sum(w * ft(k1 + nu) * ft(k2 - nu))
    return out


def oscillatory_integral(C, k, lam, halfwidth=2.0, sharpness=4.0, bandwidth=None, order=16, check=True,
                         rtol=QUAD_RTOL):
    """``int e^{-i k.t/lam} h(t) C(t1, t2) dt`` by tensor Gauss-Legendre quadrature.

    Panel counts scale with ``|k|/lam`` plus the kernel bandwidth so that each
    panel spans at most ~pi radians of phase.  With ``check`` the result is
    recomputed on doubled panels and a disagreement above ``rtol`` raises.
    """
    k = np.asarray(k, dtype=float)
    if bandwidth is None:
        bandwidth = C.bandwidth() if isinstance(C, CorrelationKernel) else 0.0
    R = float(halfwidth)

    def integrate(scale):
        nodes = []
        for kk in k:
            npan = int(math.ceil(2 * R * (abs(kk) / lam + bandwidth + 8.0) / math.pi)) + 8
            t, w = nm.gauss_panels(-R, R, 2 * R / (scale * npan), order)
            w = w * nm.bump(t / R, sharpness)
            nodes.append((t, w))
        (t1, w1), (t2, w2) = nodes
        a = w1 * np.exp(-1j * k[0] / lam * t1)
        b = w2 * np.exp(-1j * k[1] / lam * t2)
        total = 0j
        chunk = max(1, 4_000_000 // len(t2))
        for i in range(0, len(t1), chunk):
            block = C(t1[i:i + chunk, None], t2[None, :])
            total += a[i:i + chunk] @ block @ b
        return complex(total)

    val = integrate(1)
    if check:
        fine = integrate(2)
        scale = max(abs(fine), NOISE_FLOOR)
        if abs(fine - val) > rtol * scale * 10 and abs(fine - val) > 1e-15:
            raise QuadratureError(f"oscillation unresolved: node doubling changed I by {abs(fine - val):.2e}")
        val = fine
    return val


# -------------------------------------------------------------- families

@dataclass(frozen=True)
class ConstantFamily:
    """Testing family independent of ``lam`` (an operator label or matrix)."""

    operator: object

    def __call__(self, lam):
        return self.operator


@dataclass(frozen=True)
class SmearingFamily:
    """Shrinking smearings ``f_lam`` centred at ``center``, optionally offset in space."""

    center: tuple
    sigma: float = 0.5
    radius: float = 1.0

    def __call__(self, lam, offset=None):
        c = np.array(self.center, dtype=float)
        if offset is not None:
            c = c + np.asarray(offset, dtype=float)
        return SmearingFunction(tuple(c), scale=lam, radius=self.radius, sigma=self.sigma)


def _acs_kernel(state, A, B, lam, cfg, kspan):
    if isinstance(A, SmearingFunction):
        R = cfg.window_halfwidth
        margin = nm.window_transform(cfg.window_sharpness).cutoff(WINDOW_TAIL) / R
        kmax = kspan / lam + margin
        k, dmu = state.k_nodes(kmax, width=0.2 / R, order=8)
        freqs, weights = state.mode_lines(A, B, k, dmu)
        return CorrelationKernel.from_lines(freqs, weights, {"kmax": kmax})
    return state.kernel(A, B)


def acs_scan(state, family_a, family_b, grid, cfg=ScanConfig()):
    """Rescaled two-time correlation integrals over a 2D direction grid.

    Field families are smeared in spacetime and coupled to ``lam``; for field
    states the second smearing is additionally offset in space by each value
    of ``cfg.offsets`` and the maximum is taken.
    """
    if grid.dim != 2:
        raise ScanError("pair correlation scans need a 2D direction grid")
    ft = window_ft(cfg.window_sharpness, cfg.window_halfwidth)
    dirs = grid.directions * cfg.k_scale
    kspan = float(np.max(np.abs(dirs)))
    field_case = isinstance(family_a, SmearingFamily)
    offsets = cfg.offsets if field_case else (0.0,)

    def one_lambda(lam):
        best = np.zeros(len(dirs))
        for z in offsets:
            if field_case:
                A = family_a(lam)
                off = np.zeros(len(family_b.center))
                off[1] = z
                B = family_b(lam, off)
            else:
                A, B = family_a(lam), family_b(lam)
            kern = _acs_kernel(state, A, B, lam, cfg, kspan)
            best = np.maximum(best, np.abs(line_integral(kern, dirs / lam, ft)))
        return best

    failed = np.zeros(len(dirs), dtype=bool)
    cols = []
    for res in ordered_map(_guard(one_lambda), cfg.lambdas):
        if isinstance(res, Exception):
            failed[:] = True
            res = np.zeros(len(dirs))
        cols.append(res)
    raw = np.stack(cols, axis=1)
    header = {"scan": "acs", "state": getattr(state, "kind", type(state).__name__)}
    return DecayReport.from_magnitudes(grid.directions, cfg.lambdas, raw, grid, cfg, header, failed)


def _guard(fn):
    def wrapped(x):
        try:
            return fn(x)
        except (QuadratureError, ValueError, FloatingPointError) as exc:
            return exc
    return wrapped


# ------------------------------------------------------- sampled wf scan

@dataclass(frozen=True)
class WFConfig(ScanConfig):
    """Scan settings for spacetime wavefront scans.

    Compared with the correlation-spectrum defaults the window is narrower and
    sharper, and the family grows more slowly; this keeps the superpolynomial
    decay visible on the 1/4..1/256 grid for all product-chart directions.
    """

    window_sharpness: float = 8.0
    window_halfwidth: float = 0.75
    family_sigma: float = 0.25
    neighbourhood: int = 0
    offsets: tuple = (0.0,)


def _window_hat(ft, q, p):
    """``H_q(p) = e^{-i p.q} prod_i R b^(R p_i)`` for the product window centred at ``q``."""
    out = np.exp(-1j * (p @ np.asarray(q, dtype=float)))
    for i in range(p.shape[-1]):
        out = out * ft(p[..., i])
    return out


def wf_scan(u, axes, q, grid, cfg=WFConfig()):
    """Lemma-style scan of a sampled distribution ``u`` on a uniform grid.

    For each direction and scale the test function
    ``Psi(y) = int h_q(x) e^{-i K.x} f_lam(y - x) dx`` is built spectrally,
    ``Psi^(s) = H_q(K + s) F_lam(s)``, transformed back on the sampling grid
    and paired with ``u``.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    u = np.asarray(u)
    d = len(axes)
    if u.shape != tuple(len(a) for a in axes):
        raise ScanError("sample array does not match the axes")
    if grid.dim != d:
        raise ScanError("direction grid dimension differs from the sample grid")
    steps = np.array([a[1] - a[0] for a in axes])
    if np.max([np.max(np.abs(np.diff(a) - s)) for a, s in zip(axes, steps)]) > 1e-9 * np.max(steps):
        raise ScanError("sample grid must be uniform")
    R = cfg.window_halfwidth
    rad = cfg.family_radius
    tab = nm.window_transform(cfg.window_sharpness)
    margin = tab.cutoff(WINDOW_TAIL) / R
    kneed = float(np.max(np.abs(grid.directions))) * cfg.k_scale / min(cfg.lambdas) + margin
    if np.any(np.pi / steps < kneed):
        raise ScanError(f"Nyquist violation: grid resolves |k| <= {np.min(np.pi / steps):.1f}, need {kneed:.1f}")
    reach = R + max(cfg.lambdas) * rad
    for a, qi in zip(axes, q):
        if qi - reach < a[0] or qi + reach > a[-1]:
            raise ScanError("window exceeds the sampled patch")
    ft = window_ft(cfg.window_sharpness, R)
    shape = u.shape
    freqs = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n, d=s) for n, s in zip(shape, steps)], indexing="ij")
    S = np.stack(freqs, axis=-1)
    origin = np.array([a[0] for a in axes])
    phase0 = np.exp(1j * (S @ origin))
    cell = float(np.prod(steps))
    dirs = grid.directions * cfg.k_scale

    def one_lambda(lam):
        fam = SmearingFunction(tuple(np.zeros(d)), scale=lam, radius=rad, sigma=cfg.family_sigma)
        Fl = fam.fourier(S)
        out = np.empty(len(dirs))
        for i, kdir in enumerate(dirs):
            K = kdir / lam
            psi_hat = _window_hat(ft, q, S + K) * Fl * phase0
            psi = np.fft.ifftn(psi_hat) / cell
            out[i] = abs(np.sum(u * psi) * cell)
        return out

    raw = np.stack(ordered_map(one_lambda, cfg.lambdas), axis=1)
    header = {"scan": "wf-sampled", "point": list(map(float, q))}
    return DecayReport.from_magnitudes(grid.directions, cfg.lambdas, raw, grid, cfg, header)


# ---------------------------------------------------------- pair wf scan

def _pair_sums(state, q, q2, dirs, lam, cfg, part="full"):
    """Complex pair integrals (up to a direction-dependent unit phase) for 1+1 field states.

    ``part`` selects ``w2`` ("full"), its flip ``w2(x', x)`` ("flip"), or the
    symmetric/antisymmetric combinations "plus"/"minus".
    """
    if part in ("plus", "minus"):
        a = _pair_sums(state, q, q2, dirs, lam, cfg, "full")
        b = _pair_sums(state, q, q2, dirs, lam, cfg, "flip")
        return a + b if part == "plus" else a - b
    if part == "flip":
        sw = dirs[:, [2, 3, 0, 1]]
        return _pair_sums(state, q2, q, sw, lam, cfg, "full")
    r = cfg.window_halfwidth
    tab = nm.window_transform(cfg.window_sharpness)
    margin = tab.cutoff(WINDOW_TAIL) / r
    kspan = float(np.max(np.abs(dirs)))
    kmax = kspan / lam + margin
    delta = np.asarray(q, dtype=float) - np.asarray(q2, dtype=float)
    width = min(0.5, 1.0 / (1.0 + np.abs(delta).sum()))
    k, dmu = state.k_nodes(kmax, width=width, order=8)
    om = state.omega(k)
    comps = [(w, s) for w, s in getattr(state, "components", ((1.0, state),))]
    n_eff = sum(w * s.occupation(om) for w, s in comps)
    fam = SmearingFunction((0.0, 0.0), scale=lam, radius=cfg.family_radius, sigma=cfg.family_sigma)
    P = np.stack([om, -k], axis=-1)
    amp = dmu * fam.fourier(P).real ** 2 / (2 * om)
    ph = np.exp(-1j * (P @ delta))
    c_pos = amp * (1 + n_eff) * ph
    c_neg = amp * n_eff * np.conj(ph)

    cache = {}

    def row(c, x):
        key = (round(float(c) / lam, 9), x)
        if key not in cache:
            K = c / lam
            arg = {"+om": K + om, "-om": K - om, "+k": K + k, "-k": K - k}[x]
            cache[key] = r * tab(r * arg)
        return cache[key]

    out = np.empty(len(dirs), dtype=complex)
    for i, (a0, a1, b0, b1) in enumerate(dirs):
        t1 = row(a0, "+om") * row(a1, "-k") * row(b0, "-om") * row(b1, "+k")
        t2 = row(a0, "-om") * row(a1, "+k") * row(b0, "+om") * row(b1, "-k")
        out[i] = c_pos @ t1 + c_neg @ t2
    return out


def wf_pair_scan(state, q, q2, grid, cfg=WFConfig(), part="full"):
    """Pair scan of ``w2`` on ``M x M`` at ``(q, q2)`` via the mode representation.

    The windowed, family-smeared pair integral reduces to one mode integral,
    so no kernel sampling (and no regularisation) is needed.
    """
    if state.model.dim != 2:
        raise ScanError("pair scans are implemented for 1+1 models")
    if grid.dim != 4:
        raise ScanError("pair scans need a 4D direction grid")
    dirs = grid.directions * cfg.k_scale

    def one_lambda(lam):
        return np.abs(_pair_sums(state, q, q2, dirs, lam, cfg, part))

    raw = np.stack(ordered_map(one_lambda, cfg.lambdas), axis=1)
    header = {"scan": "wf-pair", "part": part, "q": list(map(float, q)), "q2": list(map(float, q2)),
              "state": getattr(state, "kind", "Mixture")}
    return DecayReport.from_magnitudes(grid.directions, cfg.lambdas, raw, grid, cfg, header)


def wf_pair_scan_sampled(kernel_fn, q, q2, grid, cfg=WFConfig(), indices=None, spacing=None):
    """Pair scan of a translation-invariant sampled kernel ``u(x, x') = W(x - x')``.

    ``W`` is sampled on a separation grid centred at ``q - q2``; the pairing
    with the windowed family reduces to ``int W(z) Phi(z) dz`` where
    ``Phi^(s) = F_lam(s) F_lam(-s) H_q(K + s) H_q2(K' - s)``.
    """
    r = cfg.window_halfwidth
    tab = nm.window_transform(cfg.window_sharpness)
    margin = tab.cutoff(WINDOW_TAIL) / r
    dirs_all = grid.directions * cfg.k_scale
    idx = np.arange(len(dirs_all)) if indices is None else np.asarray(indices)
    dirs = dirs_all[idx]
    kneed = float(np.max(np.abs(dirs))) / min(cfg.lambdas) + margin
    h = np.pi / kneed * 0.95 if spacing is None else float(spacing)
    if np.pi / h < kneed:
        raise ScanError("Nyquist violation in the separation grid")
    half = 2 * (r + max(cfg.lambdas) * cfg.family_radius) * 1.05
    n = int(2 ** math.ceil(math.log2(2 * half / h)))
    z0 = np.asarray(q, dtype=float) - np.asarray(q2, dtype=float)
    ax = [z0[i] + h * (np.arange(n) - n // 2) for i in range(2)]
    Z = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)
    W = kernel_fn(Z[..., 0], Z[..., 1])
    ft = window_ft(cfg.window_sharpness, r)
    s1 = 2 * np.pi * np.fft.fftfreq(n, d=h)
    S = np.stack(np.meshgrid(s1, s1, indexing="ij"), axis=-1)
    origin = np.array([a[0] for a in ax])
    phase0 = np.exp(1j * (S @ origin))

    def one_lambda(lam):
        fam = SmearingFunction((0.0, 0.0), scale=lam, radius=cfg.family_radius, sigma=cfg.family_sigma)
        F2 = fam.fourier(S) * fam.fourier(-S)
        out = np.empty(len(dirs))
        for i, dv in enumerate(dirs):
            K, K2 = dv[:2] / lam, dv[2:] / lam
            phi_hat = F2 * _window_hat(ft, q, S + K) * _window_hat(ft, q2, K2 - S) * phase0
            phi = np.fft.ifft2(phi_hat) / h ** 2
            out[i] = abs(np.sum(W * phi) * h * h)
        return out

    raw_sub = np.stack(ordered_map(one_lambda, cfg.lambdas), axis=1)
    header = {"scan": "wf-pair-sampled", "spacing": h, "n": n}
    sub_grid = DirectionGrid(grid.directions[idx], grid.dtheta, grid.kind + "-subset")
    return DecayReport.from_magnitudes(sub_grid.directions, cfg.lambdas, raw_sub, sub_grid, cfg, header)


def wf_pair_scan_regularized(state, q, q2, grid, cfg=WFConfig(), indices=None):
    """Sampled pair scan of the regularised vacuum/KMS kernel with ``eps = REG_EPS_RATIO * lam_min``."""
    eps = REG_EPS_RATIO * min(cfg.lambdas)
    rep = wf_pair_scan_sampled(lambda t, x: regularized_kernel(state, t, x, eps), q, q2, grid, cfg, indices)
    rep.header["eps"] = eps
    return rep


# ------------------------------------------------------ R containment

@dataclass
class ContainmentSummary:
    passed: bool
    n_singular: int
    counterexamples: list
    killing_residual_max: float
    r_directions: list
    r_detected: list

    def to_dict(self):
        return asdict(self)


def wf_to_R_compare(report, model, q, q2, angle_tol=None, killing_tol=0.1):
    """Check every Singular pair direction against the R-cone over ``(q, q2)``."""
    dirs = report.directions
    if dirs.shape[1] != 2 * model.dim:
        raise ScanError("report directions do not match the product chart")
    if angle_tol is None:
        angle_tol = 2 * float(report.header.get("dtheta", 0.0))
    cone = r_cone_directions(model, q, q2)
    bad = []
    kres = 0.0
    detected = [False] * len(cone)
    for i in report.singular():
        d = dirs[i]
        res = abs(float(d[0] + d[model.dim]))
        kres = max(kres, res)
        angles = [angle_between(d, c) for c in cone]
        ok = bool(angles) and min(angles) <= angle_tol + 1e-12
        if ok:
            detected[int(np.argmin(angles))] = True
        if not ok or res > killing_tol:
            bad.append({"index": i, "direction": [float(v) for v in d],
                        "magnitudes": [float(v) for v in report.magnitudes[i]],
                        "killing_residual": res})
    return ContainmentSummary(not bad, len(report.singular()), bad, kres,
                              [c.tolist() for c in cone], detected)


def inject_singularity(report, index, cfg=WFConfig(), level=1.0):
    """Copy of ``report`` with a non-decaying synthetic magnitude row at ``index``."""
    mags = report.magnitudes.copy()
    mags[index] = level
    grid = DirectionGrid(report.directions, report.header.get("dtheta", 0.0) or 1.0)
    hdr = dict(report.header)
    hdr["injected"] = int(index)
    return DecayReport.from_magnitudes(report.directions, report.lambdas, mags, grid,
                                       type(cfg)(**{**cfg.to_dict(), "neighbourhood": 0}), hdr)


# ------------------------------------------------- correlation spectra

def acs_containment(report, angle_tol=None):
    """Singular directions must lie on the half-line ``xi1 + xi2 = 0, xi2 >= 0``.

    Returns ``(passed, counterexample indices)``; the tolerance defaults to
    ``2 dtheta``.
    """
    if angle_tol is None:
        angle_tol = 2 * float(report.header.get("dtheta", 0.0))
    target = np.array([-1.0, 1.0]) / math.sqrt(2)
    bad = [i for i in report.singular() if angle_between(report.directions[i], target) > angle_tol + 1e-12]
    return not bad, bad


def acs_symmetry(report):
    """Directions that are Singular while their antipode is Regular (empty for tracial states)."""
    grid = DirectionGrid(report.directions, report.header.get("dtheta", 1.0) or 1.0)
    anti = grid.antipode_index()
    return [i for i in report.singular() if report.verdicts[anti[i]] == REGULAR]


# ---------------------------------------------------------- propagation

@dataclass
class PropagationResult:
    time_shift: float
    q: list
    q2: list
    verdict: str
    order: float
    nullity_drift: float

    def to_dict(self):
        return asdict(self)


def transport_pair(model, q, q2, direction, time_shift, step=None):
    """Move both slots of a pair direction along their bicharacteristics by ``time_shift``.

    ``direction = (xi, xi')`` is split into its two covectors; each is
    followed to the Cauchy surface ``t = t_slot + time_shift``.  Returns the
    new points, the transported covectors and the worst nullity drift per
    unit affine length.
    """
    m = model.dim
    d = np.asarray(direction, dtype=float)
    pts, covs, drift = [], [], 0.0
    for base, xi in ((q, d[:m]), (q2, d[m:])):
        seed = CovectorPoint(tuple(base), tuple(xi))
        if abs(null_form(model, seed)) > 1e-9 * float(xi @ xi):
            raise ScanError("pair direction is not null in both slots")
        v0 = float((model.inverse_metric(seed.q_arr) @ seed.xi_arr)[0])
        if v0 == 0.0:
            raise ScanError("covector has no time component")
        span = abs(time_shift / v0) * 1.1 + 0.01
        kw = {} if step is None else {"step": step}
        b = integrate_bicharacteristic(model, seed, (-span, span), **kw)
        _, hit = cauchy_intersection(model, b, float(base[0]) + time_shift)
        drift = max(drift, float(np.max(np.abs(b.null_forms() - null_form(model, seed)))) / (2 * span))
        pts.append(list(hit.q))
        covs.append(list(hit.xi))
    return pts[0], pts[1], np.concatenate(covs), drift


def propagate_pair(state, q, q2, direction, time_shifts, grid, cfg=WFConfig()):
    """Re-scan a Singular pair direction after transport to later Cauchy times."""
    out = []
    for T in time_shifts:
        p1, p2, d, drift = transport_pair(state.model, q, q2, direction, T)
        d = d / np.linalg.norm(d)
        i = grid.nearest(d)
        rep = wf_pair_scan(state, p1, p2, DirectionGrid(grid.directions[[i]], grid.dtheta, grid.kind), cfg)
        out.append(PropagationResult(float(T), p1, p2, rep.verdicts[0], float(rep.orders[0]), drift))
    return out
