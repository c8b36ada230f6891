"""Stationary flat-chart spacetimes, null covectors and bicharacteristic transport.

Coordinates are ``(t, x^1, ..., x^{m-1})`` with signature ``(+,-,...,-)``.
The Killing field is the coordinate time direction in every model.  On the
cylinder ``R x S^1`` the spatial coordinate is periodic with period ``L``;
bicharacteristics are integrated on the covering space and wrapped on output.
"""
import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

EPS_NULL = 1e-9
XI_TOL = 1e-7
DEFAULT_STEP = 1e-3


class GeometryError(ValueError):
    """Input outside the domain of a geometric operation."""


class RangeExceeded(GeometryError):
    """Requested Cauchy time is not reached within the integrated affine range."""


class NullClass(str, Enum):
    NOT_NULL = "NotNull"
    NPLUS = "Nplus"
    NMINUS = "Nminus"


@dataclass(frozen=True)
class SpacetimeModel:
    """A stationary Lorentzian chart.

    ``metric_fn`` may be supplied to plug in a non-flat stationary chart; it
    maps a point of shape ``(m,)`` to the ``(m, m)`` covariant metric.  When it
    is ``None`` the chart is flat and all metric derivatives vanish exactly.
    """

    name: str
    dim: int
    circumference: Optional[float] = None
    metric_fn: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.dim < 2:
            raise GeometryError("spacetime dimension must be at least 2")
        if self.circumference is not None and not self.circumference > 0:
            raise GeometryError("circumference must be positive")

    @property
    def periodic(self):
        return self.circumference is not None

    @property
    def killing_field(self):
        v = np.zeros(self.dim)
        v[0] = 1.0
        return v

    def _check_point(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != self.dim or not np.all(np.isfinite(q)):
            raise GeometryError(f"point {q!r} is outside the {self.name} chart")
        return q

    def metric(self, q):
        q = self._check_point(q)
        if self.metric_fn is not None:
            return np.asarray(self.metric_fn(q), dtype=float)
        return np.diag([1.0] + [-1.0] * (self.dim - 1))

    def inverse_metric(self, q):
        if self.metric_fn is not None:
            return np.linalg.inv(self.metric(q))
        self._check_point(q)
        return np.diag([1.0] + [-1.0] * (self.dim - 1))

    def inverse_metric_grad(self, q, h=1e-6):
        """``d_mu g^{ab}`` with the derivative index first; exact zero for flat charts."""
        q = self._check_point(q)
        if self.metric_fn is None:
            return np.zeros((self.dim, self.dim, self.dim))
        out = np.empty((self.dim, self.dim, self.dim))
        for mu in range(self.dim):
            e = np.zeros(self.dim)
            e[mu] = h
            out[mu] = (self.inverse_metric(q + e) - self.inverse_metric(q - e)) / (2 * h)
        return out

    def wrap(self, q):
        """Reduce the spatial coordinate into ``[0, L)`` on the cylinder."""
        q = np.array(q, dtype=float)
        if self.periodic:
            q[..., 1] = np.mod(q[..., 1], self.circumference)
        return q

    def spatial_separation(self, q, q2):
        """Chart distance of the spatial parts, minimised over windings on the cylinder."""
        d = np.asarray(q2, dtype=float)[..., 1:] - np.asarray(q, dtype=float)[..., 1:]
        if self.periodic:
            L = self.circumference
            d = d.copy()
            d[..., 0] = (d[..., 0] + 0.5 * L) % L - 0.5 * L
        return np.linalg.norm(d, axis=-1)

    def check_invariants(self, points, tol=1e-12):
        """Assert metric inverse, Killing timelikeness and signature at sample points."""
        for q in np.atleast_2d(points):
            g = self.metric(q)
            gi = self.inverse_metric(q)
            if np.max(np.abs(g @ gi - np.eye(self.dim))) > tol:
                raise GeometryError("metric and inverse metric disagree")
            k = self.killing_field
            if not k @ g @ k > 0:
                raise GeometryError("Killing field is not timelike")
            ev = np.sort(np.linalg.eigvalsh(g))[::-1]
            if not (ev[0] > 0 and np.all(ev[1:] < 0)):
                raise GeometryError("metric signature is not (+,-,...,-)")
        return True


def minkowski_1p1():
    return SpacetimeModel("Minkowski1p1", 2)


def minkowski_1p3():
    return SpacetimeModel("Minkowski1p3", 4)


def cylinder(circumference=2 * math.pi):
    return SpacetimeModel("CylinderRxS1", 2, float(circumference))


def model_from_name(name, circumference=None):
    if name == "Minkowski1p1":
        return minkowski_1p1()
    if name == "Minkowski1p3":
        return minkowski_1p3()
    if name == "CylinderRxS1":
        return cylinder(2 * math.pi if circumference is None else circumference)
    raise GeometryError(f"unknown spacetime {name!r}")


@dataclass(frozen=True)
class CovectorPoint:
    """Base point ``q`` and covector components ``xi``."""

    q: tuple
    xi: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))
        if len(self.q) != len(self.xi):
            raise GeometryError("point and covector dimensions differ")

    @property
    def q_arr(self):
        return np.array(self.q)

    @property
    def xi_arr(self):
        return np.array(self.xi)

    def negated(self):
        return CovectorPoint(self.q, tuple(-v for v in self.xi))

    def translated(self, dt):
        q = list(self.q)
        q[0] += dt
        return CovectorPoint(q, self.xi)


def null_form(model, p):
    """``g^{mu nu}(q) xi_mu xi_nu``."""
    xi = p.xi_arr
    return float(xi @ model.inverse_metric(p.q_arr) @ xi)


def raise_index(model, p):
    return model.inverse_metric(p.q_arr) @ p.xi_arr


def classify_null(model, p, eps_null=EPS_NULL):
    xi = p.xi_arr
    norm2 = float(xi @ xi)
    if norm2 == 0.0:
        raise GeometryError("zero covector")
    if abs(null_form(model, p)) > eps_null * norm2:
        return NullClass.NOT_NULL
    # future-pointing raised vector iff xi(d_tau) > 0
    return NullClass.NPLUS if xi @ model.killing_field > 0 else NullClass.NMINUS


@dataclass(frozen=True)
class Bicharacteristic:
    """Sampled orbit of a null covector.  ``q_cover`` holds unwrapped coordinates."""

    model: SpacetimeModel
    seed: CovectorPoint
    s: np.ndarray
    q_cover: np.ndarray
    xi: np.ndarray
    affine_range: tuple
    step: float

    @property
    def q(self):
        return self.model.wrap(self.q_cover)

    @property
    def samples(self):
        q = self.q
        return [(float(s), CovectorPoint(q[i], self.xi[i])) for i, s in enumerate(self.s)]

    def null_forms(self):
        gi = np.stack([self.model.inverse_metric(x) for x in self.q_cover])
        return np.einsum("ni,nij,nj->n", self.xi, gi, self.xi)

    def to_csv(self):
        m = self.model.dim
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s"] + [f"q{i}" for i in range(m)] + [f"xi{i}" for i in range(m)] + ["null_form"])
        nf = self.null_forms()
        q = self.q
        for i in range(len(self.s)):
            w.writerow([repr(float(self.s[i]))] + [repr(float(v)) for v in q[i]]
                       + [repr(float(v)) for v in self.xi[i]] + [repr(float(nf[i]))])
        return buf.getvalue()


def _hamilton_rhs(model, q, xi):
    """Vectorised Hamiltonian vector field for ``H = g^{ab} xi_a xi_b / 2``; rows are seeds."""
    if model.metric_fn is None:
        gi = model.inverse_metric(q[0])
        return xi @ gi.T, np.zeros_like(xi)
    dq = np.empty_like(q)
    dxi = np.empty_like(xi)
    for n in range(q.shape[0]):
        dq[n] = model.inverse_metric(q[n]) @ xi[n]
        dxi[n] = -0.5 * np.einsum("mab,a,b->m", model.inverse_metric_grad(q[n]), xi[n], xi[n])
    return dq, dxi


def rk4_flow(model, q0, xi0, s_end, step):
    """Fixed-step RK4 from ``s=0`` to ``s_end`` for a batch of seeds.

    Returns ``(s, q, xi)`` with ``q, xi`` of shape ``(nsteps+1, nseeds, m)``.
    The step is shrunk slightly so that ``s_end`` is hit exactly.
    """
    q = np.atleast_2d(np.asarray(q0, dtype=float))
    xi = np.atleast_2d(np.asarray(xi0, dtype=float))
    nsteps = max(1, int(math.ceil(abs(s_end) / step - 1e-9)))
    h = s_end / nsteps
    qs = np.empty((nsteps + 1,) + q.shape)
    xs = np.empty((nsteps + 1,) + xi.shape)
    qs[0], xs[0] = q, xi
    cq, cx = np.zeros_like(q), np.zeros_like(xi)
    for n in range(nsteps):
        k1q, k1x = _hamilton_rhs(model, q, xi)
        k2q, k2x = _hamilton_rhs(model, q + 0.5 * h * k1q, xi + 0.5 * h * k1x)
        k3q, k3x = _hamilton_rhs(model, q + 0.5 * h * k2q, xi + 0.5 * h * k2x)
        k4q, k4x = _hamilton_rhs(model, q + h * k3q, xi + h * k3x)
        # compensated (Kahan) accumulation keeps round-off at a few ulp over long runs
        yq = h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q) - cq
        yx = h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x) - cx
        tq, tx = q + yq, xi + yx
        cq, cx = (tq - q) - yq, (tx - xi) - yx
        q, xi = tq, tx
        qs[n + 1], xs[n + 1] = q, xi
    return np.linspace(0.0, s_end, nsteps + 1), qs, xs


def integrate_bicharacteristic(model, seed, affine_range, step=DEFAULT_STEP, eps_null=EPS_NULL):
    """Integrate the null geodesic flow through ``seed`` over ``affine_range``.

    The seed sits at ``s = 0``; the range may extend to both sides of it.
    """
    if step <= 0:
        raise GeometryError("step must be positive")
    if classify_null(model, seed, eps_null) is NullClass.NOT_NULL:
        raise GeometryError("seed covector is not null")
    s_min, s_max = float(affine_range[0]), float(affine_range[1])
    if not s_min < s_max:
        raise GeometryError("affine range must be increasing")
    parts_s, parts_q, parts_x = [], [], []
    if s_min < 0:
        s, q, x = rk4_flow(model, seed.q_arr, seed.xi_arr, s_min, step)
        parts_s.append(s[:0:-1])
        parts_q.append(q[:0:-1, 0])
        parts_x.append(x[:0:-1, 0])
    if s_max > 0:
        s, q, x = rk4_flow(model, seed.q_arr, seed.xi_arr, s_max, step)
    else:
        s, q, x = np.zeros(1), seed.q_arr[None, None], seed.xi_arr[None, None]
    parts_s.append(s)
    parts_q.append(q[:, 0])
    parts_x.append(x[:, 0])
    s = np.concatenate(parts_s)
    q = np.concatenate(parts_q)
    x = np.concatenate(parts_x)
    keep = (s >= s_min - 1e-12) & (s <= s_max + 1e-12)
    return Bicharacteristic(model, seed, s[keep], q[keep], x[keep], (s_min, s_max), float(step))


def cauchy_intersection(model, b, t0, tol=1e-13):
    """Unique affine parameter where the orbit meets ``{t = t0}``, with the point there.

    Brackets the root on the samples (after checking the time coordinate is
    strictly monotone) and refines by bisection, re-integrating one RK4 step
    from the bracket's left sample.  The returned point is wrapped.
    """
    s, q, xi = _intersect_cover(model, b, t0, tol)
    return s, CovectorPoint(model.wrap(q), xi)


def _intersect_cover(model, b, t0, tol=1e-13):
    t = b.q_cover[:, 0]
    dt = np.diff(t)
    if not (np.all(dt > 0) or np.all(dt < 0)):
        raise GeometryError("time coordinate is not monotone along the orbit")
    # endpoints carry the round-off of the whole integration
    slack = max(tol, 1e-11 * max(1.0, float(np.max(np.abs(t)))))
    if not min(t[0], t[-1]) - slack <= t0 <= max(t[0], t[-1]) + slack:
        raise RangeExceeded(f"t0={t0} outside time range [{min(t[0], t[-1])}, {max(t[0], t[-1])}]")
    g = t - t0
    sign_changes = np.nonzero(g[:-1] * g[1:] <= 0)[0]
    i = int(sign_changes[0]) if len(sign_changes) else (0 if abs(g[0]) < abs(g[-1]) else len(g) - 2)
    i = min(i, len(g) - 2) if len(g) > 1 else 0

    def advance(ds):
        if ds == 0 or len(g) == 1:
            return b.q_cover[i], b.xi[i]
        _, qq, xx = rk4_flow(model, b.q_cover[i], b.xi[i], ds, abs(ds))
        return qq[-1, 0], xx[-1, 0]

    if len(g) == 1 or abs(g[i]) <= tol:
        s, (qs, xs) = float(b.s[i]), (b.q_cover[i], b.xi[i])
    elif abs(g[i + 1]) <= tol:
        s, (qs, xs) = float(b.s[i + 1]), (b.q_cover[i + 1], b.xi[i + 1])
    else:
        lo, hi = 0.0, float(b.s[i + 1] - b.s[i])
        glo = g[i]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            qm, _ = advance(mid)
            gm = qm[0] - t0
            if abs(gm) <= tol or hi - lo <= 1e-15 * max(1.0, abs(b.s[i])):
                lo = hi = mid
                break
            if (gm > 0) == (glo > 0):
                lo, glo = mid, gm
            else:
                hi = mid
        s = float(b.s[i] + lo)
        qs, xs = advance(lo)
    return s, np.asarray(qs, dtype=float), np.asarray(xs, dtype=float)


def count_cauchy_roots(t_samples, t0, tol=None):
    """Number of crossings of ``t = t0`` along a sampled orbit.

    Samples within ``tol`` of ``t0`` (default: round-off of the sampled
    range) count as exact hits, each counted once.
    """
    t = np.asarray(t_samples, dtype=float)
    if tol is None:
        tol = 1e-11 * max(1.0, float(np.max(np.abs(t))))
    g = t - t0
    sgn = np.where(np.abs(g) <= tol, 0, np.sign(g)).astype(int)
    # a run of hits is one root; a sign change not bridged by hits is another
    hits = int(np.count_nonzero((sgn == 0) & (np.r_[1, sgn[:-1]] != 0)))
    crossings = int(np.count_nonzero(sgn[:-1] * sgn[1:] < 0))
    return hits + crossings


def related(model, p, p2, tol=XI_TOL, step=DEFAULT_STEP, eps_null=EPS_NULL):
    """``p ~ p2``: some point of the bicharacteristic through ``p`` equals ``p2``.

    The orbit is integrated over a symmetric affine range long enough to reach
    the Cauchy surface of ``p2``.  On the cylinder the spatial match is taken
    modulo the circumference, i.e. any winding counts.
    """
    for c in (p, p2):
        if classify_null(model, c, eps_null) is NullClass.NOT_NULL:
            raise GeometryError("related() needs null covectors")
    xi_scale = max(np.linalg.norm(p.xi_arr), np.linalg.norm(p2.xi_arr))
    if model.metric_fn is None and np.linalg.norm(p.xi_arr - p2.xi_arr) > tol * xi_scale:
        # covectors are constant along flat-chart orbits
        return False
    v0 = raise_index(model, p)[0]
    span = abs((p2.q[0] - p.q[0]) / v0) * 1.05 + 10 * step
    b = integrate_bicharacteristic(model, p, (-span, span), step=max(step, span / 20000), eps_null=eps_null)
    _, q_hit, xi_hit = _intersect_cover(model, b, p2.q[0])
    if model.periodic:
        cap = math.ceil(2 * span / model.circumference) + 1
        if abs(round((q_hit[1] - p2.q[1]) / model.circumference)) > cap:
            return False
    qtol = tol * max(1.0, float(np.max(np.abs(p2.q_arr))))
    if model.spatial_separation(q_hit, p2.q_arr) > qtol:
        return False
    return bool(np.linalg.norm(xi_hit - p2.xi_arr) <= tol * xi_scale)


def in_R(model, p, p2, eps_null=EPS_NULL, tol=XI_TOL):
    """Membership of ``(p; p2)`` in the set of pairs ``N_- x N_+`` with ``p ~ (q', -xi')``."""
    try:
        if classify_null(model, p, eps_null) is not NullClass.NMINUS:
            return False
        if classify_null(model, p2, eps_null) is not NullClass.NPLUS:
            return False
        return related(model, p, p2.negated(), tol=tol, eps_null=eps_null)
    except GeometryError:
        return False


def causally_separated(model, q, q2):
    """Neither point lies in the closed causal future or past of the other."""
    q = model._check_point(q)
    q2 = model._check_point(q2)
    dt = abs(float(q2[0] - q[0]))
    return bool(dt < float(model.spatial_separation(q, q2)))


def r_cone_directions(model, q, q2, eps_null=EPS_NULL):
    """Unit directions ``(xi; xi')`` in ``R`` over the pair ``(q, q2)`` for 1+1 models.

    Candidates are the two past-pointing null rays at ``q`` paired with their
    negatives; each candidate is confirmed with :func:`in_R`.
    """
    if model.dim != 2:
        raise GeometryError("R-cone enumeration is implemented for 1+1 charts")
    out = []
    for xi in ((-1.0, 1.0), (-1.0, -1.0)):
        a = CovectorPoint(q, xi)
        b = CovectorPoint(q2, (-xi[0], -xi[1]))
        if in_R(model, a, b, eps_null):
            out.append(np.array([xi[0], xi[1], -xi[0], -xi[1]]) / 2.0)
    return out
