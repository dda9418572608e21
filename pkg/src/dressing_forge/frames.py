"""Extended frames F(u, lambda) = [[E, X], [0, 1]] in closed form.

A frame is a vacuum seed (diagonal exponential E, per-axis profile integrals
X) plus an ordered dressing history.  Evaluation applies each record's
closed-form update in order, so no PDE is ever integrated here; the PDE route
lives in :mod:`dressing_forge.oracle` as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import NonPositiveError, OutOfDomainError
from .geometry import EgoroffMetric, Grid
from .linalg import max_abs

# Adaptive quadrature target for sampled profiles.
QUAD_TOL = 1e-10
# Floor used when clamping sampled-profile splines to stay positive.
CLAMP_MIN = 1e-8


def _stable_exp_integral(u: float, lam: complex) -> complex:
    """int_0^u e^{i lam t} dt = e^{i lam u / 2} * 2 sin(lam u / 2) / lam,
    which is cancellation-free for small |lam u| (limit u at lam = 0)."""
    if lam == 0:
        return complex(u)
    w = 0.5 * lam * u
    return np.exp(1j * w) * 2.0 * np.sin(w) / lam


@dataclass(frozen=True, eq=False)
class ConstantProfile:
    """h_j(t) = r with r > 0; the whole axis is the domain."""

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("constant profile needs r > 0")

    def contains(self, t: float) -> bool:
        return True

    def value(self, t: float) -> float:
        return self.r

    def position_integral(self, u: float, lam: complex) -> complex:
        return self.r * _stable_exp_integral(u, lam)

    def energy_integral(self, u: float) -> float:
        return self.r ** 2 * u


@dataclass(frozen=True, eq=False)
class PolynomialProfile:
    """h_j(t) = sum_m coeffs[m] t^m on a finite domain containing 0."""

    coeffs: tuple
    domain: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        lo, hi = self.domain
        if not (lo <= 0.0 <= hi and lo < hi):
            raise ValueError("profile domain must contain 0")
        ts = np.linspace(lo, hi, 257)
        if np.any(np.polynomial.polynomial.polyval(ts, self.coeffs) <= 0):
            raise ValueError("polynomial profile must stay positive on its domain")

    def contains(self, t: float) -> bool:
        lo, hi = self.domain
        return lo - 1e-12 <= t <= hi + 1e-12

    def value(self, t: float) -> float:
        return float(np.polynomial.polynomial.polyval(t, self.coeffs))

    def position_integral(self, u: float, lam: complex) -> complex:
        if abs(lam) * max(1.0, abs(u)) < 0.5:
            # series in lam: sum_k (i lam)^k / k! * int_0^u t^k p(t) dt
            total = 0.0 + 0.0j
            term_pow = 1.0 + 0.0j
            for k in range(80):
                moment = sum(a * u ** (m + k + 1) / (m + k + 1)
                             for m, a in enumerate(self.coeffs))
                term = term_pow * moment
                total += term
                term_pow *= 1j * lam / (k + 1)
                if abs(term) < 1e-18 * (abs(total) + 1.0) and k > 4:
                    break
            return total
        # integration by parts: I_m = (u^m e^{i lam u} - m I_{m-1}) / (i lam)
        I = _stable_exp_integral(u, lam)
        total = self.coeffs[0] * I
        e = np.exp(1j * lam * u)
        for m in range(1, len(self.coeffs)):
            I = (u ** m * e - m * I) / (1j * lam)
            total += self.coeffs[m] * I
        return total

    def energy_integral(self, u: float) -> float:
        sq = np.polynomial.polynomial.polymul(self.coeffs, self.coeffs)
        anti = np.polynomial.polynomial.polyint(sq)
        return float(np.polynomial.polynomial.polyval(u, anti))


@dataclass(frozen=True, eq=False)
class SampledProfile:
    """Positive samples on knots, cubic-spline interpolated and clamped
    positive; integrals by adaptive quadrature to QUAD_TOL."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.size < 4 or knots.size != values.size:
            raise ValueError("sampled profile needs >= 4 matching knots/values")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if not (knots[0] <= 0.0 <= knots[-1]):
            raise ValueError("profile domain must contain 0")
        if np.any(values <= 0):
            raise ValueError("sampled values must be positive")
        object.__setattr__(self, "knots", tuple(knots))
        object.__setattr__(self, "values", tuple(values))
        object.__setattr__(self, "_spline", CubicSpline(knots, values))

    def contains(self, t: float) -> bool:
        return self.knots[0] - 1e-12 <= t <= self.knots[-1] + 1e-12

    def value(self, t: float) -> float:
        return max(float(self._spline(t)), CLAMP_MIN)

    def position_integral(self, u: float, lam: complex) -> complex:
        lam = complex(lam)
        re = quad(lambda t: (self.value(t) * np.exp(1j * lam * t)).real,
                  0.0, u, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
        im = quad(lambda t: (self.value(t) * np.exp(1j * lam * t)).imag,
                  0.0, u, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
        return re + 1j * im

    def energy_integral(self, u: float) -> float:
        return quad(lambda t: self.value(t) ** 2, 0.0, u,
                    epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]


Profile = ConstantProfile | PolynomialProfile | SampledProfile


@dataclass(frozen=True, eq=False)
class VacuumSeed:
    """Zero rotation coefficients with per-axis positive profiles h_j.

    E(u, lambda) = diag(e^{i lambda u_j}); X_j = int_0^{u_j} h_j(t) e^{i lambda t} dt;
    phi = sum_j int_0^{u_j} h_j(t)^2 dt.  The seed is spherical exactly when
    every profile is constant.
    """

    profiles: tuple

    @property
    def n(self) -> int:
        return len(self.profiles)

    @property
    def is_spherical(self) -> bool:
        return all(isinstance(p, ConstantProfile) for p in self.profiles)

    @classmethod
    def constant(cls, radii) -> "VacuumSeed":
        return cls(tuple(ConstantProfile(float(r)) for r in radii))

    def h0(self) -> np.ndarray:
        return np.array([p.value(0.0) for p in self.profiles])

    def _check_domain(self, u: np.ndarray) -> None:
        for j, p in enumerate(self.profiles):
            if not p.contains(u[j]):
                raise OutOfDomainError(f"u_{j + 1} = {u[j]} outside the seed profile domain")

    def h(self, u: np.ndarray) -> np.ndarray:
        self._check_domain(u)
        return np.array([p.value(u[j]) for j, p in enumerate(self.profiles)])

    def E(self, u: np.ndarray, lam: complex) -> np.ndarray:
        self._check_domain(u)
        return np.diag(np.exp(1j * lam * np.asarray(u, dtype=float)))

    def X(self, u: np.ndarray, lam: complex) -> np.ndarray:
        self._check_domain(u)
        return np.array([p.position_integral(u[j], lam)
                         for j, p in enumerate(self.profiles)])

    def phi(self, u: np.ndarray) -> float:
        self._check_domain(u)
        return float(sum(p.energy_integral(u[j]) for j, p in enumerate(self.profiles)))


def vacuum_E(seed: VacuumSeed, u, lam: complex) -> np.ndarray:
    """diag(e^{i lambda u_j}): the frame of the zero rotation-coefficient Lax form."""
    return seed.E(np.asarray(u, dtype=float), complex(lam))


def vacuum_X(seed: VacuumSeed, u, lam: complex) -> np.ndarray:
    """Componentwise plane-curve integrals int_0^{u_j} h_j(t) e^{i lambda t} dt."""
    return seed.X(np.asarray(u, dtype=float), complex(lam))


@dataclass(frozen=True, eq=False)
class ExtendedFrame:
    """A vacuum seed plus an ordered tuple of dressing records.

    Frames are immutable; dressing returns a new frame sharing the prefix
    records (and their per-point caches).  ``evaluate`` is pure and safe to
    call concurrently.
    """

    seed: VacuumSeed
    history: tuple = ()

    @property
    def n(self) -> int:
        return self.seed.n

    @property
    def is_partial_invariant(self) -> bool:
        """Whether |h(u)| is provably constant: spherical seed and every
        record sphere-preserving."""
        return self.seed.is_spherical and all(
            getattr(rec, "sphere_preserving", False) for rec in self.history)

    def with_record(self, record) -> "ExtendedFrame":
        return ExtendedFrame(self.seed, self.history + (record,))

    def factor_poles(self) -> tuple:
        poles = []
        for rec in self.history:
            poles.extend(rec.factor_poles)
        return tuple(poles)

    def sensitive_points(self) -> tuple:
        pts = []
        for rec in self.history:
            pts.extend(rec.sensitive_points)
        return tuple(pts)

    def _prefix_fn(self, depth: int, u: np.ndarray):
        def fn(w):
            return self.evaluate(u, w, depth=depth)
        return fn

    def evaluate(self, u, lam: complex, depth: int | None = None):
        """Dressed (E, X) at (u, lambda); holomorphic in lambda across the
        dressing poles (each update is applied in its residue-subtracted
        form)."""
        u = np.asarray(u, dtype=float)
        lam = complex(lam)
        E = self.seed.E(u, lam)
        X = self.seed.X(u, lam)
        upto = len(self.history) if depth is None else depth
        for k in range(upto):
            rec = self.history[k]
            data = rec.point_data(self, k, u)
            E, X = rec.apply(E, X, lam, data, self._prefix_fn(k, u))
        return E, X

    def E(self, u, lam: complex) -> np.ndarray:
        return self.evaluate(u, lam)[0]

    def X(self, u, lam: complex) -> np.ndarray:
        return self.evaluate(u, lam)[1]

    def h(self, u) -> np.ndarray:
        """Metric coefficient vector, accumulated through the history."""
        u = np.asarray(u, dtype=float)
        h = self.seed.h(u).astype(complex)
        for k, rec in enumerate(self.history):
            h = rec.apply_h(h, rec.point_data(self, k, u))
        return h

    def beta(self, u) -> np.ndarray:
        """Rotation coefficient matrix, accumulated through the history."""
        u = np.asarray(u, dtype=float)
        beta = np.zeros((self.n, self.n), dtype=complex)
        for k, rec in enumerate(self.history):
            beta = rec.apply_beta(beta, rec.point_data(self, k, u))
        return beta

    def phi(self, u) -> float | None:
        """Closed-form potential, or None when some record has no closed
        update (translations, general complex poles)."""
        u = np.asarray(u, dtype=float)
        val = self.seed.phi(u)
        for k, rec in enumerate(self.history):
            if val is None:
                return None
            val = rec.apply_phi(val, rec.point_data(self, k, u))
        return val

    def lax_connection(self) -> "LaxConnection":
        return LaxConnection(self.n, self.beta, self.h)


@dataclass(eq=False)
class LaxConnection:
    """The flat lambda-family of connections attached to (beta, h): along the
    u_axis direction the (n+1) x (n+1) coefficient is
    [[i lambda e_aa + [e_aa, beta], h_a e_a], [0, 0]]."""

    n: int
    beta_fn: object
    h_fn: object

    def axis_block(self, u, lam: complex, axis: int) -> np.ndarray:
        n = self.n
        beta = self.beta_fn(u)
        h = self.h_fn(u)
        out = np.zeros((n + 1, n + 1), dtype=complex)
        block = np.zeros((n, n), dtype=complex)
        block[axis, :] += beta[axis, :]
        block[:, axis] -= beta[:, axis]
        block[axis, axis] += 1j * lam
        out[:n, :n] = block
        out[axis, n] = h[axis]
        return out


def frame_dlambda_at_zero(frame: ExtendedFrame, u, step: float = 1e-3) -> np.ndarray:
    """dE/dlambda at lambda = 0 by 4th-order central differences with one
    Richardson extrapolation level."""
    u = np.asarray(u, dtype=float)

    def central(s):
        Ep2 = frame.evaluate(u, 2 * s)[0]
        Ep1 = frame.evaluate(u, s)[0]
        Em1 = frame.evaluate(u, -s)[0]
        Em2 = frame.evaluate(u, -2 * s)[0]
        return (-Ep2 + 8 * Ep1 - 8 * Em1 + Em2) / (12 * s)

    coarse = central(step)
    fine = central(step / 2)
    return (16 * fine - coarse) / 15


def _cumulative_segment_integral(f, knots: np.ndarray) -> np.ndarray:
    """F(t_j) = int_0^{t_j} f(t) dt on the knots, per-cell Simpson on the
    knots augmented with 0 (the evaluator is exact off-grid, so midpoints are
    free)."""
    aug = np.union1d(knots, [0.0])
    mids = 0.5 * (aug[:-1] + aug[1:])
    fa = np.array([f(t) for t in aug], dtype=complex)
    fm = np.array([f(t) for t in mids], dtype=complex)
    seg = (np.diff(aug) / 6.0) * (fa[:-1] + 4.0 * fm + fa[1:])
    cum = np.concatenate([[0.0 + 0.0j], np.cumsum(seg)])
    cum -= cum[int(np.searchsorted(aug, 0.0))]
    return cum[np.searchsorted(aug, knots)]


def potential_on_grid(frame: ExtendedFrame, grid: Grid, axis_order=None) -> np.ndarray:
    """Potential phi on the grid by integrating d phi = sum_i h_i^2 du_i along
    axis-ordered staircase paths from the origin.  Flatness makes the result
    independent of ``axis_order`` (tested, not assumed)."""
    n = grid.n
    order = tuple(range(n)) if axis_order is None else tuple(axis_order)
    if sorted(order) != list(range(n)):
        raise ValueError("axis_order must be a permutation of the axes")
    phi = np.zeros(grid.shape, dtype=complex)
    for pos, axis in enumerate(order):
        prior = order[:pos]
        prior_shape = tuple(grid.shape[a] for a in prior)
        knots = grid.axes[axis]
        part = np.zeros(prior_shape + (knots.size,), dtype=complex)
        for pidx in (np.ndindex(prior_shape) if prior_shape else [()]):
            base = np.zeros(n)
            for a, i in zip(prior, pidx):
                base[a] = grid.axes[a][i]

            def line(t):
                u = base.copy()
                u[axis] = t
                return frame.h(u)[axis] ** 2

            part[pidx] = _cumulative_segment_integral(line, knots)
        # part dims follow (prior..., axis); sort them into grid axis order,
        # then insert size-1 dims for the axes not yet visited
        src_axes = list(prior) + [axis]
        part = np.transpose(part, np.argsort(src_axes))
        new_shape = [1] * n
        for a in src_axes:
            new_shape[a] = grid.shape[a]
        phi = phi + part.reshape(new_shape)
    return phi


def metric_from_frame(frame: ExtendedFrame, grid: Grid, strict: bool = False,
                      axis_order=None) -> EgoroffMetric:
    """Sample h, beta from the closed-form accumulated updates and integrate
    the potential along staircase paths.  When every record carries a closed
    potential update, the closed form is attached as ``phi_closed``.

    Nonpositive h on the grid marks the metric (``h_positive=False``) --- the
    immersion chart has been left --- and raises only with ``strict=True``.
    """
    n = grid.n
    shape = grid.shape
    pts = grid.points()
    h = np.empty(shape + (n,), dtype=complex)
    beta = np.empty(shape + (n, n), dtype=complex)
    for idx in grid.indices():
        u = pts[idx]
        h[idx] = frame.h(u)
        beta[idx] = frame.beta(u)

    phi = potential_on_grid(frame, grid, axis_order)

    phi_closed = None
    if frame.phi(np.zeros(n)) is not None:
        phi_closed = np.empty(shape, dtype=float)
        for idx in grid.indices():
            phi_closed[idx] = frame.phi(pts[idx])

    imag_max = max(max_abs(h.imag), max_abs(beta.imag))
    is_real = imag_max < 1e-9
    h_positive = bool(np.all(h.real > 0)) if is_real else False
    if strict and is_real and not h_positive:
        raise NonPositiveError("metric coefficient h_i <= 0 somewhere on the grid")

    c = frame.h(np.zeros(n))
    return EgoroffMetric(grid=grid, h=h, phi=phi, beta=beta, c=c,
                         is_real=is_real, h_positive=h_positive,
                         imag_max=imag_max, phi_closed=phi_closed)
