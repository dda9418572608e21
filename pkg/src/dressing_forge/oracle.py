"""Independent numerical oracles: classical RK4 integration of the flat
connection and of the first-order dressing system, for comparison against the
closed-form algebra.

Fixed-step RK4 only --- no adaptivity --- so convergence-order arithmetic in
the acceptance tests stays clean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ProjectionDriftError, StepTooLargeError
from .linalg import max_abs

RK4_ORDER = 4.0


@dataclass(frozen=True, eq=False)
class PathSpec:
    """Axis-aligned path from the origin: an ordered list of
    (axis, target coordinate) segments.  Each segment moves exactly one
    coordinate to its target, holding the others."""

    segments: tuple

    def __post_init__(self):
        segs = tuple((int(a), float(t)) for a, t in self.segments)
        object.__setattr__(self, "segments", segs)

    @classmethod
    def staircase(cls, u_target, order=None) -> "PathSpec":
        """The axis-ordered staircase from 0 to u_target."""
        u_target = np.asarray(u_target, dtype=float)
        order = range(u_target.size) if order is None else order
        return cls(tuple((a, u_target[a]) for a in order))

    def waypoints(self, n: int):
        """Yield (u_start, axis, t_start, t_end) per segment."""
        u = np.zeros(n)
        out = []
        for axis, target in self.segments:
            if not 0 <= axis < n:
                raise ValueError(f"path axis {axis} out of range for dimension {n}")
            out.append((u.copy(), axis, float(u[axis]), float(target)))
            u = u.copy()
            u[axis] = target
        return out

    def endpoint(self, n: int) -> np.ndarray:
        u = np.zeros(n)
        for axis, target in self.segments:
            u[axis] = target
        return u


@dataclass(eq=False)
class OracleResult:
    """Outcome of an integration compared against an algebraic reference."""

    value: object
    step: float
    residual: float | None = None
    order: float | None = None
    details: dict = field(default_factory=dict)


def estimate_order(residual_coarse: float, residual_fine: float) -> float:
    """log2 of the residual drop under step halving (inf when the fine
    residual underflows to zero)."""
    if residual_fine == 0.0:
        return math.inf
    return math.log2(residual_coarse / residual_fine)


def _segment_steps(t0: float, t1: float, step: float) -> int:
    return max(1, int(math.ceil(abs(t1 - t0) / step - 1e-12)))


def _rk4(state, rhs, t0: float, t1: float, m: int, post_step=None):
    dt = (t1 - t0) / m
    for i in range(m):
        t = t0 + i * dt
        k1 = rhs(t, state)
        k2 = rhs(t + 0.5 * dt, _axpy(state, 0.5 * dt, k1))
        k3 = rhs(t + 0.5 * dt, _axpy(state, 0.5 * dt, k2))
        k4 = rhs(t + dt, _axpy(state, dt, k3))
        state = _combine(state, dt, k1, k2, k3, k4)
        if post_step is not None:
            state = post_step(state)
    return state


def _axpy(state, a, k):
    if isinstance(state, tuple):
        return tuple(s + a * ki for s, ki in zip(state, k))
    return state + a * k


def _combine(state, dt, k1, k2, k3, k4):
    if isinstance(state, tuple):
        return tuple(s + dt / 6.0 * (a + 2 * b + 2 * c + d)
                     for s, a, b, c, d in zip(state, k1, k2, k3, k4))
    return state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_frame(n: int, beta_fn, h_fn, lam: complex, path: PathSpec,
                    step: float):
    """Path-ordered RK4 solution of F^{-1} dF = theta_lambda, F(0) = I, along
    the given staircase; returns (E, X) blocks at the path end.  beta_fn and
    h_fn are point evaluators (closed-form when the metric came from
    dressing; spline interpolants for external grids)."""
    lam = complex(lam)
    F = np.eye(n + 1, dtype=complex)

    for u_start, axis, t0, t1 in path.waypoints(n):
        if t0 == t1:
            continue
        u_seg = u_start.copy()

        def rhs(t, F_now, axis=axis, u_seg=u_seg):
            u_seg = u_seg.copy()
            u_seg[axis] = t
            beta = beta_fn(u_seg)
            h = h_fn(u_seg)
            theta = np.zeros((n + 1, n + 1), dtype=complex)
            block = np.zeros((n, n), dtype=complex)
            block[axis, :] += beta[axis, :]
            block[:, axis] -= beta[:, axis]
            block[axis, axis] += 1j * lam
            theta[:n, :n] = block
            theta[axis, n] = h[axis]
            return F_now @ theta

        F = _rk4(F, rhs, t0, t1, _segment_steps(t0, t1, step))

    return F[:n, :n], F[:n, n]


def integrate_frame_with_order(n: int, beta_fn, h_fn, lam: complex,
                               path: PathSpec, step: float,
                               reference) -> OracleResult:
    """Integrate at step and step/2 against an algebraic reference (E, X)
    pair; raises StepTooLargeError when the observed order drops below 3."""
    E_ref, X_ref = reference

    def run(s):
        E, X = integrate_frame(n, beta_fn, h_fn, lam, path, s)
        return max(max_abs(E - E_ref), max_abs(X - X_ref))

    r_coarse = run(step)
    r_fine = run(step / 2)
    order = estimate_order(r_coarse, r_fine)
    if order < 3.0:
        raise StepTooLargeError(
            f"observed order {order:.2f} < 3 at step {step}; residuals "
            f"{r_coarse:.3e} -> {r_fine:.3e}")
    return OracleResult(value=None, step=step, residual=r_fine, order=order)


def _reproject(pi: np.ndarray):
    """Snap a near-projection back onto the manifold: eigen-threshold the
    Hermitian part at 1/2.  Rank-preserving for small drift; the correction
    size is the health metric."""
    sym = 0.5 * (pi + pi.conj().T)
    vals, vecs = np.linalg.eigh(sym)
    keep = vals > 0.5
    Q = vecs[:, keep]
    fixed = Q @ Q.conj().T
    return fixed, max_abs(fixed - pi)


@dataclass(eq=False)
class BfIntegration:
    pi_tilde: np.ndarray
    y: np.ndarray
    max_correction: float
    steps: int


def integrate_bf(n: int, beta_fn, h_fn, alpha: float, pi0: np.ndarray,
                 b, path: PathSpec, step: float,
                 drift_tol: float = 1e-6) -> BfIntegration:
    """RK4 integration of the first-order dressing system

        d pi = [pi, [delta, beta]] + alpha (I - 2 pi) [delta, pi],  pi(0) = pi0
        d y  = -[delta, beta - 2 alpha pi] y + pi delta h - alpha delta y,  y(0) = b

    along the path, re-projecting pi after every step and logging the
    correction; raises ProjectionDriftError when a single correction exceeds
    drift_tol.

    The pi equation is the arrangement consistent with the algebraic
    transported projection (differentiate U (U*U)^{-1} U* with
    dU = (alpha delta - [delta, beta]) U); integrating the mirrored
    arrangement converges to a different field entirely."""
    alpha = float(alpha)
    pi = np.asarray(pi0, dtype=complex).copy()
    y = np.asarray(b, dtype=complex).copy()
    max_corr = 0.0
    total_steps = 0

    for u_start, axis, t0, t1 in path.waypoints(n):
        if t0 == t1:
            continue
        m = _segment_steps(t0, t1, step)
        total_steps += m

        def rhs(t, state, axis=axis, u_start=u_start):
            pi_now, y_now = state
            u = u_start.copy()
            u[axis] = t
            beta = beta_fn(u)
            h = h_fn(u)
            Ba = np.zeros((n, n), dtype=complex)
            Ba[axis, :] += beta[axis, :]
            Ba[:, axis] -= beta[:, axis]
            comm_a = np.zeros((n, n), dtype=complex)
            comm_a[axis, :] += pi_now[axis, :]
            comm_a[:, axis] -= pi_now[:, axis]
            d_pi = pi_now @ Ba - Ba @ pi_now + alpha * (np.eye(n) - 2 * pi_now) @ comm_a
            # [delta, beta - 2 alpha pi] along the segment axis
            C = beta - 2 * alpha * pi_now
            Ca = np.zeros((n, n), dtype=complex)
            Ca[axis, :] += C[axis, :]
            Ca[:, axis] -= C[:, axis]
            d_y = -Ca @ y_now + h[axis] * pi_now[:, axis]
            d_y[axis] -= alpha * y_now[axis]
            return (d_pi, d_y)

        corrections = []

        def post(state):
            pi_now, y_now = state
            fixed, corr = _reproject(pi_now)
            corrections.append(corr)
            return (fixed, y_now)

        pi, y = _rk4((pi, y), rhs, t0, t1, m, post_step=post)
        seg_max = max(corrections) if corrections else 0.0
        if seg_max > drift_tol:
            raise ProjectionDriftError(
                f"projection correction {seg_max:.3e} exceeds {drift_tol:.1e}")
        max_corr = max(max_corr, seg_max)

    return BfIntegration(pi_tilde=pi, y=y, max_correction=max_corr, steps=total_steps)


def metric_interpolators(metric):
    """Cubic-spline point evaluators (beta_fn, h_fn) for an externally
    supplied gridded metric.  Metrics that came from dressing should use the
    frame's closed-form evaluators instead; interpolation caps the achievable
    integration accuracy at the interpolation error."""
    from scipy.interpolate import RegularGridInterpolator

    axes = metric.grid.axes
    n = metric.grid.n
    h_parts = [RegularGridInterpolator(axes, metric.h[..., j], method="cubic")
               for j in range(n)]
    beta_parts = {(i, j): RegularGridInterpolator(axes, metric.beta[..., i, j],
                                                  method="cubic")
                  for i in range(n) for j in range(n) if i != j}

    def h_fn(u):
        pt = np.asarray(u, dtype=float)[None, :]
        return np.array([h_parts[j](pt)[0] for j in range(n)])

    def beta_fn(u):
        pt = np.asarray(u, dtype=float)[None, :]
        out = np.zeros((n, n), dtype=complex)
        for (i, j), interp in beta_parts.items():
            out[i, j] = interp(pt)[0]
        return out

    return beta_fn, h_fn
