"""Rational loop elements: simple factors, inverses, reality checks, permutability.

A simple element with pole a1 and zero a2 acts as

    g(lambda) = pi + (lambda - a2)/(lambda - a1) * (I - pi),

normalized to the identity at lambda = infinity.  The unitary-type factor
``g_{z,pi}`` is the special case a1 = z, a2 = conj(z) with pi Hermitian; it
satisfies g(conj(lambda))* g(lambda) = I (tau condition).  The factors that in
addition satisfy g(-lambda)^t g(lambda) = I (sigma condition) are the
generators implemented here: one imaginary pole with a real projection, and
the two-pole product f_{z,pi} = g_{-conj(z),rho} g_{z,pi}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AtPoleError, PoleCollisionError
from .linalg import HermitianProjection, adjoint, max_abs, project_onto_span
from .report import VerificationReport

# Evaluation refuses within pole_tol of a pole (scale-aware).
POLE_TOL = 1e-8


def pole_tol(pole: complex) -> float:
    return POLE_TOL * max(1.0, abs(pole))


def _simple_eval(pi_matrix: np.ndarray, pole: complex, zero: complex, lam: complex) -> np.ndarray:
    n = pi_matrix.shape[0]
    if not np.isfinite(complex(lam)):
        return np.eye(n, dtype=complex)
    if abs(lam - pole) <= pole_tol(pole):
        raise AtPoleError(f"evaluation at lambda={lam} too close to pole {pole}")
    return pi_matrix + (lam - zero) / (lam - pole) * (np.eye(n) - pi_matrix)


@dataclass(frozen=True, eq=False)
class TwoPointFactor:
    """General simple element with pole alpha1, zero alpha2, projection pi."""

    alpha1: complex
    alpha2: complex
    projection: HermitianProjection

    def __post_init__(self):
        if abs(self.alpha1 - self.alpha2) <= POLE_TOL * max(1.0, abs(self.alpha1)):
            raise PoleCollisionError("pole and zero of a simple element must differ")

    @property
    def n(self) -> int:
        return self.projection.n

    def poles(self) -> tuple[complex, ...]:
        return (complex(self.alpha1),)

    def __call__(self, lam: complex) -> np.ndarray:
        return _simple_eval(self.projection.matrix, self.alpha1, self.alpha2, lam)


def one_pole_factor(z: complex, projection: HermitianProjection) -> TwoPointFactor:
    """The tau-real simple element g_{z,pi} (pole z, zero conj(z))."""
    return TwoPointFactor(complex(z), complex(np.conj(z)), projection)


@dataclass(frozen=True, eq=False)
class RealOnePoleFactor:
    """g_{i alpha, pi} with alpha real nonzero and a real projection: the
    sigma-compatible one-pole generator."""

    alpha: float
    projection: HermitianProjection

    def __post_init__(self):
        if self.alpha == 0.0:
            raise ValueError("alpha must be nonzero")
        if not self.projection.is_real:
            raise ValueError("real one-pole factor needs a real projection")

    @property
    def n(self) -> int:
        return self.projection.n

    @property
    def z(self) -> complex:
        return 1j * self.alpha

    def poles(self) -> tuple[complex, ...]:
        return (1j * self.alpha,)

    def __call__(self, lam: complex) -> np.ndarray:
        return _simple_eval(self.projection.matrix, 1j * self.alpha, -1j * self.alpha, lam)


@dataclass(frozen=True, eq=False)
class TwoPoleFactor:
    """f_{z,pi}: the sigma-compatible generator with poles at z and -conj(z).

    rho is derived: the Hermitian projection onto g_{z,pi}(-conj(z)) applied to
    the image of conj(pi).  Use :func:`two_pole_factor` to construct.
    """

    z: complex
    projection: HermitianProjection
    rho: HermitianProjection = field(repr=False)

    def __post_init__(self):
        if abs(self.z.real) < 1e-12 or abs(self.z.imag) < 1e-12:
            raise ValueError("two-pole factor needs z off both the real and imaginary axes")

    @property
    def n(self) -> int:
        return self.projection.n

    def poles(self) -> tuple[complex, ...]:
        return (complex(self.z), complex(-np.conj(self.z)))

    def __call__(self, lam: complex) -> np.ndarray:
        z = self.z
        left = _simple_eval(self.rho.matrix, -np.conj(z), -z, lam)
        right = _simple_eval(self.projection.matrix, z, np.conj(z), lam)
        return left @ right


def two_pole_factor(z: complex, projection: HermitianProjection) -> TwoPoleFactor:
    """Build f_{z,pi} = g_{-conj(z),rho} g_{z,pi} with the derived rho."""
    z = complex(z)
    if abs(z.real) < 1e-12 or abs(z.imag) < 1e-12:
        raise ValueError("two-pole factor needs z off both the real and imaginary axes")
    g_at = _simple_eval(projection.matrix, z, np.conj(z), -np.conj(z))
    rho = project_onto_span(g_at @ projection.span.conj())
    return TwoPoleFactor(z, projection, rho)


@dataclass(frozen=True, eq=False)
class TranslationFactor:
    """(n+1) x (n+1) block factor [[I, i b / (lambda - i alpha)], [0, 1]]."""

    alpha: float
    b: np.ndarray

    def __post_init__(self):
        if self.alpha == 0.0:
            raise ValueError("alpha must be nonzero")
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def poles(self) -> tuple[complex, ...]:
        return (1j * self.alpha,)

    def __call__(self, lam: complex) -> np.ndarray:
        n = self.n
        out = np.eye(n + 1, dtype=complex)
        if not np.isfinite(complex(lam)):
            return out
        pole = 1j * self.alpha
        if abs(lam - pole) <= pole_tol(pole):
            raise AtPoleError(f"evaluation at lambda={lam} too close to pole {pole}")
        out[:n, n] = 1j * self.b / (lam - pole)
        return out


LoopFactor = TwoPointFactor | RealOnePoleFactor | TwoPoleFactor | TranslationFactor


def eval_factor(factor: LoopFactor, lam: complex) -> np.ndarray:
    """Evaluate a loop factor at lambda (identity at lambda = infinity)."""
    return factor(lam)


def invert_factor(factor: TwoPointFactor) -> TwoPointFactor:
    """Inverse of a simple element: swap pole and zero."""
    return TwoPointFactor(factor.alpha2, factor.alpha1, factor.projection)


def check_reality(factor: LoopFactor, lam_samples) -> VerificationReport:
    """Residuals of the two loop-group reality conditions over sample points.

    tau:   max |g(conj(lambda))* g(lambda) - I|
    sigma: max |g(-lambda)^t g(lambda) - I|

    The sigma entry carries a tolerance only for the factor kinds that are
    built to satisfy it (real one-pole, two-pole); for a generic TwoPointFactor
    it is informational.  A translation factor is not matrix-unitary in the
    (n+1)-block sense; for it the sigma-type condition is the conjugation
    symmetry k(-lambda) = conj(k(conj(lambda))), which is what gets checked.
    """
    report = VerificationReport()
    tau = 0.0
    sigma = 0.0
    if isinstance(factor, TranslationFactor):
        for lam in lam_samples:
            lam = complex(lam)
            a = factor(lam)
            tau = max(tau, max_abs(adjoint(factor(np.conj(lam))[: factor.n, : factor.n])
                                   @ a[: factor.n, : factor.n] - np.eye(factor.n)))
            sigma = max(sigma, max_abs(factor(-lam) - factor(np.conj(lam)).conj()))
        report.add("tau_reality", tau, 1e-10)
        report.add("sigma_reality", sigma, 1e-10, sense="(n+1)-block conjugation symmetry")
        return report

    eye = np.eye(factor.n)
    for lam in lam_samples:
        lam = complex(lam)
        a = factor(lam)
        tau = max(tau, max_abs(adjoint(factor(np.conj(lam))) @ a - eye))
        sigma = max(sigma, max_abs(factor(-lam).T @ a - eye))
    # A generic TwoPointFactor is tau-real only when its zero is the conjugate
    # of its pole; otherwise both entries are informational.
    asserts_tau = not (isinstance(factor, TwoPointFactor)
                       and abs(factor.alpha2 - np.conj(factor.alpha1)) > 1e-12)
    asserts_sigma = isinstance(factor, (RealOnePoleFactor, TwoPoleFactor))
    report.add("tau_reality", tau, 1e-10 if asserts_tau else None)
    report.add("sigma_reality", sigma, 1e-10 if asserts_sigma else None)
    return report


def permute_factors(z1: complex, pi1: HermitianProjection,
                    z2: complex, pi2: HermitianProjection
                    ) -> tuple[HermitianProjection, HermitianProjection]:
    """Recompute projections so the two one-pole factors commute as a product:

        g_{z2,rho2} g_{z1,pi1} = g_{z1,rho1} g_{z2,pi2}.

    rho1 projects onto g_{z2,pi2}(z1) applied to the image of pi1, and rho2
    onto g_{z1,pi1}(z2) applied to the image of pi2.
    """
    z1, z2 = complex(z1), complex(z2)
    for z in (z1, z2):
        if abs(z.imag) < 1e-12:
            raise ValueError("permutability needs poles off the real axis")
    if abs(z1 - z2) <= pole_tol(z1) or abs(z1 - np.conj(z2)) <= pole_tol(z1):
        raise PoleCollisionError(f"poles z1={z1} and z2={z2} (or its conjugate) collide")
    g2_at_z1 = _simple_eval(pi2.matrix, z2, np.conj(z2), z1)
    g1_at_z2 = _simple_eval(pi1.matrix, z1, np.conj(z1), z2)
    rho1 = project_onto_span(g2_at_z1 @ pi1.span)
    rho2 = project_onto_span(g1_at_z2 @ pi2.span)
    return rho1, rho2


def random_lambda_samples(count: int, poles, rng, scale: float = 2.0, margin: float = 0.05):
    """Complex sample points at distance >= margin from every listed pole."""
    samples = []
    poles = [complex(p) for p in poles]
    while len(samples) < count:
        lam = complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale))
        if all(abs(lam - p) > margin for p in poles):
            samples.append(lam)
    return samples
