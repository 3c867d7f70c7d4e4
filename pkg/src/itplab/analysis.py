"""Closed-form constants for the approximation-ratio arithmetic.

xi(lam) is the expected nearest-neighbor distance of a unit-intensity
planar Poisson process truncated at the radius r0 where the
nearest-neighbor law g(r) = 1 - exp(-pi r^2) reaches lam. The additive
ratio constant comes from maximizing h(lam) = (1 - lam) * xi(lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import PreconditionError

BETA0 = 0.62866
BETA1 = 0.92117

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def erf(z: float) -> float:
    """Gauss error function (2/sqrt(pi)) * integral of exp(-t^2) on [0, z].

    Delegates to the C library implementation, which is accurate to within
    1e-12 absolute over |z| <= 6 (the contract checked by quadrature in the
    test suite).
    """
    if not math.isfinite(z):
        raise PreconditionError(f"erf needs finite z, got {z}")
    return math.erf(z)


def r0_of_lambda(lam: float) -> float:
    """Radius where the Poisson nearest-neighbor law reaches lam."""
    if not 0.0 <= lam < 1.0:
        raise PreconditionError(f"lambda={lam} outside [0, 1)")
    return math.sqrt(math.log(1.0 / (1.0 - lam)) / math.pi)


def g_of_r(r: float) -> float:
    """Poisson nearest-neighbor distance law g(r) = 1 - exp(-pi r^2)."""
    if r < 0.0:
        raise PreconditionError(f"g_of_r needs r >= 0, got {r}")
    return 1.0 - math.exp(-math.pi * r * r)


def xi(lam: float) -> float:
    """Truncated expected nearest-neighbor distance:
    (1/2) erf(sqrt(ln(1/(1-lam)))) - (1-lam) sqrt(ln(1/(1-lam)) / pi)."""
    if not 0.0 <= lam < 1.0:
        raise PreconditionError(f"lambda={lam} outside [0, 1)")
    if lam == 0.0:
        return 0.0
    t = math.log(1.0 / (1.0 - lam))
    return 0.5 * math.erf(math.sqrt(t)) - (1.0 - lam) * math.sqrt(t / math.pi)


def h(lam: float) -> float:
    """h(lam) = (1 - lam) * xi(lam); vanishes at both ends of [0, 1)."""
    return (1.0 - lam) * xi(lam)


def maximize_h(tol: float = 1e-8) -> tuple[float, float]:
    """Golden-section maximization of h over [0, 1 - 1e-9].

    Unimodality is verified by a grid scan in the test suite rather than
    assumed silently. Returns (lambda_star, h_max).
    """
    a, b = 0.0, 1.0 - 1e-9
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = h(c), h(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = h(d)
    lam_star = 0.5 * (a + b)
    return lam_star, h(lam_star)


def c1_constant(beta: float) -> float:
    """Gap constant of the mixed-tour construction:
    (1 / (8 (40 - beta))) * ((9 beta / 10 - 1/2) beta - 1/50)."""
    return ((0.9 * beta - 0.5) * beta - 0.02) / (8.0 * (40.0 - beta))


def ratio_constant(alpha: float, beta_upper: float) -> float:
    """Approximation-ratio bound 1 + alpha - h_max / beta_upper + 0.00001."""
    if alpha < 1.0:
        raise PreconditionError(f"alpha={alpha} below 1")
    if not 0.0 < beta_upper <= BETA1:
        raise PreconditionError(f"beta_upper={beta_upper} outside (0, {BETA1}]")
    _, h_max = maximize_h()
    return 1.0 + alpha - h_max / beta_upper + 0.00001


@dataclass
class AnalysisConstants:
    beta0: float
    beta1: float
    lambda_star: float
    h_max: float
    c1: float
    ratio_constant: float  # the additive constant next to alpha


def compute_constants() -> AnalysisConstants:
    lam_star, h_max = maximize_h()
    return AnalysisConstants(
        beta0=BETA0,
        beta1=BETA1,
        lambda_star=lam_star,
        h_max=h_max,
        c1=c1_constant(BETA0),
        ratio_constant=ratio_constant(1.0, BETA1) - 1.0,
    )
