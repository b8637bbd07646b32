"""Special-function kernel.

Everything here is pure and reentrant: standard normal CDF, complementary
error function, upper incomplete gamma at integer/half-integer order,
Legendre polynomials, and orthonormal complex/real spherical harmonics
evaluated pointwise through a fully-normalized associated-Legendre
recurrence (stable to ell ~ 2000, where the raw polynomials overflow long
before).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)
INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)


def normal_cdf(x: float) -> float:
    """Standard normal CDF Phi(x).

    Computed through erfc of the scaled argument so the upper tail keeps
    full relative accuracy (1 - Phi(x) does not cancel).
    """
    return 0.5 * float(_sp.erfc(-x / SQRT2))


def erfc(x: float) -> float:
    """Complementary error function, equal to 2*(1 - Phi(sqrt(2)*x))."""
    return float(_sp.erfc(x))


def erfcx(x: float) -> float:
    """Scaled complementary error function exp(x^2)*erfc(x)."""
    return float(_sp.erfcx(x))


def _check_half_integer_order(p: float) -> int:
    twice = 2.0 * p
    if not math.isfinite(twice) or twice != round(twice) or twice < 1:
        raise ValueError(f"order must be a half-integer >= 1/2, got p={p}")
    return int(round(twice))


def upper_incomplete_gamma(p: float, c: float) -> float:
    """Upper incomplete gamma Gamma(p; c) = int_c^inf x^(p-1) e^(-x) dx.

    Order p must be a positive multiple of 1/2.  Uses the closed-form
    upward recursion Gamma(p+1;c) = p*Gamma(p;c) + c^p e^(-c) from the
    exact base cases Gamma(1;c) = e^(-c), Gamma(1/2;c) = sqrt(pi)*erfc(sqrt(c)).
    """
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    return math.exp(-c) * upper_incomplete_gamma_scaled(p, c)


def upper_incomplete_gamma_scaled(p: float, c: float) -> float:
    """exp(c) * Gamma(p; c), the cancellation-free form used at large c."""
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    twice = _check_half_integer_order(p)
    if twice % 2 == 0:
        val = 1.0  # Gamma(1;c)*e^c
        q = 1.0
    else:
        val = SQRT_PI * erfcx(math.sqrt(c))  # Gamma(1/2;c)*e^c
        q = 0.5
    while q < p - 0.25:
        val = q * val + c**q
        q += 1.0
    return val


def legendre_p(ell: int, x: float) -> float:
    """Legendre polynomial P_ell(x) on [-1, 1] by the three-term recurrence."""
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if abs(x) > 1.0:
        raise ValueError(f"|x| must be <= 1, got {x}")
    if ell == 0:
        return 1.0
    p_prev, p = 1.0, x
    for k in range(2, ell + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p


def normalized_assoc_legendre(ell: int, x: float) -> np.ndarray:
    """Fully-normalized associated Legendre values for m = 0..ell.

    Returns N_ell^m(x) such that Y_(ell,m)(theta, phi) =
    N_ell^m(cos theta) * exp(i m phi) is orthonormal on the sphere.
    Condon-Shortley phase is folded in.  The normalization is carried
    inside the recurrence; the raw P_ell^m would overflow near ell ~ 150.
    """
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if abs(x) > 1.0:
        raise ValueError(f"|x| must be <= 1, got {x}")
    s = math.sqrt(max(0.0, 1.0 - x * x))  # sin(theta)
    out = np.empty(ell + 1)

    # diagonal N_m^m, then two-term upward recurrence in degree
    diag = INV_SQRT_4PI
    for m in range(0, ell + 1):
        if m > 0:
            diag *= -s * math.sqrt((2 * m + 1) / (2.0 * m))
        if m == ell:
            out[m] = diag
            break
        p_prev = diag
        p = x * math.sqrt(2 * m + 3.0) * diag
        for l in range(m + 2, ell + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            p_prev, p = p, a * (x * p - b * p_prev)
        out[m] = p
    return out


def sph_harm_complex(ell: int, m: int, theta: float, phi: float) -> complex:
    """Orthonormal complex spherical harmonic Y_(ell,m)(theta, phi).

    Satisfies Y_(ell,m) = (-1)^m * conj(Y_(ell,-m)).
    """
    if abs(m) > ell:
        raise ValueError(f"|m| must be <= ell, got m={m}, ell={ell}")
    n = normalized_assoc_legendre(ell, math.cos(theta))
    am = abs(m)
    y = n[am] * complex(math.cos(am * phi), math.sin(am * phi))
    if m < 0:
        y = (-1) ** am * y.conjugate()
    return y


def sph_harm_real(ell: int, m: int, theta: float, phi: float) -> float:
    """Orthonormal real spherical harmonic.

    m = 0 gives Y_(ell,0); m > 0 gives sqrt(2)*Re(Y_(ell,m)); m < 0 gives
    sqrt(2)*Im(Y_(ell,|m|)).
    """
    if abs(m) > ell:
        raise ValueError(f"|m| must be <= ell, got m={m}, ell={ell}")
    n = normalized_assoc_legendre(ell, math.cos(theta))
    if m == 0:
        return float(n[0])
    am = abs(m)
    if m > 0:
        return SQRT2 * n[am] * math.cos(am * phi)
    return SQRT2 * n[am] * math.sin(am * phi)


def sph_harm_real_all(ell: int, theta: float, phi: float) -> np.ndarray:
    """All real harmonics Y^R_(ell,m) for m = -ell..ell (index m + ell).

    One recurrence pass; used by the map formulas and field synthesis.
    """
    n = normalized_assoc_legendre(ell, math.cos(theta))
    out = np.empty(2 * ell + 1)
    out[ell] = n[0]
    for m in range(1, ell + 1):
        out[ell + m] = SQRT2 * n[m] * math.cos(m * phi)
        out[ell - m] = SQRT2 * n[m] * math.sin(m * phi)
    return out
