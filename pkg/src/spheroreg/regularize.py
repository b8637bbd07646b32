"""Soft-thresholding operators and penalty-level bounds.

Two schemes solve the separable quadratic-plus-l1 problem over one
multipole:

- complex-modulus: each coefficient's modulus is shrunk by the penalty and
  clamped at zero, phase untouched;
- real-basis: sign-preserving shrinkage of each real coefficient.

The m = 0 coefficient is real, so both schemes act identically on it.
:func:`penalty_bound` evaluates the three-term admissible-penalty display
guaranteeing E||T - T^reg||^2 <= epsilon; its middle term is nonpositive
for epsilon <= 8, which is surfaced rather than patched (the Monte Carlo
oracle remains the acceptance ground truth).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .sampling import HarmonicCoefficients
from .specfun import normal_cdf
from .spectrum import PowerSpectrum, ensure_valid


class Scheme(str, enum.Enum):
    """Regularization scheme: shrink complex moduli or real coefficients."""

    COMPLEX_MODULUS = "complex"
    REAL_BASIS = "real"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise ValueError(f"unknown scheme {value!r}; "
                             f"expected 'complex' or 'real'") from None


def _check_penalty(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"penalty must be finite and >= 0, got {lam}")
    return lam


def shrink_complex(a, lam: float):
    """Complex soft threshold: |rho - lam|_+ exp(i psi), phase preserved.

    Accepts scalars or arrays.  a = 0 maps to 0 (phase convention 0).
    """
    lam = _check_penalty(lam)
    a = np.asarray(a, dtype=complex)
    rho = np.abs(a)
    scale = np.where(rho > lam, 1.0 - np.divide(lam, rho, where=rho > 0,
                                                out=np.ones_like(rho)), 0.0)
    out = a * scale
    return complex(out) if out.ndim == 0 else out


def shrink_real(a, lam: float):
    """Real soft threshold: sign(a) * ||a| - lam|_+ (scalars or arrays)."""
    lam = _check_penalty(lam)
    a = np.asarray(a, dtype=float)
    out = np.sign(a) * np.maximum(np.abs(a) - lam, 0.0)
    return float(out) if out.ndim == 0 else out


def regularize_multipole(coeffs: HarmonicCoefficients, lam: float,
                         scheme: Scheme | str) -> HarmonicCoefficients:
    """Apply the scheme's shrinkage to every coefficient of one multipole.

    The coefficient basis must match the scheme; conjugate symmetry of the
    complex basis is preserved automatically because shrinkage acts on the
    modulus only.
    """
    scheme = Scheme.parse(scheme)
    lam = _check_penalty(lam)
    if scheme is Scheme.COMPLEX_MODULUS:
        if coeffs.basis != "complex":
            raise ValueError("complex-modulus scheme requires complex-basis "
                             f"coefficients, got {coeffs.basis!r}")
        return HarmonicCoefficients(coeffs.ell, "complex",
                                    shrink_complex(coeffs.coeffs, lam))
    if coeffs.basis != "real":
        raise ValueError("real-basis scheme requires real-basis "
                         f"coefficients, got {coeffs.basis!r}")
    return HarmonicCoefficients(coeffs.ell, "real",
                                shrink_real(coeffs.coeffs, lam))


def atom_survival_probability(c_ell: float, lam: float, m_zero: bool) -> float:
    """Probability that a coefficient survives shrinkage (comes out nonzero).

    Gaussian class (m = 0, or any real-basis coefficient):
    2 (1 - Phi(lam / sqrt(C))).  Rayleigh class (m != 0, complex scheme):
    exp(-lam^2 / C).
    """
    if c_ell <= 0:
        raise ValueError(f"c_ell must be > 0, got {c_ell}")
    lam = _check_penalty(lam)
    if m_zero:
        return 2.0 * (1.0 - normal_cdf(lam / math.sqrt(c_ell)))
    return math.exp(-lam * lam / c_ell)


class PenaltyBoundError(ValueError):
    """The admissible-penalty display is vacuous for the requested epsilon."""


@dataclass(frozen=True)
class PenaltyBound:
    """Admissible penalty with the three terms behind the minimum.

    ``lam`` guarantees E||T - T^reg||^2 <= epsilon over the stored
    multipoles.  ``middle_term_valid`` is False when the (epsilon/2 - 4)
    term was nonpositive and explicitly skipped.
    """

    lam: float
    epsilon: float
    term_head_count: float
    term_tail_integral: float
    term_small_coefficient: float
    ell_star: int
    ell_plus: int
    c_star: float
    middle_term_valid: bool


def penalty_bound(epsilon: float, spec: PowerSpectrum,
                  allow_vacuous_middle: bool = False) -> PenaltyBound:
    """Largest penalty from the three-term display, guaranteeing
    E||T - T^reg||^2 <= epsilon (band-limited to the stored multipoles).

    The three constraints are:

    1. lam <= sqrt(eps / (4 (2 l+ + l+^2)))        [head survivor count]
    2. lam <= (eps/2 - 4) / sqrt(2 pi)             [integral-test tail]
    3. lam^3 <= eps sqrt(pi C*) / (4 sqrt(2) (2 l* + l*^2))
                                                   [small-coefficient mass]

    where l* is the smallest cut with sum_(ell > l*) (2 ell + 1) C_ell <=
    eps/4, C* = min_(ell <= l*) C_ell, and l+ > 1 is the free split point
    (smallest admissible, 2, maximizes term 1).  Term 2 is nonpositive for
    eps <= 8; that raises PenaltyBoundError unless ``allow_vacuous_middle``
    lets the caller fall back to the other two terms, flagged in the result.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    ensure_valid(spec)
    ells = spec.ells
    weights = (2 * ells + 1) * spec.values

    # l*: smallest index whose strict tail is <= eps/4 (ties: smallest).
    tail = np.concatenate([np.cumsum(weights[::-1])[::-1][1:], [0.0]])
    idx = int(np.argmax(tail <= epsilon / 4.0))
    ell_star = int(ells[idx])
    c_star = float(spec.values[: idx + 1].min())
    term3 = (epsilon * math.sqrt(math.pi * c_star)
             / (4.0 * math.sqrt(2.0) * (2.0 * ell_star + ell_star**2))) ** (1.0 / 3.0)

    ell_plus = 2  # smallest split > 1; larger values only tighten term 1
    term1 = math.sqrt(epsilon / (4.0 * (2.0 * ell_plus + ell_plus**2)))

    term2 = (epsilon / 2.0 - 4.0) / math.sqrt(2.0 * math.pi)
    middle_valid = term2 > 0.0
    if middle_valid:
        lam = min(term1, term2, term3)
    elif allow_vacuous_middle:
        lam = min(term1, term3)
    else:
        raise PenaltyBoundError(
            f"(epsilon/2 - 4)/sqrt(2 pi) = {term2:.6g} is nonpositive for "
            f"epsilon = {epsilon}; the display is vacuous below epsilon = 8. "
            "Pass allow_vacuous_middle=True to fall back to the other terms.")
    return PenaltyBound(lam=lam, epsilon=epsilon, term_head_count=term1,
                        term_tail_integral=term2, term_small_coefficient=term3,
                        ell_star=ell_star, ell_plus=ell_plus, c_star=c_star,
                        middle_term_valid=middle_valid)


def penalty_for_confidence(epsilon: float, delta: float, spec: PowerSpectrum,
                           allow_vacuous_middle: bool = False) -> PenaltyBound:
    """Penalty such that Pr{||T - T^reg|| > epsilon} <= delta.

    Runs penalty_bound at expectation level eps' = epsilon^2 * delta;
    Markov's inequality then gives Pr{||.|| > eps} <= E||.||^2 / eps^2 <=
    delta.  The returned bound carries eps' as its epsilon field.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    return penalty_bound(epsilon * epsilon * delta, spec,
                         allow_vacuous_middle=allow_vacuous_middle)
