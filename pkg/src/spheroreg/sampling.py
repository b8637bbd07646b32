"""Gaussian harmonic-coefficient sampling and pointwise field synthesis.

Complex-basis coefficients are stored for m = 0..ell only; the m < 0 half
is implied by a_(ell,-m) = (-1)^m conj(a_(ell,m)) and never materialized.
Real-basis coefficients are stored for m = -ell..ell (index m + ell).

Sampling is keyed by (seed, stream, ell) through a SeedSequence, so any
work unit regenerates its own coefficients bit-identically regardless of
thread count or execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .specfun import sph_harm_real_all

Basis = Literal["complex", "real"]


@dataclass(frozen=True)
class RngSeed:
    """Root of a family of reproducible random streams."""

    seed: int
    stream: int = 0

    def generator(self, *key: int) -> np.random.Generator:
        """Independent generator for (seed, stream, *key)."""
        ss = np.random.SeedSequence((self.seed, self.stream) + key)
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class HarmonicCoefficients:
    """One multipole's coefficients in the complex or real basis."""

    ell: int
    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        if self.basis == "complex":
            arr = np.asarray(self.coeffs, dtype=complex)
            if arr.shape != (self.ell + 1,):
                raise ValueError(f"complex basis stores m=0..ell: expected "
                                 f"shape {(self.ell + 1,)}, got {arr.shape}")
            if abs(arr[0].imag) > 1e-12 * max(1.0, abs(arr[0])):
                raise ValueError("a_(ell,0) must be real")
            arr = arr.copy()
            arr[0] = arr[0].real
        elif self.basis == "real":
            arr = np.asarray(self.coeffs, dtype=float)
            if arr.shape != (2 * self.ell + 1,):
                raise ValueError(f"real basis stores m=-ell..ell: expected "
                                 f"shape {(2 * self.ell + 1,)}, got {arr.shape}")
        else:
            raise ValueError(f"unknown basis {self.basis!r}")
        if not np.all(np.isfinite(arr.view(float))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", arr)


def sample_multipole(ell: int, c_ell: float, basis: Basis,
                     rng: RngSeed) -> HarmonicCoefficients:
    """Draw one multipole of a Gaussian isotropic field.

    Complex basis: a_(ell,0) ~ N(0, C); for m > 0 the real and imaginary
    parts are independent N(0, C/2), so E|a_(ell,m)|^2 = C.  Real basis:
    2*ell + 1 independent N(0, C) draws.  Deterministic given (rng, ell).
    """
    if c_ell <= 0:
        raise ValueError(f"c_ell must be > 0, got {c_ell}")
    gen = rng.generator(ell)
    sd = math.sqrt(c_ell)
    if basis == "complex":
        a = np.empty(ell + 1, dtype=complex)
        a[0] = gen.normal(0.0, sd)
        if ell > 0:
            re = gen.normal(0.0, sd / math.sqrt(2.0), size=ell)
            im = gen.normal(0.0, sd / math.sqrt(2.0), size=ell)
            a[1:] = re + 1j * im
        return HarmonicCoefficients(ell, "complex", a)
    if basis == "real":
        return HarmonicCoefficients(
            ell, "real", gen.normal(0.0, sd, size=2 * ell + 1))
    raise ValueError(f"unknown basis {basis!r}")


def basis_convert(coeffs: HarmonicCoefficients, target: Basis) -> HarmonicCoefficients:
    """Convert between the complex and real coefficient bases.

    The conversion preserves the synthesized field exactly:
    a^R_(ell,m) = sqrt(2) Re a_(ell,m) for m > 0,
    a^R_(ell,-m) = -sqrt(2) Im a_(ell,-m)'s conjugate partner, resolved to
    -sqrt(2) Im a_(ell,m) via the m < 0 symmetry; a^R_(ell,0) = a_(ell,0).
    """
    if target == coeffs.basis:
        return coeffs
    ell = coeffs.ell
    if coeffs.basis == "complex" and target == "real":
        a = coeffs.coeffs
        out = np.empty(2 * ell + 1)
        out[ell] = a[0].real
        for m in range(1, ell + 1):
            out[ell + m] = math.sqrt(2.0) * a[m].real
            out[ell - m] = -math.sqrt(2.0) * a[m].imag
        return HarmonicCoefficients(ell, "real", out)
    if coeffs.basis == "real" and target == "complex":
        r = coeffs.coeffs
        out = np.empty(ell + 1, dtype=complex)
        out[0] = r[ell]
        for m in range(1, ell + 1):
            out[m] = (r[ell + m] - 1j * r[ell - m]) / math.sqrt(2.0)
        return HarmonicCoefficients(ell, "complex", out)
    raise ValueError(f"cannot convert {coeffs.basis!r} -> {target!r}")


def eval_field(coeffs: HarmonicCoefficients, theta: float, phi: float) -> float:
    """Evaluate the multipole component T_ell(theta, phi).

    Complex basis evaluates a_0 Y_0 + sum_m>0 2 Re(a_m Y_m), which is the
    full sum over m = -ell..ell under the conjugation symmetry, so the
    result is exactly real.
    """
    real = coeffs if coeffs.basis == "real" else basis_convert(coeffs, "real")
    y = sph_harm_real_all(coeffs.ell, theta, phi)
    return float(real.coeffs @ y)


def synthesis_matrix(ell: int, points: list[tuple[float, float]]) -> np.ndarray:
    """Real-basis synthesis matrix of shape (2*ell + 1, n_points).

    T_ell at point j for real coefficients r is (r @ matrix)[j]; complex
    coefficients go through basis_convert first.  One associated-Legendre
    pass per point.
    """
    out = np.empty((2 * ell + 1, len(points)))
    for j, (theta, phi) in enumerate(points):
        out[:, j] = sph_harm_real_all(ell, theta, phi)
    return out


def sample_multipole_block(ell: int, c_ell: float, basis: Basis, rng: RngSeed,
                           n: int, block: int | None = None) -> np.ndarray:
    """Draw ``n`` independent multipole replicates as one array.

    Complex basis returns shape (n, ell + 1) complex with E|a_m|^2 = C and
    a_0 real; real basis returns shape (n, 2*ell + 1).  Blocks are the
    Monte Carlo work unit, keyed by (seed, stream, ell[, block]) as a
    whole, so a block regenerates identically on any thread.
    """
    if c_ell <= 0:
        raise ValueError(f"c_ell must be > 0, got {c_ell}")
    gen = rng.generator(ell) if block is None else rng.generator(ell, block)
    sd = math.sqrt(c_ell)
    if basis == "complex":
        a = np.empty((n, ell + 1), dtype=complex)
        a[:, 0] = gen.normal(0.0, sd, size=n)
        if ell > 0:
            re = gen.normal(0.0, sd / math.sqrt(2.0), size=(n, ell))
            im = gen.normal(0.0, sd / math.sqrt(2.0), size=(n, ell))
            a[:, 1:] = re + 1j * im
        return a
    if basis == "real":
        return gen.normal(0.0, sd, size=(n, 2 * ell + 1))
    raise ValueError(f"unknown basis {basis!r}")


def complex_block_to_real(block: np.ndarray) -> np.ndarray:
    """Vectorized basis_convert for a block of complex-basis rows."""
    n, w = block.shape
    ell = w - 1
    out = np.empty((n, 2 * ell + 1))
    out[:, ell] = block[:, 0].real
    if ell > 0:
        out[:, ell + 1:] = math.sqrt(2.0) * block[:, 1:].real
        out[:, ell - 1::-1] = -math.sqrt(2.0) * block[:, 1:].imag
    return out
