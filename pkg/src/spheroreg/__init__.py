"""Soft-thresholded Gaussian isotropic fields on the sphere.

Library layout:

- ``specfun``    -- special-function kernel (normal CDF, erfc, incomplete
  gamma, Legendre polynomials, spherical harmonics).
- ``spectrum``   -- angular power spectrum model, decay validation, CSV I/O,
  reference table fixture.
- ``sampling``   -- Gaussian harmonic-coefficient sampling and pointwise
  field synthesis.
- ``regularize`` -- soft-thresholding operators (complex-modulus and
  real-basis schemes) and penalty-level bounds.
- ``moments``    -- closed-form second/fourth moments, kurtosis, variance
  and trispectrum maps, asymptotic envelopes.
- ``montecarlo`` -- independent stochastic oracle with jackknife standard
  errors and the named verification suites.
- ``cli``        -- the ``spheroreg`` command-line front end.
"""

from .spectrum import PowerSpectrum, SpectrumRow, paper_table, power_law
from .sampling import HarmonicCoefficients, RngSeed, sample_multipole
from .regularize import Scheme, shrink_complex, shrink_real
from .moments import gamma0, gamma1, gamma2, gamma3, kurtosis_pole

__version__ = "0.1.0"

__all__ = [
    "PowerSpectrum",
    "SpectrumRow",
    "paper_table",
    "power_law",
    "HarmonicCoefficients",
    "RngSeed",
    "sample_multipole",
    "Scheme",
    "shrink_complex",
    "shrink_real",
    "gamma0",
    "gamma1",
    "gamma2",
    "gamma3",
    "kurtosis_pole",
    "__version__",
]
