"""Shrinkage operators against the convex objective, plus penalty bounds."""

import cmath
import math

import numpy as np
import pytest

from spheroreg.regularize import (
    PenaltyBound,
    PenaltyBoundError,
    Scheme,
    atom_survival_probability,
    penalty_bound,
    penalty_for_confidence,
    regularize_multipole,
    shrink_complex,
    shrink_real,
)
from spheroreg.sampling import RngSeed, sample_multipole
from spheroreg.spectrum import power_law


class TestShrinkComplex:
    def test_modulus_shrunk_phase_kept(self):
        a = 3.0 * cmath.exp(1j * math.pi / 4)
        out = shrink_complex(a, 1.0)
        assert abs(out) == pytest.approx(2.0, rel=1e-14)
        assert cmath.phase(out) == pytest.approx(math.pi / 4, rel=1e-14)

    def test_clamped_to_zero(self):
        assert shrink_complex(0.5 * cmath.exp(2j), 1.0) == 0.0

    def test_identity_at_zero_penalty(self):
        a = 1.3 - 0.4j
        assert shrink_complex(a, 0.0) == a

    def test_zero_input(self):
        assert shrink_complex(0.0 + 0.0j, 2.0) == 0.0

    def test_nonexpansive(self):
        rng = np.random.default_rng(40)
        for _ in range(200):
            a, b = (complex(*rng.normal(size=2)) for _ in range(2))
            lam = float(rng.uniform(0, 2))
            assert (abs(shrink_complex(a, lam) - shrink_complex(b, lam))
                    <= abs(a - b) + 1e-12)

    def test_phase_preserved_when_nonzero(self):
        rng = np.random.default_rng(41)
        for _ in range(100):
            a = complex(*rng.normal(size=2)) * 3
            lam = float(rng.uniform(0, 2))
            out = shrink_complex(a, lam)
            if out != 0:
                assert cmath.phase(out) == pytest.approx(cmath.phase(a),
                                                         abs=1e-12)


class TestShrinkReal:
    def test_negative_input(self):
        assert shrink_real(-2.5, 1.0) == pytest.approx(-1.5)

    def test_clamped(self):
        assert shrink_real(0.3, 1.0) == 0.0

    def test_matches_complex_on_reals(self):
        # the m = 0 coefficient is treated identically by both schemes
        for x in [-3.0, -0.4, 0.0, 0.2, 5.0]:
            for lam in [0.0, 0.5, 1.0, 4.0]:
                z = shrink_complex(complex(x, 0.0), lam)
                assert z.imag == 0.0
                assert shrink_real(x, lam) == pytest.approx(z.real, abs=1e-15)

    def test_nonexpansive(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            a, b = rng.normal(size=2) * 3
            lam = float(rng.uniform(0, 2))
            assert abs(shrink_real(a, lam) - shrink_real(b, lam)) <= abs(a - b) + 1e-12


class TestShrinkMinimizer:
    """The closed form must solve min over rho >= 0 of
    phi(rho_obs, rho) = rho_obs^2/2 + rho^2/2 - rho_obs rho + lam rho."""

    @staticmethod
    def objective(rho_obs, rho, lam):
        return 0.5 * rho_obs**2 + 0.5 * rho**2 - rho_obs * rho + lam * rho

    def test_grid_search_never_beats_closed_form(self):
        rng = np.random.default_rng(43)
        for _ in range(300):
            rho_obs = float(rng.uniform(0, 4))
            lam = float(rng.uniform(0, 3))
            best = abs(shrink_real(rho_obs, lam))
            grid = np.linspace(0.0, 2 * rho_obs + 1e-9, 20_001)
            closed = self.objective(rho_obs, best, lam)
            searched = self.objective(rho_obs, grid, lam).min()
            assert closed <= searched + 1e-8


class TestRegularizeMultipole:
    def test_identity_at_zero(self):
        coeffs = sample_multipole(6, 1.0, "complex", RngSeed(50))
        out = regularize_multipole(coeffs, 0.0, Scheme.COMPLEX_MODULUS)
        assert np.array_equal(out.coeffs, coeffs.coeffs)

    def test_annihilation_above_max_modulus(self):
        coeffs = sample_multipole(6, 1.0, "complex", RngSeed(51))
        lam = float(np.abs(coeffs.coeffs).max()) + 0.1
        out = regularize_multipole(coeffs, lam, "complex")
        assert np.all(out.coeffs == 0)

    def test_basis_scheme_mismatch(self):
        coeffs = sample_multipole(4, 1.0, "real", RngSeed(52))
        with pytest.raises(ValueError, match="complex"):
            regularize_multipole(coeffs, 0.5, Scheme.COMPLEX_MODULUS)
        coeffs = sample_multipole(4, 1.0, "complex", RngSeed(52))
        with pytest.raises(ValueError, match="real"):
            regularize_multipole(coeffs, 0.5, Scheme.REAL_BASIS)

    def test_objective_against_random_search(self):
        # the separable objective lam * sum|a| + 1/2 sum|a_obs - a|^2 over
        # the full m range; the shrunk output must beat 10^4 random
        # candidate vectors
        coeffs = sample_multipole(5, 1.0, "complex", RngSeed(53))
        lam = 0.6
        out = regularize_multipole(coeffs, lam, "complex")

        def objective(cand):
            l1 = np.abs(cand[0]) + 2 * np.abs(cand[1:]).sum()
            sq = (np.abs(coeffs.coeffs[0] - cand[0]) ** 2
                  + 2 * (np.abs(coeffs.coeffs[1:] - cand[1:]) ** 2).sum())
            return lam * l1 + 0.5 * sq

        best = objective(out.coeffs)
        rng = np.random.default_rng(54)
        for _ in range(10_000):
            cand = coeffs.coeffs + (rng.normal(size=6, scale=0.5)
                                    + 1j * rng.normal(size=6, scale=0.5))
            cand[0] = cand[0].real
            assert objective(cand) >= best - 1e-8

    def test_conjugate_symmetry_preserved(self):
        # shrinking the materialized a_(ell,-m) equals materializing the
        # shrunk a_(ell,m)
        coeffs = sample_multipole(4, 1.0, "complex", RngSeed(55))
        out = regularize_multipole(coeffs, 0.4, "complex")
        for m in range(1, 5):
            minus = (-1) ** m * np.conj(coeffs.coeffs[m])
            assert shrink_complex(minus, 0.4) == pytest.approx(
                (-1) ** m * np.conj(out.coeffs[m]), abs=1e-15)


class TestSurvivalProbability:
    def test_no_penalty(self):
        assert atom_survival_probability(2.0, 0.0, m_zero=True) == 1.0
        assert atom_survival_probability(2.0, 0.0, m_zero=False) == 1.0

    def test_rayleigh_at_unit_scale(self):
        c = 1.7
        assert atom_survival_probability(c, math.sqrt(c), m_zero=False) == (
            pytest.approx(math.exp(-1.0), rel=1e-14))

    def test_gaussian_at_unit_scale(self):
        c = 0.9
        # 2 (1 - Phi(1)), frozen from the high-precision normal CDF
        assert atom_survival_probability(c, math.sqrt(c), m_zero=True) == (
            pytest.approx(0.31731050786291415, rel=1e-12))

    def test_monte_carlo_agreement(self):
        from spheroreg.sampling import sample_multipole_block

        c, lam, n = 1.0, 0.8, 200_000
        block = sample_multipole_block(1, c, "complex", RngSeed(56), n)
        shrunk = np.abs(shrink_complex(block[:, 1], lam))
        p_hat = (shrunk > 0).mean()
        expect = atom_survival_probability(c, lam, m_zero=False)
        se = math.sqrt(expect * (1 - expect) / n)
        assert abs(p_hat - expect) < 4 * se

    def test_rejects_bad_variance(self):
        with pytest.raises(ValueError):
            atom_survival_probability(0.0, 1.0, m_zero=True)


class TestPenaltyBound:
    def test_large_epsilon_positive(self):
        spec = power_law(1.0, 3.0, 64)
        bound = penalty_bound(100.0, spec)
        assert isinstance(bound, PenaltyBound)
        assert bound.lam > 0
        assert bound.middle_term_valid

    def test_cube_constraint_satisfied(self):
        spec = power_law(1.0, 3.0, 64)
        for eps in [10.0, 30.0, 100.0]:
            bound = penalty_bound(eps, spec)
            rhs = (eps * math.sqrt(math.pi * bound.c_star)
                   / (4 * math.sqrt(2) * (2 * bound.ell_star + bound.ell_star**2)))
            assert bound.lam**3 <= rhs + 1e-12

    def test_ell_star_is_smallest_admissible_cut(self):
        spec = power_law(1.0, 3.0, 64)
        bound = penalty_bound(10.0, spec)
        weights = (2 * spec.ells + 1) * spec.values
        tail_at = lambda ell: weights[spec.ells > ell].sum()
        assert tail_at(bound.ell_star) <= 10.0 / 4
        if bound.ell_star > 1:
            assert tail_at(bound.ell_star - 1) > 10.0 / 4

    def test_vacuous_middle_term_below_eight(self):
        spec = power_law(1.0, 3.0, 32)
        with pytest.raises(PenaltyBoundError):
            penalty_bound(7.9, spec)
        bound = penalty_bound(7.9, spec, allow_vacuous_middle=True)
        assert not bound.middle_term_valid
        assert bound.lam > 0

    def test_rejects_invalid_spectrum(self):
        from spheroreg.spectrum import PowerSpectrum, SpectrumError

        bad = PowerSpectrum(np.ones(5), 1, 1.0, 3.0)
        with pytest.raises(SpectrumError):
            penalty_bound(10.0, bad)


class TestPenaltyForConfidence:
    def test_looser_delta_admits_larger_penalty(self):
        spec = power_law(1.0, 3.0, 32)
        tight = penalty_for_confidence(10.0, 0.1, spec)
        loose = penalty_for_confidence(10.0, 0.9, spec)
        assert loose.lam > tight.lam

    def test_markov_level(self):
        spec = power_law(1.0, 3.0, 32)
        bound = penalty_for_confidence(10.0, 0.1, spec)
        assert bound.epsilon == pytest.approx(10.0, rel=1e-14)  # eps^2 * delta

    def test_zero_penalty_always_feasible(self):
        # lambda = 0 keeps T^reg = T, so the constraint holds surely; the
        # bound must therefore always sit at a nonnegative level
        spec = power_law(1.0, 3.0, 32)
        bound = penalty_for_confidence(10.0, 0.1, spec)
        assert bound.lam >= 0

    def test_rejects_bad_delta(self):
        spec = power_law(1.0, 3.0, 32)
        for delta in [0.0, 1.0, -0.2]:
            with pytest.raises(ValueError):
                penalty_for_confidence(10.0, delta, spec)
