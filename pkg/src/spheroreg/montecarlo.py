"""Independent stochastic oracle for the closed-form moment stack.

Replicates are drawn in fixed blocks, each block keyed by
(seed, stream, ell, block index), and block statistics are reduced in
block order, so every estimate is bit-identical under any thread count.
Standard errors come from a delete-one-block jackknife, which stays valid
for ratio statistics such as kurtosis.

The named verification suites at the bottom are what ``spheroreg verify``
runs; each check row carries observed value, expected value, and
tolerance.  The environment variable SPHEROREG_TAMPER (test hook, e.g.
``SPHEROREG_TAMPER=gamma1=1.01``) multiplies one analytic reference so the
harness can prove it detects discrepancies.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import moments
from .regularize import (
    Scheme,
    penalty_for_confidence,
    shrink_complex,
    shrink_real,
)
from .sampling import (
    RngSeed,
    complex_block_to_real,
    sample_multipole_block,
    synthesis_matrix,
)
from .spectrum import PowerSpectrum, power_law


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with jackknife standard error."""

    mean: float
    std_error: float
    n: int

    def within(self, expected: float, n_se: float) -> bool:
        return abs(self.mean - expected) <= n_se * self.std_error


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo run: what to sample and where to evaluate."""

    replicates: int
    seed: RngSeed
    ell_list: tuple[int, ...]
    lam: float
    scheme: Scheme
    eval_points: tuple[tuple[float, float], ...] = ()
    c_ell: float = 1.0
    n_blocks: int = 100

    def __post_init__(self):
        if self.replicates < 100:
            raise ValueError(f"replicates must be >= 100, got {self.replicates}")
        if self.lam < 0:
            raise ValueError(f"penalty must be >= 0, got {self.lam}")
        if self.c_ell <= 0:
            raise ValueError(f"c_ell must be > 0, got {self.c_ell}")
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "ell_list", tuple(int(e) for e in self.ell_list))
        object.__setattr__(self, "eval_points",
                           tuple((float(t), float(p)) for t, p in self.eval_points))


def default_threads() -> int:
    env = os.environ.get("SPHEROREG_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _block_sizes(total: int, n_blocks: int) -> list[int]:
    n_blocks = min(n_blocks, total)
    base, extra = divmod(total, n_blocks)
    return [base + (1 if b < extra else 0) for b in range(n_blocks)]


def _map_blocks(fn, n_blocks: int, threads: int) -> list:
    """Run fn(block_index) for every block; results in block order."""
    if threads <= 1:
        return [fn(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_blocks)))


def jackknife(block_sums: np.ndarray, block_counts: np.ndarray,
              statistic=None) -> McEstimate:
    """Delete-one-block jackknife for a (possibly ratio) statistic.

    ``block_sums`` has one row of accumulated sums per block; ``statistic``
    maps total sums and count to the estimate (default: first sum / count,
    the plain mean).
    """
    block_sums = np.atleast_2d(np.asarray(block_sums, dtype=float))
    if block_sums.shape[0] == 1 and block_counts.size > 1:
        block_sums = block_sums.T
    nb = block_sums.shape[0]
    if statistic is None:
        statistic = lambda sums, n: sums[0] / n
    total = block_sums.sum(axis=0)
    n = int(block_counts.sum())
    theta = statistic(total, n)
    loo = np.array([statistic(total - block_sums[b], n - block_counts[b])
                    for b in range(nb)])
    se = math.sqrt((nb - 1) / nb * ((loo - loo.mean()) ** 2).sum())
    return McEstimate(mean=float(theta), std_error=se, n=n)


def _shrunk_block(cfg: McConfig, ell: int, block: int, size: int) -> np.ndarray:
    """One regularized coefficient block in the scheme's own basis."""
    basis = "complex" if cfg.scheme is Scheme.COMPLEX_MODULUS else "real"
    raw = sample_multipole_block(ell, cfg.c_ell, basis, cfg.seed, size, block)
    if cfg.scheme is Scheme.COMPLEX_MODULUS:
        return shrink_complex(raw, cfg.lam)
    return shrink_real(raw, cfg.lam)


def estimate_coefficient_moments_multi(cfg: McConfig, orders: tuple[int, ...],
                                       threads: int | None = None
                                       ) -> dict[tuple[int, str, int], McEstimate]:
    """Empirical E{|a^reg|^order} per (ell, m-class, order), one sampling pass.

    Classes are "m0" (the real m = 0 coefficient) and "mne0" (all m != 0
    coefficients pooled).  Deterministic given the config.
    """
    if any(o < 1 for o in orders):
        raise ValueError(f"orders must be >= 1, got {orders}")
    threads = default_threads() if threads is None else threads
    sizes = _block_sizes(cfg.replicates, cfg.n_blocks)
    out: dict[tuple[int, str, int], McEstimate] = {}
    for ell in cfg.ell_list:
        def block_stats(b: int, ell=ell):
            shrunk = _shrunk_block(cfg, ell, b, sizes[b])
            if cfg.scheme is Scheme.COMPLEX_MODULUS:
                m0 = np.abs(shrunk[:, 0].real)
                rest = np.abs(shrunk[:, 1:]).ravel()
            else:
                w = shrunk.shape[1] // 2
                m0 = np.abs(shrunk[:, w])
                rest = np.abs(np.delete(shrunk, w, axis=1)).ravel()
            sums = [(m0 ** o).sum() for o in orders]
            sums += [(rest ** o).sum() for o in orders]
            return sums, m0.size, rest.size

        rows = _map_blocks(block_stats, len(sizes), threads)
        m0_counts = np.array([r[1] for r in rows])
        rest_counts = np.array([r[2] for r in rows])
        for i, order in enumerate(orders):
            out[(ell, "m0", order)] = jackknife(
                np.array([[r[0][i]] for r in rows]), m0_counts)
            if ell > 0:
                out[(ell, "mne0", order)] = jackknife(
                    np.array([[r[0][len(orders) + i]] for r in rows]),
                    rest_counts)
    return out


def estimate_coefficient_moments(cfg: McConfig, order: int,
                                 threads: int | None = None
                                 ) -> dict[tuple[int, str], McEstimate]:
    """Empirical E{|a^reg|^order} per (ell, m-class); see the multi variant."""
    multi = estimate_coefficient_moments_multi(cfg, (order,), threads)
    return {(ell, cls): est for (ell, cls, _), est in multi.items()}


def estimate_field_moment_map(cfg: McConfig, order: int,
                              threads: int | None = None
                              ) -> dict[int, list[McEstimate]]:
    """Empirical E{T_ell^reg(point)^order} at every eval point."""
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    if not cfg.eval_points:
        raise ValueError("eval_points must be nonempty")
    threads = default_threads() if threads is None else threads
    sizes = _block_sizes(cfg.replicates, cfg.n_blocks)
    out: dict[int, list[McEstimate]] = {}
    for ell in cfg.ell_list:
        basis_matrix = synthesis_matrix(ell, list(cfg.eval_points))

        def block_stats(b: int, ell=ell, basis_matrix=basis_matrix):
            shrunk = _shrunk_block(cfg, ell, b, sizes[b])
            if cfg.scheme is Scheme.COMPLEX_MODULUS:
                shrunk = complex_block_to_real(shrunk)
            t = shrunk @ basis_matrix
            return (t ** order).sum(axis=0), t.shape[0]

        rows = _map_blocks(block_stats, len(sizes), threads)
        sums = np.array([r[0] for r in rows])
        counts = np.array([r[1] for r in rows])
        out[ell] = [jackknife(sums[:, [j]], counts)
                    for j in range(len(cfg.eval_points))]
    return out


def estimate_field_moment_difference(cfg: McConfig, order: int,
                                     point_a: int, point_b: int,
                                     threads: int | None = None) -> McEstimate:
    """Paired estimate of E{T^order(a)} - E{T^order(b)} with jackknife SE.

    The pairing (same replicates at both points) is what makes a sharp
    anisotropy test possible.
    """
    if len(cfg.ell_list) != 1:
        raise ValueError("difference estimate runs one multipole at a time")
    threads = default_threads() if threads is None else threads
    ell = cfg.ell_list[0]
    sizes = _block_sizes(cfg.replicates, cfg.n_blocks)
    basis_matrix = synthesis_matrix(ell, list(cfg.eval_points))

    def block_stats(b: int):
        shrunk = _shrunk_block(cfg, ell, b, sizes[b])
        if cfg.scheme is Scheme.COMPLEX_MODULUS:
            shrunk = complex_block_to_real(shrunk)
        t = shrunk @ basis_matrix
        diff = t[:, point_a] ** order - t[:, point_b] ** order
        return diff.sum(), len(diff)

    rows = _map_blocks(block_stats, len(sizes), threads)
    sums = np.array([[r[0]] for r in rows])
    counts = np.array([r[1] for r in rows])
    return jackknife(sums, counts)


@dataclass(frozen=True)
class ProbabilityEstimate:
    """Bernoulli estimate with a Wilson score interval."""

    p_hat: float
    wilson_low: float
    wilson_high: float
    successes: int
    n: int


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054
                    ) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def estimate_reconstruction_probability(cfg: McConfig, epsilon: float,
                                        spec: PowerSpectrum,
                                        threads: int | None = None
                                        ) -> ProbabilityEstimate:
    """Empirical Pr{||T - T^reg||_L2 <= epsilon} over full-field replicates.

    The norm is computed coefficient-wise (Parseval):
    ||T - T^reg||^2 = sum_(ell,m) |a - a^reg|^2 over the stored spectrum.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    threads = default_threads() if threads is None else threads
    sizes = _block_sizes(cfg.replicates, cfg.n_blocks)
    complex_scheme = cfg.scheme is Scheme.COMPLEX_MODULUS
    basis = "complex" if complex_scheme else "real"

    def block_stats(b: int):
        sq = None
        for ell in spec.ells:
            raw = sample_multipole_block(int(ell), spec.c_ell(int(ell)), basis,
                                         cfg.seed, sizes[b], b)
            if complex_scheme:
                resid = raw - shrink_complex(raw, cfg.lam)
                contrib = (np.abs(resid[:, 0]) ** 2
                           + 2.0 * (np.abs(resid[:, 1:]) ** 2).sum(axis=1))
            else:
                resid = raw - shrink_real(raw, cfg.lam)
                contrib = (resid ** 2).sum(axis=1)
            sq = contrib if sq is None else sq + contrib
        return int((np.sqrt(sq) <= epsilon).sum()), sizes[b]

    rows = _map_blocks(block_stats, len(sizes), threads)
    successes = sum(r[0] for r in rows)
    n = sum(r[1] for r in rows)
    low, high = wilson_interval(successes, n)
    return ProbabilityEstimate(successes / n, low, high, successes, n)


_GAUSSIAN_KURTOSIS = {"m0": 3.0, "mne0": 2.0}


def normality_diagnostic(cfg: McConfig, threads: int | None = None
                         ) -> dict[tuple[int, str], float]:
    """Excess-kurtosis z-scores of regularized coefficients per class.

    The null baseline is the Gaussian input: fourth/second-moment ratio 3
    for the real m = 0 class, 2 for complex moduli.  |z| stays small at
    nu = 0 and grows without bound with nu and the replicate count.
    """
    if cfg.replicates < 10_000:
        raise ValueError("normality diagnostic needs >= 10^4 replicates")
    threads = default_threads() if threads is None else threads
    sizes = _block_sizes(cfg.replicates, cfg.n_blocks)
    out: dict[tuple[int, str], float] = {}
    for ell in cfg.ell_list:
        def block_stats(b: int, ell=ell):
            shrunk = _shrunk_block(cfg, ell, b, sizes[b])
            if cfg.scheme is Scheme.COMPLEX_MODULUS:
                m0 = shrunk[:, 0].real
                rest = np.abs(shrunk[:, 1:]).ravel()
            else:
                w = shrunk.shape[1] // 2
                m0 = shrunk[:, w]
                rest = np.abs(np.delete(shrunk, w, axis=1)).ravel()
            return ((m0 ** 2).sum(), (m0 ** 4).sum(), m0.size,
                    (rest ** 2).sum(), (rest ** 4).sum(), rest.size)

        rows = _map_blocks(block_stats, len(sizes), threads)
        for cls, (i2, i4, icnt) in (("m0", (0, 1, 2)), ("mne0", (3, 4, 5))):
            if cls == "mne0" and ell == 0:
                continue
            sums = np.array([[r[i2], r[i4]] for r in rows])
            counts = np.array([r[icnt] for r in rows])
            ratio = lambda s, n: (s[1] / n) / (s[0] / n) ** 2
            est = jackknife(sums, counts, statistic=ratio)
            out[(ell, cls)] = (est.mean - _GAUSSIAN_KURTOSIS[cls]) / est.std_error
    return out


# ---------------------------------------------------------------------------
# Named verification suites (consumed by the CLI).
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    """One named invariant: observed vs expected at a tolerance."""

    name: str
    observed: float
    expected: float
    tol: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    budget: str
    seed: int
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _tamper_factors() -> dict[str, float]:
    """Parse the SPHEROREG_TAMPER test hook (``name=factor[,name=factor]``)."""
    raw = os.environ.get("SPHEROREG_TAMPER", "")
    factors: dict[str, float] = {}
    for part in raw.split(","):
        if "=" in part:
            name, value = part.split("=", 1)
            factors[name.strip()] = float(value)
    return factors


def _analytic_gamma(name: str, nu: float) -> float:
    value = getattr(moments, name)(nu)
    return value * _tamper_factors().get(name, 1.0)


def _within_check(name: str, est: McEstimate, expected: float,
                  n_se: float, detail: str = "") -> CheckResult:
    tol = n_se * est.std_error
    return CheckResult(name=name, observed=est.mean, expected=expected,
                       tol=tol, passed=abs(est.mean - expected) <= tol,
                       detail=detail or f"|observed - expected| <= {n_se} SE")


def _suite_coeff(budget: str, seed: int, threads: int) -> list[CheckResult]:
    draws = 10_000_000 if budget == "full" else 1_000_000
    checks: list[CheckResult] = []
    gammas = [("gamma0", "m0", 2), ("gamma1", "mne0", 2),
              ("gamma2", "m0", 4), ("gamma3", "mne0", 4)]
    for i, nu in enumerate((0.5, 1.0, 2.0)):
        cfg = McConfig(replicates=draws, seed=RngSeed(seed, stream=i),
                       ell_list=(1,), lam=nu, scheme=Scheme.COMPLEX_MODULUS)
        est = estimate_coefficient_moments_multi(cfg, (2, 4), threads)
        for gamma_name, cls, order in gammas:
            expected = _analytic_gamma(gamma_name, nu)
            checks.append(_within_check(
                f"coeff.nu={nu}.{gamma_name}", est[(1, cls, order)],
                expected, 3.0))
    return checks


def _suite_field(budget: str, seed: int, threads: int) -> list[CheckResult]:
    ell = 10
    pole, mid, equator = (0.0, 0.0), (0.7, 0.0), (math.pi / 2, 0.0)
    replicates = 100_000 if budget == "full" else 20_000
    checks: list[CheckResult] = []

    # order 2, nu = 0: isotropic variance at every point
    cfg = McConfig(replicates=replicates, seed=RngSeed(seed, stream=100),
                   ell_list=(ell,), lam=0.0, scheme=Scheme.COMPLEX_MODULUS,
                   eval_points=(pole, mid, equator))
    est = estimate_field_moment_map(cfg, 2, threads)[ell]
    expected = (2 * ell + 1) / (4 * math.pi)
    for j, e in enumerate(est):
        checks.append(_within_check(f"field.order2.nu=0.point{j}", e, expected, 4.0))

    # order 4, complex scheme at the pole vs the analytic trispectrum
    nu = 2.0
    cfg = McConfig(replicates=replicates, seed=RngSeed(seed, stream=101),
                   ell_list=(ell,), lam=nu, scheme=Scheme.COMPLEX_MODULUS,
                   eval_points=(pole, mid))
    est = estimate_field_moment_map(cfg, 4, threads)[ell]
    tamper = _tamper_factors()
    for j, point in enumerate((pole, mid)):
        expected = moments.trispectrum_map(ell, nu, "complex", *point)
        expected *= tamper.get("trispectrum", 1.0)
        checks.append(_within_check(f"field.order4.complex.point{j}", est[j],
                                    expected, 4.0))

    # real scheme: second moment constant, fourth moment anisotropic
    cfg = McConfig(replicates=max(replicates, 100_000),
                   seed=RngSeed(seed, stream=102), ell_list=(ell,), lam=nu,
                   scheme=Scheme.REAL_BASIS, eval_points=(pole, equator))
    est4 = estimate_field_moment_map(cfg, 4, threads)[ell]
    for j, point in enumerate((pole, equator)):
        expected = moments.trispectrum_map(ell, nu, "real", *point)
        expected *= tamper.get("trispectrum", 1.0)
        checks.append(_within_check(f"field.order4.real.point{j}", est4[j],
                                    expected, 4.0))
    diff = estimate_field_moment_difference(cfg, 4, 0, 1, threads)
    z = diff.mean / diff.std_error
    checks.append(CheckResult(
        name="field.real.anisotropy_z", observed=z, expected=4.0, tol=0.0,
        passed=z >= 4.0,
        detail="pole-equator fourth-moment gap in jackknife SEs; >= 4 detects"))
    return checks


def _suite_probability(budget: str, seed: int, threads: int) -> list[CheckResult]:
    replicates = 1000 if budget == "full" else 400
    spec = power_law(1.0, 3.0, 32)
    epsilon, delta = 10.0, 0.1
    bound = penalty_for_confidence(epsilon, delta, spec)
    cfg = McConfig(replicates=replicates, seed=RngSeed(seed, stream=200),
                   ell_list=tuple(spec.ells), lam=bound.lam,
                   scheme=Scheme.COMPLEX_MODULUS)
    est = estimate_reconstruction_probability(cfg, epsilon, spec, threads)
    checks = [CheckResult(
        name="probability.reconstruction.wilson_low", observed=est.wilson_low,
        expected=1.0 - delta, tol=0.0, passed=est.wilson_low >= 1.0 - delta,
        detail=f"lambda={bound.lam:.6g} from the confidence bound; lower "
               "Wilson bound must reach 1 - delta")]

    cfg0 = McConfig(replicates=replicates, seed=RngSeed(seed, stream=201),
                    ell_list=tuple(spec.ells), lam=0.0,
                    scheme=Scheme.COMPLEX_MODULUS)
    est0 = estimate_reconstruction_probability(cfg0, epsilon, spec, threads)
    checks.append(CheckResult(
        name="probability.lambda0.certain", observed=est0.p_hat, expected=1.0,
        tol=0.0, passed=est0.p_hat == 1.0,
        detail="lambda = 0 reconstructs exactly"))
    return checks


_SUITES = {
    "coeff": _suite_coeff,
    "field": _suite_field,
    "probability": _suite_probability,
}


def run_suite(suite: str, budget: str = "small", seed: int = 0,
              threads: int | None = None) -> SuiteReport:
    """Run one named suite (or "all"); deterministic given (suite, budget,
    seed) regardless of thread count."""
    if budget not in ("small", "full"):
        raise ValueError(f"budget must be 'small' or 'full', got {budget!r}")
    names = list(_SUITES) if suite == "all" else [suite]
    if any(n not in _SUITES for n in names):
        raise ValueError(f"unknown suite {suite!r}; "
                         f"expected one of {sorted(_SUITES)} or 'all'")
    threads = default_threads() if threads is None else threads
    checks: list[CheckResult] = []
    for name in names:
        checks.extend(_SUITES[name](budget, seed, threads))
    return SuiteReport(suite=suite, budget=budget, seed=seed,
                       checks=tuple(checks))
