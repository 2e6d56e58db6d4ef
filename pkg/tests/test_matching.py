import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.special

import qmem
from qmem.errors import AsymmetricConfig, DomainError, OutOfTable
from qmem.matching import matching_coefficient


# ---------------------------------------------------------------------------
# Bernoulli numbers
# ---------------------------------------------------------------------------

def test_bernoulli_table_anchors():
    assert qmem.bernoulli(0) == 1
    assert qmem.bernoulli(2) == Fraction(1, 6)
    assert qmem.bernoulli(4) == Fraction(-1, 30)
    assert qmem.bernoulli(1) == Fraction(-1, 2)
    assert qmem.bernoulli(3) == 0


def test_bernoulli_recurrence_property():
    # sum_{k=0}^{m} C(m+1, k) B_k = 0 for every m >= 1
    for m in range(1, 65):
        acc = sum(Fraction(math.comb(m + 1, k)) * qmem.bernoulli(k)
                  for k in range(m + 1))
        assert acc == 0


def test_bernoulli_out_of_table():
    with pytest.raises(OutOfTable):
        qmem.bernoulli(66)
    with pytest.raises(OutOfTable):
        qmem.bernoulli(-2)


def test_matching_coefficient_values():
    # (2^4-1)|B_4|/4! = 15*(1/30)/24 = 1/48 and (2^6-1)|B_6|/6! = 1/480
    assert matching_coefficient(1) == pytest.approx(1.0 / 48.0, rel=1e-15)
    assert matching_coefficient(2) == pytest.approx(1.0 / 480.0, rel=1e-15)


# ---------------------------------------------------------------------------
# polygamma
# ---------------------------------------------------------------------------

def test_polygamma_half_integer_closed_forms():
    assert qmem.polygamma(1, 0.5) == pytest.approx(math.pi ** 2 / 2, rel=1e-12)
    assert qmem.polygamma(3, 0.5) == pytest.approx(math.pi ** 4, rel=1e-12)
    assert qmem.polygamma(1, 1.5) == pytest.approx(math.pi ** 2 / 2 - 4.0,
                                                   rel=1e-12)


def test_polygamma_recurrence_property():
    # psi^(m)(x) = psi^(m)(x+1) + (-1)^m m!/x^{m+1} ... checked with random x
    rng = np.random.default_rng(5)
    for _ in range(200):
        m = int(rng.integers(1, 6))
        x = float(rng.uniform(0.05, 30.0))
        lhs = qmem.polygamma(m, x)
        rhs = qmem.polygamma(m, x + 1.0) + (-1) ** (m + 1) * math.factorial(m) / x ** (m + 1)
        assert lhs == pytest.approx(rhs, rel=1e-11)


def test_polygamma_matches_scipy():
    rng = np.random.default_rng(6)
    for _ in range(500):
        m = int(rng.integers(1, 6))
        x = float(rng.uniform(0.01, 60.0))
        assert qmem.polygamma(m, x) == pytest.approx(
            float(scipy.special.polygamma(m, x)), rel=1e-12)


def test_polygamma_domain_error():
    with pytest.raises(DomainError):
        qmem.polygamma(1, 0.0)
    with pytest.raises(DomainError):
        qmem.polygamma(1, -2.5)


# ---------------------------------------------------------------------------
# residual system
# ---------------------------------------------------------------------------

def test_residual_first_order_vanishes_at_critical():
    for n in range(1, 17):
        cfg = qmem.equidistant_comb(n, qmem.g_critical(n), kappa=100.0)
        r = qmem.residuals(cfg, M=1)
        assert r.residuals[0] <= 1e-10


def test_residual_t0_linear_in_linewidths():
    cfg = qmem.symmetric_config([0.5, 1.7], [0.3, 0.8], kappa=100.0)
    doubled = qmem.symmetric_config([0.5, 1.7], [0.6, 1.6], kappa=100.0)
    assert qmem.residuals(doubled).t0 == pytest.approx(2 * qmem.residuals(cfg).t0,
                                                       rel=1e-14)


def test_residuals_default_order_capped_by_bernoulli_table():
    # nine pairs would ask for order 35; the table ends at order 31
    cfg = qmem.equidistant_comb(9, 0.3, kappa=100.0)
    r = qmem.residuals(cfg)
    assert len(r.residuals) == 31
    assert np.all(np.isfinite(r.residuals))


def test_residuals_reject_asymmetric():
    cfg = qmem.MemoryConfig(kappa=100.0,
                            absorbers=(qmem.Absorber(0.5, 0.1),
                                       qmem.Absorber(-0.8, 0.1)),
                            symmetric=False)
    with pytest.raises(AsymmetricConfig):
        qmem.residuals(cfg)


def test_paper_tuned_set_beats_equidistant_start():
    initial = qmem.symmetric_config([0.5, 1.5], [0.318, 0.318], kappa=100.0)
    tuned = qmem.symmetric_config([0.5, 1.92], [0.318, 1.09], kappa=100.0)
    r_i = qmem.residuals(initial, M=2).residuals
    r_t = qmem.residuals(tuned, M=2).residuals
    assert np.all(r_t < 0.2 * r_i)


def test_residual_scaling_covariance():
    # detunings, linewidths, kappa -> lambda * each: t0 -> t0/lambda and
    # residual_m -> residual_m / lambda^{2m+1}
    lam = 3.7
    base = qmem.symmetric_config([0.5, 1.9], [0.32, 1.1], kappa=100.0)
    scaled = qmem.symmetric_config([0.5 * lam, 1.9 * lam], [0.32 * lam, 1.1 * lam],
                                   kappa=100.0 * lam)
    rb = qmem.residuals(base, M=3)
    rs = qmem.residuals(scaled, M=3)
    assert rs.t0 * lam == pytest.approx(rb.t0, rel=1e-12)
    for m in (1, 2, 3):
        assert (rs.residuals[m - 1] * lam ** (2 * m + 1)
                == pytest.approx(rb.residuals[m - 1], rel=1e-9))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def brute_force_critical(n):
    """Coupling zeroing the first condition, from direct partial sums."""
    k = np.arange(1, n + 1)
    a2 = np.sum(1.0 / (k - 0.5) ** 2)
    a4 = np.sum(1.0 / (k - 0.5) ** 4)
    return math.sqrt(a4 / (matching_coefficient(1) * 64.0 * a2 ** 3))


def test_g_critical_matches_brute_force():
    for n in (1, 2, 3, 5, 8, 16, 64):
        assert qmem.g_critical(n) == pytest.approx(brute_force_critical(n),
                                                   rel=1e-13)


def test_g_critical_n2_regression():
    # frozen: half-integer polygamma closed form at two pairs
    assert qmem.g_critical(2) == pytest.approx(0.3719879030291174, rel=1e-13)
    assert qmem.t0_critical(2) == pytest.approx(6.613118276073196, rel=1e-13)


def test_g_critical_scales_with_unit():
    assert qmem.g_critical(3, delta=2.5) == pytest.approx(
        2.5 * qmem.g_critical(3), rel=1e-13)
    assert qmem.t0_critical(3, delta=2.5) == pytest.approx(
        qmem.t0_critical(3) / 2.5, rel=1e-13)


def test_g_critical_continuum_limit():
    assert qmem.g_critical(10 ** 4) == pytest.approx(qmem.g_continuum(),
                                                     rel=1e-3)


def test_g_critical_monotone_decreasing():
    vals = [qmem.g_critical(n) for n in range(2, 65)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > qmem.g_continuum()


def test_t0_critical_consistent_with_comb_sum():
    for n in (1, 2, 5, 12):
        k = np.arange(1, n + 1)
        direct = 4.0 * qmem.g_critical(n) * np.sum(1.0 / (k - 0.5) ** 2)
        assert qmem.t0_critical(n) == pytest.approx(direct, abs=1e-10)


def test_t0_critical_large_n_trend():
    # T0 -> 2 pi^2 g_cr (1 - 2/(pi^2 N)) and the gap to 2 pi shrinks
    for n in (10, 20):
        approx = 2 * math.pi ** 2 * qmem.g_critical(n) * (1 - 2 / (math.pi ** 2 * n))
        assert qmem.t0_critical(n) == pytest.approx(approx, rel=2e-3)
    gap10 = abs(qmem.t0_critical(10) - 2 * math.pi) / (2 * math.pi)
    assert gap10 == pytest.approx(1.0 / (math.pi ** 2 * 10), rel=0.05)
    gap3 = abs(qmem.t0_critical(3) - 2 * math.pi) / (2 * math.pi)
    assert gap3 > gap10  # few-pair combs sit further from the continuum


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def test_optimize_fixed_point():
    tuned = qmem.symmetric_config([0.5, 1.9215], [0.3183, 1.0986], kappa=100.0)
    report = qmem.optimize(tuned, max_evals=6000)
    assert report.converged
    g_new = [a.g for a in report.final_config.positive_side()]
    d_new = [a.detuning for a in report.final_config.positive_side()]
    assert g_new == pytest.approx([0.3183, 1.0986], abs=2e-3)
    assert d_new == pytest.approx([0.5, 1.9215], abs=2e-3)


def test_optimize_objective_history_non_increasing():
    initial = qmem.symmetric_config([0.5, 1.5], [0.318, 0.318], kappa=100.0)
    report = qmem.optimize(initial, max_evals=8000)
    hist = report.objective_history
    assert np.all(np.diff(hist) <= 1e-300)


def test_optimize_report_improves_residuals():
    initial = qmem.symmetric_config([0.5, 1.5], [0.318, 0.318], kappa=100.0)
    report = qmem.optimize(initial)
    r0 = qmem.residuals(initial).residuals
    r1 = qmem.residuals(report.final_config).residuals
    assert report.converged or np.all(r1 <= r0)
    assert np.all(r1 <= r0)  # measured: every order improves on this run


def test_optimize_band_error_objective_polishes():
    # starting from the tuned set, the band-error objective keeps the band
    # error at the loss floor level
    tuned = qmem.symmetric_config([0.5, 1.9215], [0.3183, 1.0986], gamma=1e-4,
                                  kappa=10000.0)
    report = qmem.optimize(tuned, objective="band_error", band=(-0.6, 0.6),
                           max_evals=4000)
    assert report.band_error <= 2e-3


def test_optimize_rejects_unknown_objective():
    cfg = qmem.symmetric_config([0.5], [0.3], kappa=100.0)
    with pytest.raises(ValueError):
        qmem.optimize(cfg, objective="annealing")


def test_optimize_single_pair_uses_exact_condition():
    # with one pair the only solvable condition is the first; the optimizer
    # must land on the critical coupling rather than collapse the comb
    cfg = qmem.symmetric_config([0.5], [0.3], kappa=100.0)
    report = qmem.optimize(cfg, max_evals=4000)
    g_final = report.final_config.positive_side()[0].g
    assert g_final == pytest.approx(qmem.g_critical(1), rel=1e-4)
