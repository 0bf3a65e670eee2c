import pytest
from mpmath import mp

from habibullin_verify.algebraic_constants import knot_x0
from habibullin_verify.exact_core import interval_contains
from habibullin_verify.quadrature_engine import (
    IntegrandDescriptor,
    Singularity,
    gauss_kronrod_rule,
    integrate,
    integrate_adaptive,
    integrate_log_endpoint,
    validate_error_model,
)


def test_rule_is_consistent():
    nodes, kronrod, gauss = gauss_kronrod_rule()
    assert len(nodes) == 15
    assert abs(sum(kronrod) - 2) < mp.mpf(10) ** (5 - mp.dps)
    assert abs(sum(gauss) - 2) < mp.mpf(10) ** (5 - mp.dps)
    assert sum(1 for w in gauss if w != 0) == 7
    assert nodes == sorted(nodes)


def test_linear():
    result = integrate_adaptive(lambda x: x, 0, 1, tol=1e-14)
    assert abs(result.value - mp.mpf("0.5")) <= 1e-14
    assert result.converged
    assert interval_contains(result.enclosure(), mp.mpf("0.5"))


def test_arctan_integral():
    result = integrate_adaptive(lambda t: 6 * t / (1 + t**4), 0, 1, tol=1e-13)
    assert abs(result.value - 3 * mp.pi / 4) <= result.error_bound
    assert result.error_bound <= 1e-13


def test_log_singularity():
    result = integrate_log_endpoint(lambda x: -mp.log(x), 0, 1, tol=1e-13)
    assert abs(result.value - 1) <= result.error_bound
    k2 = IntegrandDescriptor(lambda x: x * (x - 1 - mp.log(x)), Singularity.LOG_AT_LEFT)
    result = integrate(k2, 0, 1, tol=1e-13)
    assert abs(result.value - mp.mpf(1) / 12) <= result.error_bound


def test_negative_perturbation_piece():
    x0 = knot_x0().to_mp()

    def piece(t):
        z = (x0 - t) / x0
        return t * (7 * z**4 - 8 * z**3 + 2 * z**2) / (1 + t**4)

    result = integrate_adaptive(piece, 0, x0, tol=1e-14)
    oracle = mp.quad(piece, [0, x0])
    assert result.value < 0
    assert abs(result.value - oracle) <= result.error_bound + mp.mpf(10) ** (-30)


def test_validation_suite_passes():
    report = validate_error_model()
    assert len(report.cases) >= 10
    assert report.passed, report.failures


def test_budget_exhaustion_is_flagged():
    result = integrate_adaptive(lambda x: mp.sqrt(x), 0, 1, tol=1e-30, max_evaluations=100)
    assert result.budget_exhausted
    assert not result.converged
    assert result.evaluations <= 100


def test_max_depth_is_flagged():
    result = integrate_adaptive(lambda x: 1 if x > mp.mpf(1) / 3 else 0, 0, 1, tol=1e-30, max_depth=8)
    assert result.max_depth_hit
    assert not result.converged


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        integrate_adaptive(lambda x: x, 1, 1)


def test_results_are_reproducible():
    f = lambda t: mp.exp(-t) * mp.sin(5 * t)
    first = integrate_adaptive(f, 0, 3, tol=1e-14)
    second = integrate_adaptive(f, 0, 3, tol=1e-14)
    assert first.value == second.value
    assert first.error_bound == second.error_bound
    assert first.panels == second.panels


@pytest.mark.parametrize(
    "f, a, b, exact",
    [
        (lambda t: 6 * t / (1 + t**4), 0, 2, lambda: 3 * mp.atan(4)),
        (lambda t: mp.exp(-t) * mp.cos(3 * t), 0, 5, lambda: (1 - mp.exp(-5) * (mp.cos(15) - 3 * mp.sin(15))) / 10),
        (lambda t: mp.sqrt(t + 1), 0, 3, lambda: mp.mpf(14) / 3),
    ],
)
def test_error_bound_tracks_tolerance(f, a, b, exact):
    evaluations = 0
    for tol in (1e-6, 1e-9, 1e-12):
        result = integrate_adaptive(f, a, b, tol=tol)
        assert result.converged
        assert result.error_bound <= tol
        assert abs(result.value - exact()) <= result.error_bound
        assert result.evaluations >= evaluations
        evaluations = result.evaluations
