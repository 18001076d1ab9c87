"""Cost assembly, analytic gradients, and the least-squares residual view."""

import numpy as np
import pytest

import ionpulse as ip
from ionpulse import cost as co
from conftest import random_chain, random_drive


def small_problem(seed=0, segments=6, shared=True, symmetric=True):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng)
    drive = random_drive(rng, chain)
    ions = sorted(rng.choice(chain.ion_count, size=2, replace=False).tolist())
    layout = ip.ParamLayout(
        segments,
        float(rng.uniform(60e-6, 200e-6)),
        (int(ions[0]), int(ions[1])),
        2 * np.pi * 500e3,
        shared=shared,
        symmetric=symmetric,
    )
    params = rng.uniform(*layout.bounds())
    return chain, drive, layout, params


def test_smooth_abs_behaves_like_abs_away_from_zero():
    assert co.smooth_abs(0.0, 1e-12) == 1e-12
    assert co.smooth_abs(3.0, 1e-12) == pytest.approx(3.0, rel=1e-15)
    assert co.smooth_abs(-3.0, 1e-12) == co.smooth_abs(3.0, 1e-12)
    assert co.smooth_abs(1e-13, 1e-12) >= 1e-13


def test_spec_validation():
    with pytest.raises(ValueError, match="variant"):
        ip.CostSpec(variant="bogus")
    with pytest.raises(ValueError, match="unknown cost group"):
        ip.CostSpec(weights={"nope": 1.0})
    with pytest.raises(ValueError, match=">= 0"):
        ip.CostSpec(weights={"beta": -1.0})
    merged = ip.CostSpec(weights={"theta": 3.0})
    assert merged.weights == {
        "beta": 1.0, "beta_tilde": 1.0, "theta": 3.0, "theta_tilde": 1.0
    }


@pytest.mark.parametrize(
    "variant,enabled",
    [
        ("normal", ("beta", "theta")),
        ("beta_robust", ("beta", "beta_tilde", "theta")),
        ("fully_robust", ("beta", "beta_tilde", "theta", "theta_tilde")),
    ],
)
def test_variants_enable_their_groups(variant, enabled):
    chain, drive, layout, params = small_problem(1)
    result = ip.evaluate_cost(params, layout, chain, drive, ip.CostSpec(variant=variant))
    assert result.enabled == enabled
    assert set(result.groups) == {"beta", "beta_tilde", "theta", "theta_tilde"}
    assert result.total == pytest.approx(
        sum(result.groups[g] for g in enabled), rel=1e-15
    )


def test_zero_pulse_cost_is_the_angle_shortfall():
    chain, drive, layout, _ = small_problem(2)
    result = ip.evaluate_cost(np.zeros(layout.n_free), layout, chain, drive)
    assert result.groups["beta"] == 0.0
    assert result.groups["beta_tilde"] == 0.0
    assert result.total == pytest.approx(np.pi / 4, abs=1e-11)


def test_group_weights_scale_the_total_not_the_groups():
    """Groups report physical magnitudes; weights apply in the sum."""
    chain, drive, layout, params = small_problem(3)
    base = ip.evaluate_cost(params, layout, chain, drive)
    spec = ip.CostSpec(weights={"beta": 2.0, "theta": 3.0})
    scaled = ip.evaluate_cost(params, layout, chain, drive, spec)
    assert scaled.groups == base.groups
    expected = (
        2.0 * base.groups["beta"]
        + base.groups["beta_tilde"]
        + 3.0 * base.groups["theta"]
        + base.groups["theta_tilde"]
    )
    assert scaled.total == pytest.approx(expected, rel=1e-14)


def test_robust_variants_only_add_penalty():
    chain, drive, layout, params = small_problem(4)
    normal = ip.evaluate_cost(params, layout, chain, drive, ip.CostSpec(variant="normal"))
    fully = ip.evaluate_cost(params, layout, chain, drive, ip.CostSpec(variant="fully_robust"))
    assert fully.total >= normal.total
    assert all(v >= 0 for v in fully.groups.values())


def test_smoothing_epsilon_floors_the_angle_terms():
    chain, drive, layout, _ = small_problem(5)
    spec = ip.CostSpec(epsilon=0.1)
    result = ip.evaluate_cost(np.zeros(layout.n_free), layout, chain, drive, spec)
    expected = np.sqrt((np.pi / 4) ** 2 + 0.01) + 0.1
    assert result.total == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
    "seed,segments,shared,symmetric",
    [
        (10, 6, True, True),
        (11, 7, True, True),
        (12, 5, False, True),
        (13, 6, True, False),
        (14, 4, False, False),
    ],
)
def test_analytic_gradient_matches_finite_differences(seed, segments, shared, symmetric):
    chain, drive, layout, params = small_problem(seed, segments, shared, symmetric)
    # Keep clear of the box bounds so central differences stay feasible.
    lo, hi = layout.bounds()
    params = np.clip(params, lo + 1e-4, hi - 1e-4)
    function = co.CostFunction(layout, chain, drive)
    value, grad = function.value_and_grad(params)
    assert value == pytest.approx(function.value(params).total, rel=1e-15)
    reference = co.finite_difference_gradient(
        lambda p: function.value(p).total, params
    )
    scale = np.abs(reference).max()
    assert np.abs(grad - reference).max() < 1e-5 * max(scale, 1e-6)


def test_module_level_helpers_agree_with_the_function_object():
    chain, drive, layout, params = small_problem(20)
    function = co.CostFunction(layout, chain, drive)
    assert ip.evaluate_cost(params, layout, chain, drive).total == pytest.approx(
        function.value(params).total, rel=1e-15
    )
    assert np.allclose(
        ip.cost_gradient(params, layout, chain, drive),
        function.value_and_grad(params)[1],
        rtol=1e-14,
    )


# ---------------------------------------------------------------------------
# Residual system (the Gauss-Newton view of the same cost)
# ---------------------------------------------------------------------------

def test_residual_squares_reproduce_the_quadratic_groups():
    chain, drive, layout, params = small_problem(30)
    function = co.CostFunction(layout, chain, drive)
    residuals, _ = function.residuals_and_jacobian(params)
    value = function.value(params)
    n_modes = chain.ion_count
    # 4 real rows per mode for the displacements, then the same again for
    # the drift slopes, then the angle row and the angle-slope row.
    assert residuals.shape == (8 * n_modes + 2,)
    beta_rows = residuals[: 4 * n_modes]
    tilde_rows = residuals[4 * n_modes : 8 * n_modes]
    assert np.sum(beta_rows**2) == pytest.approx(value.groups["beta"], rel=1e-12)
    assert np.sum(tilde_rows**2) == pytest.approx(
        value.groups["beta_tilde"], rel=1e-12
    )
    # The angle rows square to the unsmoothed versions of the angle groups.
    report = ip.evaluate_couplings(
        ip.build_schedule(params, layout), chain, drive
    )
    assert residuals[-2] ** 2 == pytest.approx(
        (report.theta_total - np.pi / 4) ** 2, rel=1e-12
    )


def test_residuals_vanish_exactly_when_every_group_vanishes():
    """Zero residuals and the smoothed cost floor describe the same pulses."""
    chain, drive, layout, params = small_problem(31)
    function = co.CostFunction(layout, chain, drive)
    residuals, _ = function.residuals_and_jacobian(params)
    value = function.value(params)
    floor = 2 * function.spec.epsilon
    # Not converged here, so the residual norm must be visibly positive.
    assert np.linalg.norm(residuals) > 0
    assert value.total > floor


@pytest.mark.parametrize("seed", [40, 41, 42])
def test_residual_jacobian_matches_finite_differences(seed):
    chain, drive, layout, params = small_problem(seed)
    lo, hi = layout.bounds()
    params = np.clip(params, lo + 1e-4, hi - 1e-4)
    function = co.CostFunction(layout, chain, drive)
    residuals, jacobian = function.residuals_and_jacobian(params)
    assert jacobian.shape == (residuals.size, layout.n_free)
    step = 1e-7
    for i in range(layout.n_free):
        bumped = params.copy()
        bumped[i] += step
        r_plus = function.residuals_and_jacobian(bumped)[0]
        bumped[i] -= 2 * step
        r_minus = function.residuals_and_jacobian(bumped)[0]
        fd = (r_plus - r_minus) / (2 * step)
        scale = max(np.abs(fd).max(), 1e-6)
        assert np.abs(jacobian[:, i] - fd).max() < 1e-5 * scale
