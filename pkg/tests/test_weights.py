import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modvar.gamma import decompose_delta
from modvar.grid import ModularGrid
from modvar.weights import (
    NAMED_WEIGHTS,
    WeightValidationError,
    make_weight,
    tabulate,
    validate_weight,
)


def test_cos2_passes_for_two(grid):
    r = validate_weight("cos2", 2, grid=grid)
    assert r.passed and r.root_branch == 1
    assert r.roots_residual < 1e-12


def test_exp3_passes_for_three(grid):
    r = validate_weight("exp3", 3, grid=grid)
    assert r.passed and r.root_branch == 1


def test_cos_theta_fails_for_three(grid):
    r = validate_weight("cos_theta", 3, grid=grid)
    assert not r.passed
    assert r.root_branch is None
    assert r.roots_residual > 0.1


def test_constant_weight_is_branch_zero(grid):
    r = validate_weight(lambda tb, kb: 1 + 0 * tb, 4, grid=grid)
    assert r.passed and r.root_branch == 0


def test_k_axis(grid):
    assert validate_weight("cos_k", 2, "k", grid).passed
    assert validate_weight("cos_k", 2, "kbar", grid).passed
    with pytest.raises(ValueError):
        validate_weight("cos_k", 2, "lambda", grid)
    assert not validate_weight("cos2", 2, "k", grid).passed


def test_tabulated_matches_analytic(grid):
    a = validate_weight("cos2", 2, grid=grid)
    t = validate_weight(tabulate(NAMED_WEIGHTS["cos2"], grid), 2)
    assert t.passed
    assert t.root_branch == a.root_branch


def test_discontinuous_weight_fails_continuity(grid):
    # satisfies the root condition but jumps at the domain edge
    r = validate_weight(lambda tb, kb: np.mod(tb, np.pi) + 0 * kb, 2, grid=grid)
    assert r.roots_residual < 1e-12
    assert r.continuity_residual > 1.0
    assert not r.passed


def test_tabulated_step_fails(grid):
    F = np.ones(grid.shape)
    F[:24] = 0.0
    F[:24] += np.linspace(0, 0.01, 24)[:, None]
    F[24:] = F[:24]
    r = validate_weight(F, 2)
    assert r.roots_residual == 0
    assert not r.passed


def test_non_divisible_grid():
    with pytest.raises(ValueError, match="divide"):
        validate_weight("cos2", 5, grid=ModularGrid(48, 8))


def test_make_weight_raises_with_report(grid):
    with pytest.raises(WeightValidationError) as exc:
        make_weight("cos_theta", 3, grid)
    assert exc.value.report.roots_residual > 0.1


def test_unknown_name(grid):
    with pytest.raises(KeyError):
        validate_weight("nope", 2, grid=grid)


def test_report_is_json_ready(grid):
    import json

    json.dumps(validate_weight("exp3", 3, grid=grid).to_dict())


def _smooth(grid, d, b, a1, a2, c):
    tb, kb = grid.mesh()
    h = c + a1 * np.cos(d * tb) + a2 * np.sin(d * tb + 2 * np.pi * kb)
    return np.exp(1j * b * tb) * h


@settings(max_examples=40, deadline=None)
@given(d=st.sampled_from([2, 3, 4, 6]), b=st.integers(0, 5),
       coeffs=st.tuples(*(st.floats(-2, 2, allow_nan=False) for _ in range(3))),
       noise=st.booleans(), seed=st.integers(0, 1000))
def test_validation_agrees_with_exact_decomposition(d, b, coeffs, noise, seed):
    grid = ModularGrid(24, 4)
    F = _smooth(grid, d, b, *coeffs)
    if noise:
        rng = np.random.default_rng(seed)
        j = rng.integers(grid.m_theta)
        F[j, rng.integers(grid.n_k)] += 1e-6 * (1 + max(1.0, np.abs(F).max()))
    report = validate_weight(F, d)
    dec = decompose_delta(F, grid, d)
    assert report.passed == dec.exact
    assert report.passed == (not noise)
