import numpy as np
import pytest

from modvar.bloch import (
    BlochPoint,
    InfeasibleTargetError,
    bloch_batch,
    bloch_coords,
    bloch_csv,
    default_gammas,
    find_degenerate_pair,
    random_bloch_samples,
    sample_ball_fill,
    spinor_for,
    state_at,
    unit_weight_points,
    weight_at_points,
)
from modvar.gamma import build_gamma_phi
from modvar.generators import block_generator
from modvar.grid import GridMismatchError, ModularGrid, ModularState, block_qubit, random_state
from modvar.weights import make_weight


def test_unit_point_spinors(grid):
    (j, l), *_ = unit_weight_points(grid)
    tb, kb = grid.theta_bar[j], grid.k_bar[l]
    up = bloch_coords(block_qubit(grid, tb, kb, 2, [1, 0]))
    assert up.as_array() == pytest.approx([1, 0, 0], abs=1e-12)
    plus = bloch_coords(block_qubit(grid, tb, kb, 2, [1, 1]))
    assert plus.as_array() == pytest.approx([0, 1, 0], abs=1e-12)
    circ = bloch_coords(block_qubit(grid, tb, kb, 2, [1, 1j]))
    assert circ.as_array() == pytest.approx([0, 0, 1], abs=1e-12)


def test_unit_points_lie_on_the_weight_maximum(grid):
    pts = unit_weight_points(grid)
    assert len(pts) >= 4
    w = make_weight("cos2", 2, grid).fundamental
    assert all(abs(w[j, l] - 1) < 1e-12 for j, l in pts)


def test_spinor_for_direction():
    u = np.array([0.3, -0.4, np.sqrt(1 - 0.25)])
    v = spinor_for(u)
    got = [np.vdot(v, block_generator(2, a) @ v).real for a in (1, 2, 3)]
    assert got == pytest.approx(u, abs=1e-12)


def test_random_states_stay_in_the_ball():
    rows = random_bloch_samples(2000, seed=3)
    assert rows.shape == (2000, 4)
    assert np.max(rows[:, 3]) <= 1 + 1e-9


def test_batch_matches_single(grid, rng):
    gam = default_gammas(grid)
    states = [random_state(grid, rng) for _ in range(4)]
    rows = bloch_batch(np.stack([s.vector for s in states]), gam)
    for s, r in zip(states, rows):
        assert bloch_coords(s, gam).as_array() == pytest.approx(r[:3], abs=1e-14)


def test_coordinates_are_expectations_of_direction_operators(grid, rng):
    s = random_state(grid, rng)
    p = bloch_coords(s).as_array()
    u = np.array([2.0, -1.0, 2.0]) / 3
    G = build_gamma_phi(u, make_weight("cos2", 2, grid))
    assert G.expectation(s).real == pytest.approx(u @ p, abs=1e-12)


def test_coordinates_are_linear_in_the_density(grid, rng):
    a, b = random_state(grid, rng), random_state(grid, rng)
    gam = default_gammas(grid)
    # mixtures: <G>_rho is the weighted sum for orthogonal supports
    va = np.zeros(grid.total_dim, complex)
    vb = np.zeros(grid.total_dim, complex)
    va[:192], vb[192:] = a.vector[:192], b.vector[192:]
    va /= np.linalg.norm(va)
    vb /= np.linalg.norm(vb)
    mix = ModularState.from_vector(grid, np.sqrt(0.3) * va + np.sqrt(0.7) * vb)
    pa, pb = (bloch_coords(ModularState.from_vector(grid, v), gam).as_array() for v in (va, vb))
    cross = np.array([np.vdot(va, g.apply(vb)) for g in gam])
    expected = 0.3 * pa + 0.7 * pb + 2 * np.sqrt(0.21) * cross.real
    assert bloch_coords(mix, gam).as_array() == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("target", [[0, 0, 0], [0.6, 0, 0], [0.1, -0.2, 0.3], [0, 0, 1], [0.6, 0.8, 0]])
def test_state_at_hits_target(grid, target):
    p = bloch_coords(state_at(target, grid))
    assert p.as_array() == pytest.approx(target, abs=1e-12)


def test_infeasible_radius(grid):
    with pytest.raises(InfeasibleTargetError):
        state_at([1.2, 0, 0], grid)
    with pytest.raises(ValueError):
        sample_ball_fill([1.2])


def test_degenerate_pair(grid):
    target = BlochPoint(0.2, -0.1, 0.4)
    a, b = find_degenerate_pair(target, grid)
    assert bloch_coords(a).as_array() == pytest.approx(target.as_array(), abs=1e-12)
    assert bloch_coords(b).as_array() == pytest.approx(target.as_array(), abs=1e-12)
    assert abs(np.vdot(a.vector, b.vector)) < 1e-12
    with pytest.raises(InfeasibleTargetError):
        find_degenerate_pair([1.0, 0, 0], grid)


def test_ball_fill():
    radii = [r / 10 for r in range(11)]
    for s in sample_ball_fill(radii, samples_per_radius=2, seed=5):
        assert s.achieved == pytest.approx(s.requested, abs=1e-6)


def test_grid_mismatch(grid, rng):
    with pytest.raises(GridMismatchError):
        bloch_coords(random_state(ModularGrid(12, 4), rng), default_gammas(grid))


def test_csv_has_seed_header():
    text = bloch_csv(random_bloch_samples(3, seed=11), 11)
    lines = text.splitlines()
    assert lines[0] == "# seed=11"
    assert lines[1] == "x,y,z,radius"
    assert len(lines) == 5


def test_samples_are_seeded():
    assert np.array_equal(random_bloch_samples(50, seed=1), random_bloch_samples(50, seed=1))
    assert not np.array_equal(random_bloch_samples(50, seed=1), random_bloch_samples(50, seed=2))


def test_weight_at_points(grid):
    pts = weight_at_points(grid)
    assert pts.shape == (24, 8, 3)
    assert np.allclose(pts[..., 2], np.cos(pts[..., 0] - np.pi * pts[..., 1]))
