import numpy as np
import pytest

from modvar.bell import (
    TSIRELSON,
    BipartiteOperator,
    BipartiteState,
    BipartiteWeightError,
    NonHermitianError,
    block_bell_state,
    build_bipartite_gamma,
    chsh_from_matrix,
    chsh_optimize,
    chsh_optimize_matrix,
    chsh_scan,
    chsh_value,
    correlation_matrix,
    correlator,
    direction,
    entangling_evolution,
    entanglement_entropy,
    horodecki_bound,
    operator_schmidt_rank,
    operator_schmidt_values,
    realign,
    scan_csv,
    schmidt_decompose,
    tensor_product_state,
)
from modvar.bloch import default_gammas
from modvar.gates import UGate, XGate, gate_to_matrix
from modvar.grid import ModularGrid, block_qubit, random_state

SMALL = ModularGrid(4, 2)


def _cos_diff(t1, k1, t2, k2):
    return np.cos(t1 - t2 - np.pi * (k1 - k2))


def _cos_prod(t1, k1, t2, k2):
    return np.cos(t1 - np.pi * k1) * np.cos(t2 - np.pi * k2)


def _random_bipartite(grid, rng):
    X = rng.normal(size=(grid.total_dim,) * 2) + 1j * rng.normal(size=(grid.total_dim,) * 2)
    return BipartiteState.from_unnormalized_coeffs(grid, grid, X)


def test_product_state_has_rank_one(grid, rng):
    s = tensor_product_state(random_state(grid, rng), random_state(grid, rng))
    dec = schmidt_decompose(s)
    assert dec.rank() == 1
    assert entanglement_entropy(s) == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(dec.reconstruct(), s.coeffs)


def test_block_bell_state_has_two_equal_coefficients(grid):
    s = block_bell_state(grid)
    dec = schmidt_decompose(s)
    assert dec.rank() == 2
    assert dec.coefficients[:2] == pytest.approx([1 / np.sqrt(2)] * 2)
    assert entanglement_entropy(s) == pytest.approx(np.log(2))


def test_schmidt_values_survive_local_unitaries(grid, rng):
    s = _random_bipartite(grid, rng)
    A = gate_to_matrix(UGate(0.37), grid)
    B = gate_to_matrix(XGate(0.9), grid)
    t = BipartiteState.from_coeffs(grid, grid, A @ s.coeffs @ B.T)
    assert np.allclose(schmidt_decompose(s).coefficients, schmidt_decompose(t).coefficients, atol=1e-12)


def test_correlator_factorises_on_products(grid, rng):
    a, b = random_state(grid, rng), random_state(grid, rng)
    ga, gb = default_gammas(grid)[0], default_gammas(grid)[2]
    s = tensor_product_state(a, b)
    assert correlator(ga, gb, s) == pytest.approx(ga.expectation(a).real * gb.expectation(b).real, abs=1e-12)


def test_zero_operator_correlator(grid, rng):
    s = _random_bipartite(grid, rng)
    assert correlator(np.zeros((grid.total_dim,) * 2), default_gammas(grid)[0], s) == 0


def test_correlation_matrix_of_block_bell(grid):
    M = correlation_matrix(block_bell_state(grid))
    assert np.allclose(np.abs(M), np.eye(3), atol=1e-12)


def test_fixed_angle_chsh_on_block_bell(grid):
    s = block_bell_state(grid)
    M = correlation_matrix(s)
    u1, u1p = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    u2 = np.array([M[0, 0], M[1, 1], 0]) / np.sqrt(2)
    u2p = np.array([M[0, 0], -M[1, 1], 0]) / np.sqrt(2)
    assert chsh_value(u1, u1p, u2, u2p, s) == pytest.approx(TSIRELSON, abs=1e-9)
    assert chsh_from_matrix(M, u1, u1p, u2, u2p) == pytest.approx(TSIRELSON, abs=1e-9)


def test_optimiser_agrees_with_closed_form(rng):
    for _ in range(10):
        M = rng.uniform(-1, 1, size=(3, 3)) / 2
        res = chsh_optimize_matrix(M)
        assert res.value == pytest.approx(horodecki_bound(M), abs=1e-6)
        u1, u1p, u2, u2p = res.directions
        assert chsh_from_matrix(M, u1, u1p, u2, u2p) == pytest.approx(res.value, abs=1e-12)


def test_product_states_obey_the_local_bound(grid, rng):
    for _ in range(5):
        a = block_qubit(grid, np.pi / 6, 0.25, 2, rng.normal(size=2) + 1j * rng.normal(size=2))
        b = block_qubit(grid, 0.0, 0.0, 2, rng.normal(size=2) + 1j * rng.normal(size=2))
        assert chsh_optimize(tensor_product_state(a, b)).value <= 2 + 1e-6


def test_sampled_states_obey_tsirelson(grid, rng):
    for _ in range(3):
        M = correlation_matrix(_random_bipartite(grid, rng))
        assert horodecki_bound(M) <= TSIRELSON + 1e-9


def test_scan_trend(grid):
    rows = chsh_scan(grid, [0.0, 0.2, 0.4, 0.8, 1.2])
    S = [r.result.value for r in rows]
    assert S[0] == pytest.approx(TSIRELSON, abs=1e-6)
    assert all(a >= b - 1e-9 for a, b in zip(S, S[1:]))
    assert max(S) > 2
    text = scan_csv(rows)
    assert text.splitlines()[0].endswith(",S")
    assert len(text.splitlines()) == 6


def test_block_bell_epsilon_limit(grid):
    with pytest.raises(ValueError):
        block_bell_state(grid, epsilon=np.pi / 2)


def test_direction_helper():
    assert direction(0, 0) == pytest.approx([0, 0, 1])
    assert direction(np.pi / 2, np.pi / 2) == pytest.approx([0, 1, 0], abs=1e-15)


# entangling operators ---------------------------------------------------------

def test_separable_weight_gives_rank_one(grid):
    G = build_bipartite_gamma(2, 2, 1, 3, _cos_prod, grid)
    assert operator_schmidt_rank(G) == 1


def test_nonseparable_weight_gives_rank_two(grid):
    G = build_bipartite_gamma(2, 2, 2, 2, _cos_diff, grid)
    assert operator_schmidt_rank(G) == 2
    assert G.is_hermitian()


def test_zero_weight_gives_rank_zero(grid):
    G = build_bipartite_gamma(2, 2, 1, 1, lambda t1, k1, t2, k2: 0 * t1, grid)
    assert operator_schmidt_rank(G) == 0


def test_block_rank_matches_dense_realignment():
    for zeta, rank in ((_cos_diff, 2), (_cos_prod, 1)):
        G = build_bipartite_gamma(2, 2, 2, 3, zeta, SMALL)
        dense = BipartiteOperator.dense(G.to_dense(), SMALL, SMALL)
        assert operator_schmidt_rank(dense) == rank == operator_schmidt_rank(G)
        sv_block = operator_schmidt_values(G)
        sv_dense = operator_schmidt_values(dense)[: len(sv_block)]
        assert np.allclose(sv_block, sv_dense, atol=1e-12)


def test_separable_operator_matches_kron():
    ga = default_gammas(SMALL)[0].to_dense()
    gb = default_gammas(SMALL)[1].to_dense()
    G = BipartiteOperator.separable(ga, gb, SMALL, SMALL)
    assert np.allclose(G.to_dense(), np.kron(ga, gb))
    assert operator_schmidt_rank(G) == 1
    assert operator_schmidt_rank(BipartiteOperator.dense(np.kron(ga, gb), SMALL, SMALL)) == 1


def test_apply_matches_dense(rng):
    G = build_bipartite_gamma(2, 2, 1, 2, _cos_diff, SMALL)
    X = rng.normal(size=(SMALL.total_dim,) * 2) + 0j
    assert np.allclose(G.apply(X).ravel(), G.to_dense() @ X.ravel())


def test_realign_of_kron():
    A, B = np.arange(4.0).reshape(2, 2), np.arange(9.0).reshape(3, 3)
    R = realign(np.kron(A, B), 2, 3)
    assert np.allclose(R, np.outer(A.ravel(), B.ravel()))


def test_weight_validation_per_party(grid):
    with pytest.raises(BipartiteWeightError):
        build_bipartite_gamma(2, 2, 1, 1, lambda t1, k1, t2, k2: np.cos(t1) * np.cos(t2 / 2), grid)


def test_entangling_evolution(grid):
    # zeta = cos(-pi/3) = 1/2 between the two block points: a maximally entangling quarter turn
    a = block_qubit(grid, np.pi / 6, 0.0, 2, [1, 0])
    b = block_qubit(grid, np.pi / 2, 0.0, 2, [1, 0])
    s = tensor_product_state(a, b)
    G = build_bipartite_gamma(2, 2, 2, 2, _cos_diff, grid)
    assert np.allclose(entangling_evolution(G, 0.0, s).coeffs, s.coeffs)
    out = entangling_evolution(G, np.pi / 2, s)
    assert np.linalg.norm(out.coeffs) == pytest.approx(1.0, abs=1e-12)
    assert entanglement_entropy(out) == pytest.approx(np.log(2), abs=1e-12)
    back = entangling_evolution(G, -np.pi / 2, out)
    assert np.allclose(back.coeffs, s.coeffs, atol=1e-12)


def test_evolution_matches_expm():
    from scipy.linalg import expm

    a = block_qubit(SMALL, np.pi / 2, 0.5, 2, [0.6, 0.8j])
    s = tensor_product_state(a, a)
    G = build_bipartite_gamma(2, 2, 1, 2, _cos_diff, SMALL)
    ref = expm(-0.7j * G.to_dense()) @ s.coeffs.ravel()
    assert np.allclose(entangling_evolution(G, 0.7, s).coeffs.ravel(), ref, atol=1e-12)


def test_unit_weight_points_give_a_product_at_a_quarter_turn(grid):
    # zeta = 1 on the pair: exp(-i (pi/2) s x s)|00> is -i|11>, still a product
    a = block_qubit(grid, np.pi / 6, 0.0, 2, [1, 0])
    G = build_bipartite_gamma(2, 2, 2, 2, _cos_diff, grid)
    out = entangling_evolution(G, np.pi / 2, tensor_product_state(a, a))
    assert entanglement_entropy(out) < 1e-10


def test_non_hermitian_generator_rejected():
    M = np.zeros((SMALL.total_dim**2,) * 2, complex)
    M[0, 1] = 1
    a = block_qubit(SMALL, 0.0, 0.0, 2, [1, 0])
    with pytest.raises(NonHermitianError):
        entangling_evolution(BipartiteOperator.dense(M, SMALL, SMALL), 1.0, tensor_product_state(a, a))
