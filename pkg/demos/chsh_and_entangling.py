"""CHSH with block-Bell states and an entangling bipartite generator."""
import numpy as np

from modvar import DEFAULT_GRID as grid
from modvar.bell import (
    build_bipartite_gamma,
    chsh_optimize,
    chsh_scan,
    entangling_evolution,
    entanglement_entropy,
    operator_schmidt_rank,
    tensor_product_state,
)
from modvar.grid import block_qubit

for row in chsh_scan(grid, [0.0, 0.2, 0.4, 0.8, 1.2]):
    print(f"epsilon={row.epsilon:.1f}  S={row.result.value:.4f}")

rng = np.random.default_rng(0)
a = block_qubit(grid, np.pi / 6, 0.0, 2, rng.normal(size=2))
b = block_qubit(grid, 0.0, 0.0, 2, rng.normal(size=2) + 1j * rng.normal(size=2))
print("product state S =", round(chsh_optimize(tensor_product_state(a, b)).value, 6))


def nonsep(t1, k1, t2, k2):
    return np.cos(t1 - t2 - np.pi * (k1 - k2))


def sep(t1, k1, t2, k2):
    return np.cos(t1 - np.pi * k1) * np.cos(t2 - np.pi * k2)


Gn = build_bipartite_gamma(2, 2, 2, 2, nonsep, grid)
Gs = build_bipartite_gamma(2, 2, 2, 2, sep, grid)
print("operator Schmidt ranks:", operator_schmidt_rank(Gn), operator_schmidt_rank(Gs))

start = tensor_product_state(block_qubit(grid, np.pi / 6, 0, 2, [1, 0]), block_qubit(grid, np.pi / 2, 0, 2, [1, 0]))
for tau in (0.0, np.pi / 4, np.pi / 2):
    print(f"tau={tau:.3f} entropy={entanglement_entropy(entangling_evolution(Gn, tau, start)):.4f}")
