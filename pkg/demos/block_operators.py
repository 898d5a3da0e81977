"""Weights, block operators and their gate-level realization."""
import itertools

import numpy as np

from modvar import DEFAULT_GRID as grid
from modvar.blocks import block_gram_rank
from modvar.compiler import TargetSpec, compile_gamma, verify
from modvar.conventions import derive_table
from modvar.gamma import build_gamma, build_su3_family, closure_residual, commutator_norm, gamma_via_gates
from modvar.weights import make_weight, validate_weight

for name, d in (("cos2", 2), ("exp3", 3), ("cos_theta", 3)):
    r = validate_weight(name, d, grid=grid)
    print(f"{name:9s} d={d} passed={r.passed} branch={r.root_branch} residual={r.roots_residual:.3g}")

w = make_weight("cos2", 2, grid)
G = [build_gamma(2, a, w) for a in (1, 2, 3)]
print("spectrum range of Gamma_1", G[0].spectrum().min(), G[0].spectrum().max())

# gate recipes against the direct construction
for row in derive_table(grid):
    print(f"d={row.d} alpha={row.alpha} axis={row.axis}: deviation {row.max_deviation:.1e}")

gates = [gamma_via_gates(2, a, grid) for a in (1, 2, 3)]
for a, b in itertools.combinations(range(3), 2):
    print(f"||[G{a + 1}, G{b + 1}]|| from gates = {commutator_norm(gates[a], gates[b]):.3g}")

fam = build_su3_family(grid)
print("SU(3) family: min Gram rank", block_gram_rank(fam).min(), "closure", f"{closure_residual(fam):.1e}")

t = TargetSpec(3, kind="sigma", sigma=(2, 1, 3))
p = compile_gamma(t, grid)
print(p.listing())
print(verify(p, t, grid))
