"""Zak transform and the gate set on the default 48x8 grid."""
import numpy as np

from modvar import DEFAULT_GRID as grid
from modvar.gates import UGate, XGate, ZGate, apply_gate, conjugated_shift, apply_sequence
from modvar.grid import gaussian_position, zak_forward, zak_inverse

print(grid, "dim", grid.total_dim)

# a narrow packet inside one period
g = gaussian_position(grid, center=np.pi, width=0.25)
z = zak_forward(g)
print("roundtrip error", np.max(np.abs(zak_inverse(z).vector - g.vector)))

# the modular density only depends on theta_bar for a single packet
dens = np.abs(z.amplitudes) ** 2 * grid.measure
print("k_bar spread of the density", dens.std(axis=1).max())

# X(2 pi) is a pure k_bar phase, Z(1) a pure theta_bar phase
x = apply_gate(XGate(2 * np.pi), z)
ratio = x.amplitudes[dens > 1e-3] / z.amplitudes[dens > 1e-3]
print("X(2pi) phases lie on the unit circle:", np.allclose(np.abs(ratio), 1))

# U[pi] Z(1) U[pi]^dagger moves the packet by pi in theta_bar
moved = apply_sequence(conjugated_shift(np.pi), z)
w_before = dens.sum(axis=1)
w_after = (np.abs(moved.amplitudes) ** 2 * grid.measure).sum(axis=1)
print("theta_bar peak", grid.theta_bar[w_before.argmax()], "->", grid.theta_bar[w_after.argmax()])

free = apply_gate(UGate(0.4), z)
print("norm after free evolution", np.linalg.norm(free.vector))
