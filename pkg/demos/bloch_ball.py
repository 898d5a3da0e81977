"""Bloch-ball coordinates of modular states."""
import numpy as np

from modvar import DEFAULT_GRID as grid
from modvar.bloch import bloch_coords, find_degenerate_pair, random_bloch_samples, sample_ball_fill

rows = random_bloch_samples(10_000, seed=0)
print("random states: largest radius", rows[:, 3].max(), "mean", rows[:, 3].mean())

for s in sample_ball_fill([0.0, 0.25, 0.5, 0.75, 1.0], seed=1):
    print(f"requested r={s.requested:.2f} achieved {s.achieved:.12f}")

a, b = find_degenerate_pair([0.3, -0.2, 0.1], grid)
print("same point:", bloch_coords(a), bloch_coords(b))
print("overlap", abs(np.vdot(a.vector, b.vector)))
