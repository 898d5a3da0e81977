"""Bloch-ball coordinates ``(<Gamma_1>, <Gamma_2>, <Gamma_3>)`` for d = 2.

Degenerate and interior points are built from two blocks sitting at
``zeta = 1`` points: populations ``(1 + r)/2`` and ``(1 - r)/2`` with
opposite spinors give radius ``r`` along any direction.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .blocks import BlockOperator, fundamental_coords
from .gamma import build_gamma
from .generators import block_generator
from .grid import DEFAULT_GRID, GridMismatchError, ModularGrid, ModularState
from .weights import make_weight

DEFAULT_WEIGHT = "cos2"


class InfeasibleTargetError(ValueError):
    pass


@dataclass(frozen=True)
class BlochPoint:
    x: float
    y: float
    z: float

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def default_gammas(grid: ModularGrid = DEFAULT_GRID, weight: str = DEFAULT_WEIGHT) -> tuple[BlockOperator, ...]:
    w = make_weight(weight, 2, grid)
    return tuple(build_gamma(2, a, w) for a in (1, 2, 3))


def bloch_coords(s: ModularState, gammas: Sequence[BlockOperator] | None = None) -> BlochPoint:
    gammas = default_gammas(s.grid) if gammas is None else gammas
    if any(g.grid != s.grid for g in gammas):
        raise GridMismatchError("state and operators live on different grids")
    return BlochPoint(*(float(g.expectation(s).real) for g in gammas))


def bloch_batch(vectors: np.ndarray, gammas: Sequence[BlockOperator]) -> np.ndarray:
    """Rows ``(x, y, z, radius)`` for a stack of unit coefficient vectors."""
    xyz = np.stack([g.expectation_batch(vectors).real for g in gammas], axis=-1)
    return np.concatenate([xyz, np.linalg.norm(xyz, axis=-1, keepdims=True)], axis=-1)


def spinor_for(direction: Sequence[float]) -> np.ndarray:
    """Block spinor whose block-Pauli expectations equal the unit vector ``direction``."""
    u = np.asarray(direction, dtype=float)
    H = sum(u[a] * block_generator(2, a + 1) for a in range(3))
    _, vecs = np.linalg.eigh(H)
    return vecs[:, -1]


def unit_weight_points(grid: ModularGrid, weight: str = DEFAULT_WEIGHT) -> list[tuple[int, int]]:
    """Fundamental ``(j, l)`` points where the weight equals 1."""
    w = make_weight(weight, 2, grid)
    hits = np.argwhere(np.abs(w.fundamental - 1) < 1e-12)
    return [(int(j), int(l)) for j, l in hits]


def _two_block_state(grid: ModularGrid, p1: tuple[int, int], p2: tuple[int, int], r: float,
                     u: np.ndarray) -> ModularState:
    amps = np.zeros(grid.shape, dtype=complex)
    half = grid.m_theta // 2
    for (j, l), pop, spin in ((p1, (1 + r) / 2, spinor_for(u)), (p2, (1 - r) / 2, spinor_for(-u))):
        amps[j, l] += np.sqrt(pop) * spin[0]
        amps[j + half, l] += np.sqrt(pop) * spin[1]
    return ModularState(grid, amps / np.sqrt(grid.measure))


def _split(target: np.ndarray) -> tuple[float, np.ndarray]:
    r = float(np.linalg.norm(target))
    return r, (target / r if r > 0 else np.array([0.0, 0.0, 1.0]))


def state_at(target: Sequence[float], grid: ModularGrid = DEFAULT_GRID, pair: int = 0) -> ModularState:
    """Pure state with Bloch vector ``target`` (radius <= 1) built on the ``pair``-th couple of unit points."""
    r, u = _split(np.asarray(target, dtype=float))
    if r > 1 + 1e-12:
        raise InfeasibleTargetError(f"radius {r:.6g} exceeds 1")
    pts = unit_weight_points(grid)
    if len(pts) < 2 * (pair + 1):
        raise InfeasibleTargetError(f"grid has only {len(pts)} unit-weight points")
    return _two_block_state(grid, pts[2 * pair], pts[2 * pair + 1], min(r, 1.0), u)


def find_degenerate_pair(target: BlochPoint | Sequence[float],
                         grid: ModularGrid = DEFAULT_GRID) -> tuple[ModularState, ModularState]:
    """Two states with disjoint support and the same Bloch vector ``target`` (radius < 1)."""
    vec = target.as_array() if isinstance(target, BlochPoint) else np.asarray(target, dtype=float)
    if np.linalg.norm(vec) >= 1:
        raise InfeasibleTargetError("degenerate pairs need radius < 1")
    return state_at(vec, grid, 0), state_at(vec, grid, 1)


@dataclass(frozen=True)
class FillSample:
    requested: float
    achieved: float
    direction: tuple[float, float, float]


def random_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_ball_fill(radii: Sequence[float], samples_per_radius: int = 1, seed: int = 0,
                     grid: ModularGrid = DEFAULT_GRID) -> list[FillSample]:
    """Construct one state per (radius, sample) and report the radius it achieves."""
    if any(not 0 <= r <= 1 for r in radii):
        raise ValueError("radii must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    gammas = default_gammas(grid)
    out = []
    for r in radii:
        for u in random_directions(samples_per_radius, rng):
            p = bloch_coords(state_at(r * u, grid), gammas)
            out.append(FillSample(float(r), p.radius, tuple(float(x) for x in u)))
    return out


def random_bloch_samples(n: int, seed: int = 0, grid: ModularGrid = DEFAULT_GRID,
                         batch: int = 2000) -> np.ndarray:
    """``(x, y, z, radius)`` rows for ``n`` i.i.d. complex Gaussian random states."""
    rng = np.random.default_rng(seed)
    gammas = default_gammas(grid)
    rows = []
    for start in range(0, n, batch):
        k = min(batch, n - start)
        V = rng.normal(size=(k, grid.total_dim)) + 1j * rng.normal(size=(k, grid.total_dim))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        rows.append(bloch_batch(V, gammas))
    return np.concatenate(rows) if rows else np.zeros((0, 4))


def bloch_csv(rows: np.ndarray, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "z", "radius"])
    for r in rows:
        w.writerow([f"{v:.15g}" for v in r])
    return buf.getvalue()


def weight_at_points(grid: ModularGrid, weight: str = DEFAULT_WEIGHT) -> np.ndarray:
    """``(theta_bar, k_bar, zeta)`` over fundamental points, for plotting level sets."""
    w = make_weight(weight, 2, grid)
    tb, kb = fundamental_coords(grid, 2, "theta")
    return np.stack([tb, kb, w.fundamental.real], axis=-1)
