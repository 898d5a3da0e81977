"""Gate-derived weights and basis phases for the d = 2 operators.

The gate recipes realize ``zeta * sigma_alpha`` only up to a per-block basis
phase ``P = diag(1, e^{i chi})``.  The table stores, for each recipe, the
weight and ``chi`` derived from the modular-basis form of the gates;
``direct_operator`` rebuilds the recipe's operator from the table alone, and
``derive_table`` recomputes both from dense gate matrices as an oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .blocks import BlockOperator, fundamental_coords
from .gamma import build_gamma, gamma_via_gates, rephase
from .generators import block_generator
from .grid import ModularGrid
from .weights import make_weight

CONVENTION_VERSION = "2"

Profile = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConventionEntry:
    d: int
    alpha: int
    axis: str
    weight: Profile
    chi: Profile
    label: str


def _psi(tb, kb):
    return tb + np.pi * kb


CONVENTION_TABLE: dict[tuple[int, int, str], ConventionEntry] = {
    (2, 1, "theta"): ConventionEntry(2, 1, "theta", lambda tb, kb: 2 * np.cos(tb) + 0 * kb,
                                     lambda tb, kb: 0 * tb + 0 * kb, "2 cos(theta)"),
    (2, 2, "theta"): ConventionEntry(2, 2, "theta", lambda tb, kb: 2 * np.sin(_psi(tb, kb)),
                                     lambda tb, kb: np.pi / 2 - np.pi * kb / 2 + 0 * tb,
                                     "2 sin(theta + pi k), chi = pi/2 - pi k/2"),
    (2, 3, "theta"): ConventionEntry(2, 3, "theta", lambda tb, kb: 2 * np.cos(_psi(tb, kb)),
                                     lambda tb, kb: -np.pi * kb / 2 + 0 * tb,
                                     "2 cos(theta + pi k), chi = -pi k/2"),
    (2, 1, "k"): ConventionEntry(2, 1, "k", lambda tb, kb: 2 * np.cos(2 * np.pi * kb) + 0 * tb,
                                 lambda tb, kb: 0 * tb + 0 * kb, "2 cos(2 pi k)"),
}


def entry(d: int, alpha: int, axis: str = "theta") -> ConventionEntry:
    try:
        return CONVENTION_TABLE[(d, alpha, axis)]
    except KeyError:
        raise KeyError(f"no convention entry for d={d}, alpha={alpha}, axis={axis}") from None


def basis_phases(e: ConventionEntry, grid: ModularGrid) -> np.ndarray:
    tb, kb = fundamental_coords(grid, e.d, e.axis)
    chi = np.zeros(tb.shape + (e.d,))
    chi[..., 1] = e.chi(tb, kb)
    return chi


def direct_operator(d: int, alpha: int, grid: ModularGrid, axis: str = "theta") -> BlockOperator:
    """``build_gamma`` with the table weight, rephased by the table basis phases."""
    e = entry(d, alpha, axis)
    w = make_weight(e.weight, d, grid, axis)
    return rephase(build_gamma(d, alpha, w), basis_phases(e, grid))


@dataclass(frozen=True)
class DerivedEntry:
    d: int
    alpha: int
    axis: str
    weight_residual: float
    support_match: bool
    max_deviation: float


def extract_weight(op: BlockOperator, alpha: int, chi: np.ndarray) -> np.ndarray:
    """Per-block weight of ``op`` relative to ``sigma_alpha`` after undoing the basis phases."""
    blocks = rephase(op, -chi).blocks
    g = block_generator(op.d, alpha)
    r, c = np.argwhere(np.abs(g) > 0)[-1]
    return blocks[..., r, c] / g[r, c]


def derive_table(grid: ModularGrid) -> list[DerivedEntry]:
    """Compare every table entry against the dense gate construction."""
    out = []
    for (d, alpha, axis), e in CONVENTION_TABLE.items():
        gates = gamma_via_gates(d, alpha, grid, axis)
        chi = basis_phases(e, grid)
        w = extract_weight(gates, alpha, chi)
        tb, kb = fundamental_coords(grid, d, axis)
        direct = direct_operator(d, alpha, grid, axis)
        support = np.array_equal(np.abs(gates.blocks) > 1e-9, np.abs(direct.blocks) > 1e-9)
        out.append(DerivedEntry(d, alpha, axis, float(np.max(np.abs(w - e.weight(tb, kb)))),
                                bool(support), float(np.max(np.abs(gates.blocks - direct.blocks)))))
    return out
