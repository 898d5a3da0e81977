"""Generalized Gell-Mann matrices and the per-block generator convention."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class SUdGenerator:
    d: int
    index: int
    matrix: np.ndarray


@lru_cache(maxsize=None)
def _gellmann_table(d: int) -> tuple[tuple[str, int, int], ...]:
    # ordering reproduces lambda_1..lambda_8 for d = 3 and (sx, sy, sz) for d = 2
    table = []
    for k in range(1, d):
        for j in range(k):
            table.append(("sym", j, k))
            table.append(("asym", j, k))
        table.append(("diag", k, k))
    return tuple(table)


def gellmann_label(d: int, alpha: int) -> tuple[str, int, int]:
    """``(kind, j, k)`` for generator ``alpha``; ``kind`` is ``sym``, ``asym`` or ``diag``."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 1 <= alpha <= d * d - 1:
        raise ValueError(f"alpha must lie in [1, {d * d - 1}] for d={d}, got {alpha}")
    return _gellmann_table(d)[alpha - 1]


def gellmann(d: int, alpha: int) -> SUdGenerator:
    """Generalized Gell-Mann matrix, normalised to ``Tr(g_a g_b) = 2 delta_ab``."""
    kind, j, k = gellmann_label(d, alpha)
    m = np.zeros((d, d), dtype=complex)
    if kind == "sym":
        m[j, k] = m[k, j] = 1
    elif kind == "asym":
        m[j, k] = -1j
        m[k, j] = 1j
    else:
        m[np.arange(k), np.arange(k)] = 1
        m[k, k] = -k
        m *= np.sqrt(2.0 / (k * (k + 1)))
    m.setflags(write=False)
    return SUdGenerator(d, alpha, m)


def diagonal_indices(d: int) -> list[int]:
    return [a for a in range(1, d * d) if gellmann_label(d, a)[0] == "diag"]


_SIGMA = {
    1: np.array([[1, 0], [0, -1]], dtype=complex),
    2: np.array([[0, 1], [1, 0]], dtype=complex),
    3: np.array([[0, -1j], [1j, 0]], dtype=complex),
}

# Gell-Mann index for each block Pauli (sigma_3 of the block triple equals lambda_2)
PAULI_TO_GELLMANN = {1: 3, 2: 1, 3: 2}


def block_generator(d: int, alpha: int) -> np.ndarray:
    """Generator used inside each ``d``-dimensional block.

    For ``d = 2`` this is the block Pauli triple: ``sigma_1`` diagonal,
    ``sigma_2`` real off-diagonal, ``sigma_3`` imaginary off-diagonal, ordered
    so that ``[sigma_a, sigma_b] = 2i eps_abc sigma_c``.  For ``d >= 3`` it is
    the generalized Gell-Mann matrix.
    """
    if d == 2:
        if alpha not in _SIGMA:
            raise ValueError(f"alpha must lie in [1, 3] for d=2, got {alpha}")
        return _SIGMA[alpha].copy()
    return np.array(gellmann(d, alpha).matrix)


def levi_civita(a: int, b: int, c: int) -> int:
    return int(np.sign((b - a) * (c - a) * (c - b)))
