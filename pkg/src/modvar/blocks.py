"""Block-diagonal operators over the modular grid.

A block collects the ``d`` grid points ``(theta_bar + 2 pi q / d, k_bar)`` for
``q = 0..d-1`` (axis ``theta``) or ``(theta_bar, k_bar + q / d)`` (axis ``k``).
Blocks are stored as an array of shape ``(F1, F2, d, d)`` over the
fundamental points, and act on modular coefficient vectors whose flat index
is ``j * n_k + l``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

import numpy as np

from .grid import GridMismatchError, ModularGrid, ModularState
from .weights import axis_name, axis_number


class BlockStructureError(ValueError):
    pass


class DivisibilityError(ValueError):
    pass


def check_divisible(grid: ModularGrid, d: int, axis: str) -> None:
    n = grid.m_theta if axis_number(axis) == 0 else grid.n_k
    if d < 1 or n % d:
        raise DivisibilityError(f"d={d} does not divide the {axis_name(axis)} sample count {n}")


@lru_cache(maxsize=64)
def block_indices(grid: ModularGrid, d: int, axis: str = "theta") -> np.ndarray:
    """Flat modular indices of the block members, shape ``(F1, F2, d)``."""
    check_divisible(grid, d, axis)
    m, n = grid.shape
    if axis_number(axis) == 0:
        p = m // d
        j = np.arange(p)[:, None, None] + (m // d) * np.arange(d)[None, None, :]
        l = np.arange(n)[None, :, None]
    else:
        p = n // d
        j = np.arange(m)[:, None, None]
        l = np.arange(p)[None, :, None] + (n // d) * np.arange(d)[None, None, :]
    idx = (j * n + l).astype(np.intp)
    idx.setflags(write=False)
    return idx


def fundamental_coords(grid: ModularGrid, d: int, axis: str = "theta") -> tuple[np.ndarray, np.ndarray]:
    """``(theta_bar, k_bar)`` meshes of the fundamental points."""
    idx = block_indices(grid, d, axis)[..., 0]
    return grid.theta_bar[idx // grid.n_k], grid.k_bar[idx % grid.n_k]


@dataclass(frozen=True, eq=False)
class BlockOperator:
    grid: ModularGrid
    d: int
    axis: str
    blocks: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "axis", axis_name(self.axis))
        idx = block_indices(self.grid, self.d, self.axis)
        b = np.asarray(self.blocks, dtype=complex)
        if b.shape != idx.shape + (self.d,):
            raise BlockStructureError(f"blocks must have shape {idx.shape + (self.d,)}, got {b.shape}")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def indices(self) -> np.ndarray:
        return block_indices(self.grid, self.d, self.axis)

    @classmethod
    def zeros(cls, grid: ModularGrid, d: int, axis: str = "theta") -> "BlockOperator":
        idx = block_indices(grid, d, axis)
        return cls(grid, d, axis, np.zeros(idx.shape + (d,), dtype=complex))

    @classmethod
    def identity(cls, grid: ModularGrid, d: int = 1, axis: str = "theta") -> "BlockOperator":
        idx = block_indices(grid, d, axis)
        return cls(grid, d, axis, np.broadcast_to(np.eye(d), idx.shape + (d,)))

    @classmethod
    def diagonal(cls, grid: ModularGrid, values: np.ndarray, d: int = 1, axis: str = "theta") -> "BlockOperator":
        """Diagonal operator with entry ``values[j, l]`` at grid point ``(j, l)``."""
        idx = block_indices(grid, d, axis)
        vals = np.asarray(values, dtype=complex).reshape(-1)[idx]
        blocks = np.zeros(idx.shape + (d,), dtype=complex)
        q = np.arange(d)
        blocks[..., q, q] = vals
        return cls(grid, d, axis, blocks)

    @classmethod
    def from_dense(cls, M: np.ndarray, grid: ModularGrid, d: int, axis: str = "theta",
                   tol: float = 1e-10) -> "BlockOperator":
        """Extract blocks from a dense modular matrix; raise if weight leaks outside them."""
        idx = block_indices(grid, d, axis)
        blocks = M[idx[..., :, None], idx[..., None, :]]
        leak = off_block_residual(M, grid, d, axis)
        if leak > tol:
            raise BlockStructureError(f"matrix is not block-diagonal for d={d}: off-block residual {leak:.3g}")
        return cls(grid, d, axis, blocks)

    def _check(self, other: "BlockOperator") -> None:
        if other.grid != self.grid:
            raise GridMismatchError("operators live on different grids")
        if (other.d, other.axis) != (self.d, self.axis):
            raise BlockStructureError("operators have different block structure")

    def to_dense(self) -> np.ndarray:
        N = self.grid.total_dim
        M = np.zeros((N, N), dtype=complex)
        idx = self.indices
        M[idx[..., :, None], idx[..., None, :]] = self.blocks
        return M

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Act on coefficient vectors along the last axis."""
        vec = np.asarray(vec, dtype=complex)
        idx = self.indices
        out = np.zeros_like(vec)
        out[..., idx] = np.einsum("abij,...abj->...abi", self.blocks, vec[..., idx])
        return out

    def adjoint(self) -> "BlockOperator":
        return BlockOperator(self.grid, self.d, self.axis, np.conj(np.swapaxes(self.blocks, -1, -2)))

    def __matmul__(self, other: "BlockOperator") -> "BlockOperator":
        self._check(other)
        return BlockOperator(self.grid, self.d, self.axis, self.blocks @ other.blocks)

    def __add__(self, other: "BlockOperator") -> "BlockOperator":
        self._check(other)
        return BlockOperator(self.grid, self.d, self.axis, self.blocks + other.blocks)

    def __sub__(self, other: "BlockOperator") -> "BlockOperator":
        self._check(other)
        return BlockOperator(self.grid, self.d, self.axis, self.blocks - other.blocks)

    def __mul__(self, c: complex) -> "BlockOperator":
        return BlockOperator(self.grid, self.d, self.axis, self.blocks * c)

    __rmul__ = __mul__

    def __neg__(self) -> "BlockOperator":
        return self * -1

    def commutator(self, other: "BlockOperator") -> "BlockOperator":
        return self @ other - other @ self

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.blocks - np.conj(np.swapaxes(self.blocks, -1, -2))), initial=0.0))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_residual() <= tol

    def trace(self) -> complex:
        return complex(np.trace(self.blocks, axis1=-2, axis2=-1).sum())

    def block_traces(self) -> np.ndarray:
        return np.trace(self.blocks, axis1=-2, axis2=-1)

    def norm(self) -> float:
        """Frobenius norm of the full operator."""
        return float(np.sqrt(np.sum(np.abs(self.blocks) ** 2)))

    def spectrum(self) -> np.ndarray:
        """Per-block eigenvalues, shape ``(F1, F2, d)``; real and ascending for hermitian blocks."""
        if self.is_hermitian(1e-10):
            return np.linalg.eigvalsh(self.blocks)
        return np.linalg.eigvals(self.blocks)

    def expectation(self, s: ModularState) -> complex:
        if s.grid != self.grid:
            raise GridMismatchError("state and operator live on different grids")
        v = s.vector
        return complex(np.vdot(v, self.apply(v)))

    def expectation_batch(self, V: np.ndarray) -> np.ndarray:
        """``<v|A|v>`` for each row of ``V`` (unit-norm coefficient vectors)."""
        idx = self.indices
        W = V[..., idx]
        return np.einsum("...abi,abij,...abj->...", np.conj(W), self.blocks, W)

    def to_dict(self) -> dict[str, Any]:
        b = self.blocks.reshape(-1, self.d, self.d)
        return {
            "d": self.d, "axis": self.axis, "grid": self.grid.to_dict(),
            "blocks": [[[[float(z.real), float(z.imag)] for z in row] for row in blk] for blk in b],
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "BlockOperator":
        grid = ModularGrid(int(obj["grid"]["m_theta"]), int(obj["grid"]["n_k"]))
        d = int(obj["d"])
        raw = np.asarray(obj["blocks"], dtype=float)
        blocks = (raw[..., 0] + 1j * raw[..., 1])
        idx = block_indices(grid, d, obj["axis"])
        return cls(grid, d, obj["axis"], blocks.reshape(idx.shape + (d,)))

    @classmethod
    def from_json(cls, text: str) -> "BlockOperator":
        return cls.from_dict(json.loads(text))

    def spectrum_csv(self) -> str:
        tb, kb = fundamental_coords(self.grid, self.d, self.axis)
        ev = self.spectrum()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta_bar", "k_bar"] + [f"eig{q}" for q in range(self.d)])
        for a in range(ev.shape[0]):
            for b in range(ev.shape[1]):
                vals = ev[a, b]
                cells = [f"{v.real:.15g}" for v in vals] if np.isrealobj(vals) else [f"{v:.15g}" for v in vals]
                w.writerow([f"{tb[a, b]:.15g}", f"{kb[a, b]:.15g}"] + cells)
        return buf.getvalue()


def off_block_residual(M: np.ndarray, grid: ModularGrid, d: int, axis: str = "theta") -> float:
    """Largest matrix element outside the ``d``-block pattern."""
    idx = block_indices(grid, d, axis)
    mask = np.ones(M.shape, dtype=bool)
    mask[idx[..., :, None], idx[..., None, :]] = False
    return float(np.max(np.abs(M[mask]), initial=0.0))


def block_gram_rank(ops: list[BlockOperator], tol: float = 1e-9) -> np.ndarray:
    """Rank of the trace-form Gram matrix of the operators' blocks at each fundamental point."""
    B = np.stack([op.blocks for op in ops], axis=2)  # (F1, F2, K, d, d)
    flat = B.reshape(B.shape[:3] + (-1,))
    G = np.einsum("abki,abli->abkl", np.conj(flat), flat)
    ev = np.linalg.eigvalsh(G)
    scale = np.max(ev, axis=-1, keepdims=True)
    return np.sum(ev > tol * np.maximum(scale, 1e-300), axis=-1)
