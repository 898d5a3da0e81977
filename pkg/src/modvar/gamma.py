"""Continuous-spectrum operators built from weights and block generators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .blocks import (
    BlockOperator,
    BlockStructureError,
    block_gram_rank,
    block_indices,
    check_divisible,
    fundamental_coords,
)
from .generators import block_generator, diagonal_indices, gellmann
from .grid import GridMismatchError, ModularGrid, ModularState
from .weights import WeightInput, WeightSpec, axis_name, make_weight, resolve_weight, roots_residuals

REAL_TOL = 1e-12


class ComplexWeightError(ValueError):
    pass


class RankDeficiencyError(ValueError):
    def __init__(self, point: tuple[float, float], rank: int):
        super().__init__(f"block family has rank {rank} < 8 at (theta_bar, k_bar) = {point}")
        self.point = point
        self.rank = rank


def build_gamma(d: int, alpha: int, w: WeightSpec, axis: str | None = None) -> BlockOperator:
    """Block operator with block ``zeta[f] * gamma_alpha`` at every fundamental point ``f``."""
    if not isinstance(w, WeightSpec):
        raise TypeError("build_gamma needs a validated WeightSpec (see make_weight)")
    axis = w.axis if axis is None else axis_name(axis)
    if (w.d, w.axis) != (d, axis):
        raise ValueError(f"weight was validated for d={w.d}, axis={w.axis}, not d={d}, axis={axis}")
    zeta = w.fundamental
    if np.max(np.abs(zeta.imag), initial=0.0) > REAL_TOL:
        raise ComplexWeightError("generator weights must be real; use build_delta for complex diagonals")
    g = block_generator(d, alpha)
    return BlockOperator(w.grid, d, axis, zeta.real[..., None, None] * g)


def build_lambda(d: int, alpha: int, w: WeightSpec) -> BlockOperator:
    """``k_bar``-axis analog of ``build_gamma``."""
    return build_gamma(d, alpha, w, axis="k")


def build_gamma_phi(direction: Sequence[float], w: WeightSpec, d: int = 2) -> BlockOperator:
    """``sum_a u_a Gamma_a`` for a unit 3-vector ``u`` and common weight ``w``."""
    if d != 2:
        raise ValueError("direction operators are defined for d = 2")
    u = np.asarray(direction, dtype=float)
    if u.shape != (3,) or abs(np.linalg.norm(u) - 1) > 1e-9:
        raise ValueError(f"direction must be a unit 3-vector, got {direction!r}")
    ops = [build_gamma(2, a, w) for a in (1, 2, 3)]
    return BlockOperator(w.grid, 2, w.axis, sum(u[i] * ops[i].blocks for i in range(3)))


def build_delta(F: WeightInput | str, grid: ModularGrid, d: int = 1, axis: str = "theta") -> BlockOperator:
    """Diagonal operator with entries ``F(theta_bar_j, k_bar_l)``; ``F`` need not be validated."""
    samples, _ = resolve_weight(F, grid)
    return BlockOperator.diagonal(grid, samples, d, axis)


def build_shift(d: int, f: WeightInput | str | complex, grid: ModularGrid, axis: str = "theta") -> BlockOperator:
    """Cyclic shift ``|x> -> f(x) |x + period/d>`` inside every block."""
    check_divisible(grid, d, axis)
    if np.isscalar(f):
        samples = np.full(grid.shape, complex(f))
    else:
        samples, _ = resolve_weight(f, grid)
    idx = block_indices(grid, d, axis)
    vals = samples.reshape(-1)[idx]  # f at member q
    blocks = np.zeros(idx.shape + (d,), dtype=complex)
    q = np.arange(d)
    blocks[..., (q + 1) % d, q] = vals
    return BlockOperator(grid, d, axis, blocks)


def as_blocks(op: BlockOperator, d: int, axis: str) -> BlockOperator:
    """Re-express a diagonal operator in another block structure."""
    if (op.d, op.axis) == (d, axis_name(axis)):
        return op
    off = op.blocks - op.blocks * np.eye(op.d)
    if np.max(np.abs(off), initial=0.0) > 0:
        raise BlockStructureError("only diagonal operators can change block structure")
    values = np.zeros(op.grid.total_dim, dtype=complex)
    values[op.indices] = np.diagonal(op.blocks, axis1=-2, axis2=-1)
    return BlockOperator.diagonal(op.grid, values.reshape(op.grid.shape), d, axis)


def gamma_from_SD(S: BlockOperator, D: BlockOperator) -> BlockOperator:
    """``S D + (S D)^dagger``."""
    if S.grid != D.grid:
        raise GridMismatchError("S and D live on different grids")
    D = as_blocks(D, S.d, S.axis)
    SD = S @ D
    return SD + SD.adjoint()


@dataclass(frozen=True, eq=False)
class DeltaDecomposition:
    """Diagonal operator split into hermitian parts and diagonal-generator weights.

    ``delta = gamma_re + 1j * gamma_im``; each part is a sum of diagonal
    generators weighted by ``coefficients`` (plus an identity part).
    """

    d: int
    root_branch: int
    fundamental: np.ndarray
    pattern: np.ndarray
    residual: float
    gamma_re: BlockOperator
    gamma_im: BlockOperator
    coefficients: dict[int, np.ndarray]
    identity_coefficient: np.ndarray

    @property
    def exact(self) -> bool:
        return self.residual < 1e-10

    def reconstruction_residual(self) -> float:
        total = self.gamma_re.blocks + 1j * self.gamma_im.blocks
        diag = self.identity_coefficient[..., None, None] * np.eye(self.d)
        for a, c in self.coefficients.items():
            diag = diag + c[..., None, None] * gellmann(self.d, a).matrix
        return float(np.max(np.abs(total - diag)))


def decompose_delta(F: WeightInput | str, grid: ModularGrid, d: int, axis: str = "theta") -> DeltaDecomposition:
    """Fit the diagonal of ``build_delta(F)`` to ``F(f) * diag(c_q)`` with ``c_q`` a root branch."""
    samples, _ = resolve_weight(F, grid)
    op = build_delta(samples, grid, d, axis)
    v = np.diagonal(op.blocks, axis1=-2, axis2=-1)  # (F1, F2, d)
    ax = 0 if axis_name(axis) == "theta" else 1
    b = int(np.argmin(roots_residuals(samples, d, ax)))
    pattern = np.exp(2j * np.pi * np.arange(d) * b / d)
    fund = v[..., 0]
    residual = float(np.max(np.abs(v - fund[..., None] * pattern)))
    coeffs = {}
    for a in diagonal_indices(d):
        g = np.diagonal(gellmann(d, a).matrix).real
        coeffs[a] = v @ g / 2
    re = BlockOperator.diagonal(grid, samples.real, d, axis)
    im = BlockOperator.diagonal(grid, samples.imag, d, axis)
    return DeltaDecomposition(d, b, fund, pattern, residual, re, im, coeffs, v.mean(axis=-1))


def rephase(op: BlockOperator, chi: np.ndarray) -> BlockOperator:
    """``P B P^dagger`` per block with ``P = diag(exp(i chi_q))``; ``chi`` has shape ``(F1, F2, d)``."""
    p = np.exp(1j * np.asarray(chi))
    return BlockOperator(op.grid, op.d, op.axis, p[..., :, None] * op.blocks * np.conj(p)[..., None, :])


# SU(3) family -------------------------------------------------------------

def su3_shift_blocks(grid: ModularGrid) -> np.ndarray:
    """Blocks of ``U[pi/3] Z(1) U^dagger[pi/3]`` (a cyclic shift by ``2 pi / 3``).

    Member ``q`` maps to ``q + 1`` with amplitude
    ``exp(i pi/3) exp(i theta_q) exp(i pi k/3)``, times ``exp(i pi k)`` when it wraps.
    """
    tb, kb = fundamental_coords(grid, 3, "theta")
    q = np.arange(3)
    theta_q = tb[..., None] + 2 * np.pi * q / 3
    amp = np.exp(1j * (np.pi / 3 + theta_q + np.pi * kb[..., None] / 3 + np.pi * kb[..., None] * (q == 2)))
    blocks = np.zeros(tb.shape + (3, 3), dtype=complex)
    blocks[..., (q + 1) % 3, q] = amp
    return blocks


def nd_operator(grid: ModularGrid, theta: float) -> BlockOperator:
    """``X^dagger(theta) A X(theta) + h.c.`` with ``A`` the ``2 pi/3`` shift; equals ``e^{i theta} A + h.c.``."""
    check_divisible(grid, 3, "theta")
    A = BlockOperator(grid, 3, "theta", np.exp(1j * theta) * su3_shift_blocks(grid))
    return A + A.adjoint()


_H = np.pi / 2
# (eta, SLM phase on each third of the circle) for the six off-diagonal members.
# No two patterns differ by a constant, so no two members commute.
SU3_MEMBERS: tuple[tuple[float, tuple[float, float, float]], ...] = (
    (0.0, (0.0, 0.0, 0.0)), (0.0, (0.0, 0.0, _H)), (0.0, (0.0, 0.0, np.pi)),
    (_H, (0.0, 0.0, 3 * _H)), (0.0, (0.0, _H, 0.0)), (_H, (0.0, _H, _H)))
SU3_OFFDIAG_ALPHAS = (1, 2, 4, 5, 6, 7)
SU3_DIAG_ALPHAS = (3, 8)


def su3_member(grid: ModularGrid, i: int) -> BlockOperator:
    """Off-diagonal family member ``i`` (1..6): ``e^{-i eta} A D + h.c.``.

    ``D`` applies a constant phase on each third ``[2 pi n/3, 2 pi (n+1)/3)``.
    """
    check_divisible(grid, 3, "theta")
    eta, phases = SU3_MEMBERS[i - 1]
    mask = np.exp(1j * np.asarray(phases))
    M = BlockOperator(grid, 3, "theta", np.exp(-1j * eta) * su3_shift_blocks(grid) * mask[None, None, None, :])
    return M + M.adjoint()


def build_su3_family(grid: ModularGrid, diagonal_weight: WeightInput | str = "exp3",
                     check_rank: bool = True) -> list[BlockOperator]:
    """Eight operators indexed like ``lambda_1..lambda_8``.

    Entries 3 and 8 are the hermitian and anti-hermitian parts of
    ``build_delta(diagonal_weight)``; the other six are ``su3_member(1..6)``.
    """
    check_divisible(grid, 3, "theta")
    make_weight(diagonal_weight, 3, grid, "theta")
    dec = decompose_delta(diagonal_weight, grid, 3)
    members = iter(su3_member(grid, i) for i in range(1, 7))
    family = []
    for a in range(1, 9):
        if a == 3:
            family.append(dec.gamma_re)
        elif a == 8:
            family.append(dec.gamma_im)
        else:
            family.append(next(members))
    if check_rank:
        rank = block_gram_rank(family)
        bad = np.argwhere(rank < 8)
        if len(bad):
            tb, kb = fundamental_coords(grid, 3, "theta")
            a, b = bad[0]
            raise RankDeficiencyError((float(tb[a, b]), float(kb[a, b])), int(rank[a, b]))
    return family


def closure_residual(family: list[BlockOperator]) -> float:
    """Largest distance of ``i[A, B]`` from the blockwise span of the family."""
    B = np.stack([op.blocks for op in family], axis=2)
    shape = B.shape[:2]
    flat = B.reshape(shape + (len(family), -1))
    Q, _ = np.linalg.qr(np.swapaxes(flat, -1, -2))  # orthonormal span columns
    worst = 0.0
    for a in range(len(family)):
        for b in range(a + 1, len(family)):
            C = 1j * (B[:, :, a] @ B[:, :, b] - B[:, :, b] @ B[:, :, a])
            c = C.reshape(shape + (-1,))
            proj = np.einsum("abik,abi->abk", np.conj(Q), c)
            res = c - np.einsum("abik,abk->abi", Q, proj)
            scale = max(1.0, float(np.max(np.abs(c))))
            worst = max(worst, float(np.max(np.abs(res))) / scale)
    return worst


# Products and expectations ------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatorProduct:
    matrix: np.ndarray
    hermiticity_residual: float

    @property
    def is_hermitian(self) -> bool:
        return self.hermiticity_residual <= 1e-10


def _dense(op) -> np.ndarray:
    return op.to_dense() if isinstance(op, BlockOperator) else np.asarray(op, dtype=complex)


def operator_product(gamma: BlockOperator, lam: BlockOperator) -> OperatorProduct:
    """Dense ``Gamma @ Lambda`` with its measured hermiticity residual."""
    if gamma.grid != lam.grid:
        raise GridMismatchError("operators live on different grids")
    M = _dense(gamma) @ _dense(lam)
    return OperatorProduct(M, float(np.max(np.abs(M - M.conj().T))))


def commutator_norm(a, b) -> float:
    A, B = _dense(a), _dense(b)
    return float(np.linalg.norm(A @ B - B @ A))


def expectation(op, s: ModularState) -> float | complex:
    """``<psi|op|psi>``; real for hermitian operators."""
    if isinstance(op, BlockOperator):
        val = op.expectation(s)
        herm = op.is_hermitian(1e-10)
    else:
        M = np.asarray(op, dtype=complex)
        if M.shape != (s.grid.total_dim,) * 2:
            raise GridMismatchError("operator size does not match the state grid")
        v = s.vector
        val = complex(np.vdot(v, M @ v))
        herm = bool(np.allclose(M, M.conj().T, atol=1e-10))
    return float(val.real) if herm else val


def gamma_via_gates(d: int, alpha: int, grid: ModularGrid, axis: str = "theta",
                    tol: float = 1e-10) -> BlockOperator:
    """Assemble the gate recipe densely and split it into blocks.

    Raises ``BlockStructureError`` if anything leaks outside the ``d``-block
    pattern, which would signal a convention error.
    """
    from .programs import gate_recipe, program_to_matrix

    M = program_to_matrix(gate_recipe(d, alpha, grid, axis_name(axis)), grid)
    return BlockOperator.from_dense(M, grid, d, axis, tol)
