"""Two-party states, CHSH correlators and block-weighted entangling operators."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .blocks import BlockOperator, block_indices
from .bloch import default_gammas
from .gamma import build_gamma_phi
from .generators import block_generator
from .grid import GridMismatchError, ModularGrid, ModularState, NormalizationError, NORM_TOL
from .weights import make_weight, roots_residuals, tabulated_continuity_residual

TSIRELSON = 2 * np.sqrt(2)


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Amplitudes ``C[a, b]`` over the modular indices of parties A and B.

    Normalised as ``sum |C|^2 mu_A mu_B = 1`` with ``mu`` the modular measure.
    """

    grid_a: ModularGrid
    grid_b: ModularGrid
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        C = np.array(self.amplitudes, dtype=complex)
        if C.shape != (self.grid_a.total_dim, self.grid_b.total_dim):
            raise ValueError(f"amplitudes must have shape {(self.grid_a.total_dim, self.grid_b.total_dim)}")
        C.setflags(write=False)
        object.__setattr__(self, "amplitudes", C)
        norm = float(np.sum(np.abs(C) ** 2)) * self.grid_a.measure * self.grid_b.measure
        if abs(norm - 1) > NORM_TOL:
            raise NormalizationError(f"BipartiteState norm is {norm:.12g}, expected 1")

    @property
    def coeffs(self) -> np.ndarray:
        """Orthonormal coefficient matrix."""
        return self.amplitudes * np.sqrt(self.grid_a.measure * self.grid_b.measure)

    @classmethod
    def from_coeffs(cls, grid_a: ModularGrid, grid_b: ModularGrid, X: np.ndarray) -> "BipartiteState":
        return cls(grid_a, grid_b, np.asarray(X) / np.sqrt(grid_a.measure * grid_b.measure))

    @classmethod
    def from_unnormalized_coeffs(cls, grid_a: ModularGrid, grid_b: ModularGrid, X: np.ndarray) -> "BipartiteState":
        X = np.asarray(X, dtype=complex)
        return cls.from_coeffs(grid_a, grid_b, X / np.linalg.norm(X))


def tensor_product_state(a: ModularState, b: ModularState) -> BipartiteState:
    return BipartiteState.from_coeffs(a.grid, b.grid, np.outer(a.vector, b.vector))


# Schmidt ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    def rank(self, tol: float = 1e-12) -> int:
        return int(np.sum(self.coefficients > tol))

    def reconstruct(self) -> np.ndarray:
        return (self.basis_a * self.coefficients) @ self.basis_b.T

    def entropy(self) -> float:
        p = self.coefficients**2
        p = p[p > 1e-300]
        return float(-np.sum(p * np.log(p)))


def schmidt_decompose(s: BipartiteState) -> SchmidtDecomposition:
    """Singular values of the coefficient matrix with columns of ``basis_a`` / ``basis_b`` as local vectors."""
    U, sv, Vh = np.linalg.svd(s.coeffs, full_matrices=False)
    return SchmidtDecomposition(sv, U, Vh.T)


def entanglement_entropy(s: BipartiteState) -> float:
    return schmidt_decompose(s).entropy()


# Correlators --------------------------------------------------------------

def _local(op, X: np.ndarray, side: str) -> np.ndarray:
    if side == "a":
        if isinstance(op, BlockOperator):
            return op.apply(X.T).T
        return np.asarray(op) @ X
    if isinstance(op, BlockOperator):
        return op.apply(X)
    return X @ np.asarray(op).T


def correlator(opA, opB, s: BipartiteState) -> float:
    """``<Psi| A (x) B |Psi>`` (real part; the imaginary part vanishes for hermitian ops)."""
    for op, g in ((opA, s.grid_a), (opB, s.grid_b)):
        if isinstance(op, BlockOperator) and op.grid != g:
            raise GridMismatchError("operator and party grids differ")
    X = s.coeffs
    Y = _local(opB, _local(opA, X, "a"), "b")
    return float(np.vdot(X, Y).real)


def correlation_matrix(s: BipartiteState, gammas_a=None, gammas_b=None) -> np.ndarray:
    ga = default_gammas(s.grid_a) if gammas_a is None else gammas_a
    gb = default_gammas(s.grid_b) if gammas_b is None else gammas_b
    return np.array([[correlator(a, b, s) for b in gb] for a in ga])


def _unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (3,) or abs(np.linalg.norm(u) - 1) > 1e-9:
        raise ValueError(f"direction must be a unit 3-vector, got {u!r}")
    return u


def chsh_value(u1, u1p, u2, u2p, s: BipartiteState, weight: str = "cos2") -> float:
    """``E(u1,u2) + E(u1',u2) + E(u1,u2') - E(u1',u2')`` with ``E`` the ``Gamma_phi`` correlator."""
    wa = make_weight(weight, 2, s.grid_a)
    wb = make_weight(weight, 2, s.grid_b)
    A1, A1p = (build_gamma_phi(_unit(u), wa) for u in (u1, u1p))
    B2, B2p = (build_gamma_phi(_unit(u), wb) for u in (u2, u2p))
    return (correlator(A1, B2, s) + correlator(A1p, B2, s) + correlator(A1, B2p, s)
            - correlator(A1p, B2p, s))


def chsh_from_matrix(M: np.ndarray, u1, u1p, u2, u2p) -> float:
    return float(u1 @ M @ (u2 + u2p) + u1p @ M @ (u2 - u2p))


def direction(polar: float, azimuth: float) -> np.ndarray:
    return np.array([np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar)])


def angles_of(u: np.ndarray) -> tuple[float, float]:
    return float(np.arccos(np.clip(u[2], -1, 1))), float(np.arctan2(u[1], u[0]))


@dataclass(frozen=True)
class ChshResult:
    value: float
    directions: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

    def angles(self) -> list[tuple[float, float]]:
        return [angles_of(u) for u in self.directions]


def _best_alice(M: np.ndarray, u2: np.ndarray, u2p: np.ndarray):
    a, b = M @ (u2 + u2p), M @ (u2 - u2p)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    u1 = a / na if na > 0 else np.array([0.0, 0.0, 1.0])
    u1p = b / nb if nb > 0 else np.array([1.0, 0.0, 0.0])
    return na + nb, u1, u1p


COARSE = 16
FINE_STEP = 1e-4


def chsh_optimize_matrix(M: np.ndarray) -> ChshResult:
    """Maximise CHSH over directions for correlation matrix ``M``.

    Alice's directions are optimal in closed form given Bob's; Bob's two
    directions are searched on a 16 x 16 (polar, azimuth) grid each, then
    refined by coordinate descent with step halving down to ``1e-4``.
    """
    pol = (np.arange(COARSE) + 0.5) * np.pi / COARSE
    az = np.arange(COARSE) * 2 * np.pi / COARSE
    P, A = np.meshgrid(pol, az, indexing="ij")
    dirs = np.stack([np.sin(P) * np.cos(A), np.sin(P) * np.sin(A), np.cos(P)], axis=-1).reshape(-1, 3)
    MD = dirs @ M.T
    score = (np.linalg.norm(MD[:, None] + MD[None, :], axis=-1)
             + np.linalg.norm(MD[:, None] - MD[None, :], axis=-1))
    i, j = np.unravel_index(np.argmax(score), score.shape)
    x = np.array([*angles_of(dirs[i]), *angles_of(dirs[j])])

    def f(v):
        return _best_alice(M, direction(v[0], v[1]), direction(v[2], v[3]))[0]

    best = f(x)
    step = np.pi / COARSE
    while step >= FINE_STEP:
        improved = False
        for k in range(4):
            for sgn in (1, -1):
                y = x.copy()
                y[k] += sgn * step
                val = f(y)
                if val > best + 1e-15:
                    x, best, improved = y, val, True
        if not improved:
            step /= 2
    u2, u2p = direction(x[0], x[1]), direction(x[2], x[3])
    val, u1, u1p = _best_alice(M, u2, u2p)
    return ChshResult(float(val), (u1, u1p, u2, u2p))


def chsh_optimize(s: BipartiteState) -> ChshResult:
    return chsh_optimize_matrix(correlation_matrix(s))


def horodecki_bound(M: np.ndarray) -> float:
    """Closed-form CHSH maximum ``2 sqrt(s1^2 + s2^2)`` (largest two singular values)."""
    sv = np.linalg.svd(M, compute_uv=False)
    return float(2 * np.sqrt(sv[0] ** 2 + sv[1] ** 2))


# Block-Bell states and scans ---------------------------------------------

def block_bell_state(grid: ModularGrid, theta0: float = 0.0, k0: float = 0.0,
                     epsilon: float = 0.0) -> BipartiteState:
    """``(|x>|x> + |x + pi>|x + pi>)/sqrt(2)`` smeared uniformly over ``|theta_bar - theta0| <= epsilon``."""
    if not 0 <= epsilon < np.pi / 2:
        raise ValueError("epsilon must lie in [0, pi/2)")
    m, n = grid.shape
    j0, l0 = grid.theta_index(theta0), grid.k_index(k0)
    reach = int(np.floor(epsilon / grid.delta_theta + 1e-9))
    X = np.zeros((grid.total_dim, grid.total_dim), dtype=complex)
    for t in range(-reach, reach + 1):
        for j in ((j0 + t) % m, (j0 + t + m // 2) % m):
            a = j * n + l0
            X[a, a] = 1.0
    return BipartiteState.from_unnormalized_coeffs(grid, grid, X)


@dataclass(frozen=True)
class ScanRow:
    epsilon: float
    theta0: float
    k0: float
    result: ChshResult


def chsh_scan(grid: ModularGrid, epsilons: Sequence[float], theta0: float = 0.0, k0: float = 0.0) -> list[ScanRow]:
    return [ScanRow(float(e), theta0, k0, chsh_optimize(block_bell_state(grid, theta0, k0, e)))
            for e in epsilons]


def scan_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["epsilon", "theta0", "k0"]
    for name in ("u1", "u1p", "u2", "u2p"):
        head += [f"{name}_polar", f"{name}_azimuth"]
    w.writerow(head + ["S"])
    for r in rows:
        ang = [f"{a:.12g}" for pair in r.result.angles() for a in pair]
        w.writerow([f"{r.epsilon:.12g}", f"{r.theta0:.12g}", f"{r.k0:.12g}"] + ang + [f"{r.result.value:.12g}"])
    return buf.getvalue()


# Bipartite operators ------------------------------------------------------

class BipartiteWeightError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BipartiteOperator:
    """``sum_f1,f2 zeta[f1, f2] g1(f1) (x) g2(f2)``, a separable pair, or a dense matrix.

    ``kind`` is ``block``, ``separable`` or ``dense``.
    """

    grid_a: ModularGrid
    grid_b: ModularGrid
    kind: str
    zeta: np.ndarray | None = None
    g1: np.ndarray | None = None
    g2: np.ndarray | None = None
    d1: int = 0
    d2: int = 0
    op_a: object = None
    op_b: object = None
    matrix: np.ndarray | None = None

    @classmethod
    def separable(cls, op_a, op_b, grid_a: ModularGrid, grid_b: ModularGrid) -> "BipartiteOperator":
        return cls(grid_a, grid_b, "separable", op_a=op_a, op_b=op_b)

    @classmethod
    def dense(cls, matrix: np.ndarray, grid_a: ModularGrid, grid_b: ModularGrid) -> "BipartiteOperator":
        return cls(grid_a, grid_b, "dense", matrix=np.asarray(matrix, dtype=complex))

    def _idx(self):
        ia = block_indices(self.grid_a, self.d1, "theta").reshape(-1, self.d1)
        ib = block_indices(self.grid_b, self.d2, "theta").reshape(-1, self.d2)
        return ia, ib

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        if self.kind == "block":
            gh = np.allclose(self.g1, self.g1.conj().T, atol=tol) and np.allclose(self.g2, self.g2.conj().T, atol=tol)
            return bool(gh and np.max(np.abs(self.zeta.imag), initial=0.0) <= tol)
        if self.kind == "separable":
            mats = [_dense_local(o) for o in (self.op_a, self.op_b)]
            return all(np.allclose(m, m.conj().T, atol=tol) for m in mats)
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=tol))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Act on a coefficient matrix ``X[a, b]``."""
        if self.kind == "separable":
            return _local(self.op_b, _local(self.op_a, X, "a"), "b")
        if self.kind == "dense":
            return (self.matrix @ X.reshape(-1)).reshape(X.shape)
        ia, ib = self._idx()
        Xb = X[ia[:, None, :, None], ib[None, :, None, :]]  # (FA, FB, d1, d2)
        Y = np.einsum("fg,ij,kl,fgjl->fgik", self.zeta, self.g1, self.g2, Xb)
        out = np.zeros_like(X)
        out[ia[:, None, :, None], ib[None, :, None, :]] = Y
        return out

    def to_dense(self) -> np.ndarray:
        """Full matrix on the tensor space (index ``a * N_B + b``); small grids only."""
        if self.kind == "dense":
            return self.matrix
        if self.kind == "separable":
            return np.kron(_dense_local(self.op_a), _dense_local(self.op_b))
        NA, NB = self.grid_a.total_dim, self.grid_b.total_dim
        if NA * NB > 4096:
            raise MemoryError("dense bipartite matrix too large; use apply()")
        eye = np.eye(NA * NB, dtype=complex).reshape(NA * NB, NA, NB)
        cols = np.stack([self.apply(e) for e in eye])
        return cols.reshape(NA * NB, NA * NB).T

    def expm_apply(self, tau: float, X: np.ndarray) -> np.ndarray:
        """``exp(-i tau G) X``."""
        if self.kind == "dense":
            from scipy.linalg import expm

            return (expm(-1j * tau * self.matrix) @ X.reshape(-1)).reshape(X.shape)
        if self.kind == "separable":
            la, Va = np.linalg.eigh(_dense_local(self.op_a))
            lb, Vb = np.linalg.eigh(_dense_local(self.op_b))
            Y = Va.conj().T @ X @ Vb.conj()
            Y = Y * np.exp(-1j * tau * np.outer(la, lb))
            return Va @ Y @ Vb.T
        lam, V = np.linalg.eigh(np.kron(self.g1, self.g2))
        ia, ib = self._idx()
        Xb = X[ia[:, None, :, None], ib[None, :, None, :]]
        flat = Xb.reshape(Xb.shape[:2] + (-1,))
        y = flat @ V.conj()  # components in the eigenbasis
        y = y * np.exp(-1j * tau * self.zeta[..., None] * lam)
        Yb = (y @ V.T).reshape(Xb.shape)
        out = X.copy()
        out[ia[:, None, :, None], ib[None, :, None, :]] = Yb
        return out


def _dense_local(op) -> np.ndarray:
    return op.to_dense() if isinstance(op, BlockOperator) else np.asarray(op, dtype=complex)


ZetaInput = Union[np.ndarray, Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]]


def tabulate_zeta(zeta: ZetaInput, grid_a: ModularGrid, grid_b: ModularGrid) -> np.ndarray:
    if callable(zeta):
        t1, k1, t2, k2 = np.meshgrid(grid_a.theta_bar, grid_a.k_bar, grid_b.theta_bar, grid_b.k_bar,
                                     indexing="ij")
        return np.asarray(zeta(t1, k1, t2, k2), dtype=complex)
    Z = np.asarray(zeta, dtype=complex)
    if Z.shape != grid_a.shape + grid_b.shape:
        raise ValueError(f"zeta must have shape {grid_a.shape + grid_b.shape}")
    return Z


def build_bipartite_gamma(d1: int, d2: int, alpha1: int, alpha2: int, zeta: ZetaInput,
                          grid_a: ModularGrid, grid_b: ModularGrid | None = None,
                          tol: float = 1e-10) -> BipartiteOperator:
    """``sum zeta(f1, f2) gamma_alpha1 (x) gamma_alpha2`` over pairs of fundamental points.

    ``zeta`` must pass the periodicity and continuity checks in each party's
    ``theta_bar`` independently.
    """
    grid_b = grid_a if grid_b is None else grid_b
    Z = tabulate_zeta(zeta, grid_a, grid_b)
    for ax, d, name in ((0, d1, "A"), (2, d2, "B")):
        roots = float(np.min(roots_residuals(Z, d, ax)))
        cont = tabulated_continuity_residual(Z, d, ax)
        if roots > tol or cont > 0:
            raise BipartiteWeightError(
                f"zeta fails party {name} validation: roots residual {roots:.3g}, continuity residual {cont:.3g}")
    fund = Z[: grid_a.m_theta // d1, :, : grid_b.m_theta // d2, :]
    FA = fund.shape[0] * fund.shape[1]
    zmat = fund.reshape(FA, -1)
    if np.max(np.abs(zmat.imag), initial=0.0) <= 1e-14:
        zmat = zmat.real
    return BipartiteOperator(grid_a, grid_b, "block", zeta=zmat, g1=block_generator(d1, alpha1),
                             g2=block_generator(d2, alpha2), d1=d1, d2=d2)


def realign(M: np.ndarray, NA: int, NB: int) -> np.ndarray:
    """Realignment ``R[(a, a'), (b, b')] = M[(a, b), (a', b')]``; its singular values are the operator Schmidt values."""
    return M.reshape(NA, NB, NA, NB).transpose(0, 2, 1, 3).reshape(NA * NA, NB * NB)


def operator_schmidt_values(G: BipartiteOperator) -> np.ndarray:
    if G.kind == "block":
        scale = np.linalg.norm(G.g1) * np.linalg.norm(G.g2)
        return np.linalg.svd(np.atleast_2d(G.zeta), compute_uv=False) * scale
    if G.kind == "separable":
        return np.array([np.linalg.norm(_dense_local(G.op_a)) * np.linalg.norm(_dense_local(G.op_b))])
    return np.linalg.svd(realign(G.matrix, G.grid_a.total_dim, G.grid_b.total_dim), compute_uv=False)


def operator_schmidt_rank(G: BipartiteOperator, tol: float = 1e-8) -> int:
    """Number of operator Schmidt values above ``tol`` times the largest."""
    sv = operator_schmidt_values(G)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


class NonHermitianError(ValueError):
    pass


def entangling_evolution(G: BipartiteOperator, tau: float, s: BipartiteState) -> BipartiteState:
    """``exp(-i tau G) |Psi>``, computed block pair by block pair for block operators."""
    if (G.grid_a, G.grid_b) != (s.grid_a, s.grid_b):
        raise GridMismatchError("operator and state grids differ")
    if not G.is_hermitian(1e-12):
        raise NonHermitianError("entangling evolution needs a hermitian generator")
    return BipartiteState.from_coeffs(s.grid_a, s.grid_b, G.expm_apply(tau, s.coeffs))
