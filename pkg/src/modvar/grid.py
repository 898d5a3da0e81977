"""Discretized modular Hilbert space and the discrete Zak transform.

A position coordinate ``theta`` is split as ``theta = theta_bar + 2*pi*n`` with
``theta_bar`` in ``[0, 2*pi)`` and the conjugate momentum as ``k = k_bar + m``
with ``k_bar`` in ``[0, 1)``.  On the grid, ``theta_bar`` takes ``m_theta``
left-edge samples and ``k_bar`` takes ``n_k`` left-edge samples; the position
grid holds ``n_k`` periods so that both pictures have ``m_theta * n_k``
degrees of freedom.

Amplitudes are stored as densities (``g`` or ``g~``), normalised with the grid
measure.  The orthonormal coefficient vector of a state is the amplitude
array times the square root of the cell measure; every dense operator in this
package acts on those coefficient vectors, with modular index ``j * n_k + l``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

NORM_TOL = 1e-10


class GridMismatchError(ValueError):
    """Raised when objects defined on different grids are combined."""


class NormalizationError(ValueError):
    """Raised when a state is not normalised within ``NORM_TOL``."""


@dataclass(frozen=True)
class ModularGrid:
    m_theta: int
    n_k: int

    def __post_init__(self):
        if int(self.m_theta) != self.m_theta or int(self.n_k) != self.n_k:
            raise ValueError("grid sizes must be integers")
        if self.m_theta < 2:
            raise ValueError(f"m_theta must be >= 2, got {self.m_theta}")
        if self.n_k < 1:
            raise ValueError(f"n_k must be >= 1, got {self.n_k}")

    @property
    def delta_theta(self) -> float:
        return 2 * np.pi / self.m_theta

    @property
    def delta_k(self) -> float:
        return 1.0 / self.n_k

    @property
    def measure(self) -> float:
        """Cell measure of the modular grid, ``delta_theta * delta_k``."""
        return self.delta_theta * self.delta_k

    @property
    def total_dim(self) -> int:
        return self.m_theta * self.n_k

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m_theta, self.n_k)

    @property
    def theta_bar(self) -> np.ndarray:
        return np.arange(self.m_theta) * self.delta_theta

    @property
    def k_bar(self) -> np.ndarray:
        return np.arange(self.n_k) * self.delta_k

    @property
    def theta(self) -> np.ndarray:
        """Position samples ``theta_s``, ``s = j + m_theta * n``."""
        return np.arange(self.total_dim) * self.delta_theta

    @property
    def length(self) -> float:
        """Total periodic extent of the position grid."""
        return 2 * np.pi * self.n_k

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(theta_bar, k_bar)`` arrays of shape ``(m_theta, n_k)``."""
        return np.meshgrid(self.theta_bar, self.k_bar, indexing="ij")

    def index(self, j: int, l: int) -> int:
        return (j % self.m_theta) * self.n_k + (l % self.n_k)

    def theta_index(self, theta_bar: float, tol: float = 1e-9) -> int:
        """Grid index of a ``theta_bar`` value that must lie on the grid."""
        x = (theta_bar % (2 * np.pi)) / self.delta_theta
        j = int(round(x))
        if abs(x - j) > tol:
            raise ValueError(f"theta_bar={theta_bar} is not on the grid")
        return j % self.m_theta

    def k_index(self, k_bar: float, tol: float = 1e-9) -> int:
        x = (k_bar % 1.0) / self.delta_k
        l = int(round(x))
        if abs(x - l) > tol:
            raise ValueError(f"k_bar={k_bar} is not on the grid")
        return l % self.n_k

    def to_dict(self) -> dict[str, int]:
        return {"m_theta": int(self.m_theta), "n_k": int(self.n_k)}


def make_grid(m_theta: int, n_k: int) -> ModularGrid:
    if int(m_theta) != m_theta or int(n_k) != n_k:
        raise ValueError("grid sizes must be integers")
    return ModularGrid(int(m_theta), int(n_k))


DEFAULT_GRID = ModularGrid(48, 8)


def _check_norm(norm: float, what: str):
    if abs(norm - 1.0) > NORM_TOL:
        raise NormalizationError(f"{what} has norm {norm!r}, expected 1 within {NORM_TOL}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModularState:
    """Amplitude field ``g~[j, l]`` on the modular grid."""

    grid: ModularGrid
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != self.grid.shape:
            raise ValueError(f"amplitudes must have shape {self.grid.shape}, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)
        _check_norm(float(np.sum(np.abs(amps) ** 2) * self.grid.measure), "ModularState")

    @property
    def vector(self) -> np.ndarray:
        """Orthonormal coefficient vector, modular index ``j * n_k + l``."""
        return self.amplitudes.ravel() * np.sqrt(self.grid.measure)

    @classmethod
    def from_vector(cls, grid: ModularGrid, vec: np.ndarray) -> "ModularState":
        vec = np.asarray(vec, dtype=complex)
        return cls(grid, vec.reshape(grid.shape) / np.sqrt(grid.measure))

    @classmethod
    def from_unnormalized(cls, grid: ModularGrid, amplitudes: np.ndarray) -> "ModularState":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(amps) ** 2) * grid.measure)
        if norm == 0:
            raise ValueError("cannot normalise the zero vector")
        return cls(grid, amps / norm)

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(state_to_dict(self), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ModularState":
        return state_from_dict(json.loads(text))

    def to_bytes(self) -> bytes:
        header = np.array([self.grid.m_theta, self.grid.n_k], dtype="<i8").tobytes()
        return header + self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModularState":
        m, n = np.frombuffer(data[:16], dtype="<i8")
        amps = np.frombuffer(data[16:], dtype="<c16").reshape(int(m), int(n))
        return cls(ModularGrid(int(m), int(n)), amps)


@dataclass(frozen=True, eq=False)
class PositionState:
    """Position amplitudes ``g[s]`` over ``theta_s = s * delta_theta``."""

    grid: ModularGrid
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.grid.total_dim,):
            raise ValueError(f"amplitudes must have shape ({self.grid.total_dim},), got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)
        _check_norm(float(np.sum(np.abs(amps) ** 2) * self.grid.delta_theta), "PositionState")

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes * np.sqrt(self.grid.delta_theta)

    @classmethod
    def from_vector(cls, grid: ModularGrid, vec: np.ndarray) -> "PositionState":
        return cls(grid, np.asarray(vec, dtype=complex) / np.sqrt(grid.delta_theta))

    @classmethod
    def from_unnormalized(cls, grid: ModularGrid, amplitudes: np.ndarray) -> "PositionState":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(amps) ** 2) * grid.delta_theta)
        if norm == 0:
            raise ValueError("cannot normalise the zero vector")
        return cls(grid, amps / norm)


def _zak_phase(grid: ModularGrid) -> np.ndarray:
    tb, kb = grid.mesh()
    return np.exp(0.5j * tb * kb)


def zak_coefficients(grid: ModularGrid, position_vec: np.ndarray) -> np.ndarray:
    """Zak transform of orthonormal position coefficients (unitary).

    Works on the trailing axis, so a stack of vectors can be transformed at once.
    """
    v = np.asarray(position_vec, dtype=complex)
    lead = v.shape[:-1]
    g = v.reshape(lead + (grid.n_k, grid.m_theta))
    # sum_n exp(+2 pi i n l / n_k) g[j + m n] / sqrt(n_k)
    gt = np.fft.ifft(g, axis=-2, norm="ortho")
    gt = np.swapaxes(gt, -1, -2) * _zak_phase(grid)
    return gt.reshape(lead + (grid.total_dim,))


def inverse_zak_coefficients(grid: ModularGrid, modular_vec: np.ndarray) -> np.ndarray:
    v = np.asarray(modular_vec, dtype=complex)
    lead = v.shape[:-1]
    gt = v.reshape(lead + grid.shape) * np.conj(_zak_phase(grid))
    g = np.fft.fft(np.swapaxes(gt, -1, -2), axis=-2, norm="ortho")
    return g.reshape(lead + (grid.total_dim,))


def zak_matrix(grid: ModularGrid) -> np.ndarray:
    """Dense unitary ``W`` with ``modular_vec = W @ position_vec``."""
    return zak_coefficients(grid, np.eye(grid.total_dim)).T


def zak_forward(s: PositionState) -> ModularState:
    """``g~[j,l] = e^{i theta_j k_l / 2} sum_n e^{2 pi i n k_l} g[j + m n]``."""
    if not isinstance(s, PositionState):
        raise TypeError("zak_forward expects a PositionState")
    return ModularState.from_vector(s.grid, zak_coefficients(s.grid, s.vector))


def zak_inverse(m: ModularState) -> PositionState:
    if not isinstance(m, ModularState):
        raise TypeError("zak_inverse expects a ModularState")
    return PositionState.from_vector(m.grid, inverse_zak_coefficients(m.grid, m.vector))


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def inner_product(a: ModularState | PositionState, b: ModularState | PositionState) -> complex:
    if type(a) is not type(b):
        raise TypeError("inner_product needs two states of the same representation")
    _same_grid(a, b)
    return complex(np.vdot(a.vector, b.vector))


def _torus_distance(x: np.ndarray, center: float, length: float) -> np.ndarray:
    return (x - center + length / 2) % length - length / 2


def gaussian_position(grid: ModularGrid, center: float, width: float) -> PositionState:
    """Normalised Gaussian ``exp(-(theta-center)^2 / (4 width^2))`` on the position torus."""
    if width <= 0:
        raise ValueError("width must be positive")
    if not 0 <= center < grid.length:
        raise ValueError(f"center must lie in [0, {grid.length})")
    dx = _torus_distance(grid.theta, center, grid.length)
    return PositionState.from_unnormalized(grid, np.exp(-dx**2 / (4 * width**2)))


def block_qubit(grid: ModularGrid, theta0: float, k0: float, d: int, spinor: Sequence[complex]) -> ModularState:
    """All amplitude on ``{theta0 + 2 pi q / d}`` at fixed ``k0``."""
    if grid.m_theta % d:
        raise ValueError(f"d={d} does not divide m_theta={grid.m_theta}")
    spinor = np.asarray(spinor, dtype=complex)
    if spinor.shape != (d,):
        raise ValueError(f"spinor must have {d} components")
    nrm = np.linalg.norm(spinor)
    if nrm == 0:
        raise ValueError("spinor must be nonzero")
    j0, l0 = grid.theta_index(theta0), grid.k_index(k0)
    amps = np.zeros(grid.shape, dtype=complex)
    step = grid.m_theta // d
    for q in range(d):
        amps[(j0 + q * step) % grid.m_theta, l0] = spinor[q] / nrm
    return ModularState(grid, amps / np.sqrt(grid.measure))


def prepare_state(grid: ModularGrid, kind: str, **params: Any) -> ModularState:
    """Build a normalised modular state.

    Kinds: ``gaussian(center, width)``, ``comb(j0)``,
    ``block_qubit(theta0, k0, d, spinor)``, ``cat(center1, center2, width, phase)``.
    Position-space kinds are prepared on the position grid and Zak transformed.
    """
    if kind == "gaussian":
        return zak_forward(gaussian_position(grid, float(params["center"]), float(params["width"])))
    if kind == "comb":
        j0 = int(params["j0"])
        if not 0 <= j0 < grid.m_theta:
            raise ValueError(f"j0 must lie in [0, {grid.m_theta})")
        g = np.zeros(grid.total_dim, dtype=complex)
        g[j0::grid.m_theta] = 1.0
        return zak_forward(PositionState.from_unnormalized(grid, g))
    if kind == "block_qubit":
        return block_qubit(grid, float(params["theta0"]), float(params["k0"]),
                           int(params.get("d", 2)), params["spinor"])
    if kind == "cat":
        g1 = gaussian_position(grid, float(params["center1"]), float(params["width"])).amplitudes
        g2 = gaussian_position(grid, float(params["center2"]), float(params["width"])).amplitudes
        g = g1 + np.exp(1j * float(params.get("phase", 0.0))) * g2
        return zak_forward(PositionState.from_unnormalized(grid, g))
    raise ValueError(f"unknown state kind {kind!r}")


def random_state(grid: ModularGrid, rng: np.random.Generator) -> ModularState:
    """I.i.d. complex Gaussian coefficients, normalised."""
    v = rng.normal(size=grid.total_dim) + 1j * rng.normal(size=grid.total_dim)
    return ModularState.from_vector(grid, v / np.linalg.norm(v))


def state_to_dict(s: ModularState) -> dict[str, Any]:
    flat = s.amplitudes.ravel()
    return {
        "grid": s.grid.to_dict(),
        "amplitudes": [[float(z.real), float(z.imag)] for z in flat],
    }


def state_from_dict(obj: dict[str, Any]) -> ModularState:
    grid = ModularGrid(int(obj["grid"]["m_theta"]), int(obj["grid"]["n_k"]))
    pairs = np.asarray(obj["amplitudes"], dtype=float)
    return ModularState(grid, (pairs[:, 0] + 1j * pairs[:, 1]).reshape(grid.shape))
