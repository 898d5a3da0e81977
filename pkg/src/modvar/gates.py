"""Primitive gate set acting on position / modular states.

All gates are defined by their action on the periodic position grid and are
carried into the modular basis by the Zak transform.  Gate sequences are lists
in *application order*: the first element acts first, so the operator of
``[a, b, c]`` is ``C @ B @ A``.

* ``XGate(theta)``   translation ``|theta'> -> |theta' + theta>`` (cyclic over the grid)
* ``ZGate(k)``       multiplication by ``exp(i k theta)``
* ``UGate(phi)``     quadratic gate ``exp(-i k^2 phi)`` in the momentum representation
* ``SlmPhase``       tabulated position-dependent phase ``exp(i F(theta))``
* ``Reflect``        mirror of the cells in ``[theta_p - delta, theta_p + delta)``
* ``Dagger(g)``      inverse of ``g``
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Sequence, Union

import numpy as np

from .grid import (
    ModularGrid,
    ModularState,
    PositionState,
    inverse_zak_coefficients,
    zak_coefficients,
)

ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class XGate:
    theta: float


@dataclass(frozen=True)
class ZGate:
    k: float


@dataclass(frozen=True)
class UGate:
    phi: float


@dataclass(frozen=True)
class SlmPhase:
    """Phase mask; ``phases`` has one entry per position sample, or one per
    ``theta_bar`` sample (then repeated in every period)."""

    phases: tuple[float, ...]


@dataclass(frozen=True)
class Reflect:
    theta_p: float
    delta: float


@dataclass(frozen=True)
class Dagger:
    of: "GateSpec"


GateSpec = Union[XGate, ZGate, UGate, SlmPhase, Reflect, Dagger]


class MisalignedRegionError(ValueError):
    pass


def momentum_grid(grid: ModularGrid) -> np.ndarray:
    """DFT dual of the position grid, ``k_t = t / n_k`` on ``[-m_theta/2, m_theta/2)``."""
    return np.fft.fftfreq(grid.total_dim, d=grid.delta_theta) * 2 * np.pi


def _aligned_steps(x: float, step: float) -> int | None:
    r = x / step
    p = int(round(r))
    return p if abs(r - p) < ALIGN_TOL else None


def reflection_permutation(grid: ModularGrid, theta_p: float, delta: float) -> np.ndarray:
    """Index map ``perm`` with ``out[perm[s]] = in[s]`` for the cell reflection."""
    a = _aligned_steps(theta_p - delta, grid.delta_theta)
    b = _aligned_steps(theta_p + delta, grid.delta_theta)
    if a is None or b is None:
        raise MisalignedRegionError(
            f"reflection region [{theta_p - delta}, {theta_p + delta}) is not on cell edges")
    if not 0 <= b - a <= grid.total_dim:
        raise MisalignedRegionError("reflection region exceeds the position range")
    perm = np.arange(grid.total_dim)
    s = np.arange(a, b)
    # cell [s, s+1) mirrors onto [a+b-1-s, a+b-s)
    perm[s % grid.total_dim] = (a + b - 1 - s) % grid.total_dim
    return perm


def _apply_position(g: GateSpec, grid: ModularGrid, v: np.ndarray) -> np.ndarray:
    """Act with ``g`` on position coefficients along the last axis."""
    if isinstance(g, XGate):
        p = _aligned_steps(g.theta, grid.delta_theta)
        if p is not None:
            return np.roll(v, p, axis=-1)
        k = momentum_grid(grid)
        return np.fft.ifft(np.fft.fft(v, axis=-1) * np.exp(-1j * k * g.theta), axis=-1)
    if isinstance(g, ZGate):
        return v * np.exp(1j * g.k * grid.theta)
    if isinstance(g, UGate):
        k = momentum_grid(grid)
        return np.fft.ifft(np.fft.fft(v, axis=-1) * np.exp(-1j * k**2 * g.phi), axis=-1)
    if isinstance(g, SlmPhase):
        return v * np.exp(1j * slm_samples(grid, g))
    if isinstance(g, Reflect):
        perm = reflection_permutation(grid, g.theta_p, g.delta)
        out = np.empty_like(v)
        out[..., perm] = v
        return out
    if isinstance(g, Dagger):
        return _apply_position(inverse(g.of), grid, v)
    raise TypeError(f"not a gate: {g!r}")


def slm_samples(grid: ModularGrid, g: SlmPhase) -> np.ndarray:
    phases = np.asarray(g.phases, dtype=float)
    if phases.shape == (grid.m_theta,):
        return np.tile(phases, grid.n_k)
    if phases.shape == (grid.total_dim,):
        return phases
    raise ValueError(f"SLM mask needs {grid.m_theta} or {grid.total_dim} samples, got {phases.shape}")


def inverse(g: GateSpec) -> GateSpec:
    if isinstance(g, XGate):
        return XGate(-g.theta)
    if isinstance(g, ZGate):
        return ZGate(-g.k)
    if isinstance(g, UGate):
        return UGate(-g.phi)
    if isinstance(g, SlmPhase):
        return SlmPhase(tuple(-x for x in g.phases))
    if isinstance(g, Reflect):
        return g
    if isinstance(g, Dagger):
        return g.of
    raise TypeError(f"not a gate: {g!r}")


def apply_gate(g: GateSpec, s: ModularState | PositionState) -> ModularState | PositionState:
    if isinstance(s, PositionState):
        return PositionState.from_vector(s.grid, _apply_position(g, s.grid, s.vector))
    if isinstance(s, ModularState):
        pos = inverse_zak_coefficients(s.grid, s.vector)
        out = _apply_position(g, s.grid, pos)
        return ModularState.from_vector(s.grid, zak_coefficients(s.grid, out))
    raise TypeError("expected a ModularState or PositionState")


def apply_sequence(gates: Sequence[GateSpec], s):
    for g in gates:
        s = apply_gate(g, s)
    return s


def apply_X(theta: float, s):
    return apply_gate(XGate(theta), s)


def apply_Z(k: float, s):
    return apply_gate(ZGate(k), s)


def apply_U(phi: float, s):
    return apply_gate(UGate(phi), s)


def apply_reflection(theta_p: float, delta: float, s):
    return apply_gate(Reflect(theta_p, delta), s)


def position_matrix(g: GateSpec, grid: ModularGrid) -> np.ndarray:
    eye = np.eye(grid.total_dim, dtype=complex)
    # rows of the stacked result are images of basis vectors
    return _apply_position(g, grid, eye).T


@lru_cache(maxsize=256)
def _gate_matrix_cached(g: GateSpec, grid: ModularGrid) -> np.ndarray:
    eye = np.eye(grid.total_dim, dtype=complex)
    # columns: image of each modular basis vector
    pos = inverse_zak_coefficients(grid, eye)
    out = zak_coefficients(grid, _apply_position(g, grid, pos)).T
    out.setflags(write=False)
    return out


def gate_to_matrix(g: GateSpec, grid: ModularGrid) -> np.ndarray:
    """Dense modular-basis matrix (index ``j * n_k + l``) of a gate."""
    return _gate_matrix_cached(g, grid)


def sequence_matrix(gates: Sequence[GateSpec], grid: ModularGrid) -> np.ndarray:
    out = np.eye(grid.total_dim, dtype=complex)
    for g in gates:
        out = gate_to_matrix(g, grid) @ out
    return out


def conjugated_shift(phi: float, k: float = 1.0) -> list[GateSpec]:
    """``U[phi/2] Z(k) U^dagger[phi/2]`` as an application-ordered list.

    For ``k = 1`` this translates ``theta_bar`` by ``phi`` (with a
    ``theta``-dependent phase).
    """
    return [Dagger(UGate(phi / 2)), ZGate(k), UGate(phi / 2)]


def region_mask(grid: ModularGrid, lo: float, hi: float) -> np.ndarray:
    """Boolean mask of position cells inside ``[lo, hi)`` (wrapped on the torus)."""
    a = _aligned_steps(lo, grid.delta_theta)
    b = _aligned_steps(hi, grid.delta_theta)
    if a is None or b is None:
        raise MisalignedRegionError(f"region [{lo}, {hi}) is not on cell edges")
    mask = np.zeros(grid.total_dim, dtype=bool)
    mask[np.arange(a, b) % grid.total_dim] = True
    return mask


def gate_to_dict(g: GateSpec) -> dict[str, Any]:
    if isinstance(g, XGate):
        return {"gate": "X", "theta": g.theta}
    if isinstance(g, ZGate):
        return {"gate": "Z", "k": g.k}
    if isinstance(g, UGate):
        return {"gate": "U", "phi": g.phi}
    if isinstance(g, SlmPhase):
        return {"gate": "SLM", "phases": list(g.phases)}
    if isinstance(g, Reflect):
        return {"gate": "R", "theta_p": g.theta_p, "delta": g.delta}
    if isinstance(g, Dagger):
        return {"gate": "DAG", "of": gate_to_dict(g.of)}
    raise TypeError(f"not a gate: {g!r}")


def gate_from_dict(obj: dict[str, Any]) -> GateSpec:
    tag = obj["gate"]
    if tag == "X":
        return XGate(float(obj["theta"]))
    if tag == "Z":
        return ZGate(float(obj["k"]))
    if tag == "U":
        return UGate(float(obj["phi"]))
    if tag == "SLM":
        return SlmPhase(tuple(float(x) for x in obj["phases"]))
    if tag == "R":
        return Reflect(float(obj["theta_p"]), float(obj["delta"]))
    if tag == "DAG":
        return Dagger(gate_from_dict(obj["of"]))
    raise ValueError(f"unknown gate tag {tag!r}")


def describe(g: GateSpec) -> str:
    if isinstance(g, XGate):
        return f"X(theta={g.theta:.6g})"
    if isinstance(g, ZGate):
        return f"Z(k={g.k:.6g})"
    if isinstance(g, UGate):
        return f"U(phi={g.phi:.6g})"
    if isinstance(g, SlmPhase):
        return f"SLM({len(g.phases)} samples)"
    if isinstance(g, Reflect):
        return f"R(theta_p={g.theta_p:.6g}, delta={g.delta:.6g})"
    return f"DAG[{describe(g.of)}]"
