"""Compile block-operator targets into gate programs and verify them densely.

Recipes are static: d = 2 and d = 3 targets use the X/Z/U/SLM recipes of
``programs.gate_recipe``; region targets (``Sigma_i^(jk)``, or any ``alpha``
with ``reflections=True``) use reflection sequences plus SLM phases.

Regions: for block size ``d``, region ``r`` (1-based) is
``[(r - 1) 2 pi/d - pi/d, (r - 1) 2 pi/d + pi/d)``.  Reflection programs act
on the single-period window ``[-pi/d, 2 pi - pi/d)``, so they are verified on
states supported in that window.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .blocks import check_divisible
from .conventions import CONVENTION_VERSION, direct_operator
from .gamma import build_su3_family
from .gates import Reflect, SlmPhase, position_matrix
from .generators import gellmann, gellmann_label
from .grid import ModularGrid, zak_matrix
from .programs import GateProgram, InterferometerNode, UnsupportedTargetError, gate_recipe, program_to_matrix

VERIFY_TOL = 1e-8


class VerificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TargetSpec:
    """What to compile.

    ``kind`` is ``gamma`` (uses ``alpha``), ``sigma`` (uses ``sigma = (i, j, k)``
    for ``Sigma_i^(jk)`` between regions ``j < k``) or ``identity``.
    ``weight`` names the weight being realized; ``None`` selects the weight
    the recipe realizes (see ``conventions``).
    """

    d: int
    alpha: int | None = None
    kind: str = "gamma"
    sigma: tuple[int, int, int] | None = None
    axis: str = "theta"
    weight: str | None = None
    reflections: bool = False

    def __post_init__(self):
        if self.kind not in ("gamma", "sigma", "identity"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind == "gamma" and self.alpha is None:
            raise ValueError("gamma targets need alpha")
        if self.kind == "sigma":
            if self.sigma is None:
                raise ValueError("sigma targets need sigma=(i, j, k)")
            i, j, k = self.sigma
            object.__setattr__(self, "sigma", (int(i), int(j), int(k)))
            if i not in (1, 2, 3) or not 1 <= j < k <= self.d:
                raise ValueError(f"sigma=(i, j, k) needs i in 1..3 and 1 <= j < k <= d, got {self.sigma}")

    @property
    def uses_regions(self) -> bool:
        return self.kind == "sigma" or (self.kind == "gamma" and self.reflections)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["sigma"] = list(self.sigma) if self.sigma else None
        return out

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "TargetSpec":
        obj = dict(obj)
        if obj.get("sigma") is not None:
            obj["sigma"] = tuple(obj["sigma"])
        return cls(**obj)


def _check_weight(t: TargetSpec) -> None:
    allowed = {None, "gate"}
    if t.d == 3 and not t.uses_regions:
        allowed.add("phase3")
    if t.uses_regions:
        allowed.add("unit")
    if t.weight not in allowed:
        raise UnsupportedTargetError(
            f"weight {t.weight!r} is not realized by the recipe for this target; allowed: "
            f"{sorted(a for a in allowed if a)}")


# Regions -----------------------------------------------------------------

def region_center(d: int, r: int) -> float:
    return (r - 1) * 2 * np.pi / d


def region_of_cells(grid: ModularGrid, d: int) -> np.ndarray:
    """Region label (1..d) of each position cell, periodic in every period."""
    u = np.mod(grid.theta + np.pi / d + 1e-9, 2 * np.pi)
    return (u // (2 * np.pi / d)).astype(int) + 1


def window_cells(grid: ModularGrid, d: int) -> np.ndarray:
    """Position indices of the window ``[-pi/d, 2 pi - pi/d)``, wrapped on the grid."""
    lo = -grid.m_theta // (2 * d)
    return np.arange(lo, lo + grid.m_theta) % grid.total_dim


def _to_modular(P: np.ndarray, grid: ModularGrid) -> np.ndarray:
    W = zak_matrix(grid)
    return W @ P @ W.conj().T


def _region_swap_position(grid: ModularGrid, d: int, j: int, k: int, phase_j: complex,
                          phase_k: complex) -> np.ndarray:
    """Pair operator ``phase_j |j><k| + phase_k |k><j|`` on regions, zero elsewhere."""
    N, m = grid.total_dim, grid.m_theta
    reg = region_of_cells(grid, d)
    shift = (k - j) * m // d
    P = np.zeros((N, N), dtype=complex)
    s = np.arange(N)
    in_j, in_k = s[reg == j], s[reg == k]
    P[(in_j + shift) % N, in_j] = phase_k
    P[(in_k - shift) % N, in_k] = phase_j
    return P


def region_sigma(grid: ModularGrid, d: int, i: int, j: int, k: int) -> np.ndarray:
    """Dense modular matrix of ``Sigma_i^(jk)`` built directly as a (phased) permutation."""
    check_divisible(grid, d, "theta")
    if i == 1:
        reg = region_of_cells(grid, d)
        P = np.diag(np.where(reg == j, 1.0, np.where(reg == k, -1.0, 0.0)).astype(complex))
    elif i == 2:
        P = _region_swap_position(grid, d, j, k, 1, 1)
    else:
        P = _region_swap_position(grid, d, j, k, -1j, 1j)
    return _to_modular(P, grid)


def region_generator(grid: ModularGrid, d: int, alpha: int) -> np.ndarray:
    """Generalized Gell-Mann matrix ``alpha`` acting on region labels."""
    kind, j, k = gellmann_label(d, alpha)
    if kind == "sym":
        return region_sigma(grid, d, 2, j + 1, k + 1)
    if kind == "asym":
        return region_sigma(grid, d, 3, j + 1, k + 1)
    vals = np.diagonal(gellmann(d, alpha).matrix).real
    reg = region_of_cells(grid, d)
    return _to_modular(np.diag(vals[reg - 1].astype(complex)), grid)


def _region_phase_mask(grid: ModularGrid, d: int, phases: dict[int, float], default: float) -> SlmPhase:
    u = np.mod(grid.theta_bar + np.pi / d + 1e-9, 2 * np.pi)
    reg = (u // (2 * np.pi / d)).astype(int) + 1
    return SlmPhase(tuple(float(phases.get(int(r), default)) for r in reg))


def swap_reflections(grid: ModularGrid, d: int, j: int, k: int) -> tuple[Reflect, ...]:
    """Reflections translating region ``j`` onto ``k`` and back, identity elsewhere in the window."""
    h = np.pi / d
    cj, ck = region_center(d, j), region_center(d, k)
    if d == 2 and (j, k) == (1, 2):
        # three-reflection form for the half-circle swap
        return (Reflect(0.0, 2 * np.pi), Reflect(np.pi / 2, np.pi), Reflect(-np.pi / 2, np.pi))
    seq = [Reflect((cj + ck) / 2, (ck - cj) / 2 + h), Reflect(cj, h), Reflect(ck, h)]
    if ck - cj > 2 * h + 1e-12:
        seq.append(Reflect((cj + ck) / 2, (ck - cj) / 2 - h))
    return tuple(seq)


def _sigma_program(grid: ModularGrid, d: int, i: int, j: int, k: int, scale: float = 1.0) -> GateProgram:
    if i == 1:
        mask = _region_phase_mask(grid, d, {j: 0.0, k: np.pi}, np.pi / 2)
        return GateProgram(node=InterferometerNode((mask,), 0.0, 0.5 * scale))
    refl = swap_reflections(grid, d, j, k)
    arm = refl if i == 2 else refl + (_region_phase_mask(grid, d, {j: -np.pi / 2, k: np.pi / 2}, 0.0),)
    if d == 2 and scale == 1.0:
        return GateProgram(arm)  # no spectator regions: the permutation is the operator
    spectator = _region_phase_mask(grid, d, {j: 0.0, k: 0.0}, np.pi / 2)
    return GateProgram(node=InterferometerNode((spectator,) + arm, 0.0, 0.5 * scale))


def _diag_program(grid: ModularGrid, d: int, alpha: int) -> GateProgram:
    vals = np.diagonal(gellmann(d, alpha).matrix).real
    scale = float(np.max(np.abs(vals)))
    phases = {r + 1: float(np.arccos(np.clip(vals[r] / scale, -1, 1))) for r in range(d)}
    mask = _region_phase_mask(grid, d, phases, 0.0)
    return GateProgram(node=InterferometerNode((mask,), 0.0, 0.5 * scale))


# Compile / verify --------------------------------------------------------

def compile_gamma(t: TargetSpec, grid: ModularGrid) -> GateProgram:
    _check_weight(t)
    meta = {"target": t.to_dict(), "convention_version": CONVENTION_VERSION, "grid": grid.to_dict()}
    if t.kind == "identity":
        return GateProgram(metadata={**meta, "recipe": "identity"})
    check_divisible(grid, t.d, t.axis)
    if t.kind == "sigma":
        p = _sigma_program(grid, t.d, *t.sigma)
        recipe = "reflections"
    elif t.reflections:
        if t.axis != "theta":
            raise UnsupportedTargetError("reflection recipes act on the theta axis only")
        kind, j, k = gellmann_label(t.d, t.alpha)
        if kind == "diag":
            p = _diag_program(grid, t.d, t.alpha)
        else:
            p = _sigma_program(grid, t.d, 2 if kind == "sym" else 3, j + 1, k + 1)
            if t.d == 2 and p.node is None:
                p = GateProgram(node=InterferometerNode(p.gates, 0.0, 0.5))
        recipe = "reflections"
    else:
        if t.d not in (2, 3):
            raise UnsupportedTargetError(f"no gate recipe for d={t.d}; pass reflections=True")
        p = gate_recipe(t.d, t.alpha, grid, t.axis)
        recipe = "gates"
    return GateProgram(p.gates, p.node, p.post, {**meta, "recipe": recipe})


def target_matrix(t: TargetSpec, grid: ModularGrid) -> np.ndarray:
    """Direct (non-gate) construction of the target in the modular basis."""
    if t.kind == "identity":
        return np.eye(grid.total_dim, dtype=complex)
    if t.kind == "sigma":
        return region_sigma(grid, t.d, *t.sigma)
    if t.reflections:
        return region_generator(grid, t.d, t.alpha)
    if t.d == 2:
        return direct_operator(2, t.alpha, grid, t.axis).to_dense()
    if t.d == 3 and t.axis == "theta":
        return build_su3_family(grid, "phase3", check_rank=False)[t.alpha - 1].to_dense()
    raise UnsupportedTargetError(f"no direct construction for {t}")


@dataclass(frozen=True)
class VerificationReport:
    deviation: float
    passed: bool
    tolerance: float
    window_only: bool

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def verify(p: GateProgram, t: TargetSpec, grid: ModularGrid, tol: float = VERIFY_TOL) -> VerificationReport:
    """Max elementwise deviation between the program and the direct construction.

    Region targets are compared on states supported in the reflection window.
    """
    M = program_to_matrix(p, grid)
    T = target_matrix(t, grid)
    window = t.uses_regions and t.kind != "identity"
    if window:
        W = zak_matrix(grid)
        cols = window_cells(grid, t.d)
        dev = float(np.max(np.abs((W.conj().T @ (M - T) @ W)[:, cols])))
    else:
        dev = float(np.max(np.abs(M - T)))
    return VerificationReport(dev, dev < tol, tol, window)


def reflection_matrix(r: Reflect, grid: ModularGrid) -> np.ndarray:
    return position_matrix(r, grid)
