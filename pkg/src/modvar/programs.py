"""Gate programs with an optional interferometer node, and the static recipe table."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .gates import (
    Dagger,
    GateSpec,
    SlmPhase,
    UGate,
    XGate,
    ZGate,
    conjugated_shift,
    describe,
    gate_from_dict,
    gate_to_dict,
    sequence_matrix,
)
from .grid import ModularGrid


class UnsupportedTargetError(ValueError):
    pass


@dataclass(frozen=True)
class InterferometerNode:
    """Mach-Zehnder combination of an arm ``M`` with a reference arm.

    The node realizes ``scale * (e^{-i eta} M + e^{i eta} M^dagger)``, the
    observable read out by the port-count difference when the phase ``eta``
    sits on the reference arm.  ``arm`` lists the gates of ``M`` in
    application order (``D`` first, then ``S``).
    """

    arm: tuple[GateSpec, ...]
    eta: float = 0.0
    scale: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"arm": [gate_to_dict(g) for g in self.arm], "eta": self.eta, "scale": self.scale}

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "InterferometerNode":
        return cls(tuple(gate_from_dict(g) for g in obj["arm"]), float(obj.get("eta", 0.0)),
                   float(obj.get("scale", 1.0)))


@dataclass(frozen=True, eq=False)
class GateProgram:
    """``post . node . gates``; without a node the program is the unitary ``gates``."""

    gates: tuple[GateSpec, ...] = ()
    node: InterferometerNode | None = None
    post: tuple[GateSpec, ...] = ()
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "post", tuple(self.post))
        if self.node is None and self.post:
            raise ValueError("post gates need an interferometer node; append them to gates instead")

    def without(self, stage: str, index: int) -> "GateProgram":
        """Copy with one gate removed from ``gates``, ``post`` or the node ``arm``."""
        if stage == "arm":
            arm = self.node.arm[:index] + self.node.arm[index + 1:]
            node = InterferometerNode(arm, self.node.eta, self.node.scale)
            return GateProgram(self.gates, node, self.post, dict(self.metadata))
        seq = getattr(self, stage)
        kept = seq[:index] + seq[index + 1:]
        kw = {"gates": self.gates, "post": self.post, stage: kept}
        return GateProgram(kw["gates"], self.node, kw["post"], dict(self.metadata))

    def listing(self) -> str:
        lines = [describe(g) for g in self.gates]
        if self.node is not None:
            lines.append(f"NODE(eta={self.node.eta:.6g}, scale={self.node.scale:.6g}) {{")
            lines += ["  " + describe(g) for g in self.node.arm]
            lines.append("}")
            lines += [describe(g) for g in self.post]
        return "\n".join(lines) if lines else "(empty program)"

    def to_dict(self) -> dict[str, Any]:
        return {
            "gates": [gate_to_dict(g) for g in self.gates],
            "node": None if self.node is None else self.node.to_dict(),
            "post": [gate_to_dict(g) for g in self.post],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "GateProgram":
        node = obj.get("node")
        return cls(tuple(gate_from_dict(g) for g in obj.get("gates", [])),
                   None if node is None else InterferometerNode.from_dict(node),
                   tuple(gate_from_dict(g) for g in obj.get("post", [])),
                   dict(obj.get("metadata", {})))


def node_matrix(node: InterferometerNode, grid: ModularGrid) -> np.ndarray:
    M = np.exp(-1j * node.eta) * sequence_matrix(node.arm, grid)
    return node.scale * (M + M.conj().T)


def program_to_matrix(p: GateProgram, grid: ModularGrid) -> np.ndarray:
    out = sequence_matrix(p.gates, grid)
    if p.node is not None:
        out = sequence_matrix(p.post, grid) @ node_matrix(p.node, grid) @ out
    return out


# Static recipes ----------------------------------------------------------

def thirds_mask(grid: ModularGrid, phases: Sequence[float]) -> SlmPhase:
    """SLM mask with a constant phase on each third of the ``theta_bar`` circle."""
    third = np.minimum((grid.theta_bar * 3 / (2 * np.pi) + 1e-9).astype(int), 2)
    return SlmPhase(tuple(float(x) for x in np.asarray(phases, dtype=float)[third]))


def gate_recipe(d: int, alpha: int, grid: ModularGrid, axis: str = "theta") -> GateProgram:
    """Gate-level program for ``(d, alpha)``; ``d`` in {2, 3} on the ``theta`` axis, ``d = 2, alpha = 1`` on ``k``."""
    z = (ZGate(1.0),)
    if axis == "k":
        if (d, alpha) == (2, 1):
            return GateProgram(node=InterferometerNode((XGate(2 * np.pi),)))
        raise UnsupportedTargetError(f"no k-axis gate recipe for d={d}, alpha={alpha}")
    if d == 2:
        u = UGate(np.pi / 2)
        if alpha in (2, 3) and grid.m_theta % (2 * grid.n_k):
            # the discrete quarter-period U maps Z(1) to a theta shift only when
            # the momentum window wraps by an even multiple
            raise UnsupportedTargetError(
                f"d=2, alpha={alpha} needs m_theta divisible by 2*n_k; grid is {grid.m_theta}x{grid.n_k}")
        if alpha == 1:
            return GateProgram(node=InterferometerNode(z))
        if alpha == 2:
            return GateProgram((ZGate(0.5), Dagger(u)), InterferometerNode(z), (u, ZGate(-0.5)))
        if alpha == 3:
            return GateProgram((Dagger(u),), InterferometerNode(z), (u,))
        raise UnsupportedTargetError(f"alpha must lie in [1, 3] for d=2, got {alpha}")
    if d == 3:
        from .gamma import SU3_MEMBERS, SU3_OFFDIAG_ALPHAS

        if alpha == 3:
            return GateProgram(node=InterferometerNode(z, 0.0, 0.5))
        if alpha == 8:
            return GateProgram(node=InterferometerNode(z, np.pi / 2, 0.5))
        if alpha in SU3_OFFDIAG_ALPHAS:
            eta, phases = SU3_MEMBERS[SU3_OFFDIAG_ALPHAS.index(alpha)]
            arm = (thirds_mask(grid, phases),) + tuple(conjugated_shift(2 * np.pi / 3, 1.0))
            return GateProgram(node=InterferometerNode(arm, eta))
        raise UnsupportedTargetError(f"alpha must lie in [1, 8] for d=3, got {alpha}")
    raise UnsupportedTargetError(f"no gate recipe for d={d}; use the reflection recipes")


def program_gates(p: GateProgram) -> Sequence[GateSpec]:
    """All gates in the program, node arm included."""
    arm = p.node.arm if p.node is not None else ()
    return list(p.gates) + list(arm) + list(p.post)
