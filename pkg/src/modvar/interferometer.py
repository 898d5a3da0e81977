"""Mach-Zehnder readout and state-output simulation for ``Gamma = 2 Re[S D]``.

Both beam splitters are 50/50 and antisymmetric by default.  The phase
``eta`` sits on the reference arm, so the port difference reads
``Re[e^{-i eta} <S D>]``: the real part at ``eta = 0`` and the imaginary part
at ``eta = pi/2``.  An unbalanced first splitter (``beta``, ``epsilon``)
scales the readout by ``sin(2 beta)`` and adds ``epsilon`` to the phase.
"""
from __future__ import annotations

import numpy as np

from .blocks import BlockOperator
from .grid import GridMismatchError, ModularState

NORM_SLACK = 1e-10


class NormPreconditionError(ValueError):
    pass


def _dense(op, dim: int) -> np.ndarray:
    if op is None:
        return np.eye(dim, dtype=complex)
    M = op.to_dense() if isinstance(op, BlockOperator) else np.asarray(op, dtype=complex)
    if M.shape != (dim, dim):
        raise GridMismatchError(f"operator shape {M.shape} does not match the state dimension {dim}")
    return M


def _arm(S, D, s: ModularState) -> tuple[np.ndarray, np.ndarray]:
    n = s.grid.total_dim
    M = _dense(S, n) @ _dense(D, n)
    return M, s.vector


def mz_probabilities(S, D, eta: float, s: ModularState, beta: float = np.pi / 4,
                     epsilon: float = 0.0) -> tuple[float, float]:
    """Port probabilities ``P_{1,2} = (1 +- sin(2 beta) Re[e^{-i(eta+epsilon)} <S D>]) / 2``.

    Requires ``||S D psi|| <= 1`` so both values lie in ``[0, 1]``.
    """
    M, v = _arm(S, D, s)
    Mv = M @ v
    if np.linalg.norm(Mv) > 1 + NORM_SLACK:
        raise NormPreconditionError(f"||S D psi|| = {np.linalg.norm(Mv):.6g} exceeds 1")
    r = np.sin(2 * beta) * (np.exp(-1j * (eta + epsilon)) * np.vdot(v, Mv)).real
    return 0.5 * (1 + r), 0.5 * (1 - r)


def mz_output_state(S, D, eta: float, port: int, s: ModularState) -> tuple[ModularState | None, float]:
    """Post-selected output ``(S D +- e^{i eta} (S D)^dagger) psi / 2`` and its probability.

    Port 1 takes ``+``, port 2 takes ``-``.  Returns ``(None, 0.0)`` when the
    port is dark.
    """
    if port not in (1, 2):
        raise ValueError("port must be 1 or 2")
    M, v = _arm(S, D, s)
    sign = 1 if port == 1 else -1
    out = 0.5 * (M @ v + sign * np.exp(1j * eta) * (M.conj().T @ v))
    prob = float(np.vdot(out, out).real)
    if prob < 1e-24:
        return None, 0.0
    return ModularState.from_vector(s.grid, out / np.sqrt(prob)), prob
