"""Weight functions: root-of-unity periodicity and edge continuity checks.

A weight ``F(theta_bar, k_bar)`` can be split into ``d`` blocks along an axis
when ``F(x + n/d period) = c_n F(x)`` with ``c_n = exp(2 pi i n b / d)`` for a
fixed branch ``b``, and ``F`` has no jump at the domain edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .grid import ModularGrid

ROOT_TOL = 1e-10
ANALYTIC_CONT_TOL = 1e-8
_EDGE_STEP = 1e-9

WeightFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]
WeightInput = Union[np.ndarray, WeightFunc]

NAMED_WEIGHTS: dict[str, WeightFunc] = {
    "cos2": lambda tb, kb: np.cos(tb - kb * np.pi),
    "exp3": lambda tb, kb: np.exp(1j * (tb - kb * 2 * np.pi / 3)),
    "phase3": lambda tb, kb: np.exp(1j * tb) + 0 * kb,
    "cos_theta": lambda tb, kb: np.cos(tb) + 0 * kb,
    "cos_k": lambda tb, kb: np.cos(2 * np.pi * kb) + 0 * tb,
}
NAMED_WEIGHTS["cos"] = NAMED_WEIGHTS["cos2"]


class WeightValidationError(ValueError):
    def __init__(self, report: "WeightReport"):
        super().__init__(
            f"weight fails validation for d={report.d}, axis={report.axis}: "
            f"roots residual {report.roots_residual:.3g}, continuity residual {report.continuity_residual:.3g}")
        self.report = report


def axis_number(axis: str) -> int:
    a = axis.lower()
    if a in ("theta", "t"):
        return 0
    if a in ("k", "kbar"):
        return 1
    raise ValueError(f"axis must be 'theta' or 'k', got {axis!r}")


def axis_name(axis: str) -> str:
    return ("theta", "k")[axis_number(axis)]


def tabulate(func: WeightFunc, grid: ModularGrid) -> np.ndarray:
    tb, kb = grid.mesh()
    return np.asarray(func(tb, kb), dtype=complex)


def resolve_weight(F: WeightInput | str, grid: ModularGrid) -> tuple[np.ndarray, WeightFunc | None]:
    if isinstance(F, str):
        if F not in NAMED_WEIGHTS:
            raise KeyError(f"unknown weight {F!r}; known: {sorted(NAMED_WEIGHTS)}")
        F = NAMED_WEIGHTS[F]
    if callable(F):
        return tabulate(F, grid), F
    arr = np.asarray(F, dtype=complex)
    if arr.shape != grid.shape:
        raise ValueError(f"weight samples must have shape {grid.shape}, got {arr.shape}")
    return arr, None


def roots_residuals(F: np.ndarray, d: int, axis: int) -> np.ndarray:
    """Max residual of the periodicity condition for each branch ``b``.

    ``F`` may carry extra dimensions; ``axis`` selects the one being split.
    """
    n = F.shape[axis]
    if n % d:
        raise ValueError(f"d={d} does not divide the axis sample count {n}")
    p = n // d
    parts = np.moveaxis(F, axis, 0).reshape((d, p) + F.shape[:axis] + F.shape[axis + 1:])
    base = parts[0]
    out = np.empty(d)
    for b in range(d):
        c = np.exp(2j * np.pi * np.arange(d) * b / d)
        res = parts - c.reshape((d,) + (1,) * base.ndim) * base
        out[b] = float(np.max(np.abs(res))) if res.size else 0.0
    return out


def tabulated_continuity_residual(F: np.ndarray, d: int, axis: int) -> float:
    """Excess of the largest domain-edge jump over twice the largest interior step."""
    n = F.shape[axis]
    p = n // d
    G = np.moveaxis(F, axis, 0)
    steps = np.abs(np.roll(G, -1, axis=0) - G)  # steps[i] = |F[i+1] - F[i]|, cyclic
    edge = np.zeros(n, dtype=bool)
    edge[np.arange(1, d + 1) * p - 1] = True  # the step leaving each domain
    interior = float(steps[~edge].max()) if (~edge).any() else 0.0
    return max(0.0, float(steps[edge].max()) - 2 * interior - 1e-12)


def analytic_continuity_residual(func: WeightFunc, grid: ModularGrid, d: int, axis: int) -> float:
    period = 2 * np.pi if axis == 0 else 1.0
    edges = np.arange(1, d + 1) * period / d
    other = grid.k_bar if axis == 0 else grid.theta_bar
    worst = 0.0
    for e in edges:
        right = e % period
        if axis == 0:
            left_v, right_v = func(e - _EDGE_STEP + 0 * other, other), func(right + 0 * other, other)
        else:
            left_v, right_v = func(other, e - _EDGE_STEP + 0 * other), func(other, right + 0 * other)
        worst = max(worst, float(np.max(np.abs(np.asarray(left_v) - np.asarray(right_v)))))
    return worst


@dataclass(frozen=True)
class WeightReport:
    d: int
    axis: str
    passed: bool
    root_branch: int | None
    roots_residual: float
    continuity_residual: float
    branch_residuals: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "d": self.d, "axis": self.axis, "passed": self.passed,
            "root_branch": self.root_branch, "roots_residual": self.roots_residual,
            "continuity_residual": self.continuity_residual,
            "branch_residuals": list(self.branch_residuals),
        }


def validate_weight(F: WeightInput | str, d: int, axis: str = "theta", grid: ModularGrid | None = None,
                    tol: float = ROOT_TOL, cont_tol: float | None = None) -> WeightReport:
    """Check root-of-unity periodicity and edge continuity of a weight on the grid.

    ``F`` is an array of samples on ``grid`` (shape ``(m_theta, n_k)``), a
    callable ``F(theta_bar, k_bar)``, or a registered weight name.
    """
    ax = axis_number(axis)
    if grid is None:
        if callable(F) or isinstance(F, str):
            raise ValueError("a grid is needed to tabulate an analytic weight")
        grid = ModularGrid(*np.shape(F))
    samples, func = resolve_weight(F, grid)
    branches = roots_residuals(samples, d, ax)
    b = int(np.argmin(branches))
    if func is not None:
        cont = analytic_continuity_residual(func, grid, d, ax)
        cont_tol = ANALYTIC_CONT_TOL if cont_tol is None else cont_tol
    else:
        cont = tabulated_continuity_residual(samples, d, ax)
        cont_tol = 0.0 if cont_tol is None else cont_tol
    roots_ok = branches[b] <= tol
    return WeightReport(
        d=d, axis=axis_name(axis), passed=bool(roots_ok and cont <= cont_tol),
        root_branch=b if roots_ok else None, roots_residual=float(branches[b]),
        continuity_residual=float(cont), branch_residuals=tuple(float(x) for x in branches))


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """A weight that passed ``validate_weight`` for ``(d, axis)``."""

    grid: ModularGrid
    d: int
    axis: str
    samples: np.ndarray
    root_branch: int
    name: str | None = None

    @property
    def fundamental(self) -> np.ndarray:
        """Samples on the fundamental domain (first ``1/d`` of the split axis)."""
        if axis_number(self.axis) == 0:
            return self.samples[: self.grid.m_theta // self.d, :]
        return self.samples[:, : self.grid.n_k // self.d]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))


def make_weight(F: WeightInput | str, d: int, grid: ModularGrid, axis: str = "theta",
                **kwargs) -> WeightSpec:
    report = validate_weight(F, d, axis, grid, **kwargs)
    if not report.passed:
        raise WeightValidationError(report)
    samples, _ = resolve_weight(F, grid)
    samples = samples.copy()
    samples.setflags(write=False)
    return WeightSpec(grid, d, axis_name(axis), samples, report.root_branch,
                      F if isinstance(F, str) else None)
