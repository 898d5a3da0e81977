"""Numerical laboratory for modular-variable states and continuous-spectrum SU(d) operators."""

__version__ = "0.1.0"

from .grid import (  # noqa: E402
    DEFAULT_GRID,
    ModularGrid,
    ModularState,
    PositionState,
    inner_product,
    make_grid,
    prepare_state,
    zak_forward,
    zak_inverse,
)
from .gates import XGate, ZGate, UGate, SlmPhase, Reflect, Dagger, gate_to_matrix  # noqa: E402
from .weights import make_weight, validate_weight  # noqa: E402
from .blocks import BlockOperator  # noqa: E402
from .gamma import build_delta, build_gamma, build_gamma_phi, build_lambda, build_shift, build_su3_family  # noqa: E402
from .compiler import TargetSpec, compile_gamma, verify  # noqa: E402
