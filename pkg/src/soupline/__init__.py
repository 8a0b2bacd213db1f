"""Provable availability/throughput bounds for sums of independent up-to-unit demands."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    ChernoffStyle,
    Exp,
    ExpMinusOne,
    ExpMinusOneClosedForm,
    FixedConvex,
    OptimalRelu,
    PiecewiseLinear,
    Relu,
    SupplyContext,
    TradeoffPoint,
    throughput_floor,
    unavailability_ceiling,
)
from .benchmark import poisson_frontier, poisson_tau_of_alpha  # noqa: E402
from .curves import CurveData  # noqa: E402
from .errors import SouplineError  # noqa: E402
