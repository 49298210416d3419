"""Entanglement swapping with hybrid cat-state pairs, in closed form.

The coherent-state engine (:mod:`catswap.states`, :mod:`catswap.optics`,
:mod:`catswap.protocol`) is cross-checked by an independent truncated
Fock-space simulation in :mod:`catswap.fock_oracle`.
"""

__version__ = "0.1.0"

from .metrics import (  # noqa: E402
    bell_state,
    fidelity,
    homodyne_success_probability,
    quadrature_distribution,
    trace_distance,
    vacuum_success_probability,
)
from .protocol import (  # noqa: E402
    GaussianLossSpec,
    HeraldedOutcome,
    Peak,
    ProtocolParams,
    run_es_averaged,
    run_es_fixed,
)
from .states import QubitDensity  # noqa: E402

__all__ = [
    "GaussianLossSpec",
    "HeraldedOutcome",
    "Peak",
    "ProtocolParams",
    "QubitDensity",
    "bell_state",
    "fidelity",
    "homodyne_success_probability",
    "quadrature_distribution",
    "run_es_averaged",
    "run_es_fixed",
    "trace_distance",
    "vacuum_success_probability",
]
