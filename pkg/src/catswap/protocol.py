"""End-to-end entanglement swapping with hybrid cat-state pairs.

Alice holds qubit A and CV mode B, Bob holds qubit C and CV mode D.  B and D
pass through lossy channels (environment modes EB, ED), meet on a 50:50
beam splitter, B is projected on the vacuum and D is measured by homodyne
detection at ``theta = pi/4``.  The heralded state of (A, C) is returned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .optics import (
    QuadratureNodes,
    apply_balanced_bs,
    apply_controlled_rotation,
    apply_hadamard,
    apply_lossy_bs,
    project_homodyne_intervals,
    project_homodyne_point,
    project_vacuum,
)
from .states import (
    A,
    B,
    C,
    D,
    EB,
    ED,
    ModeId,
    ModeKind,
    PureState,
    QubitDensity,
    add_vacuum_mode,
    reduced_density,
    tensor,
)

__all__ = [
    "Peak",
    "ProtocolParams",
    "GaussianLossSpec",
    "HeraldedOutcome",
    "cat_normalization",
    "prepare_hybrid_pair",
    "lossy_state",
    "vacuum_heralded_state",
    "homodyne_centre",
    "heralded_pure_state",
    "run_es_fixed",
    "run_es_averaged",
    "gaussian_weight",
    "db_to_transmission",
    "transmission_to_db",
    "distance_for_T",
]

ALPHA_MAX = 6.0


class Peak(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    BOTH = "both"


@dataclass(frozen=True)
class ProtocolParams:
    """Settings for one protocol run.

    ``dx=None`` selects ideal (point) homodyne detection; otherwise ``dx`` is
    the acceptance bandwidth around each peak.  Mode D has transmission
    ``T - upsilon``.
    """

    alpha: float
    T: float = 1.0
    upsilon: float = 0.0
    dx: float | None = None
    peak: Peak = Peak.PLUS
    nodes: QuadratureNodes = field(default_factory=QuadratureNodes)
    theta: float = math.pi / 4

    def __post_init__(self):
        if not 0.0 <= self.alpha <= ALPHA_MAX:
            raise ValueError(f"alpha must be in [0, {ALPHA_MAX}], got {self.alpha}")
        if not 0.0 <= self.T <= 1.0:
            raise ValueError(f"T must be in [0, 1], got {self.T}")
        if not 0.0 <= self.upsilon <= self.T:
            raise ValueError(f"upsilon must be in [0, T], got {self.upsilon}")
        if self.dx is not None and not self.dx > 0:
            raise ValueError(f"dx must be positive (or None for ideal), got {self.dx}")
        if not isinstance(self.peak, Peak):
            object.__setattr__(self, "peak", Peak(self.peak))

    @property
    def T_B(self) -> float:
        return self.T

    @property
    def T_D(self) -> float:
        return max(self.T - self.upsilon, 0.0)

    @property
    def ideal(self) -> bool:
        return self.dx is None

    def replace(self, **changes) -> ProtocolParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class GaussianLossSpec:
    """One-sided Gaussian ensemble of loss mismatches of width ``Upsilon``.

    ``upsilon_max=None`` truncates at ``min(6 * Upsilon, T)``.
    """

    Upsilon: float
    node_count: int = 48
    upsilon_max: float | None = None

    def __post_init__(self):
        if not self.Upsilon > 1e-4:
            raise ValueError(
                f"Upsilon={self.Upsilon} is numerically degenerate; must exceed 1e-4"
            )
        if self.node_count < 8:
            raise ValueError(f"node_count must be >= 8, got {self.node_count}")
        if self.upsilon_max is not None and not self.upsilon_max > 0:
            raise ValueError("upsilon_max must be positive")

    def support(self, T: float) -> float:
        hi = 6.0 * self.Upsilon if self.upsilon_max is None else self.upsilon_max
        if hi > T:
            hi = T
        return hi

    def nodes(self, T: float) -> tuple[np.ndarray, np.ndarray]:
        """Mismatch values and normalised weights on the truncated support."""
        hi = self.support(T)
        if not hi > 0:
            raise ValueError("empty mismatch support (T = 0)")
        t, w = np.polynomial.legendre.leggauss(self.node_count)
        ups = 0.5 * hi * (t + 1.0)
        weights = 0.5 * hi * w * gaussian_weight(ups, self.Upsilon)
        return ups, weights / weights.sum()


@dataclass(frozen=True)
class HeraldedOutcome:
    """Heralded two-qubit state with the measurement success probabilities.

    ``p_homodyne`` is conditional on the vacuum outcome and is ``None`` for
    ideal homodyne detection, whose outcome has zero probability.
    """

    rho: QubitDensity
    p_vacuum: float
    p_homodyne: float | None


def cat_normalization(alpha: float, sign: int = +1) -> float:
    return 1.0 / math.sqrt(2.0 + 2.0 * sign * math.exp(-2.0 * alpha**2))


def prepare_hybrid_pair(alpha: float, dv: ModeId = A, cv: ModeId = B) -> PureState:
    """Hybrid qubit / cat-state pair, built by its preparation circuit.

    Starts from ``|0>`` times an even cat, applies a Hadamard to the qubit and
    a controlled pi/2 phase-space rotation to the CV mode.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if dv.kind is not ModeKind.DV or cv.kind is not ModeKind.CV:
        raise ValueError("prepare_hybrid_pair needs one DV and one CV mode")
    n = cat_normalization(alpha)
    s = PureState((dv, cv), [[0], [0]], [[alpha], [-alpha]], [n, n])
    s = apply_hadamard(s, dv)
    return apply_controlled_rotation(s, dv, cv, math.pi / 2)


def lossy_state(params: ProtocolParams) -> PureState:
    """Both pairs after the loss channels; registry (A, B, C, D, EB, ED)."""
    s = tensor(prepare_hybrid_pair(params.alpha, A, B), prepare_hybrid_pair(params.alpha, C, D))
    s = add_vacuum_mode(add_vacuum_mode(s, EB), ED)
    s = apply_lossy_bs(s, B, EB, params.T_B)
    return apply_lossy_bs(s, D, ED, params.T_D)


def vacuum_heralded_state(params: ProtocolParams) -> tuple[PureState, float]:
    """State after the 50:50 mixer and the vacuum projection on B (not renormalised)."""
    s = apply_balanced_bs(lossy_state(params), B, D)
    return project_vacuum(s, B)


def homodyne_centre(params: ProtocolParams) -> float:
    """Positive peak position of the pi/4 quadrature of mode D."""
    return 0.5 * (math.sqrt(params.T_B) + math.sqrt(params.T_D)) * params.alpha


def _peak_centres(params: ProtocolParams) -> list[float]:
    x0 = homodyne_centre(params)
    return {Peak.PLUS: [x0], Peak.MINUS: [-x0], Peak.BOTH: [x0, -x0]}[params.peak]


def heralded_pure_state(params: ProtocolParams, x: float | None = None) -> PureState:
    """Unnormalised state of (A, C, EB, ED) after an ideal homodyne outcome ``x``.

    ``x`` defaults to the centre of the selected peak (``Peak.BOTH`` is not
    meaningful here and is treated as ``Peak.PLUS``).
    """
    s, _ = vacuum_heralded_state(params)
    if x is None:
        x = -homodyne_centre(params) if params.peak is Peak.MINUS else homodyne_centre(params)
    return project_homodyne_point(s, D, params.theta, x)


def _herald(params: ProtocolParams, coherent: bool = False) -> tuple[np.ndarray, float, float | None]:
    # unnormalised reduced density, p_vacuum, p_homodyne (conditional)
    s, p_vac = vacuum_heralded_state(params)
    if params.ideal:
        rho = sum(
            reduced_density(project_homodyne_point(s, D, params.theta, x))
            for x in _peak_centres(params)
        )
        return rho, p_vac, None
    half = 0.5 * params.dx
    intervals = [(x - half, x + half) for x in _peak_centres(params)]
    mix, joint = project_homodyne_intervals(s, D, params.theta, intervals, params.nodes, coherent)
    p_hom = joint / p_vac if p_vac > 0 else 0.0
    return mix.reduced_density(), p_vac, p_hom


def run_es_fixed(params: ProtocolParams, coherent: bool = False) -> HeraldedOutcome:
    """Run the protocol at a fixed loss mismatch ``params.upsilon``."""
    rho, p_vac, p_hom = _herald(params, coherent)
    return HeraldedOutcome(QubitDensity.from_unnormalized(rho), p_vac, p_hom)


def run_es_averaged(params: ProtocolParams, spec: GaussianLossSpec) -> HeraldedOutcome:
    """Average the heralded state over a one-sided Gaussian loss mismatch.

    ``params.upsilon`` is ignored.  Unnormalised densities are averaged and
    normalised once; probabilities are averaged with the same weights.
    """
    ups, weights = spec.nodes(params.T)
    rho = np.zeros((4, 4), dtype=complex)
    p_vac = 0.0
    p_hom = 0.0
    for u, w in zip(ups, weights):
        r, pv, ph = _herald(params.replace(upsilon=float(u)))
        rho += w * r
        p_vac += w * pv
        if ph is not None:
            p_hom += w * ph
    return HeraldedOutcome(
        QubitDensity.from_unnormalized(rho), p_vac, None if params.ideal else p_hom
    )


def gaussian_weight(upsilon, Upsilon: float):
    """One-sided Gaussian density of the loss mismatch, normalised on ``[0, inf)``."""
    upsilon = np.asarray(upsilon, dtype=float)
    out = np.sqrt(2.0 / (np.pi * Upsilon**2)) * np.exp(-(upsilon**2) / (2.0 * Upsilon**2))
    return out[()] if out.ndim == 0 else out


def db_to_transmission(loss_db: float) -> float:
    if loss_db < 0:
        raise ValueError("loss in dB must be non-negative")
    return 10.0 ** (-loss_db / 10.0)


def transmission_to_db(T: float) -> float:
    if not 0.0 < T <= 1.0:
        raise ValueError(f"T must be in (0, 1], got {T}")
    return -10.0 * math.log10(T)


def distance_for_T(T: float, atten_db_per_km: float) -> float:
    """Fibre length (km) whose attenuation gives transmission ``T``."""
    return transmission_to_db(T) / atten_db_per_km
