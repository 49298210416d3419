"""Gates, beam splitters and measurements acting on :class:`PureState`.

Quadratures follow ``x = (a + a^dagger) / 2`` throughout (vacuum variance
1/4).  Measurement projections never renormalise; the squared norm of the
returned state is the (joint) outcome probability or probability density.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .states import (
    A,
    C,
    EB,
    ED,
    ModeId,
    ModeKind,
    PureState,
    _check_trace_modes,
    _cv_gram,
    _dv_delta,
    _reduced_from_coeffs,
    norm_squared,
)

__all__ = [
    "HomodyneWindow",
    "QuadratureNodes",
    "HomodyneMixture",
    "apply_hadamard",
    "apply_controlled_rotation",
    "apply_lossy_bs",
    "apply_balanced_bs",
    "project_vacuum",
    "homodyne_amplitude",
    "project_homodyne_point",
    "quadrature_density",
    "project_homodyne_banded",
    "project_homodyne_intervals",
    "merge_intervals",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HomodyneWindow:
    """Acceptance window ``[x0 - dx/2, x0 + dx/2]`` of a quadrature at angle ``theta``."""

    theta: float
    x0: float
    dx: float

    def __post_init__(self):
        if not self.dx >= 0:
            raise ValueError(f"window width must be >= 0, got {self.dx}")
        if not 0.0 <= self.theta < TWO_PI:
            object.__setattr__(self, "theta", self.theta % TWO_PI)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.x0 - 0.5 * self.dx, self.x0 + 0.5 * self.dx)


@dataclass(frozen=True)
class QuadratureNodes:
    """Gauss-Legendre rule used for window integrals.

    Windows wider than ``max_panel`` are split into equal panels, each
    integrated with ``count`` nodes.
    """

    count: int = 32
    rule: str = "gauss-legendre"
    max_panel: float = 1.0

    def __post_init__(self):
        if not 2 <= self.count <= 4096:
            raise ValueError(f"node count must be in [2, 4096], got {self.count}")
        if self.rule != "gauss-legendre":
            raise ValueError(f"unsupported quadrature rule {self.rule!r}")
        if not self.max_panel > 0:
            raise ValueError("max_panel must be positive")

    def points(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for ``\\int_lo^hi``."""
        t, w = np.polynomial.legendre.leggauss(self.count)
        panels = max(1, math.ceil((hi - lo) / self.max_panel - 1e-12))
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        xs = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        return xs, ws


def apply_hadamard(s: PureState, mode: ModeId) -> PureState:
    col = s.dv_index(mode)
    zero = s.bits.copy()
    zero[:, col] = 0
    one = s.bits.copy()
    one[:, col] = 1
    sign = np.where(s.bits[:, col] == 1, -1.0, 1.0)
    r = 1.0 / math.sqrt(2.0)
    return s.with_arrays(
        bits=np.concatenate([zero, one]),
        amps=np.concatenate([s.amps, s.amps]),
        coeffs=np.concatenate([r * s.coeffs, r * sign * s.coeffs]),
    )


def apply_controlled_rotation(
    s: PureState, control: ModeId, target: ModeId, angle: float
) -> PureState:
    """Rotate ``target`` in phase space by ``angle`` on branches where ``control`` is 1."""
    c = s.dv_index(control)
    t = s.cv_index(target)
    amps = s.amps.copy()
    on = s.bits[:, c] == 1
    amps[on, t] *= np.exp(1j * angle)
    return s.with_arrays(amps=amps)


def _two_mode_mix(s: PureState, i: ModeId, j: ModeId, c: float, r: float) -> PureState:
    # (b_i, b_j) -> (c b_i - r b_j, r b_i + c b_j)
    ci, cj = s.cv_index(i), s.cv_index(j)
    amps = s.amps.copy()
    bi, bj = s.amps[:, ci], s.amps[:, cj]
    amps[:, ci] = c * bi - r * bj
    amps[:, cj] = r * bi + c * bj
    return s.with_arrays(amps=amps)


def apply_lossy_bs(s: PureState, signal: ModeId, env: ModeId, T: float) -> PureState:
    """Leak a fraction ``1 - T`` of ``signal`` into the vacuum mode ``env``."""
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmission must be in [0, 1], got {T}")
    if signal == env:
        raise ValueError("signal and environment modes must differ")
    if np.any(s.amps[:, s.cv_index(env)] != 0):
        raise ValueError(f"environment mode {env.name} is not in the vacuum")
    return _two_mode_mix(s, signal, env, math.sqrt(T), math.sqrt(1.0 - T))


def apply_balanced_bs(s: PureState, i: ModeId, j: ModeId) -> PureState:
    """50:50 beam splitter: ``(b_i, b_j) -> ((b_i - b_j)/sqrt2, (b_i + b_j)/sqrt2)``."""
    if i == j:
        raise ValueError("balanced beam splitter needs two distinct modes")
    r = 1.0 / math.sqrt(2.0)
    return _two_mode_mix(s, i, j, r, r)


def _drop_cv(s: PureState, mode: ModeId, coeffs: np.ndarray) -> PureState:
    col = s.cv_index(mode)
    return PureState(
        tuple(m for m in s.registry if m != mode),
        s.bits,
        np.delete(s.amps, col, axis=1),
        coeffs,
    )


def project_vacuum(s: PureState, mode: ModeId) -> tuple[PureState, float]:
    """Project ``mode`` onto ``|0>`` and remove it.

    Returns the unnormalised projected state and its squared norm, which is
    the outcome probability when ``s`` is normalised.
    """
    if mode not in s.registry or mode.kind is not ModeKind.CV:
        raise KeyError(f"CV mode {mode.name} not in registry")
    gamma = s.amps[:, s.cv_index(mode)]
    out = _drop_cv(s, mode, s.coeffs * np.exp(-0.5 * abs(gamma) ** 2))
    return out, norm_squared(out)


HOMODYNE_PREFACTOR = (2.0 / math.pi) ** 0.25


def homodyne_amplitude(x, theta, alpha):
    """``<x_theta|alpha>`` for a coherent state ``alpha = |alpha| e^{i phi}``.

    Broadcasts over ``x``, ``theta`` and ``alpha``.
    """
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=complex)
    mod = abs(alpha)
    phase = np.exp(1j * (np.angle(alpha) - np.asarray(theta, dtype=float)))
    out = HOMODYNE_PREFACTOR * np.exp(
        -(x**2) + 2.0 * phase * mod * x - 0.5 * phase**2 * mod**2 - 0.5 * mod**2
    )
    return out[()] if out.ndim == 0 else out


def project_homodyne_point(s: PureState, mode: ModeId, theta: float, x: float) -> PureState:
    """Project ``mode`` onto the quadrature eigenstate ``|x_theta>`` and remove it."""
    if mode not in s.registry or mode.kind is not ModeKind.CV:
        raise KeyError(f"CV mode {mode.name} not in registry")
    gamma = s.amps[:, s.cv_index(mode)]
    return _drop_cv(s, mode, s.coeffs * homodyne_amplitude(x, theta, gamma))


def quadrature_density(s: PureState, mode: ModeId, theta: float, xs) -> np.ndarray:
    """``|| <x_theta| s ||^2`` at each ``x`` in ``xs`` (not normalised by ``<s|s>``)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    col = s.cv_index(mode)
    gamma = s.amps[:, col]
    rest = np.delete(s.amps, col, axis=1)
    gram = _cv_gram(rest, rest) * _dv_delta(s.bits, s.bits)
    rows = s.coeffs[None, :] * homodyne_amplitude(xs[:, None], theta, gamma[None, :])
    return np.einsum("ki,ij,kj->k", np.conj(rows), gram, rows).real


def merge_intervals(intervals: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Union of closed intervals as sorted, disjoint intervals."""
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(lo, hi) for lo, hi in out]


@dataclass(frozen=True, eq=False)
class HomodyneMixture:
    """Weighted point-projected states ``sum_k w_k |s_k><s_k|``.

    All members share the branch structure of ``base`` (mode ``D`` removed);
    only their coefficients differ, so ``coeff_rows[k]`` holds the
    coefficients of member ``k``.
    """

    base: PureState
    coeff_rows: np.ndarray
    weights: np.ndarray

    @property
    def states(self) -> tuple[PureState, ...]:
        return tuple(self.base.with_arrays(coeffs=row) for row in self.coeff_rows)

    def reduced_density(
        self, keep: Sequence[ModeId] = (A, C), drop: Sequence[ModeId] = (EB, ED)
    ) -> np.ndarray:
        _check_trace_modes(self.base, keep, drop)
        if self.base.n_terms == 0 or len(self.weights) == 0:
            return np.zeros((4, 4), dtype=complex)
        return _reduced_from_coeffs(self.base, keep, self.coeff_rows, self.weights)

    def probability(self) -> float:
        gram = _cv_gram(self.base.amps, self.base.amps) * _dv_delta(self.base.bits, self.base.bits)
        per = np.einsum("ki,ij,kj->k", np.conj(self.coeff_rows), gram, self.coeff_rows).real
        return float(self.weights @ per)


def project_homodyne_intervals(
    s: PureState,
    mode: ModeId,
    theta: float,
    intervals: Sequence[tuple[float, float]],
    nodes: QuadratureNodes = QuadratureNodes(),
    coherent: bool = False,
) -> tuple[HomodyneMixture, float]:
    """Banded homodyne over the union of ``intervals``.

    The default (incoherent) reading returns ``int P(x)|s><s|P(x) dx`` as a
    weighted mixture over quadrature nodes.  ``coherent=True`` instead
    integrates the projected ket, ``int P(x)|s> dx``, and returns it as a
    single-member mixture; it exists only for comparison.
    """
    if mode not in s.registry or mode.kind is not ModeKind.CV:
        raise KeyError(f"CV mode {mode.name} not in registry")
    xs_all, ws_all = [], []
    for lo, hi in merge_intervals(intervals):
        if not hi > lo:
            continue
        xs, ws = nodes.points(lo, hi)
        xs_all.append(xs)
        ws_all.append(ws)
    gamma = s.amps[:, s.cv_index(mode)]
    base = _drop_cv(s, mode, s.coeffs)
    if not xs_all:
        empty = HomodyneMixture(base, np.zeros((0, s.n_terms), dtype=complex), np.zeros(0))
        return empty, 0.0
    xs = np.concatenate(xs_all)
    ws = np.concatenate(ws_all)
    rows = s.coeffs[None, :] * homodyne_amplitude(xs[:, None], theta, gamma[None, :])
    if coherent:
        rows = (ws @ rows)[None, :]
        ws = np.ones(1)
    mix = HomodyneMixture(base, rows, ws)
    return mix, mix.probability()


def project_homodyne_banded(
    s: PureState,
    mode: ModeId,
    window: HomodyneWindow,
    nodes: QuadratureNodes = QuadratureNodes(),
    coherent: bool = False,
) -> tuple[HomodyneMixture, float]:
    """Imperfect homodyne detection accepting outcomes inside ``window``."""
    if not window.dx > 0:
        raise ValueError("banded homodyne needs a window width dx > 0")
    return project_homodyne_intervals(s, mode, window.theta, [window.interval], nodes, coherent)
