"""Bell targets, fidelities and success probabilities."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .optics import quadrature_density
from .protocol import (
    GaussianLossSpec,
    Peak,
    ProtocolParams,
    run_es_averaged,
    run_es_fixed,
    vacuum_heralded_state,
)
from .states import D, QubitDensity

__all__ = [
    "bell_state",
    "fidelity",
    "trace_distance",
    "concurrence",
    "vacuum_success_probability",
    "homodyne_success_probability",
    "quadrature_distribution",
    "protocol_fidelity",
    "peak_fidelity",
]


def bell_state(alpha: float, sign: int | Peak = +1) -> np.ndarray:
    """Phase-rotated Bell vector ``(e^{-i a^2}|00> +/- e^{i a^2}|11>)/sqrt2``."""
    if isinstance(sign, Peak):
        sign = -1 if sign is Peak.MINUS else +1
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    v = np.zeros(4, dtype=complex)
    v[0] = np.exp(-1j * alpha**2)
    v[3] = sign * np.exp(1j * alpha**2)
    return v / math.sqrt(2.0)


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, QubitDensity) else np.asarray(rho, dtype=complex)


def fidelity(rho, target: np.ndarray) -> float:
    """``<target|rho|target>`` for a unit-trace ``rho`` and unit ``target``."""
    m = _as_matrix(rho)
    target = np.asarray(target, dtype=complex)
    if abs(np.trace(m).real - 1.0) > 1e-8:
        raise ValueError("fidelity needs a unit-trace density matrix")
    if abs(np.vdot(target, target).real - 1.0) > 1e-10:
        raise ValueError("fidelity target must be a unit vector")
    f = np.vdot(target, m @ target).real
    return float(min(max(f, 0.0), 1.0))


def trace_distance(rho1, rho2) -> float:
    diff = _as_matrix(rho1) - _as_matrix(rho2)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state."""
    m = _as_matrix(rho)
    yy = np.fliplr(np.diag([-1.0, 1.0, 1.0, -1.0]))
    r = m @ yy @ m.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0.0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def vacuum_success_probability(params: ProtocolParams) -> float:
    """Probability of the vacuum outcome on mode B."""
    return vacuum_heralded_state(params)[1]


def homodyne_success_probability(
    params: ProtocolParams, spec: GaussianLossSpec | None = None
) -> float:
    """Probability that the pi/4 quadrature of D lands in either acceptance window.

    Conditional on the vacuum outcome.  Windows are centred on both peaks;
    overlapping windows count their union once.  ``params.peak`` is ignored.
    """
    if params.dx is None or not params.dx > 0:
        raise ValueError("homodyne success probability needs a window width dx > 0")
    both = params.replace(peak=Peak.BOTH)
    out = run_es_fixed(both) if spec is None else run_es_averaged(both, spec)
    return out.p_homodyne


def quadrature_distribution(params: ProtocolParams, x_grid) -> list[tuple[float, float]]:
    """Probability density of the pi/4 quadrature of D after the vacuum outcome."""
    xs = np.asarray(x_grid, dtype=float)
    if not np.isfinite(xs).all():
        raise ValueError("x grid must be finite")
    s, p_vac = vacuum_heralded_state(params)
    dens = quadrature_density(s, D, params.theta, xs) / p_vac
    return [(float(x), float(d)) for x, d in zip(xs, dens)]


def protocol_fidelity(
    params: ProtocolParams, spec: GaussianLossSpec | None = None, sign: int = +1
) -> float:
    out = run_es_fixed(params) if spec is None else run_es_averaged(params, spec)
    return fidelity(out.rho, bell_state(params.alpha, sign))


def peak_fidelity(
    T: float,
    Upsilon: float | None = None,
    alpha_range: tuple[float, float] = (0.25, 3.5),
    step: float = 0.05,
    dx: float | None = None,
    node_count: int = 48,
) -> tuple[float, float]:
    """Largest fidelity to the plus target over alpha, and where it occurs.

    Scans a grid, then refines around the best grid point.  ``Upsilon=None``
    means equal losses.
    """
    spec = None if not Upsilon else GaussianLossSpec(Upsilon, node_count=node_count)

    def f(a: float) -> float:
        return protocol_fidelity(ProtocolParams(alpha=float(a), T=T, dx=dx), spec)

    grid = np.arange(alpha_range[0], alpha_range[1] + 0.5 * step, step)
    vals = [f(a) for a in grid]
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda a: -f(a), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6})
    if -res.fun >= vals[k]:
        return float(-res.fun), float(res.x)
    return float(vals[k]), float(grid[k])
