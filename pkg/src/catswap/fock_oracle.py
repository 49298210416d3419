"""Brute-force truncated Fock-space re-run of the swapping protocol.

Every CV mode is a vector of photon-number amplitudes; beam splitters are
matrix exponentials of their generators on each photon-number block, and
homodyne detection contracts with Hermite-Gauss wavefunctions.  None of the
coherent-state algebra in :mod:`catswap.states` / :mod:`catswap.optics` is
used here; only the parameter and result containers are shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm
from scipy.special import gammaln

from .protocol import HeraldedOutcome, Peak, ProtocolParams
from .states import QubitDensity

__all__ = [
    "OracleConfig",
    "TruncationError",
    "required_n_max",
    "tail_mass",
    "coherent_fock",
    "bs_block_unitaries",
    "bs_unitary_apply",
    "quadrature_wavefunction",
    "oracle_run_es",
]

TAIL_TOL = 1e-9  # discarded Poisson weight; keeps alpha <= 2.5 usable at n_max = 40


class TruncationError(ValueError):
    """The Fock cutoff is too small for the amplitudes in play."""


@dataclass(frozen=True)
class OracleConfig:
    """Fock cutoff and the quadrature grid step for banded homodyne."""

    n_max: int = 40
    x_step: float = 0.0025

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be positive")
        if not self.x_step > 0:
            raise ValueError("x_step must be positive")


def required_n_max(beta: complex) -> int:
    b = abs(beta)
    return math.ceil(b * b + 6.0 * b)


def tail_mass(beta: complex, n_max: int) -> float:
    """Poisson weight of photon numbers above ``n_max`` for ``|beta>``."""
    mean = abs(beta) ** 2
    if mean == 0.0:
        return 0.0
    n = np.arange(n_max + 1)
    logp = -mean + n * math.log(mean) - gammaln(n + 1)
    return float(max(0.0, 1.0 - np.exp(logp).sum()))


def coherent_fock(beta: complex, n_max: int) -> np.ndarray:
    """Fock amplitudes ``e^{-|b|^2/2} b^n / sqrt(n!)`` for ``n <= n_max``."""
    if required_n_max(beta) > n_max or tail_mass(beta, n_max) > TAIL_TOL:
        raise TruncationError(f"n_max={n_max} too small for |beta|={abs(beta):.3f}")
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = math.exp(-0.5 * abs(beta) ** 2)
    for n in range(1, n_max + 1):
        out[n] = out[n - 1] * beta / math.sqrt(n)
    return out


@lru_cache(maxsize=64)
def bs_block_unitaries(T: float, n_total_max: int) -> tuple[np.ndarray, ...]:
    """Beam-splitter unitaries on each fixed-photon-number block.

    Block ``N`` acts on ``|k, N-k>`` (k photons in the first mode), indexed by
    ``k``.  The phase convention sends coherent inputs ``|b1, b2>`` to
    ``|t b1 - r b2, r b1 + t b2>`` with ``t = sqrt(T)``, ``r = sqrt(1 - T)``.
    """
    angle = math.acos(min(1.0, math.sqrt(T)))
    blocks = []
    for N in range(n_total_max + 1):
        k = np.arange(N)
        # generator angle * (a b^dagger - a^dagger b) restricted to the block:
        # a b^dag |k, N-k> = sqrt(k) sqrt(N-k+1) |k-1, N-k+1>
        g = np.zeros((N + 1, N + 1))
        amp = np.sqrt((k + 1) * (N - k))
        g[k, k + 1] = amp
        g[k + 1, k] = -amp
        blocks.append(expm(angle * g))
    return tuple(blocks)


def bs_unitary_apply(state: np.ndarray, T: float) -> np.ndarray:
    """Apply a beam splitter of transmission ``T`` to the last two (mode) axes.

    ``state[..., n1, n2]`` are two-mode Fock amplitudes with equal cutoffs;
    output components beyond the cutoff are discarded.
    """
    state = np.asarray(state, dtype=complex)
    if state.ndim < 2 or state.shape[-1] != state.shape[-2]:
        raise ValueError(f"expected trailing square two-mode axes, got shape {state.shape}")
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"T must be in [0, 1], got {T}")
    n_max = state.shape[-1] - 1
    blocks = bs_block_unitaries(float(T), 2 * n_max)
    out = np.zeros_like(state)
    for N in range(2 * n_max + 1):
        k = np.arange(max(0, N - n_max), min(N, n_max) + 1)
        vec = state[..., k, N - k]
        res = vec @ blocks[N][:, k].T
        out[..., k, N - k] = res[..., k]
    return out


def _hermite_gauss(n_max: int, xs: np.ndarray) -> np.ndarray:
    # rows n = 0..n_max of psi_n(x), normalised three-term recurrence
    xs = np.asarray(xs, dtype=float)
    psi = np.empty((n_max + 1,) + xs.shape)
    psi[0] = (2.0 / math.pi) ** 0.25 * np.exp(-(xs**2))
    if n_max >= 1:
        psi[1] = 2.0 * xs * psi[0]
    for n in range(2, n_max + 1):
        psi[n] = 2.0 * xs * math.sqrt(1.0 / n) * psi[n - 1] - math.sqrt((n - 1) / n) * psi[n - 2]
    return psi


def quadrature_wavefunction(n: int, x, theta: float = 0.0):
    """``<x_theta|n> = psi_n(x) e^{-i n theta}`` with vacuum variance 1/4."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    val = _hermite_gauss(n, np.asarray(x, dtype=float))[n] * np.exp(-1j * n * theta)
    return val[()] if np.ndim(val) == 0 else val


def _hybrid_pair(alpha: float, n_max: int) -> np.ndarray:
    # qubit x Fock, shape (2, n_max + 1)
    cat = coherent_fock(alpha, n_max) + coherent_fock(-alpha, n_max)
    cat /= np.linalg.norm(cat)
    pair = np.zeros((2, n_max + 1), dtype=complex)
    pair[0] = cat
    pair = np.stack([pair[0] + pair[1], pair[0] - pair[1]]) / math.sqrt(2.0)
    pair[1] *= 1j ** np.arange(n_max + 1)  # exp(i pi/2 n): quarter turn
    return pair


def _lossy_pair(alpha: float, T: float, n_max: int) -> np.ndarray:
    # (qubit, signal, env) after leaking into a vacuum environment mode
    pair = _hybrid_pair(alpha, n_max)
    three = np.zeros((2, n_max + 1, n_max + 1), dtype=complex)
    three[:, :, 0] = pair
    return bs_unitary_apply(three, T)


def _vacuum_kernel(n_max: int) -> np.ndarray:
    # K[nB, nD] = <0_B, (nB + nD)_D | U_50:50 | nB, nD>, first mode B
    blocks = bs_block_unitaries(0.5, 2 * n_max)
    K = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for nb in range(n_max + 1):
        for nd in range(n_max + 1):
            K[nb, nd] = blocks[nb + nd][0, nb]
    return K


def _check_truncation(params: ProtocolParams, n_max: int) -> None:
    biggest = math.sqrt(2.0) * params.alpha
    if required_n_max(biggest) > n_max or tail_mass(biggest, n_max) > TAIL_TOL:
        raise TruncationError(f"n_max={n_max} too small for alpha={params.alpha}")


def _amplitudes(params: ProtocolParams, n_max: int) -> np.ndarray:
    # amp[a, eb, c, ed, N]: vacuum seen on B, N photons left in D
    ab = _lossy_pair(params.alpha, params.T_B, n_max)
    cd = _lossy_pair(params.alpha, params.T_D, n_max)
    K = _vacuum_kernel(n_max)
    amp = np.zeros((2, n_max + 1, 2, n_max + 1, 2 * n_max + 1), dtype=complex)
    for nb in range(n_max + 1):
        for nd in range(n_max + 1):
            amp[..., nb + nd] += K[nb, nd] * np.einsum("ae,cf->aecf", ab[:, nb, :], cd[:, nd, :])
    return amp


def _rho_at(amp: np.ndarray, xs: np.ndarray, theta: float) -> np.ndarray:
    # unnormalised rho_AC(x) for each x, shape (len(xs), 4, 4)
    n_total = amp.shape[-1] - 1
    h = _hermite_gauss(n_total, xs).T * np.exp(-1j * theta * np.arange(n_total + 1))
    psi = np.einsum("aecfn,xn->xaecf", amp, h)
    rho = np.einsum("xaecf,xbegf->xacbg", psi, np.conj(psi))
    return rho.reshape(len(xs), 4, 4)


def _centres(params: ProtocolParams) -> list[float]:
    x0 = 0.5 * (math.sqrt(params.T_B) + math.sqrt(params.T_D)) * params.alpha
    return {Peak.PLUS: [x0], Peak.MINUS: [-x0], Peak.BOTH: [x0, -x0]}[params.peak]


def _window_grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = max(2, math.ceil((hi - lo) / step))
    n += n % 2  # Simpson wants an even number of panels
    return np.linspace(lo, hi, n + 1)


def oracle_run_es(params: ProtocolParams, cfg: OracleConfig = OracleConfig()) -> HeraldedOutcome:
    """Full protocol in a truncated Fock basis."""
    n_max = cfg.n_max
    _check_truncation(params, n_max)
    amp = _amplitudes(params, n_max)
    p_vac = float(np.sum(abs(amp) ** 2))
    centres = _centres(params)
    if params.dx is None:
        rho = _rho_at(amp, np.array(centres), params.theta).sum(axis=0)
        p_hom = None
    else:
        half = 0.5 * params.dx
        spans = sorted((x - half, x + half) for x in centres)
        merged: list[list[float]] = []
        for lo, hi in spans:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        rho = np.zeros((4, 4), dtype=complex)
        for lo, hi in merged:
            xs = _window_grid(lo, hi, cfg.x_step)
            rho += simpson(_rho_at(amp, xs, params.theta), x=xs, axis=0)
        p_hom = float(np.trace(rho).real) / p_vac
    return HeraldedOutcome(QubitDensity.from_unnormalized(rho), p_vac, p_hom)
