"""Finite superpositions of multimode coherent states carrying qubit labels.

A :class:`PureState` is a list of branches.  Every branch assigns a bit to
each discrete-variable (DV) mode, a coherent amplitude to each
continuous-variable (CV) mode, and a complex coefficient.  Internally the
branches are stored column-wise as numpy arrays so that Gram matrices and
partial traces vectorise; :attr:`PureState.terms` gives the per-branch view.

Nothing here merges branches implicitly.  Call :func:`compact` when that is
wanted.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModeKind",
    "ModeId",
    "CoherentTerm",
    "PureState",
    "QubitDensity",
    "A",
    "B",
    "C",
    "D",
    "EB",
    "ED",
    "PROTOCOL_REGISTRY",
    "coherent_overlap",
    "inner_product",
    "norm_squared",
    "normalize",
    "tensor",
    "add_vacuum_mode",
    "compact",
    "reduced_density",
    "trace_to_qubits",
]


class ModeKind(enum.Enum):
    DV = "DV"
    CV = "CV"


@dataclass(frozen=True)
class ModeId:
    name: str
    kind: ModeKind

    def __repr__(self) -> str:
        return f"ModeId({self.name!r}, {self.kind.value})"


A = ModeId("A", ModeKind.DV)
B = ModeId("B", ModeKind.CV)
C = ModeId("C", ModeKind.DV)
D = ModeId("D", ModeKind.CV)
EB = ModeId("EB", ModeKind.CV)
ED = ModeId("ED", ModeKind.CV)

PROTOCOL_REGISTRY = (A, B, C, D, EB, ED)


@dataclass(frozen=True)
class CoherentTerm:
    """One branch: qubit values, coherent amplitudes and a coefficient."""

    dv_bits: Mapping[ModeId, int]
    cv_amps: Mapping[ModeId, complex]
    coeff: complex = 1.0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """An (unnormalised) superposition of coherent-state branches.

    ``bits`` has shape ``(n_terms, n_dv)``, ``amps`` has shape
    ``(n_terms, n_cv)`` and ``coeffs`` has shape ``(n_terms,)``; columns follow
    the order of the DV and CV modes in ``registry``.
    """

    registry: tuple[ModeId, ...]
    bits: np.ndarray
    amps: np.ndarray
    coeffs: np.ndarray
    dv_modes: tuple[ModeId, ...] = field(init=False, repr=False)
    cv_modes: tuple[ModeId, ...] = field(init=False, repr=False)

    def __post_init__(self):
        registry = tuple(self.registry)
        if len(set(registry)) != len(registry):
            raise ValueError(f"duplicate modes in registry {registry}")
        names = [m.name for m in registry]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate mode names in registry {names}")
        dv = tuple(m for m in registry if m.kind is ModeKind.DV)
        cv = tuple(m for m in registry if m.kind is ModeKind.CV)
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        n = coeffs.shape[0]
        bits = np.array(self.bits, dtype=np.int8).reshape(n, len(dv))
        amps = np.array(self.amps, dtype=complex).reshape(n, len(cv))
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ValueError("qubit labels must be 0 or 1")
        if not (np.isfinite(amps).all() and np.isfinite(coeffs).all()):
            raise ValueError("non-finite amplitude or coefficient")
        object.__setattr__(self, "registry", registry)
        object.__setattr__(self, "bits", _frozen(bits))
        object.__setattr__(self, "amps", _frozen(amps))
        object.__setattr__(self, "coeffs", _frozen(coeffs))
        object.__setattr__(self, "dv_modes", dv)
        object.__setattr__(self, "cv_modes", cv)

    @classmethod
    def from_terms(
        cls, registry: Sequence[ModeId], terms: Iterable[CoherentTerm]
    ) -> PureState:
        registry = tuple(registry)
        dv = [m for m in registry if m.kind is ModeKind.DV]
        cv = [m for m in registry if m.kind is ModeKind.CV]
        bits, amps, coeffs = [], [], []
        for term in terms:
            if set(term.dv_bits) != set(dv) or set(term.cv_amps) != set(cv):
                raise ValueError(
                    "term modes do not match the registry: "
                    f"{sorted(m.name for m in term.dv_bits)}, "
                    f"{sorted(m.name for m in term.cv_amps)}"
                )
            bits.append([term.dv_bits[m] for m in dv])
            amps.append([term.cv_amps[m] for m in cv])
            coeffs.append(term.coeff)
        n = len(coeffs)
        return cls(
            registry,
            np.array(bits, dtype=np.int8).reshape(n, len(dv)),
            np.array(amps, dtype=complex).reshape(n, len(cv)),
            np.array(coeffs, dtype=complex),
        )

    @classmethod
    def zero(cls, registry: Sequence[ModeId]) -> PureState:
        return cls.from_terms(registry, [])

    @property
    def n_terms(self) -> int:
        return self.coeffs.shape[0]

    @property
    def terms(self) -> tuple[CoherentTerm, ...]:
        return tuple(
            CoherentTerm(
                dict(zip(self.dv_modes, (int(b) for b in bits))),
                dict(zip(self.cv_modes, (complex(a) for a in amps))),
                complex(c),
            )
            for bits, amps, c in zip(self.bits, self.amps, self.coeffs)
        )

    def dv_index(self, mode: ModeId) -> int:
        try:
            return self.dv_modes.index(mode)
        except ValueError:
            raise KeyError(f"DV mode {mode.name} not in registry") from None

    def cv_index(self, mode: ModeId) -> int:
        try:
            return self.cv_modes.index(mode)
        except ValueError:
            raise KeyError(f"CV mode {mode.name} not in registry") from None

    def with_arrays(self, bits=None, amps=None, coeffs=None, registry=None) -> PureState:
        return PureState(
            self.registry if registry is None else registry,
            self.bits if bits is None else bits,
            self.amps if amps is None else amps,
            self.coeffs if coeffs is None else coeffs,
        )

    def scaled(self, factor: complex) -> PureState:
        return self.with_arrays(coeffs=self.coeffs * factor)


def coherent_overlap(beta, gamma):
    """``<beta|gamma>`` for coherent states; broadcasts over arrays."""
    beta = np.asarray(beta, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    out = np.exp(-0.5 * abs(beta) ** 2 - 0.5 * abs(gamma) ** 2 + np.conj(beta) * gamma)
    return out[()] if out.ndim == 0 else out


def _cv_gram(bra_amps: np.ndarray, ket_amps: np.ndarray) -> np.ndarray:
    # G[i, j] = prod_m <bra_i,m | ket_j,m>
    log = (
        -0.5 * np.sum(abs(bra_amps) ** 2, axis=1)[:, None]
        - 0.5 * np.sum(abs(ket_amps) ** 2, axis=1)[None, :]
        + np.conj(bra_amps) @ ket_amps.T
    )
    return np.exp(log)


def _dv_delta(bra_bits: np.ndarray, ket_bits: np.ndarray) -> np.ndarray:
    if bra_bits.shape[1] == 0:
        return np.ones((bra_bits.shape[0], ket_bits.shape[0]))
    return np.all(bra_bits[:, None, :] == ket_bits[None, :, :], axis=2).astype(float)


def _check_same_registry(s1: PureState, s2: PureState) -> None:
    if s1.registry != s2.registry:
        raise ValueError(
            f"registry mismatch: {[m.name for m in s1.registry]} vs "
            f"{[m.name for m in s2.registry]}"
        )


def inner_product(s1: PureState, s2: PureState) -> complex:
    """``<s1|s2>``."""
    _check_same_registry(s1, s2)
    if s1.n_terms == 0 or s2.n_terms == 0:
        return 0j
    gram = _cv_gram(s1.amps, s2.amps) * _dv_delta(s1.bits, s2.bits)
    return complex(np.conj(s1.coeffs) @ gram @ s2.coeffs)


def norm_squared(s: PureState) -> float:
    return inner_product(s, s).real


def normalize(s: PureState) -> PureState:
    n2 = norm_squared(s)
    if not n2 > 1e-300:
        raise ValueError("cannot normalise the zero state")
    return s.scaled(1.0 / np.sqrt(n2))


def tensor(s1: PureState, s2: PureState) -> PureState:
    """Product state; registry is ``s1.registry + s2.registry``."""
    overlap = set(s1.registry) & set(s2.registry)
    if overlap:
        raise ValueError(f"modes appear in both factors: {sorted(m.name for m in overlap)}")
    registry = s1.registry + s2.registry
    n1, n2 = s1.n_terms, s2.n_terms
    i = np.repeat(np.arange(n1), n2)
    j = np.tile(np.arange(n2), n1)
    # column order must follow the DV/CV ordering of the concatenated registry,
    # which is s1's columns then s2's in both cases
    bits = np.concatenate([s1.bits[i], s2.bits[j]], axis=1)
    amps = np.concatenate([s1.amps[i], s2.amps[j]], axis=1)
    return PureState(registry, bits, amps, s1.coeffs[i] * s2.coeffs[j])


def add_vacuum_mode(s: PureState, mode: ModeId) -> PureState:
    """Append a CV mode in the vacuum to every branch."""
    if mode.kind is not ModeKind.CV:
        raise ValueError(f"{mode.name} is not a CV mode")
    if mode in s.registry:
        raise ValueError(f"{mode.name} already in registry")
    amps = np.concatenate([s.amps, np.zeros((s.n_terms, 1), dtype=complex)], axis=1)
    return s.with_arrays(amps=amps, registry=s.registry + (mode,))


def compact(s: PureState, tolerance: float = 1e-12) -> PureState:
    """Merge branches whose labels and amplitudes agree within ``tolerance``.

    Branches whose merged coefficient falls below ``tolerance`` are dropped.
    """
    keep_bits, keep_amps, keep_coeffs = [], [], []
    for bits, amps, c in zip(s.bits, s.amps, s.coeffs):
        for k, (kb, ka) in enumerate(zip(keep_bits, keep_amps)):
            if np.array_equal(kb, bits) and np.allclose(ka, amps, rtol=0, atol=tolerance):
                keep_coeffs[k] += c
                break
        else:
            keep_bits.append(bits)
            keep_amps.append(amps)
            keep_coeffs.append(complex(c))
    mask = [abs(c) > tolerance for c in keep_coeffs]
    n = sum(mask)
    return s.with_arrays(
        bits=np.array([b for b, m in zip(keep_bits, mask) if m], dtype=np.int8).reshape(n, len(s.dv_modes)),
        amps=np.array([a for a, m in zip(keep_amps, mask) if m], dtype=complex).reshape(n, len(s.cv_modes)),
        coeffs=np.array([c for c, m in zip(keep_coeffs, mask) if m], dtype=complex),
    )


@dataclass(frozen=True, eq=False)
class QubitDensity:
    """Two-qubit density matrix on (A, C), basis order 00, 01, 10, 11."""

    matrix: np.ndarray

    HERMITIAN_TOL = 1e-12
    TRACE_TOL = 1e-10
    PSD_TOL = -1e-9

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("density matrix has non-finite entries")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def from_unnormalized(cls, matrix: np.ndarray) -> QubitDensity:
        matrix = np.asarray(matrix, dtype=complex)
        tr = np.trace(matrix).real
        if not tr > 0:
            raise ValueError("zero trace: nothing heralded")
        # hermitise away rounding so downstream invariants hold at 1e-12
        matrix = 0.5 * (matrix + matrix.conj().T) / tr
        return cls(matrix)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def violations(self) -> list[str]:
        """Names of violated invariants (empty when the matrix is a valid state)."""
        out = []
        if np.max(abs(self.matrix - self.matrix.conj().T)) > self.HERMITIAN_TOL:
            out.append("hermitian")
        if abs(self.trace - 1.0) > self.TRACE_TOL:
            out.append("trace")
        if self.eigenvalues().min() < self.PSD_TOL:
            out.append("psd")
        return out

    def check(self) -> QubitDensity:
        bad = self.violations()
        if bad:
            raise ArithmeticError(f"density matrix invariants violated: {', '.join(bad)}")
        return self


def _qubit_index(s: PureState, keep: Sequence[ModeId]) -> np.ndarray:
    cols = [s.dv_index(m) for m in keep]
    idx = np.zeros(s.n_terms, dtype=int)
    for c in cols:
        idx = 2 * idx + s.bits[:, c]
    return idx


def _check_trace_modes(s: PureState, keep: Sequence[ModeId], drop: Sequence[ModeId]) -> None:
    if len(keep) != 2 or any(m.kind is not ModeKind.DV for m in keep):
        raise ValueError("keep must name exactly two DV modes")
    if set(keep) != set(s.dv_modes):
        raise ValueError("every DV mode of the state must be kept")
    if any(m.kind is not ModeKind.CV for m in drop):
        raise ValueError("only CV modes can be traced out")
    live = set(s.cv_modes) - set(drop)
    if live:
        raise ValueError(f"CV modes not covered by drop: {sorted(m.name for m in live)}")


def _reduced_from_coeffs(
    s: PureState, keep: Sequence[ModeId], coeff_rows: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    # sum_k w_k Tr_env |s_k><s_k| for states sharing s's branches but with
    # coefficients coeff_rows[k]
    idx = _qubit_index(s, keep)
    proj = np.zeros((s.n_terms, 4))
    proj[np.arange(s.n_terms), idx] = 1.0
    env = _cv_gram(s.amps, s.amps).T  # env[i, j] = <gamma_j|gamma_i>
    outer = np.einsum("k,ki,kj->ij", weights, coeff_rows, np.conj(coeff_rows))
    return proj.T @ (outer * env) @ proj


def reduced_density(
    s: PureState, keep: Sequence[ModeId] = (A, C), drop: Sequence[ModeId] = (EB, ED)
) -> np.ndarray:
    """Unnormalised ``Tr_drop |s><s|`` as a 4x4 array."""
    _check_trace_modes(s, keep, drop)
    if s.n_terms == 0:
        return np.zeros((4, 4), dtype=complex)
    return _reduced_from_coeffs(s, keep, s.coeffs[None, :], np.ones(1))


def trace_to_qubits(
    s: PureState, keep: Sequence[ModeId] = (A, C), drop: Sequence[ModeId] = (EB, ED)
) -> QubitDensity:
    """Trace out the CV modes in ``drop`` and normalise to unit trace."""
    return QubitDensity.from_unnormalized(reduced_density(s, keep, drop))
