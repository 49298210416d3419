import math

import numpy as np
import pytest

from catswap.states import A, B, C, EB, ED, CoherentTerm, PureState


def literal_hybrid_pair(alpha, dv=A, cv=B):
    """Hybrid pair written out directly, not via the preparation circuit."""
    n = 1.0 / math.sqrt(2.0 + 2.0 * math.exp(-2.0 * alpha**2))
    c = n / math.sqrt(2.0)
    terms = [
        CoherentTerm({dv: 0}, {cv: alpha}, c),
        CoherentTerm({dv: 0}, {cv: -alpha}, c),
        CoherentTerm({dv: 1}, {cv: 1j * alpha}, c),
        CoherentTerm({dv: 1}, {cv: -1j * alpha}, c),
    ]
    return PureState.from_terms((dv, cv), terms)


def literal_final_state(alpha, T):
    """Pre-trace equal-loss state of (A, C, EB, ED), typed in branch by branch.

    Overall normalisation is left out; callers normalise.
    """
    g = math.sqrt(1.0 - T)
    ga, gia = g * alpha, 1j * g * alpha
    t = T * alpha**2
    e = np.exp
    half = e(-t / 2)
    rows = [
        # |00>
        (0, 0, e((1 - 1j) * t), ga, ga),
        (0, 0, e(-(3 - 3j) * t), -ga, -ga),
        (0, 0, e(-t), ga, -ga),
        (0, 0, e(-t), -ga, ga),
        # |01>
        (0, 1, half * e(t), ga, gia),
        (0, 1, half * e(-2j * t), ga, -gia),
        (0, 1, half * e(2j * t), -ga, gia),
        (0, 1, half * e(-3 * t), -ga, -gia),
        # |10>
        (1, 0, half * e(t), gia, ga),
        (1, 0, half * e(2j * t), gia, -ga),
        (1, 0, half * e(-2j * t), -gia, ga),
        (1, 0, half * e(-3 * t), -gia, -ga),
        # |11>
        (1, 1, e((1 + 1j) * t), gia, gia),
        (1, 1, e(-(3 + 3j) * t), -gia, -gia),
        (1, 1, e(-t), gia, -gia),
        (1, 1, e(-t), -gia, gia),
    ]
    terms = [CoherentTerm({A: a, C: c}, {EB: eb, ED: ed}, coeff) for a, c, coeff, eb, ed in rows]
    return PureState.from_terms((A, C, EB, ED), terms)


def random_state(rng, registry, n_terms, scale=1.5):
    dv = [m for m in registry if m.kind.value == "DV"]
    cv = [m for m in registry if m.kind.value == "CV"]
    bits = rng.integers(0, 2, size=(n_terms, len(dv)))
    amps = scale * (rng.normal(size=(n_terms, len(cv))) + 1j * rng.normal(size=(n_terms, len(cv))))
    coeffs = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    return PureState(registry, bits, amps, coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
