import math

import numpy as np
import pytest
from scipy.integrate import quad

from catswap.fock_oracle import oracle_run_es
from catswap.metrics import (
    bell_state,
    concurrence,
    fidelity,
    homodyne_success_probability,
    peak_fidelity,
    quadrature_distribution,
    trace_distance,
    vacuum_success_probability,
)
from catswap.protocol import Peak, ProtocolParams
from catswap.states import QubitDensity


def test_bell_targets():
    plus, minus = bell_state(0.7, +1), bell_state(0.7, Peak.MINUS)
    assert np.vdot(plus, plus).real == pytest.approx(1.0)
    assert abs(np.vdot(plus, minus)) < 1e-15
    with pytest.raises(ValueError):
        bell_state(1.0, 0)


def test_fidelity_and_concurrence_of_pure_bell():
    v = bell_state(1.1)
    rho = np.outer(v, v.conj())
    assert fidelity(rho, v) == pytest.approx(1.0, abs=1e-14)
    assert concurrence(rho) == pytest.approx(1.0, abs=1e-7)
    assert concurrence(np.eye(4) / 4) == 0.0


def test_fidelity_input_checks():
    with pytest.raises(ValueError):
        fidelity(2 * np.eye(4) / 4, bell_state(1.0))
    with pytest.raises(ValueError):
        fidelity(np.eye(4) / 4, 2 * bell_state(1.0))


def test_trace_distance_of_orthogonal_pure_states():
    a, b = bell_state(0.0, +1), bell_state(0.0, -1)
    assert trace_distance(np.outer(a, a.conj()), np.outer(b, b.conj())) == pytest.approx(1.0)


def test_vacuum_probability_matches_oracle():
    params = ProtocolParams(alpha=2.0, T=0.95)
    assert abs(vacuum_success_probability(params) - oracle_run_es(params).p_vacuum) < 1e-6


def test_vacuum_probability_limits():
    assert vacuum_success_probability(ProtocolParams(alpha=0.0)) == pytest.approx(1.0, abs=1e-12)
    assert vacuum_success_probability(ProtocolParams(alpha=2.5)) == pytest.approx(0.25, abs=0.01)


def test_window_probability_needs_width():
    with pytest.raises(ValueError):
        homodyne_success_probability(ProtocolParams(alpha=1.0))


def test_window_probability_grows_with_width():
    ps = [homodyne_success_probability(ProtocolParams(alpha=1.5, dx=d)) for d in (0.25, 0.5, 1.0, 5.0)]
    assert all(a < b for a, b in zip(ps, ps[1:]))
    assert ps[-1] == pytest.approx(1.0, abs=1e-3)


def test_quadrature_distribution_vacuum_is_gaussian():
    xs = np.linspace(-2, 2, 9)
    dens = [d for _, d in quadrature_distribution(ProtocolParams(alpha=0.0), xs)]
    np.testing.assert_allclose(dens, np.sqrt(2 / np.pi) * np.exp(-2 * xs**2), rtol=1e-12)


def _density(alpha, xs):
    return np.array([d for _, d in quadrature_distribution(ProtocolParams(alpha=alpha), xs)])


def test_quadrature_distribution_matches_fock_density():
    from catswap.fock_oracle import _amplitudes, _rho_at

    params = ProtocolParams(alpha=2.0)
    amp = _amplitudes(params, 40)
    xs = np.linspace(-3, 3, 13)
    ref = np.trace(_rho_at(amp, xs, math.pi / 4), axis1=1, axis2=2).real / np.sum(abs(amp) ** 2)
    np.testing.assert_allclose(_density(2.0, xs), ref, atol=1e-12)


def test_quadrature_distribution_main_peaks_at_plus_minus_two():
    xs = np.linspace(-4, 4, 801)
    dens = _density(2.0, xs)
    top2 = sorted(np.argsort(dens)[-2:])
    assert [xs[i] for i in top2] == pytest.approx([-2.0, 2.0], abs=0.02)


def test_quadrature_distribution_central_dip_below_one_percent():
    xs = np.linspace(-4, 4, 801)
    dens = _density(2.0, xs)
    mid = 400
    assert dens[mid] <= dens[mid - 1] and dens[mid] <= dens[mid + 1], "x=0 is not a local minimum"
    assert dens[mid] < 0.01 * dens.max()


def test_quadrature_distribution_integrates_to_one():
    params = ProtocolParams(alpha=1.0, T=0.95)
    total, _ = quad(lambda x: quadrature_distribution(params, [x])[0][1], -8, 8, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_quadrature_distribution_rejects_nan():
    with pytest.raises(ValueError):
        quadrature_distribution(ProtocolParams(alpha=1.0), [0.0, math.nan])


def test_peak_fidelity_refines_grid_maximum():
    f, a = peak_fidelity(0.97, alpha_range=(0.5, 2.0), step=0.1)
    assert 0.5 <= a <= 2.0
    assert 0 < f <= 1


def test_qubit_density_from_oracle_is_valid():
    out = oracle_run_es(ProtocolParams(alpha=1.0, T=0.9, dx=0.5))
    assert isinstance(out.rho, QubitDensity)
    assert out.rho.violations() == []
