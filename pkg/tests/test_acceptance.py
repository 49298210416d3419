"""Acceptance criteria, one test each.

Every criterion prints a single ``[PASS]``/``[FAIL]`` line with the measured
value next to its tolerance.  Run directly (``python tests/test_acceptance.py``)
for just the summary lines.
"""

import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from catswap.cli import distance_report
from catswap.fock_oracle import OracleConfig, bs_block_unitaries, oracle_run_es
from catswap.metrics import (
    bell_state,
    fidelity,
    homodyne_success_probability,
    peak_fidelity,
    trace_distance,
    vacuum_success_probability,
)
from catswap.optics import apply_balanced_bs, apply_lossy_bs
from catswap.protocol import GaussianLossSpec, Peak, ProtocolParams, heralded_pure_state, run_es_averaged, run_es_fixed
from catswap.states import A, B, C, D, EB, ED, add_vacuum_mode, inner_product, norm_squared, normalize

from conftest import literal_final_state, random_state

RESULTS = {}


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}"
    RESULTS[number] = line
    print(line)
    return ok


def f_plus(alpha, **kw):
    return fidelity(run_es_fixed(ProtocolParams(alpha=alpha, **kw)).rho, bell_state(alpha, +1))


def criterion_1():
    start = time.perf_counter()
    grid = np.round(np.arange(2.3, 4.0 + 1e-9, 0.025), 10)
    vals = np.array([f_plus(a) for a in grid])
    elapsed = time.perf_counter() - start
    worst = int(np.argmin(vals))
    ok = vals.min() >= 0.999 and elapsed < 10
    return report(1, "lossless plateau F >= 0.999 on alpha in [2.3, 4.0]", ok,
                  f"min F = {vals[worst]:.6f} at alpha = {grid[worst]:.3f}; "
                  f"first alpha with F >= 0.999 is {grid[np.argmax(vals >= 0.999)]:.3f}; {elapsed:.2f} s")


def criterion_2():
    out = run_es_fixed(ProtocolParams(alpha=4.0, T=0.95))
    fp, fm = fidelity(out.rho, bell_state(4.0, +1)), fidelity(out.rho, bell_state(4.0, -1))
    ok = abs(fp - 0.5) <= 0.02 and abs(fm - 0.5) <= 0.02
    return report(2, "mixed limit at alpha=4, T=0.95: both fidelities 0.50 +/- 0.02", ok,
                  f"F+ = {fp:.4f}, F- = {fm:.4f}")


def criterion_3():
    grid = np.arange(0.25, 3.5 + 1e-9, 0.01)
    vals = np.array([f_plus(a, T=0.97) for a in grid])
    maxima = [grid[i] for i in range(1, len(grid) - 1) if vals[i] > vals[i - 1] and vals[i] > vals[i + 1]]
    return report(3, "double peak at T=0.97: >= 2 strict local maxima", len(maxima) >= 2,
                  f"{len(maxima)} maxima at alpha = {', '.join(f'{a:.2f}' for a in maxima)}")


def criterion_4():
    f05, a05 = peak_fidelity(1.0, 0.05)
    f10, a10 = peak_fidelity(1.0, 0.10)
    ok = f05 >= 0.80 and f10 < f05
    return report(4, "mismatch: peak F(Upsilon=0.05) >= 0.80 and F(0.10) < F(0.05)", ok,
                  f"F(0.05) = {f05:.4f} at alpha {a05:.3f}; F(0.10) = {f10:.4f} at alpha {a10:.3f}")


def criterion_5():
    p0 = vacuum_success_probability(ProtocolParams(alpha=0.0))
    p25 = vacuum_success_probability(ProtocolParams(alpha=2.5))
    ok = abs(p0 - 1.0) <= 1e-6 and abs(p25 - 0.25) <= 0.01
    return report(5, "vacuum probability P0(0)=1, P0(2.5)=0.25 +/- 0.01", ok,
                  f"P0(0) = {p0:.9f}, P0(2.5) = {p25:.5f}")


def criterion_6():
    wide = homodyne_success_probability(ProtocolParams(alpha=1.5, dx=5.0))
    narrow = {a: homodyne_success_probability(ProtocolParams(alpha=a, dx=0.25)) for a in (1.0, 1.5, 2.0)}
    ok = abs(wide - 1.0) <= 1e-3 and all(0.08 <= p <= 0.17 for p in narrow.values())
    return report(6, "window probability: dx=5 gives 1 +/- 1e-3, dx=0.25 in [0.08, 0.17]", ok,
                  f"P(dx=5) = {wide:.6f}; dx=0.25: "
                  + ", ".join(f"alpha {a}: {p:.4f}" for a, p in narrow.items()))


def criterion_7():
    ideal = run_es_fixed(ProtocolParams(alpha=1.5))
    narrow = run_es_fixed(ProtocolParams(alpha=1.5, dx=0.01))
    td = trace_distance(ideal.rho, narrow.rho)
    return report(7, "dx=0.01 approaches ideal detection (trace distance <= 1e-3)", td <= 1e-3,
                  f"trace distance = {td:.2e}")


def criterion_8():
    start = time.perf_counter()
    cfg = OracleConfig(n_max=40)
    worst_td = worst_dp = 0.0
    for a, T, u, dx in itertools.product((0.5, 1.0, 2.0), (1.0, 0.95, 0.9), (0.0, 0.05), (None, 0.5)):
        params = ProtocolParams(alpha=a, T=T, upsilon=u, dx=dx)
        fast, slow = run_es_fixed(params), oracle_run_es(params, cfg)
        worst_td = max(worst_td, trace_distance(fast.rho, slow.rho))
        worst_dp = max(worst_dp, abs(fast.p_vacuum - slow.p_vacuum))
    elapsed = time.perf_counter() - start
    ok = worst_td <= 1e-6 and worst_dp <= 1e-8 and elapsed < 300
    return report(8, "Fock oracle agreement on 36-point grid", ok,
                  f"max trace distance = {worst_td:.2e}, max |dP0| = {worst_dp:.2e}; {elapsed:.1f} s")


def criterion_9():
    piped = normalize(heralded_pure_state(ProtocolParams(alpha=1.0, T=0.95)))
    written = normalize(literal_final_state(1.0, 0.95))
    ov = abs(inner_product(written, piped)) ** 2
    return report(9, "pre-trace state matches hand-written branch expansion", ov >= 1 - 1e-10,
                  f"1 - |overlap|^2 = {1 - ov:.2e}")


def _one_draw(rng):
    alpha = float(rng.uniform(0.0, 4.0))
    T = float(rng.uniform(0.5, 1.0))
    dx = None if rng.random() < 0.4 else float(rng.uniform(0.01, 5.0))
    peak = Peak(rng.choice([p.value for p in Peak]))
    if rng.random() < 0.15:
        out = run_es_averaged(ProtocolParams(alpha=alpha, T=T, dx=dx, peak=peak),
                              GaussianLossSpec(float(rng.uniform(0.002, 0.1)), node_count=8))
    else:
        ups = float(rng.uniform(0.0, min(0.1, T)))
        out = run_es_fixed(ProtocolParams(alpha=alpha, T=T, upsilon=ups, dx=dx, peak=peak))
    rho = out.rho.matrix
    bad = []
    if np.max(abs(rho - rho.conj().T)) > 1e-12:
        bad.append("hermitian")
    if abs(np.trace(rho).real - 1) > 1e-10:
        bad.append("trace")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        bad.append("psd")
    if fidelity(rho, bell_state(alpha, 1)) + fidelity(rho, bell_state(alpha, -1)) > 1 + 1e-10:
        bad.append("F+ + F-")
    probs = [out.p_vacuum] + ([] if out.p_homodyne is None else [out.p_homodyne])
    if any(not 0 <= p <= 1 for p in probs):
        bad.append("probability")
    # beam-splitter unitarity on a random superposition
    s = random_state(rng, (A, B, C, D), int(rng.integers(1, 8)), scale=1.0)
    s = add_vacuum_mode(add_vacuum_mode(s, EB), ED)
    n0 = norm_squared(s)
    n1 = norm_squared(apply_balanced_bs(apply_lossy_bs(apply_lossy_bs(s, B, EB, T), D, ED, T), B, D))
    u = bs_block_unitaries(round(T, 6), 20)[int(rng.integers(0, 21))]
    if abs(n1 - n0) > 1e-12 * n0 or np.max(abs(u @ u.conj().T - np.eye(len(u)))) > 1e-12:
        bad.append("unitarity")
    return bad


def criterion_10(cases=1000):
    rng = np.random.default_rng(7)
    failures = {}
    for _ in range(cases):
        for name in _one_draw(rng):
            failures[name] = failures.get(name, 0) + 1
    return report(10, f"invariants over {cases} random draws", not failures,
                  "no violations" if not failures else f"violations: {failures}")


def criterion_11():
    targets = {0.80: 3.0, 0.70: 7.5, 0.60: 10.5}
    rows = distance_report(tuple(targets), 0.149)
    errs = [abs(r["separation_km"] - targets[r["threshold"]]) for r in rows]
    return report(11, "distance report within +/- 0.5 km at 0.149 dB/km", max(errs) <= 0.5,
                  "; ".join(f"F>={r['threshold']:.2f}: T = {r['T']:.4f}, {r['separation_km']:.2f} km "
                            f"(target {targets[r['threshold']]})" for r in rows))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(criterion):
    assert criterion(), RESULTS.get(int(criterion.__name__.split("_")[1]))


if __name__ == "__main__":
    passed = sum(bool(c()) for c in CRITERIA)
    print(f"{passed}/{len(CRITERIA)} criteria pass")
    sys.exit(0 if passed == len(CRITERIA) else 1)
