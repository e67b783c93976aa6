"""Acceptance criteria 1-10, one PASS/FAIL line each.

Every criterion is asserted as stated; failing ones are left red and the
blocking analysis lives in the decisions ledger.
"""
import time
from fractions import Fraction

import numpy as np
import pytest

from xxzbath.bethe_core import ChainSpec, MagnonState, dense_vector, sector_to_full
from xxzbath.entanglement_measures import (
    INF, MeasureKind, closed_form_measure, edge_block_weight_exact, gme_ghz_block,
    optimize_symmetric_product_overlap,
)
from xxzbath.ghz_distillation import BlockState, distillable_rate, printed_success_probability, recurrence_step
from xxzbath.open_dynamics import (
    BathSpec, build_markov_generator, critical_temperature, evolve_populations, ghz_sector_evolve,
    ghz_sector_rhs,
)
from xxzbath.reference_oracles import (
    bilateral_cnot_round, eigenstate_residual, matrix_exponential_small, ode_integrate, sector_spectrum,
)
from xxzbath.sweep_cli import build_parser, build_sweep_config, cmd_heatmap, main, resolve_settings
from xxzbath.verification import bethe_states, zero_momentum_spectrum

FIG = dict(gamma=1.0, f=0.01, n=10.0)


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok
    return emit


def heatmap_rows():
    args = build_parser().parse_args(["heatmap"])
    return cmd_heatmap(build_sweep_config(resolve_settings(args, "heatmap")))


def test_criterion_01_bethe_validity(report):
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for N in (6, 8, 10, 12):
        for d in (-2.0, -0.5, 0.5, 2.0):
            for st in bethe_states(ChainSpec(N, d)):
                if st.l in (1, 2):
                    worst = max(worst, eigenstate_residual(st))
                    count += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 30
    report(1, ok, f"{count} states, max residual {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_02_bound_state_gap(report):
    spec = sector_spectrum(10, 2, 2.0)
    target = -10 * 2.0 / 2 + 2 * (2.0 - 1 / 2.0)
    dist = float(np.min(np.abs(spec - target)))
    below = int(np.sum(zero_momentum_spectrum(10, 2, 0.5) < -0.5 * 10 * 0.5 + 4 * (0.5 - 1) - 1e-9))
    ok = dist < 1e-6 and below == 0
    report(2, ok, f"nearest level to {target} at distance {dist:.3e} (lowest {spec[0]:.7f}); "
                  f"isolated Q=0 levels at delta=0.5: {below}")
    assert ok


def test_criterion_03_closed_form_dynamics(report):
    worst_ode, worst_pop, h = 0.0, 0.0, 1e-4
    w0 = np.array([0.0, 1.0, 0.0, 0.0])
    for beta in (0.0, 0.5, 2.0, 5.0, 20.0):
        bath = BathSpec(beta, **FIG)
        for d in np.linspace(-4, 2, 7):
            M = build_markov_generator(bath, d)
            for t in np.linspace(0, 100, 11):
                s0 = ghz_sector_evolve(t, bath, d)
                if t == 0:
                    # second-order one-sided stencil at the initial time
                    s1, s2 = ghz_sector_evolve(h, bath, d), ghz_sector_evolve(2 * h, bath, d)
                    num = np.array([(-3 * s0.u + 4 * s1.u - s2.u), (-3 * s0.v + 4 * s1.v - s2.v)]) / (2 * h)
                else:
                    sp, sm = ghz_sector_evolve(t + h, bath, d), ghz_sector_evolve(t - h, bath, d)
                    num = np.array([(sp.u - sm.u) / (2 * h), (sp.v - sm.v) / (2 * h)])
                worst_ode = max(worst_ode, np.max(np.abs(num - ghz_sector_rhs(t, (s0.u, s0.v), bath, d))))
                a = evolve_populations(t, M).as_array()
                b = matrix_exponential_small(M.matrix, t) @ w0
                c = ode_integrate(M.matrix, w0, t, tol=1e-12)
                worst_pop = max(worst_pop, np.max(np.abs(a - b)), np.max(np.abs(a - c)), np.max(np.abs(b - c)))
    ok = worst_ode < 1e-7 and worst_pop < 1e-8
    report(3, ok, f"ODE residual {worst_ode:.2e}, population spread {worst_pop:.2e}")
    assert ok


def test_criterion_04_infinite_temperature_plateau(report):
    w1 = evolve_populations(100.0, build_markov_generator(BathSpec(0.0, **FIG), 0.0)).w1
    ok = abs(w1 - 0.25) <= 0.01
    report(4, ok, f"w1(100) = {w1:.7f}")
    assert ok


def test_criterion_05_entanglement_constants(report):
    t0 = time.perf_counter()
    c_w = closed_form_measure(MeasureKind.CME_W, INF)
    c_2m = closed_form_measure(MeasureKind.CME_2M, INF)
    consts = round(c_w, 4) == 0.6321 and round(c_2m, 4) == 0.5940
    err_w, err_2m = 0.0, 0.0
    for N in (6, 8, 10, 12):
        for kind, st, attr in ((MeasureKind.CME_W, MagnonState.one_magnon(ChainSpec(N, 0.0), 0.0), "w"),
                               (MeasureKind.CME_2M, MagnonState.edge(ChainSpec(N, 0.0), "0+"), "2m")):
            v = sector_to_full(dense_vector(st), N, st.l)
            err = abs(optimize_symmetric_product_overlap(v, N).measure - closed_form_measure(kind, N))
            if attr == "w":
                err_w = max(err_w, err)
            else:
                err_2m = max(err_2m, err)
    elapsed = time.perf_counter() - t0
    ok = consts and err_w < 1e-8 and err_2m < 1e-8 and elapsed < 10
    report(5, ok, f"N=inf constants {c_w:.4f}, {c_2m:.4f}; finite-N error W {err_w:.1e}, "
                  f"two-magnon edge {err_2m:.3f}; {elapsed:.1f} s")
    assert ok


def test_criterion_06_gme_scaling(report):
    Ns = list(range(3, 2001)) + [int(x) for x in np.logspace(3.5, 6, 30)] + [10**6]
    scaling = all(N * closed_form_measure(MeasureKind.GME_W, N, exact=True) == 1 for N in Ns)
    pab = all(edge_block_weight_exact(N, [1]) == Fraction(1, 4 * N) + Fraction(1, 2 * N**3) for N in (6, 8, 10))
    ok = scaling and pab
    report(6, ok, f"N*GME_W = 1 exactly on {len(Ns)} N up to 1e6: {scaling}; p_AB rational match: {pab}")
    assert ok


def test_criterion_07_distillation_oracle(report):
    t0 = time.perf_counter()
    maps, prob = 0.0, 0.0
    for N in (3, 4):
        for u, w, v in ((0.8, 0.2, 0.3), (0.6, 0.4, 0.1), (1.0, 0.0, 0.5), (0.9, 0.1, 0.2)):
            o = bilateral_cnot_round(u, w, v, N)
            maps = max(maps, abs(o.u - u * u), abs(o.w - w * w / N), abs(o.v - (v * v + abs(v) ** 2)))
            prob = max(prob, abs(o.probability - printed_success_probability(u)))
            # the package's own step follows the oracle
            s, p = recurrence_step(BlockState(u, v, w, N))
            assert abs(p - o.probability) < 1e-10
    elapsed = time.perf_counter() - t0
    ok = maps < 1e-10 and prob < 1e-10 and elapsed < 20
    report(7, ok, f"map error {maps:.1e}; |P_oracle - 2u^2| up to {prob:.3f}; {elapsed:.1f} s")
    assert ok


def test_criterion_08_perfect_input_rates(report):
    eg, ed = gme_ghz_block(1.0, 0.5), distillable_rate(1.0, 0.5)[0]
    eg0, ed0 = gme_ghz_block(1.0, 0.0), distillable_rate(1.0, 0.0)[0]
    ok = eg == 0.5 and ed == 1.0 and eg0 == 0.0 and ed0 == 0.0
    report(8, ok, f"(1, 1/2): E_G={eg}, E_D={ed}; v=0: E_G={eg0}, E_D={ed0}")
    assert ok


def test_criterion_09_regime_boundaries(report):
    t0 = time.perf_counter()
    rows = heatmap_rows()
    deltas = sorted({r["delta"] for r in rows})
    temps = sorted({r["T"] for r in rows})
    eg = {(r["delta"], r["T"]): r["gme_ghz"] for r in rows}
    bad = []
    for d in deltas:
        if not -4 <= d <= 0.9:
            continue
        # rows below the contour: consecutive low-T cells with E_G > 0.01
        inside = 0
        for T in temps:
            if eg[(d, T)] > 0.01:
                inside += 1
            else:
                break
        expect = int(np.sum(np.array(temps) < critical_temperature(1 - d, 0.007)))
        if abs(inside - expect) > 1:
            bad.append(d)
    part_a = not bad
    # the log-T heatmap grid has no T = 0.05 row, so part (b) is evaluated at beta = 20 directly
    w2m = {d: evolve_populations(100.0, build_markov_generator(BathSpec(20.0, **FIG), d)).w2m for d in deltas}
    low = max(w2m[d] for d in deltas if d < -3)
    mid = min(w2m[d] for d in deltas if -2.5 < d < 0.9)
    part_b = low < 1e-3 and mid > 0.3
    elapsed = time.perf_counter() - t0
    ok = part_a and part_b and elapsed < 300
    report(9, ok, f"(a) {len(bad)} of {sum(-4 <= d <= 0.9 for d in deltas)} delta columns off T_c by "
                  f"more than one cell; (b) w2m max {low:.1e} for delta<-3, min {mid:.3f} on (-2.5, 0.9) "
                  f"at t=100; {elapsed:.1f} s")
    assert ok


def test_criterion_10_determinism(report, tmp_path, capsys):
    files = []
    for tag, threads in (("a", "1"), ("b", "1"), ("c", "4"), ("d", "8")):
        out = tmp_path / f"{tag}.csv"
        assert main(["heatmap", "--threads", threads, "--out", str(out)]) == 0
        files.append(out)
    capsys.readouterr()
    suffixes = ["", ".gme_ghz.dat", ".distill_rate.dat", ".w_fraction.dat", ".cme_bound.dat"]
    blobs = [[(f.parent / (f.name + s)).read_bytes() for s in suffixes] for f in files]
    ok = all(b == blobs[0] for b in blobs[1:])
    report(10, ok, "4 heatmap runs at 1, 1, 4, 8 threads: " + ("bitwise identical" if ok else "differ"))
    assert ok
