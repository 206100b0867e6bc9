"""
Acceptance suite. Each test checks one criterion at its stated tolerance and
prints a single ``PASS criterion N: ...`` or ``FAIL criterion N: ...`` line
with the measured numbers, then asserts.

The long-run criteria (3, 4 and 5) share one 600 s coning data set.
"""

import math

import numpy as np
import pytest
from numpy.polynomial import chebyshev as npcheb

from chebnav import earthmodel as em
from chebnav import navcli
from chebnav import navcore as nc
from chebnav import quatalgebra as qa
from chebnav import reference as ref
from chebnav.chebkernel import (
    ChebSeries,
    build_operators,
    cheb_indefint_coeffs,
    cheb_poly,
    cheb_poly_trig,
    cheb_roots,
    coeffs_from_samples,
    samples_from_coeffs,
)
from chebnav.imufit import ImuBatch, fit_increments, reconstruct_increments
from chebnav.scenario import KINDS, ScenarioSpec, build_truth, generate_increments

from helpers import T_N, random_terrestrial_state, smooth_series, somigliana
from scenario_oracle import integrate_interval


@pytest.fixture
def verdict(capsys):
    def report(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return report


# ---------------------------------------------------------------- 1


def test_criterion_1_oracle_equivalence(verdict):
    rng = np.random.default_rng(20240601)
    # Attitude passes at 5 rad/s need up to 11 iterations to reach the noise
    # floor, so the cap is raised above the default 9 for this comparison.
    cfg = nc.IterationConfig(max_iters=30, renormalize=False)
    w_e = em.earth_rate_e()
    worst = np.zeros(3)
    all_converged = True
    for _ in range(100):
        w, f = smooth_series(rng, 5.0), smooth_series(rng, 30.0)
        q0, v0, p0 = random_terrestrial_state(rng)
        qm, am = nc.attitude_iterate(q0, w, w_e, cfg)
        qn, an = ref.naive_attitude_iterate(q0, w, w_e, cfg)
        vm, pm, vsm, psm = nc.velpos_iterate(v0, p0, qm, f, w_e, cfg)
        vn, pn, vsn, psn = ref.naive_velpos_iterate(v0, p0, qn, f, w_e, cfg)
        all_converged &= all(s.converged for s in (am, an, vsm, psm, vsn, psn))
        diffs = [np.abs(a.coeffs - b.coeffs).max() for a, b in ((qm, qn), (vm, vn), (pm, pn))]
        worst = np.maximum(worst, diffs)
    ok = all_converged and bool(np.all(worst <= 1e-12))
    verdict(
        1,
        ok,
        f"100 intervals, max |matrix - naive| per coefficient: attitude {worst[0]:.2e}, "
        f"velocity {worst[1]:.2e}, position {worst[2]:.2e} (limit 1e-12); all converged: {all_converged}",
    )


# ---------------------------------------------------------------- 2


def test_criterion_2_closed_form_attitude(verdict):
    cfg = nc.IterationConfig(renormalize=False)
    zero = np.zeros(3)
    spin = ChebSeries(np.array([[0.0, 0.0, 1.0]]), T_N)
    q, _ = nc.attitude_iterate(qa.IDENTITY, spin, zero, cfg)
    exact = np.array([math.cos(T_N / 2), 0, 0, math.sin(T_N / 2)])
    err_spin = qa.principal_angle(exact, qa.normalize(q(1.0)))

    omega = np.linalg.norm(em.earth_rate_e())
    still = ChebSeries(np.zeros((1, 3)), T_N)
    q, _ = nc.attitude_iterate(qa.IDENTITY, still, em.earth_rate_e(), cfg)
    exact = np.array([math.cos(omega * T_N / 2), 0, 0, -math.sin(omega * T_N / 2)])
    err_earth = qa.principal_angle(exact, qa.normalize(q(1.0)))
    ok = err_spin < 1e-14 and err_earth < 1e-14
    verdict(2, ok, f"z-spin error {err_spin:.2e} rad, earth-rate-only error {err_earth:.2e} rad (limit 1e-14)")


# ---------------------------------------------------------------- 3, 4, 5


@pytest.fixture(scope="module")
def coning600():
    cfg = navcli.RunConfig(duration=600.0)
    spec = cfg.scenario()
    truth = build_truth(spec)
    t_end, dth, dv = generate_increments(truth, 0.0, spec.n_samples, spec.dt)
    N = cfg.samples_per_interval
    t_nav = t_end[N - 1 :: N]
    q, v, p = truth.states(t_nav)
    truth_rows = np.column_stack([t_nav, q, v, p])
    return cfg, truth, dth, dv, truth_rows


@pytest.fixture(scope="module")
def coning600_runs(coning600):
    cfg, truth, dth, dv, truth_rows = coning600
    it_cfg = cfg.iteration_config()
    w_e = cfg.earth_rate_vector()
    state = two = truth.state(0.0)
    matrix_rows, two_rows, stats = [], [], []
    for batch in nc.iter_batches(dth, dv, cfg.dt, cfg.samples_per_interval):
        state, sol = nc.step(state, batch, it_cfg, w_e=w_e)
        two = ref.two_sample_step(two, batch, w_e=w_e)
        matrix_rows.append(np.r_[state.as_row(), 0, 0, 0, 0])
        two_rows.append(np.r_[two.as_row(), 0, 0, 0, 0])
        stats.append(sol)
    t = truth_rows[:, 0]
    matrix = np.array(matrix_rows)
    twos = np.array(two_rows)
    matrix[:, 0] = twos[:, 0] = t  # interval ends, free of accumulated rounding in t
    return (
        navcli.compute_errors(matrix, truth_rows),
        navcli.compute_errors(twos, truth_rows),
        stats,
    )


@pytest.mark.slow
def test_criterion_3_noncommutativity_suppression(coning600_runs, verdict):
    mat, two, _ = coning600_runs
    ang_m, ang_t = mat.angle.max(), two.angle.max()
    hor_m, hor_t = mat.horizontal.max(), two.horizontal.max()
    ang_ratio = ang_t / ang_m if ang_m > 0 else math.inf
    hor_ratio = hor_t / hor_m if hor_m > 0 else math.inf
    ok = ang_ratio >= 1e6 and hor_ratio >= 1e5
    verdict(
        3,
        ok,
        f"600 s coning: max angle matrix {ang_m:.2e} rad vs two-sample {ang_t:.2e} rad "
        f"(ratio {ang_ratio:.2e}, need >= 1e6); max horizontal {hor_m:.2e} m vs {hor_t:.2e} m "
        f"(ratio {hor_ratio:.2e}, need >= 1e5)",
    )


@pytest.mark.slow
def test_criterion_4_convergence_budget(coning600_runs, verdict):
    _, _, stats = coning600_runs
    worst_att = max(s.iters_attitude for s in stats)
    worst_vp = max(s.iters_velpos for s in stats)
    failed = sum(not s.converged for s in stats)
    ok = failed == 0 and max(worst_att, worst_vp) <= 9
    verdict(
        4,
        ok,
        f"{len(stats)} intervals, {failed} unconverged; most passes: attitude {worst_att}, "
        f"velocity/position {worst_vp} (limit 9)",
    )


@pytest.mark.slow
def test_criterion_5_speedup(coning600, verdict):
    cfg, truth, dth, dv, _ = coning600
    report = navcli.bench(cfg, truth.state(0.0), dth, dv, reps=5)
    speedup = report["speedup_vs_naive"]
    vs_two = report["ratio_matrix/twosample"]
    ok = speedup >= 3.0 and vs_two <= 3.0
    verdict(
        5,
        ok,
        f"bench medians over 5 runs: matrix {report['median_s_matrix']:.2f} s, "
        f"naive {report['median_s_naive']:.2f} s, two-sample {report['median_s_twosample']:.2f} s; "
        f"naive/matrix {speedup:.2f} (need >= 3), matrix/two-sample {vs_two:.2f} (need <= 3)",
    )


# ---------------------------------------------------------------- 6


def test_criterion_6_fitting_exactness(verdict):
    rng = np.random.default_rng(6)
    N, dt = 8, 0.01
    tau = -1.0 + 2.0 * np.arange(N + 1) / N
    worst_coef = worst_recon = 0.0
    for _ in range(50):
        c = rng.normal(size=(8, 3))
        d = 10.0 * rng.normal(size=(8, 3))
        incs = [
            np.diff(npcheb.chebval(tau, npcheb.chebint(x, lbnd=-1, scl=N * dt / 2)), axis=-1).T for x in (c, d)
        ]
        w, f = fit_increments(ImuBatch(dt, *incs), 7, 7)
        worst_coef = max(worst_coef, np.abs(w.coeffs - c).max(), np.abs(f.coeffs - d).max())
        for series, inc in zip((w, f), incs):
            rel = np.abs(reconstruct_increments(series, N) - inc).max() / np.abs(inc).max()
            worst_recon = max(worst_recon, rel)
    ok = worst_coef < 1e-12 and worst_recon < 1e-12
    verdict(
        6,
        ok,
        f"50 degree-7 rate/force pairs from N=8 increments: coefficient error {worst_coef:.2e}, "
        f"relative reconstruction error {worst_recon:.2e} (limits 1e-12)",
    )


# ---------------------------------------------------------------- 7


def test_criterion_7_spectral_operators(verdict):
    rng = np.random.default_rng(7)
    duality = 0.0
    for M in range(2, 15):
        x = rng.uniform(-1e3, 1e3, size=(M + 1, 3))
        back = coeffs_from_samples(samples_from_coeffs(x, M), M)
        duality = max(duality, np.abs(back - x).max() / max(1.0, np.abs(x).max()))
    integ = 0.0
    for M in (2, 3, 6, 9, 14):
        UD = build_operators(M).Cd
        for i in range(M):
            integ = max(integ, np.abs(UD[:, i] - cheb_indefint_coeffs(i, M)[: M + 1]).max())
    product = 0.0
    for M in (4, 9, 12):
        r = cheb_roots(M)
        for j in range(M // 2 + 1):
            for k in range(M // 2 + 1):
                lhs = cheb_poly(j, r) * cheb_poly(k, r)
                rhs = 0.5 * (cheb_poly(j + k, r) + cheb_poly(abs(j - k), r))
                product = max(product, np.abs(lhs - rhs).max())
    grid = np.linspace(-1, 1, 101)
    recur = max(np.abs(cheb_poly(i, grid) - cheb_poly_trig(i, grid)).max() for i in range(31))
    ok = duality <= 1e-12 and integ <= 1e-14 and product <= 1e-14 and recur < 1e-13
    verdict(
        7,
        ok,
        f"transform duality {duality:.2e} (1e-12), integration identity {integ:.2e} (1e-14), "
        f"product identity {product:.2e} (1e-14), recurrence vs trig {recur:.2e} (1e-13)",
    )


# ---------------------------------------------------------------- 8


def test_criterion_8_earth_model(verdict):
    rng = np.random.default_rng(8)
    n = 50000
    g = np.column_stack(
        [rng.uniform(-np.pi, np.pi, n), rng.uniform(-1, 1, n) * math.radians(89.9), rng.uniform(-5e3, 1e5, n)]
    )
    p = em.lla2ecef(g)
    round_trip = np.linalg.norm(em.lla2ecef(em.ecef2lla(p)) - p, axis=1).max()
    ge = em.gravity_e(p)
    gn = em.gravity_n(g)
    frame = np.abs(np.einsum("kji,kj->ki", em.cne(g), ge) - gn).max()
    grav = max(abs(em.normal_gravity(lat, 0.0) - somigliana(lat)) for lat in (0.0, math.pi / 2))
    ok = round_trip < 1e-8 and frame <= 1e-12 and grav <= 1e-9
    verdict(
        8,
        ok,
        f"round trip {round_trip:.2e} m (1e-8), gravity frame consistency {frame:.2e} (1e-12), "
        f"equator/pole vs Somigliana {grav:.2e} m/s^2 (1e-9)",
    )


# ---------------------------------------------------------------- 9


def test_criterion_9_scenario_self_certification(verdict):
    worst = 0.0
    for kind in KINDS:
        truth = build_truth(ScenarioSpec(kind=kind, velocity_n=(20.0, 1.0, -5.0)))
        for t0 in (0.0, 37.2, 412.56):
            q, v, _, dp = integrate_interval(truth, t0, T_N)
            tq, tv, _ = (a[0] for a in truth.states([t0 + T_N]))
            d_true = truth.displacement(t0, t0 + T_N)[0]
            worst = max(worst, np.abs(q - tq).max(), np.abs(v - tv).max(), np.abs(dp - d_true).max())
    ok = worst < 1e-12
    verdict(
        9,
        ok,
        f"{len(KINDS)} scenario kinds x 3 intervals, truth vs DOP853 integration: max deviation {worst:.2e} (1e-12)",
    )
