"""End-to-end acceptance criteria.

Each test appends one ``ACCEPTANCE n PASS|FAIL ...`` line that the terminal
summary prints under "acceptance criteria", then asserts.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from gdnls import experiments as ex
from gdnls.config import bump
from gdnls.integrator import SolverConfig, Termination, duhamel_residual, evolve, plane_wave, plane_wave_exact
from gdnls.invariants import DichotomyParams, compute_c_sigma, plane_wave_invariants
from gdnls.model import ModelParams
from gdnls.spectral import Cutoff, hs_norm, l2_norm

SIGMAS = (1.0, 1.5, 2.0)
PW_A, PW_K, PW_N = 0.5, 2, 64
DT = 1e-3

# every completed smooth run made here is re-checked by criterion 6
COMPLETED_RUNS: dict[str, object] = {}


def verdict(n, ok, detail):
    ACCEPTANCE_LINES.append(f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def sparse_cfg(dt, t_final=1.0):
    big = 10**7
    return SolverConfig(dt, t_final, snapshot_every=big, invariant_every=big)


def keep(label, traj):
    if traj.termination is Termination.COMPLETED:
        COMPLETED_RUNS[label] = traj
    return traj


def plane_wave_error(sigma, dt):
    traj = evolve(plane_wave(PW_N, PW_A, PW_K), ModelParams(sigma), sparse_cfg(dt))
    return traj, l2_norm(traj.final - plane_wave_exact(PW_N, PW_A, PW_K, sigma, 1.0))


def test_criterion_01_plane_wave_exactness():
    start = time.perf_counter()
    errors, ratios = {}, {}
    for s in SIGMAS:
        traj, errors[s] = plane_wave_error(s, DT)
        keep(f"plane_wave_sigma{s:g}", traj)
        # halving is measured where truncation error dominates round-off
        coarse = plane_wave_error(s, 0.1)[1]
        fine = plane_wave_error(s, 0.05)[1]
        ratios[s] = coarse / fine
    elapsed = time.perf_counter() - start
    ok = all(e <= 1e-8 for e in errors.values()) and all(14 <= r <= 18 for r in ratios.values()) and elapsed < 5
    detail = ", ".join(f"sigma={s:g}: err={errors[s]:.2e} ratio={ratios[s]:.2f}" for s in SIGMAS)
    verdict(1, ok, f"plane wave {detail}; {elapsed:.2f}s")


def invariant_drifts(dt, sigma=1.5, K=16):
    traj = evolve(bump(64, 1.0), ModelParams(sigma, Cutoff(K)), sparse_cfg(dt))
    r0, r1 = traj.invariant_trace[0], traj.invariant_trace[-1]
    drifts = {
        name: abs(getattr(r1, name) - getattr(r0, name)) / abs(getattr(r0, name))
        for name in ("mass", "momentum", "hamiltonian_eps")
    }
    return traj, drifts


def test_criterion_02_mollified_invariants():
    start = time.perf_counter()
    traj, drift = invariant_drifts(DT)
    keep("bump_K16", traj)
    small = all(d <= 1e-8 for d in drift.values())

    dts = np.array([0.01, 0.005, 0.0025, 0.00125])
    series = {name: [] for name in drift}
    for dt in dts:
        for name, d in invariant_drifts(dt)[1].items():
            series[name].append(d)
    orders = {name: float(np.polyfit(np.log(dts), np.log(v), 1)[0]) for name, v in series.items()}
    elapsed = time.perf_counter() - start
    ok = small and all(3.7 <= o <= 4.3 for o in orders.values()) and elapsed < 10
    detail = ", ".join(f"{n}: drift={drift[n]:.1e} order={orders[n]:.2f}" for n in drift)
    verdict(2, ok, f"mollified invariants {detail}; {elapsed:.2f}s")


@pytest.fixture(scope="module")
def static_reports():
    start = time.perf_counter()
    reports = {r.name: r for r in ex.static_suite(samples=1000, num_modes=16, seed=0, sigmas=(1.0, 1.5, 2.0, 2.5))}
    return reports, time.perf_counter() - start


def test_criterion_03_energy_domination(static_reports):
    reports, elapsed = static_reports
    rep = reports["energy_domination"]
    worst = min(rep.fitted_constants.values())
    verdict(3, rep.passed and worst > 0 and elapsed < 5,
            f"energy domination, 1000 fields x 4 sigma, worst margin={worst:.3e}; {elapsed:.2f}s")


def test_criterion_04_static_inequalities(static_reports):
    reports, elapsed = static_reports
    names = ("mollifier", "interpolation", "c_sigma_validity")
    moll = reports["mollifier"].fitted_constants
    ok = all(reports[n].passed for n in names) and moll["idempotent"] == 0 and elapsed < 10
    verdict(4, ok, f"static suite {[reports[n].verdict for n in names]}, gain max={moll['gain']:.4f}, "
                   f"nonexpansive slack={moll['nonexpansive']:.2e}; {elapsed:.2f}s")


def test_criterion_05_eps_convergence():
    start = time.perf_counter()
    cfg = SolverConfig(DT, 1.0, snapshot_every=10, invariant_every=100)
    rep = ex.eps_convergence(bump(128, 1.0), 1.5, [8, 16, 32, 64], cfg, reference=128)
    elapsed = time.perf_counter() - start
    e = rep.tables["distance"]["E"]
    verdict(5, rep.passed and elapsed < 60,
            f"eps convergence E={[f'{x:.2e}' for x in e]} ratio={rep.fitted_constants['ratio_last_first']:.2e}; "
            f"{elapsed:.2f}s")


@pytest.fixture(scope="module")
def smooth_run():
    start = time.perf_counter()
    traj = evolve(bump(64, 1.0), ModelParams(1.5), SolverConfig(DT, 1.0, snapshot_every=10, invariant_every=10))
    return keep("bump_Kinf", traj), time.perf_counter() - start


def test_criterion_07_growth_probes(smooth_run):
    traj, run_time = smooth_run
    start = time.perf_counter()
    reps = [ex.lower_order_probe(traj, r) for r in (1.0, 2.0)] + [ex.h2_growth_probe(traj)]
    elapsed = run_time + time.perf_counter() - start
    ok = all(r.passed for r in reps) and elapsed < 20
    detail = ", ".join(f"{r.name}: {r.verdict} (worst margin {r.fitted_constants['worst_margin']:.3g})" for r in reps)
    verdict(7, ok, f"growth probes {detail}; {elapsed:.2f}s")


def test_criterion_08_continuous_dependence():
    start = time.perf_counter()
    cfg = SolverConfig(DT, 1.0, snapshot_every=10, invariant_every=100)
    p = ModelParams(1.5, Cutoff(16))
    reps = [ex.continuous_dependence_probe(bump(64, 1.0), s, p, cfg, seed=0) for s in (0.0, 1.0)]
    elapsed = time.perf_counter() - start
    ok = all(r.passed for r in reps) and elapsed < 60
    detail = ", ".join(
        f"s'={s:g}: exponent={r.fitted_constants['exponent']:.3f} "
        f"(min {r.tolerances['exponent_min']:.2f}), fit residual={max(r.tables['scaling']['log_fit_max_residual']):.2e}"
        for s, r in zip((0.0, 1.0), reps)
    )
    verdict(8, ok, f"continuous dependence {detail}; {elapsed:.2f}s")


def test_criterion_09_dichotomy():
    start = time.perf_counter()
    sigma, a, k = 1.0, 0.1, 1
    d = DichotomyParams.from_c_sigma(compute_c_sigma(sigma), sigma)
    m, _, h = plane_wave_invariants(a, k, sigma)
    h1_0 = hs_norm(plane_wave(64, a, k), 1)
    analytic_ok = m + h < d.f_at_x_star and h1_0 < d.x_star
    cfg = SolverConfig(DT, 5.0, snapshot_every=100, invariant_every=10)
    rep = ex.dichotomy_experiment([a], sigma, ModelParams(sigma), cfg, num_modes=64, k=k)
    elapsed = time.perf_counter() - start
    margin = rep.tables["amplitudes"]["margin"][0]
    ok = analytic_ok and rep.passed and rep.tables["amplitudes"]["class"] == ["below"] and margin > 0 and elapsed < 30
    verdict(9, ok, f"dichotomy A={a}: M+H={m + h:.4f} < f(x*)={d.f_at_x_star:.4f}, "
                   f"x*={d.x_star:.4f}, margin={margin:.4f}; {elapsed:.2f}s")


def test_criterion_10_duhamel_residual():
    sigma = 1.5
    dense = keep("plane_wave_dense", evolve(plane_wave(PW_N, PW_A, PW_K), ModelParams(sigma),
                                            SolverConfig(DT, 1.0, snapshot_every=10, invariant_every=10)))
    dense_res = duhamel_residual(dense, len(dense.snapshots) - 1)
    spacings = (0.1, 0.05, 0.025)
    coarse = []
    for h in spacings:
        traj = evolve(plane_wave(PW_N, PW_A, PW_K), ModelParams(sigma),
                      SolverConfig(DT, 1.0, snapshot_every=round(h / DT), invariant_every=1000))
        coarse.append(duhamel_residual(traj, len(traj.snapshots) - 1, max_spacing=None))
    order = float(np.polyfit(np.log(spacings), np.log(coarse), 1)[0])
    decreasing = all(b < a for a, b in zip(coarse, coarse[1:]))
    ok = dense_res <= 1e-6 and decreasing and 3.5 <= order <= 4.5
    verdict(10, ok, f"Duhamel residual dense={dense_res:.2e}, refinement {[f'{x:.2e}' for x in coarse]} "
                    f"order={order:.2f}")


def test_criterion_06_hamiltonian_every_run():
    """Runs last: gathers every completed smooth trajectory produced above plus fresh ones."""
    if "bump_Kinf" not in COMPLETED_RUNS:
        keep("bump_Kinf", evolve(bump(64, 1.0), ModelParams(1.5), SolverConfig(DT, 1.0, snapshot_every=10,
                                                                                invariant_every=10)))
    for s in SIGMAS:
        label = f"plane_wave_sigma{s:g}"
        if label not in COMPLETED_RUNS:
            keep(label, plane_wave_error(s, DT)[0])
    if "bump_K16" not in COMPLETED_RUNS:
        keep("bump_K16", invariant_drifts(DT)[0])
    results = {label: ex.hamiltonian_monotonicity(tr, resolved=True) for label, tr in COMPLETED_RUNS.items()}
    bad = [label for label, r in results.items() if not r.passed]
    worst = max(r.fitted_constants["max_drift"] / (1 + abs(r.fitted_constants["H0"])) for r in results.values())
    verdict(6, not bad, f"Hamiltonian over {len(results)} runs, worst relative drift={worst:.2e}"
                        + (f", failing: {bad}" if bad else ""))
