"""Acceptance criteria 1-10, each at its stated tolerance.

Each test records one PASS/FAIL line (also echoed in pytest's terminal
summary).  Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import stats

from poisson_noma import (
    Access,
    ClusterSpec,
    Model,
    NetworkConfig,
    Ordering,
    SearchGrid,
    cdf_z_given_rho,
    cdf_zi_given_rho,
    coverage_noma,
    decoding_thresholds,
    effective_powers,
    exhaustive_search,
    lt_intercell,
    model3_bracket,
    pdf_r_given_rho,
    pdf_ri_given_rho,
    solve_tmt,
    sweep_beta,
    sweep_cluster_size,
)
from poisson_noma.allocation import exhaustive_count, fit_growth_rate
from poisson_noma.cli import main
from poisson_noma.coverage import evaluator_for
from poisson_noma.interference import guard_zone_exponent
from poisson_noma.montecarlo import estimate_noma_coverage_sweep, estimate_served_fraction, simulate_links

CFG = NetworkConfig()  # lambda=10, eta=4, sigma2=-90 dBm, beta=0
REF_POWERS = np.array([1 / 6, 1 / 3, 1 / 2])
THETA_DB = np.arange(-10, 23)


def test_criterion_1_analytical_vs_monte_carlo(criterion):
    worst = (0.0, None)
    failures = []
    for ordering in (Ordering.MSP, Ordering.ISINR):
        spec = ClusterSpec(Model.MODEL1, 3, ordering)
        ev = evaluator_for(CFG, spec)
        thetas = [np.full(3, 10 ** (t / 10)) for t in THETA_DB]
        mc = estimate_noma_coverage_sweep(CFG, spec, REF_POWERS, thetas, 20_000, seed=2024)
        for t_db, th, est in zip(THETA_DB, thetas, mc):
            m = decoding_thresholds(REF_POWERS, th, CFG.beta)
            for i in range(1, 4):
                a = ev.rank_coverage(i, m[i - 1])
                gap = abs(a - est[i - 1].mean)
                tol = max(0.03, 3 * est[i - 1].stderr)
                if gap / tol > worst[0]:
                    worst = (gap / tol, (ordering.value, int(t_db), i, a, est[i - 1].mean))
                if gap > tol:
                    failures.append((ordering.value, int(t_db), i, round(a, 4), round(est[i - 1].mean, 4)))
    ok = not failures
    criterion(1, ok, f"{len(failures)} of 198 points outside max(0.03, 3 stderr); worst gap/tol "
                     f"{worst[0]:.2f} at {worst[1][:3]}; failing (ordering, theta_db, rank, analytical, mc): "
                     f"{failures}")
    assert ok, failures


def test_criterion_2_closed_forms(criterion):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        rho = rng.uniform(0.05, 1.0)
        r = rng.uniform(0.0, 0.5) * rho
        u = rho - r
        s = 10 ** rng.uniform(-4, 2)
        lam = 10 ** rng.uniform(-1, 2)
        a = guard_zone_exponent(s, u, 4.0, closed_form=True)
        b = guard_zone_exponent(s, u, 4.0, closed_form=False)
        worst = max(worst, abs(a - b) / abs(b))
        for model in (Model.MODEL1, Model.MODEL2, Model.MODEL3):
            x = lt_intercell(s, r, rho, lam, 4.0, model, closed_form=True)
            y = lt_intercell(s, r, rho, lam, 4.0, model, closed_form=False)
            # both routes may underflow to exactly 0 for large lambda * s
            worst = max(worst, 0.0 if x == y else abs(x - y) / abs(y))
    ok = worst <= 1e-9
    criterion(2, ok, f"max relative deviation {worst:.2e} over 100 points x 3 models")
    assert ok


def test_criterion_3_model3_bracket_oracle(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        s = 10 ** rng.uniform(-3, 2)
        rho = rng.uniform(0.05, 1.5)
        eta = rng.uniform(2.5, 6.0)
        ref, _ = sp_integrate.quad(lambda y: 2 / rho / (1 + s * y ** (-eta)), rho, 1.5 * rho,
                                   epsabs=1e-13, epsrel=1e-13)
        worst = max(worst, abs(model3_bracket(s, rho, eta) - ref))
    ok = worst <= 1e-8
    criterion(3, ok, f"max abs deviation from quadrature {worst:.2e} over 50 points")
    assert ok


def test_criterion_4_geometry(criterion):
    lam = CFG.lam
    links = simulate_links(CFG, ClusterSpec(Model.MODEL1, 1), 100_000, seed=4)
    ks = stats.kstest(links.rho, lambda x: 1 - np.exp(-math.pi * lam * x * x)).statistic
    stienen = estimate_served_fraction(CFG, 2 * math.pi, 100_000, seed=5).mean
    m2 = simulate_links(CFG, ClusterSpec(Model.MODEL2, 1), 100_000, seed=6)
    m2_err = abs(np.mean(m2.z_nearest[:, 0] / m2.rho) / 1.25 - 1)
    m3 = simulate_links(CFG, ClusterSpec(Model.MODEL3, 3), 20_000, seed=7)
    m3_err = np.max(np.abs(m3.z_nearest - (m3.r + m3.rho[:, None])))
    ok = ks < 0.01 and abs(stienen - 0.25) <= 0.005 and m2_err < 0.0092 and m3_err <= 1e-12
    criterion(4, ok, f"KS {ks:.4f}; Stienen fraction {stienen:.4f}; Model-2 mean z off 1.25 rho by "
                     f"{100 * m2_err:.3f}%; Model-3 |z-(R+rho)| max {m3_err:.1e}")
    assert ok


def test_criterion_5_order_statistics(criterion):
    rng = np.random.default_rng(5)
    worst_pdf = worst_cdf = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 7))
        rho = rng.uniform(0.05, 1.0)
        r = rng.uniform(0, 0.5) * rho
        model = [Model.MODEL1, Model.MODEL2, Model.MODEL3][int(rng.integers(3))]
        total = sum(pdf_ri_given_rho(r, rho, i, n, model) for i in range(1, n + 1))
        worst_pdf = max(worst_pdf, abs(total - n * pdf_r_given_rho(r, rho, model)))
    for _ in range(8):
        n = int(rng.integers(2, 6))
        rho = rng.uniform(0.1, 0.6)
        x = 10 ** rng.uniform(-1, 1.5)
        model = [Model.MODEL1, Model.MODEL2, Model.MODEL3][int(rng.integers(3))]
        f = cdf_z_given_rho(x, rho, CFG, model)
        total = sum(cdf_zi_given_rho(x, rho, i, n, CFG, model) for i in range(1, n + 1))
        worst_cdf = max(worst_cdf, abs(total - n * f))
    ok = worst_pdf <= 1e-10 and worst_cdf <= 1e-8
    criterion(5, ok, f"density identity max error {worst_pdf:.1e}; CDF identity max error {worst_cdf:.1e}")
    assert ok


def test_criterion_6_algorithm1_matches_exhaustive(criterion):
    spec = ClusterSpec(Model.MODEL1, 2, Ordering.MSP)
    grid = SearchGrid(dtheta_db=2.0, dp=0.05)
    rows = []
    ok = True
    for tmt in (0.1, 0.3, 0.5):
        a = solve_tmt(CFG, spec, tmt, grid)
        b = exhaustive_search(CFG, spec, tmt, grid)
        same = (a.feasible and b.feasible and np.array_equal(a.resource_units, b.resource_units)
                and np.allclose(a.thetas, b.thetas, rtol=0, atol=0)
                and abs(a.cell_sum_rate - b.cell_sum_rate) <= 1e-12)
        ok &= bool(same)
        rows.append(f"T={tmt}: alg P={a.resources.tolist()} th_db={a.thetas_db.tolist()} R={a.cell_sum_rate:.5f} "
                    f"vs exh P={b.resources.tolist()} th_db={b.thetas_db.tolist()} R={b.cell_sum_rate:.5f} "
                    f"[{'same' if same else 'differs'}]")
    criterion(6, ok, "; ".join(rows))
    assert ok


def test_criterion_7_cluster_size_sweep(criterion):
    sweeps = {
        m: sweep_cluster_size(CFG, ClusterSpec(m, 1, Ordering.MSP), range(1, 13), tmt=0.3,
                              stop_after_infeasible=True)
        for m in (Model.MODEL1, Model.MODEL2, Model.MODEL3)
    }
    nmax = {m: s.max_supported_n for m, s in sweeps.items()}
    opt = {m: s.optimum_sum_rate for m, s in sweeps.items()}
    interior = all(1 < s.optimum_n < s.max_supported_n for s in sweeps.values())
    g31 = opt[Model.MODEL3] / opt[Model.MODEL1] - 1
    g32 = opt[Model.MODEL3] / opt[Model.MODEL2] - 1
    g21 = opt[Model.MODEL2] / opt[Model.MODEL1] - 1
    ok = (abs(nmax[Model.MODEL1] - 6) <= 1 and abs(nmax[Model.MODEL2] - 7) <= 1
          and abs(nmax[Model.MODEL3] - 9) <= 1 and interior
          and abs(g31 - 1.29) <= 0.25 and abs(g32 - 0.984) <= 0.25 and abs(g21 - 0.155) <= 0.10)
    criterion(7, ok, f"largest N {[nmax[m] for m in sweeps]}; optimum N {[s.optimum_n for s in sweeps.values()]}; "
                     f"gains M3/M1 {100 * g31:.1f}%, M3/M2 {100 * g32:.1f}%, M2/M1 {100 * g21:.1f}%")
    assert ok


def test_criterion_8_properties(criterion):
    rng = np.random.default_rng(8)
    notes = []
    ok = True
    spec = ClusterSpec(Model.MODEL1, 3, Ordering.MSP)

    # monotone in beta and in theta_j, j >= i
    mono = True
    for _ in range(15):
        p = rng.dirichlet(np.ones(3))
        th = 10 ** (rng.uniform(-15, 0, 3) / 10)
        for i in range(1, 4):
            by_beta = [coverage_noma(i, spec, p, th, CFG.with_beta(b)) for b in (0, 0.01, 0.1, 0.5, 1)]
            mono &= all(b2 <= b1 + 1e-12 for b1, b2 in zip(by_beta, by_beta[1:]))
            for j in range(i, 4):
                vals = []
                for scale in (1.0, 1.5, 2.0, 4.0):
                    t2 = th.copy()
                    t2[j - 1] *= scale
                    vals.append(coverage_noma(i, spec, p, t2, CFG))
                mono &= all(v2 <= v1 + 1e-12 for v1, v2 in zip(vals, vals[1:]))
    notes.append(f"monotone in beta and theta: {mono}")
    ok &= mono

    # nonpositive effective power => zero coverage
    zero = True
    for _ in range(30):
        p = rng.dirichlet(np.ones(3))
        th = 10 ** (rng.uniform(-5, 15, 3) / 10)
        beta = rng.uniform(0, 1)
        pt = effective_powers(p, th, beta).p_tilde
        for i in range(1, 4):
            if np.any(pt[i - 1:] <= 0):
                zero &= coverage_noma(i, spec, p, th, CFG.with_beta(beta)) == 0.0
    notes.append(f"P~<=0 gives 0: {zero}")
    ok &= zero

    # ordering dominance on the three-UE reference configuration
    msp = evaluator_for(CFG, spec)
    isinr = evaluator_for(CFG, ClusterSpec(Model.MODEL1, 3, Ordering.ISINR))
    dom = True
    for t_db in THETA_DB:
        m = decoding_thresholds(REF_POWERS, np.full(3, 10 ** (t_db / 10)), 0.0)
        dom &= isinr.rank_coverage(1, m[0]) >= msp.rank_coverage(1, m[0]) - 1e-9
        dom &= isinr.rank_coverage(3, m[2]) <= msp.rank_coverage(3, m[2]) + 1e-9
    notes.append(f"ISINR UE1 >= MSP UE1 and ISINR UE3 <= MSP UE3: {dom}")
    ok &= dom

    bs = sweep_beta(CFG, ClusterSpec(Model.MODEL1, 2, Ordering.MSP), 0.3, np.linspace(0, 1, 21))
    cross = bs.crossing_beta
    has_cross = cross is not None and 0 < cross < 1
    notes.append(f"beta crossing {cross}")
    ok &= has_cross
    criterion(8, ok, "; ".join(notes))
    assert ok


def test_criterion_9_complexity(criterion):
    spec = ClusterSpec(Model.MODEL1, 1, Ordering.MSP)
    exact = True
    for n, grid in ((1, SearchGrid(dtheta_db=4, dp=0.1)), (2, SearchGrid(dtheta_db=4, dp=0.1)),
                    (3, SearchGrid(dtheta_db=8, dp=0.25))):
        sol = exhaustive_search(CFG, spec.with_n(n), 0.0, grid)
        exact &= sol.evaluations == (grid.n_theta / grid.dp) ** n == exhaustive_count(grid, n)
    ns = [2, 3, 4, 5]
    evals = [solve_tmt(CFG, spec.with_n(n), 0.3).evaluations for n in ns]
    c = fit_growth_rate(ns, evals)
    ok = bool(exact) and c < 10
    criterion(9, ok, f"exhaustive counts exact: {bool(exact)}; Algorithm-1 evaluations {evals}, fitted c = {c:.3f}")
    assert ok


CLI_RUNS = [
    ["coverage", "--mc-trials", "2000", "--theta-db=-10:0:5"],
    ["coverage", "--mc-trials", "0", "--format", "json"],
    ["rate-region", "--dp", "0.25"],
    ["rate-region", "--dp", "0.25", "--access", "tdma", "--beta", "0.1"],
    ["allocate", "--tmt", "0.3", "--n-ues", "2", "--dp", "0.05"],
    ["allocate", "--problem", "symmetric", "--n-ues", "2", "--dp", "0.05", "--dtheta", "2"],
    ["sweep", "--axis", "n", "--n-range", "1:3", "--dp", "0.05", "--models", "model1,model3"],
    ["sweep", "--axis", "beta", "--betas", "0,0.05,0.5", "--dp", "0.05"],
    ["simulate", "--n-trials", "2000", "--theta-db=-5,0"],
    ["simulate", "--dump", "2", "--model", "sector", "--phi", "1.0"],
    ["simulate", "--stienen", "--n-trials", "3000"],
]


def test_criterion_10_reproducible_cli(tmp_path, criterion):
    mismatched = []
    for k, argv in enumerate(CLI_RUNS):
        first = tmp_path / f"run{k}.out"
        again = tmp_path / f"run{k}.again"
        assert main(argv + ["-o", str(first)]) == 0
        manifest = json.loads((tmp_path / f"run{k}.out.manifest.json").read_text())
        assert main([argv[0], "--from-manifest", str(first) + ".manifest.json", "-o", str(again)]) == 0
        same = first.read_bytes() == again.read_bytes()
        same &= manifest["output_sha256"] == json.loads(
            (tmp_path / f"run{k}.again.manifest.json").read_text())["output_sha256"]
        if not same:
            mismatched.append(argv[0])
    ok = not mismatched
    criterion(10, ok, f"{len(CLI_RUNS)} CLI runs replayed from manifests; mismatches: {mismatched}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
