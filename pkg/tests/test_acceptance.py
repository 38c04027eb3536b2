"""Acceptance criteria, one PASS/FAIL line each.

Tolerances are pinned below and never adjusted to make a run pass. Lines are
printed as the tests run and repeated in the terminal summary.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_spd, random_stable
from localgc import cli
from localgc.causality import Partition, companion_auto_spectrum, fgc_grid, gc_measure, sigma_tilde_22
from localgc.infer import (
    asymptotic_variance,
    chisq_quantile,
    corrected_multiplier,
    curvature_H,
    tilde_dagger_multiplier,
)
from localgc.mcharness import (
    TABLE_U,
    SWEEP_U,
    ExperimentConfig,
    ks_distance_chisq1,
    null_truth,
    run_calibration,
    run_size_power,
    run_sweep,
)
from localgc.procsim import model_spec, simulate_tvvar
from localgc.spectra import (
    FreqGrid,
    VarParams,
    kolmogorov_check,
    pre_periodogram,
    pre_periodogram_lags,
    var_factorization,
)
from localgc.whittle import KernelSpec

pytestmark = pytest.mark.acceptance

TABLE_SEED = 20240
SWEEP_SEED = 1
CALIBRATION_SEED = 20241

# pinned tolerances
RATE_BAND_005_U01 = (0.013, 0.073)
SWEEP_MAD_MAX = 0.15
GC_ORACLE_TOL = 1e-8
CONSTANTS_RTOL = 1e-3
KS_MAX = 0.10
INVERSION_TOL = 1e-10
KOLMOGOROV_TOL = 1e-6
FACTOR_TOL = 1e-10
FLAT_TOL = 1e-9
FGC_FLOOR = -1e-10
CHISQ_TOL = 1e-4


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def note(number, detail):
    line = f"[INFO] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="module")
def table():
    cfg = ExperimentConfig(model="power", T=512, replicates=500, u_list=TABLE_U, seed=TABLE_SEED)
    return run_size_power(cfg)


def test_criterion_1_size_power_trend(table):
    r = table.rate
    a = r(0.05, 0.1)
    check_a = RATE_BAND_005_U01[0] <= a <= RATE_BAND_005_U01[1]
    check_b = r(0.05, 0.9) > r(0.05, 0.5) and r(0.10, 0.9) > r(0.10, 0.5)
    excess = [(lvl, u, r(lvl, u), lvl + 3 * table.se_at(lvl, u))
              for lvl in table.levels for u in (0.3, 0.5)]
    check_c = all(rate <= bound for _, _, rate, bound in excess)
    worst = max(excess, key=lambda e: e[2] - e[3])
    # supplementary invariants, reported but not part of the pass/fail rule
    powers = [r(0.05, u) for u in (0.3, 0.5, 0.7, 0.9)]
    monotone = sum(b >= a_ for a_, b in zip(powers, powers[1:]))
    size_ok = all(r(lvl, 0.1) <= 2 * lvl + 3 * table.se_at(lvl, 0.1) for lvl in table.levels)
    note(1, "rates (rows alpha, cols u=" + ",".join(f"{u:g}" for u in table.u) + "): "
         + "; ".join(f"{lvl:g}: " + " ".join(f"{v:.3f}" for v in row)
                     for lvl, row in zip(table.levels, table.rates)))
    note(1, f"monotone power steps {monotone}/3 at alpha=0.05; size at u=0.1 within 2a+3SE: {size_ok}; "
         f"non-converged fits {table.not_converged}, redraws {table.redraws}")
    record(1, "size/power trend (power model, T=512, R=500)", check_a and check_b and check_c,
           f"(a) rate(.05,u=.1)={a:.3f} in [{RATE_BAND_005_U01[0]}, {RATE_BAND_005_U01[1]}]: {check_a}; "
           f"(b) u=.9 > u=.5 at .05 ({r(0.05, 0.9):.3f} > {r(0.05, 0.5):.3f}) and .10 "
           f"({r(0.10, 0.9):.3f} > {r(0.10, 0.5):.3f}): {check_b}; "
           f"(c) u in {{.3,.5}} <= alpha+3SE: {check_c} (tightest alpha={worst[0]:g}, u={worst[1]:g}: "
           f"{worst[2]:.3f} vs {worst[3]:.3f})")


def test_criterion_2_sweep():
    res = run_sweep(ExperimentConfig(model="i", T=100, replicates=100, u_list=SWEEP_U, seed=SWEEP_SEED))
    dev = {u: abs(m - t) for u, m, t in zip(res.u, res.mean, res.truth)}
    mid = [dev[u] for u in res.u if 0.3 - 1e-9 <= u <= 0.7 + 1e-9]
    mad = float(np.mean(mid))
    passed = mad < SWEEP_MAD_MAX and dev[0.05] > dev[0.5]
    record(2, "estimator sweep (model i, T=100, R=100)", passed,
           f"mean |mean - a12(u)| over u in [0.3, 0.7] = {mad:.4f} < {SWEEP_MAD_MAX}; "
           f"deviation at u=0.05 {dev[0.05]:.4f} > at u=0.5 {dev[0.5]:.4f}")


def test_criterion_3_gc_oracle():
    p = VarParams([[0.0, 0.5], [0.0, 0.0]], np.eye(2))
    gc = gc_measure(p, Partition(1, 1), FreqGrid(1024), at_u=0.5).gc
    err = abs(gc - math.log(1.25))
    record(3, "closed-form GC oracle", err < GC_ORACLE_TOL,
           f"GC = {gc:.12f}, log 1.25 = {math.log(1.25):.12f}, |diff| = {err:.2e} < {GC_ORACLE_TOL:g}")


def test_criterion_4_curvature_variance_constants():
    p = VarParams([[0.5, 0.0], [0.0, 0.5]], np.eye(2))
    grid = FreqGrid(1024)
    kernel = KernelSpec("epanechnikov", 0.2)
    h22 = curvature_H(p, Partition(1, 1), grid)[1, 1]
    v22 = asymptotic_variance(p, kernel, grid)[1, 1]
    h_ok = abs(h22 / 2.0 - 1) < CONSTANTS_RTOL
    v_ok = abs(v22 / 0.45 - 1) < CONSTANTS_RTOL
    note(4, f"analytic curvature 2/(1 - a22^2) = {2 / 0.75:.6f}; H22*V22/2 = {h22 * v22 / 2:.6f} "
            f"vs int K^2 = 0.6")
    record(4, "bivariate curvature and variance constants", h_ok and v_ok,
           f"H22 = {h22:.6f} vs 2.0 (rel {abs(h22 / 2 - 1):.2e}): {h_ok}; "
           f"V22 = {v22:.6f} vs 0.45 (rel {abs(v22 / 0.45 - 1):.2e}): {v_ok}; rtol {CONSTANTS_RTOL:g}")


def test_criterion_5_calibration():
    cfg = ExperimentConfig(model="null", T=2000, replicates=1000, u_list=(0.5,), seed=CALIBRATION_SEED)
    res = run_calibration(cfg)
    # the statistic is linear in the multiplier, so the closed-form scaling is a rescale
    kernel = cfg.kernel
    ratio = tilde_dagger_multiplier(null_truth(), kernel) / corrected_multiplier(kernel)
    ks_closed = ks_distance_chisq1(res.statistics * ratio)
    note(5, f"closed-form multiplier (x{ratio:.4f}) gives KS = {ks_closed:.4f}; "
            f"mean statistic {res.statistics.mean():.3f}; P(p < 0.1) = {res.frac_p_below_01:.3f}")
    record(5, "chi-squared(1) calibration (T=2000, R=1000)", res.ks_distance < KS_MAX,
           f"KS distance = {res.ks_distance:.4f} < {KS_MAX}")


def test_criterion_6_structural_identities():
    checks = {}
    panel = simulate_tvvar(model_spec("i", seed=5), 60)
    g = FreqGrid(4 * 60 + 8)
    worst = 0.0
    for u in (0.2, 0.5, 0.81):
        spec = pre_periodogram(panel, u, g)
        for lag, prod in zip(*pre_periodogram_lags(panel, u)):
            back = np.einsum("n,nij->ij", g.weights * np.exp(-1j * g.nodes * lag), spec)
            worst = max(worst, float(np.abs(back - prod).max()))
    checks["Fourier inversion"] = (worst, worst < INVERSION_TOL)

    rng = np.random.default_rng(606)
    kol = factor = flat = 0.0
    for _ in range(20):
        p = VarParams(random_stable(rng, radius=0.9), random_spd(rng))
        kol = max(kol, kolmogorov_check(p, FreqGrid(4096)))
        root, _ = var_factorization(p)
        factor = max(factor, float(np.abs(root @ root.conj().T - p.s).max()))
        g22 = companion_auto_spectrum(p, Partition(1, 1), FreqGrid(64).nodes)
        target = sigma_tilde_22(p, Partition(1, 1)) / (2 * np.pi)
        flat = max(flat, float(np.abs(g22 - target).max()))
    checks["Kolmogorov residual (N=4096)"] = (kol, kol < KOLMOGOROV_TOL)
    checks["Lambda(0)Lambda(0)* = s"] = (factor, factor < FACTOR_TOL)
    checks["companion flat spectrum"] = (flat, flat < FLAT_TOL)

    lo = np.inf
    lam = FreqGrid(64).nodes
    for _ in range(1000):
        p = VarParams(random_stable(rng, radius=0.95), random_spd(rng))
        lo = min(lo, float(fgc_grid(p, Partition(1, 1), lam).min()))
    checks["min FGC over 1000 draws"] = (lo, lo >= FGC_FLOOR)

    q = chisq_quantile(1, 0.95)
    checks["chi2_{1,0.95}"] = (q, abs(q - 3.84146) <= CHISQ_TOL)
    detail = "; ".join(f"{k} {v:.3g}: {ok}" for k, (v, ok) in checks.items())
    record(6, "structural identities", all(ok for _, ok in checks.values()), detail)


def _cli_snapshot(root, capsys):
    root.mkdir()
    steps = [
        ["simulate", "--model", "i", "--T", "200", "--seed", "11", "--out", root / "sim.csv"],
        ["fit", "--input", root / "sim.csv", "--u-range", "0.2:0.8:0.2", "--variance", "--out",
         root / "fit.csv", "--emit-plot-data", root / "fit_long.csv", "--plot"],
        ["fit", "--input", root / "sim.csv", "--u", "0.3,0.5", "--warm-start", "--out", root / "warm.csv"],
        ["test", "--input", root / "sim.csv", "--u", "0.3,0.7", "--out", root / "tilde.csv", "--plot"],
        ["test", "--input", root / "sim.csv", "--u", "0.5", "--stat", "wald", "--c", "0.05",
         "--out", root / "wald.csv"],
        ["test", "--input", root / "sim.csv", "--u", "0.5", "--stat", "dagger", "--draws", "5000",
         "--out", root / "dagger.csv"],
        ["mc", "--experiment", "table1", "--T", "64", "--R", "3", "--out", root / "table", "--plot",
         "--emit-plot-data", root / "table_long.csv"],
        ["mc", "--experiment", "sweep", "--T", "64", "--R", "3", "--u", "0.25,0.5", "--out", root / "sweep",
         "--plot"],
        ["mc", "--experiment", "calibration", "--T", "64", "--R", "5", "--out", root / "cal", "--plot"],
    ]
    codes, streams = [], []
    for argv in steps:
        codes.append(cli.main([str(a) for a in argv]))
        out = capsys.readouterr()
        streams.append(out.out.replace(str(root), "ROOT"))
    files = {p.name: p.read_bytes() for p in sorted(root.iterdir())}
    return codes, streams, files


def test_criterion_7_cli_determinism(tmp_path, capsys):
    a = _cli_snapshot(tmp_path / "a", capsys)
    b = _cli_snapshot(tmp_path / "b", capsys)
    same_files = a[2] == b[2]
    differing = sorted(k for k in a[2] if a[2][k] != b[2].get(k))
    passed = all(c == 0 for c in a[0] + b[0]) and same_files and a[1] == b[1]
    record(7, "CLI determinism", passed,
           f"{len(a[0])} commands, {len(a[2])} output files "
           f"({sum(n.endswith('.png') for n in a[2])} PNG) byte-identical: {same_files}"
           + (f"; differing: {differing}" if differing else "")
           + f"; exit codes {sorted(set(a[0] + b[0]))}")
