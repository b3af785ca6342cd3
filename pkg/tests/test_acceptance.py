"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line (outside pytest's capture) and
then asserts the same condition.
"""
import time

import numpy as np
import pytest
from numpy.polynomial.laguerre import laggauss

from cwikel_lab import cwikel, logconvex
from cwikel_lab.cli import RunConfig, main, run
from cwikel_lab.experiments import (
    COUNTEREXAMPLE_CUTOFFS,
    hs_identity_errors,
    isometry_errors,
    lattice_pair,
    product_formula,
    projection_hs_table,
    small_p_scan,
    suite_rng,
)
from cwikel_lab.invariants import run_core_invariants
from cwikel_lab.lattice import FREQUENCY, GridSpec, SampledFunction
from cwikel_lab.magnetic import laguerre
from cwikel_lab.reports import to_csv

SEED = 20240601


def verdict(capsys, k: int, ok: bool, detail: str):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    assert ok, detail


def test_criterion_01_quantization_isometry(capsys):
    t0 = time.perf_counter()
    grid_err, exact_err = isometry_errors(suite_rng(SEED, "acc-1"), 20, (256, 512))
    secs = time.perf_counter() - t0
    ok_exact = bool(np.all(exact_err[:, 0] <= 1e-3))
    ok_refine = bool(np.all(grid_err[:, 1] <= 0.6 * grid_err[:, 0]))
    verdict(capsys, 1, ok_exact and ok_refine and secs <= 60,
            f"max err vs exact norm {exact_err[:, 0].max():.2e} (<= 1e-3); "
            f"max N=512/N=256 ratio of grid error {np.max(grid_err[:, 1] / grid_err[:, 0]):.3f} (<= 0.6); {secs:.1f}s")


def test_criterion_02_moyal_hs_identity(capsys):
    t0 = time.perf_counter()
    errs = hs_identity_errors(suite_rng(SEED, "acc-2"), 50, 128)
    secs = time.perf_counter() - t0
    verdict(capsys, 2, errs.max() <= 1e-3 and secs <= 60, f"max relative error {errs.max():.2e} (<= 1e-3); {secs:.1f}s")


def test_criterion_03_magnetic_hs(capsys):
    t0 = time.perf_counter()
    rows = projection_hs_table((0.5, 1.0, 2.0), range(4), N=256)
    single = max(abs(c - cl) / cl for _, _, c, cl in rows)
    rng = suite_rng(SEED, "acc-3")
    prod = [product_formula(b, 128, rng, n_max=4) for b in (0.5, 1.0, 2.0)]
    literal = max(abs(lhs - rhs) / rhs for lhs, rhs, _ in prod)
    orth = max(abs(lhs - lvl) / lvl for lhs, _, lvl in prod)
    x, w = laggauss(40)
    gram = np.array([[np.sum(w * laguerre(n, x) * laguerre(m, x)) for m in range(7)] for n in range(7)])
    ortho = float(np.abs(gram - np.eye(7)).max())
    secs = time.perf_counter() - t0
    ok = single <= 5e-3 and literal <= 5e-3 and ortho <= 1e-8 and secs <= 120
    verdict(capsys, 3, ok,
            f"single level {single:.1e} (<= 5e-3); product formula {literal:.4f} (<= 5e-3; "
            f"lhs/rhs = {prod[0][0] / prod[0][1]:.6f}, orthogonal level sum agrees to {orth:.1e}); "
            f"Laguerre Gram {ortho:.1e}; {secs:.1f}s")


@pytest.fixture(scope="module")
def lattice_instances():
    rng = suite_rng(SEED, "acc-4")
    grid = GridSpec(1, 16.0, 128)
    return [lattice_pair(rng, grid) for _ in range(200)]


def test_criterion_04_submajorization(capsys, lattice_instances):
    t0 = time.perf_counter()
    v532 = [cwikel.check_submajorization_532(f, g) for f, g in lattice_instances]
    v130 = [cwikel.check_submajorization_130(f, g) for f, g in lattice_instances]
    secs = time.perf_counter() - t0
    bad = sum(not v.holds for v in v532) + sum(not v.holds for v in v130)
    worst = max(v.observed_constant for v in v532)
    verdict(capsys, 4, bad == 0 and worst <= 532 and secs <= 300,
            f"{bad} violations over 2 x {len(v532)} pairs; max observed constant {worst:.6f}; {secs:.1f}s")


def test_criterion_05_dyadic_split(capsys, lattice_instances):
    bad, worst_err = 0, 0.0
    for f, g in lattice_instances:
        rep = cwikel.dyadic_report(f.map(np.abs), g.map(np.abs))
        bad += not rep.holds
        worst_err = max(worst_err, rep.reconstruction_error)
    verdict(capsys, 5, bad == 0 and worst_err <= 1e-10,
            f"{bad} instances with a violated bound; max reconstruction error {worst_err:.1e}")


def test_criterion_06_log_convexity(capsys):
    t0 = time.perf_counter()
    rng = suite_rng(SEED, "acc-6")
    scan = logconvex.entropy_scan(rng, samples=100_000, n_max=64, corner_n=8)
    tri = sum(not logconvex.log_triangle_check(logconvex.random_collection(rng)).holds for _ in range(500))
    secs = time.perf_counter() - t0
    verdict(capsys, 6, scan.violations == 0 and tri == 0 and secs <= 60,
            f"simplex: {scan.violations}/{scan.samples} (max ratio {scan.max_ratio:.3f}); "
            f"log triangle: {tri}/500; {secs:.1f}s")


def test_criterion_07_counterexample(capsys):
    t0 = time.perf_counter()
    di = [cwikel.counterexample_double_integral(e) for e in COUNTEREXAMPLE_CUTOFFS]
    grids = [256 * 2 ** k for k in range(5)]
    s4 = {e: [cwikel.counterexample_schatten4(e, GridSpec(1, 8.0, n)) for n in grids] for e in (1e-2, 1e-6, 1e-10)}
    nsq = cwikel.counterexample_norm_sq(COUNTEREXAMPLE_CUTOFFS[-1])
    gap = abs(nsq - 1 / np.log(2)) / (1 / np.log(2))
    secs = time.perf_counter() - t0
    ok_int = bool(np.all(np.diff(di) > 0))
    ok_s4 = all(np.all(np.diff(v) > 0) for v in s4.values())
    verdict(capsys, 7, ok_int and ok_s4 and gap <= 0.01 and secs <= 120,
            f"integral increasing: {ok_int}; Schatten-4 increasing over 4 doublings: {ok_s4}; "
            f"||f||^2 at eps=1e-10 is {nsq:.5f}, {100 * gap:.2f}% from 1/log 2 (<= 1%); {secs:.1f}s")


def test_criterion_08_small_p(capsys):
    rng = suite_rng(SEED, "acc-8")
    changes = {}
    for p in (1.0, 1.5):
        for flavor in ("strong", "weak"):
            sup = small_p_scan(rng, p, flavor, count=50)
            assert np.all(np.isfinite(sup))
            changes[(p, flavor)] = (sup[-1] - sup[-21]) / sup[-21]
    grid = GridSpec(1, 32.0, 512)
    x, xi = grid.axis, grid.freq_axis
    f = SampledFunction(grid, np.where((x >= 0) & (x < 1), rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N), 0))
    g = SampledFunction(grid, np.where((xi >= 0) & (xi < 1), rng.normal(size=grid.N), 0), FREQUENCY)
    single = max(abs(cwikel.cwikel_small_p(f, g, p, "strong")[2] / cwikel.compact_support_ratio(f, g, p) - 1)
                 for p in (1.0, 1.5))
    worst = max(changes.values())
    verdict(capsys, 8, worst < 0.05 and single <= 1e-12,
            f"largest running-sup change over last 20: {worst:.3f} (< 0.05); single-cell mismatch {single:.1e}")


def test_criterion_09_core_invariants(capsys):
    t0 = time.perf_counter()
    tallies = run_core_invariants(suite_rng(SEED, "acc-9"), trials=1000)
    secs = time.perf_counter() - t0
    bad = {t.name: t.violations for t in tallies if t.violations}
    verdict(capsys, 9, not bad and secs <= 60, f"{len(tallies)} checks x 1000 trials, violations {bad or 0}; {secs:.1f}s")


def test_criterion_10_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    for name in ("a", "b"):
        assert main(["run", "--seed", str(SEED), "--out", str(tmp_path / name)]) == 0
    secs = time.perf_counter() - t0
    a = (tmp_path / "a" / "reports.csv").read_bytes()
    b = (tmp_path / "b" / "reports.csv").read_bytes()
    same_api = to_csv(run(RunConfig(suites=("logconvex",), seed=SEED))) == to_csv(run(RunConfig(suites=("logconvex",), seed=SEED)))
    rows = len(a.splitlines()) - 1
    verdict(capsys, 10, a == b and same_api and secs / 2 <= 900,
            f"byte-identical csv: {a == b} ({rows} rows); {secs / 2:.1f}s per full run")
