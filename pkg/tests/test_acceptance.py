"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary.  Tolerances are the stated ones; nothing here is loosened to make
a criterion pass.
"""
import time

import numpy as np
import pytest

from patomo.analysis import calibrate_lambda1, evaluate, relative_l2
from patomo.cli import main
from patomo.operators import MatrixOperator, estimate_norm, rescale_to_unit_norm
from patomo.pa_transform import PATransform, operator_l1_norm
from patomo.phantom import (
    DEFAULT_DOSE,
    NoiseModel,
    acquisition_preset,
    add_poisson_noise,
    make_ring_phantom,
)
from patomo.solvers import (
    SolverConfig,
    reconstruct_admm,
    reconstruct_sirt,
    select_lambda,
    shrink,
)

from conftest import make_op, record, uniform_angles
from oracles import dense_difference, dense_radon, pdhg_l1

# TV-only calibration grid for lambda1; includes the 70 default
LAMBDA1_GRID = tuple(70.0 * 2 ** j for j in range(7))
SEEDS = range(5)


def test_criterion_1_operator():
    start = time.perf_counter()
    op = make_op(64, uniform_angles(18))
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        f = rng.standard_normal(op.domain_shape)
        g = rng.standard_normal(op.range_shape)
        gap = abs(np.vdot(op.apply(f), g) - np.vdot(f, op.apply_adjoint(g)))
        worst = max(worst, gap / (np.linalg.norm(f) * np.linalg.norm(g)))

    n, angles = 16, uniform_angles(7, start=-83.0)
    small = make_op(n, angles)
    columns = np.empty((small.geometry.n_rays, n * n))
    for idx in range(n * n):
        e = np.zeros(n * n)
        e[idx] = 1.0
        columns[:, idx] = small.apply(e.reshape(n, n)).ravel(order="F")
    dense_err = max(np.abs(columns - small.to_dense()).max(),
                    np.abs(columns - dense_radon(n, angles)).max())
    elapsed = time.perf_counter() - start

    ok = record(1, worst <= 1e-10 and dense_err <= 1e-12 and elapsed < 10.0,
                f"adjoint gap {worst:.2e} (<=1e-10), dense max diff {dense_err:.2e}, "
                f"{elapsed:.1f}s (<10s)")
    assert ok


def test_criterion_2_norm_rescaling():
    estimates = []
    for n, angles in ((64, uniform_angles(18)),
                      (256, acquisition_preset("missing_wedge").angles),
                      (256, acquisition_preset("limited_data").angles)):
        op = make_op(n, angles)
        op1, _, _ = rescale_to_unit_norm(op, np.zeros(op.range_shape))
        estimates.append(estimate_norm(op1, seed=7))
    in_band = all(0.999 <= e <= 1.001 for e in estimates)

    n, angles = 16, uniform_angles(10)
    op = make_op(n, angles)
    sigma = np.linalg.norm(dense_radon(n, angles), 2)
    est = estimate_norm(op)
    rescaled = rescale_to_unit_norm(op, np.zeros(op.range_shape))[0]
    sigma_after = np.linalg.norm(rescaled.to_dense(), 2)
    svd_err = max(abs(est - sigma) / sigma, abs(sigma_after - 1.0))

    ok = record(2, in_band and svd_err <= 1e-3,
                f"post-rescale estimates {min(estimates):.5f}..{max(estimates):.5f} "
                f"in [0.999, 1.001], dense SVD rel diff {svd_err:.1e} (<=1e-3)")
    assert ok


def test_criterion_3_pa_transform():
    n = 64
    x = np.arange(n, dtype=np.float64)
    grid_y, grid_x = np.meshgrid(x, x, indexing="ij")
    annihilates = True
    norms_exact = True
    for k in range(1, 5):
        t = PATransform(k)
        for deg in range(k):
            # integer coefficients keep every value exact in double precision
            p = sum((c + 1) * x ** c for c in range(deg + 1))
            out = PATransform(k, ndim=1).apply_1d(p)
            annihilates &= not np.any(out[: n - k])
            img = sum((c + 2) * grid_x ** c - (c + 1) * grid_y ** c for c in range(deg + 1))
            out2 = t.apply_2d(img)
            annihilates &= not np.any(out2[0][:, : n - k]) and not np.any(out2[1][: n - k, :])
        one_d = PATransform(k, ndim=1)
        mat = np.stack([one_d.apply_1d(e) for e in np.eye(32)], axis=1)
        norms_exact &= np.abs(mat).sum(axis=0).max() == 2.0 ** k == operator_l1_norm(k)

    rng = np.random.default_rng(3)
    t1 = PATransform(1, ndim=1)
    worst = 0.0
    for v in rng.standard_normal((1000, n)):
        for k in range(1, 5):
            powered = v
            for _ in range(k):
                powered = t1.apply_1d(powered)
            direct = PATransform(k, ndim=1).apply_1d(v)
            worst = max(worst, np.linalg.norm(direct - powered) / np.linalg.norm(v))
    # also against the dense power of the first difference
    for k in range(1, 5):
        d = dense_difference(16, k, axis=1)
        img = rng.standard_normal((16, 16))
        worst = max(worst, np.linalg.norm(PATransform(k).apply_2d(img)[0].ravel()
                                          - d @ img.ravel()) / np.linalg.norm(img))

    ok = record(3, annihilates and norms_exact and worst <= 1e-13,
                f"annihilation exact={annihilates}, ||T_k||_1 == 2^k: {norms_exact}, "
                f"max |T_k - T_1^k| {worst:.1e} (<=1e-13)")
    assert ok


def rings_32():
    c = np.arange(32) - 15.5
    r = np.hypot(c[None, :], c[:, None])
    return (((r < 13) & (r >= 10)) | ((r < 7) & (r >= 4))).astype(float)


def test_criterion_4_solver_oracles():
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    b = rng.uniform(-1, 1, size=400)
    lam = 10.0
    cfg = SolverConfig(order=0, lam=lam, nonneg=False, max_outer=500, tol=1e-10)
    res = reconstruct_admm(MatrixOperator(np.eye(b.size)), b, PATransform(0, ndim=1), cfg)
    expect = shrink(b, 1.0 / lam)
    id_err = np.linalg.norm(res.image - expect) / np.linalg.norm(expect)

    op = make_op(32, uniform_angles(36))
    op, data, _ = rescale_to_unit_norm(op, op.apply(rings_32()))
    lam = 70.0
    T = np.vstack([dense_difference(32, 1, axis=1), dense_difference(32, 1, axis=0)])
    ref = pdhg_l1(op.scale * op.weights, data.ravel(order="F"), T, lam, iters=20000)
    ref = ref.reshape(32, 32)
    res = reconstruct_admm(op, data, cfg=SolverConfig(order=1, lambda1=lam, max_outer=3000,
                                                      tol=1e-8, nonneg=False))
    oracle_err = relative_l2(res.image, ref)
    elapsed = time.perf_counter() - start

    ok = record(4, id_err <= 1e-4 and oracle_err <= 1e-2 and elapsed < 60.0,
                f"k=0 identity vs soft-threshold {id_err:.1e} (<=1e-4), "
                f"k=1 vs primal-dual reference {oracle_err:.1e} (<=1e-2), {elapsed:.1f}s (<60s)")
    assert ok


def test_criterion_5_sirt():
    phantom = make_ring_phantom(128)
    op = make_op(128, acquisition_preset("full_dense", 128).angles)
    b = op.apply(phantom.image)
    res = reconstruct_sirt(op, b, iters=200)
    err = relative_l2(res.image, phantom.image)
    start_resid = np.linalg.norm(b)
    end_resid = res.data_residual_trace[-1]
    ok = record(5, err < 0.10 and end_resid < start_resid,
                f"global error {err:.2%} (<10%), residual {start_resid:.3g} -> {end_resid:.3g}")
    assert ok


class RingsStudy:
    """Shared n=256 problems; every solve is memoized."""

    def __init__(self):
        self.phantom = make_ring_phantom(256)
        self.ops = {}
        self.data = {}
        self.solves = {}
        self.lambda1 = {}
        self.calibration = {}

    def op(self, preset):
        if preset not in self.ops:
            self.ops[preset] = make_op(256, acquisition_preset(preset).angles)
        return self.ops[preset]

    def problem(self, preset, seed):
        key = (preset, seed)
        if key not in self.data:
            op = self.op(preset)
            noisy = add_poisson_noise(op.apply(self.phantom.image), NoiseModel(DEFAULT_DOSE, seed))
            op1, b1, _ = rescale_to_unit_norm(op, noisy)
            self.data[key] = (op1, b1)
        return self.data[key]

    def calibrate(self, preset):
        if preset not in self.lambda1:
            op, b = self.problem(preset, 0)
            best, runs = calibrate_lambda1(op, b, self.phantom.image, LAMBDA1_GRID)
            for lam1, (_, res) in runs.items():
                self.solves[(preset, 0, 1, lam1)] = res
            self.lambda1[preset] = best
            self.calibration[preset] = {c: e for c, (e, _) in runs.items()}
        return self.lambda1[preset]

    def solve(self, preset, seed, k, lam):
        key = (preset, seed, k, lam)
        if key not in self.solves:
            op, b = self.problem(preset, seed)
            cfg = SolverConfig(order=k, lam=lam)
            self.solves[key] = reconstruct_admm(op, b, PATransform(k), cfg)
        return self.solves[key]


@pytest.fixture(scope="module")
def study():
    return RingsStudy()


@pytest.mark.slow
def test_criterion_6_region_ordering(study):
    start = time.perf_counter()
    lines, ok = [], True
    for preset in ("missing_wedge", "limited_data"):
        lam1 = study.calibrate(preset)
        errs = {}
        for k in (1, 3):
            lam = select_lambda(k, lam1)
            rows = [evaluate(study.solve(preset, s, k, lam), study.phantom) for s in SEEDS]
            for idx, kind in enumerate(("raw", "seg")):
                for region in (1, 6):
                    errs[k, kind, region] = float(np.median(
                        [r[idx].region_errors[region] for r in rows]))
        for kind in ("raw", "seg"):
            gain6 = errs[1, kind, 6] - errs[3, kind, 6]
            gain1 = errs[1, kind, 1] - errs[3, kind, 1]
            ok &= gain6 > 0 and gain6 > gain1
            lines.append(f"{preset}/{kind} r6 k1={errs[1, kind, 6]:.3f} k3={errs[3, kind, 6]:.3f}"
                         f" gain r6={gain6:+.3f} r1={gain1:+.3f}")
        lines.append(f"{preset} lambda1={lam1:g}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 15 * 60
    print("\n".join(lines))
    assert record(6, ok, "; ".join(lines) + f"; {elapsed / 60:.1f} min (<15 min)")


@pytest.mark.slow
def test_criterion_7_lambda_rule(study):
    preset = "missing_wedge"
    lam1 = study.calibrate(preset)
    op, b = study.problem(preset, 0)
    table, diagonal_best = [], {}
    for k in (2, 3):
        errs = {}
        for j in (0, k, k + 2):
            lam = lam1 * 2.0 ** (j - 1)
            errs[j] = relative_l2(study.solve(preset, 0, k, lam).image, study.phantom.image)
        diagonal_best[k] = errs[k] <= errs[0] and errs[k] <= errs[k + 2]
        table.append(f"k={k}: " + " ".join(f"j={j}:{e:.4f}" for j, e in errs.items()))
    print(f"lambda1={lam1:g}\n" + "\n".join(table))
    ok = any(diagonal_best.values())
    assert record(7, ok, f"lambda1={lam1:g} " + " | ".join(table)
                  + f" diagonal-best {diagonal_best}")


def test_criterion_8_determinism(tmp_path):
    for run in ("a", "b"):
        out = str(tmp_path / run)
        common = ["--out", out, "--n", "128", "--seed", "3", "--max-outer", "20"]
        assert main(["phantom", *common]) == 0
        assert main(["project", *common, "--preset", "limited_data"]) == 0
        assert main(["reconstruct", *common, "--orders", "1", "3"]) in (0, 2)
        assert main(["evaluate", *common]) == 0
    same = (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    assert record(8, same, f"metrics.csv byte-identical across runs: {same}")
