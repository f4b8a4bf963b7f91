"""Acceptance suite: one test per criterion, each recording a pass/fail line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the summary lines
also appear in the terminal summary under "acceptance criteria".
"""
import itertools
import time

import numpy as np
import pytest

from mtswitch import cli
from mtswitch.core import TaskSchedule, count_switches_modes, expected_zero_one, hinge_loss
from mtswitch.experts import (
    ExpertParams,
    ExpertState,
    mw_bound,
    mw_eta,
    mw_run,
    run_experts,
    theorem1_bound,
    tune_params,
    update_experts,
)
from mtswitch.genbench import gen_biclustered_labels, gen_expert_problem, gen_linear_stream, gen_switching_comparator
from mtswitch.graphkernel import (
    MultitaskPathTreeKernel,
    ceil_log2,
    complete_tree_laplacian,
    gaussian_gram,
    geodesic_matrix,
    laplacian_pinv,
    path_tree_kernel,
    resistance_matrix,
    rkhs_norm_sq,
)
from mtswitch.matmw import (
    MatMWConfig,
    MatMWKernels,
    MatMWState,
    comparator_complexity,
    expm_eigh,
    expm_scaling_squaring,
    predict_matmw,
    trial_basis,
    update_matmw,
    weight_matrix,
)
from mtswitch.ogd import OgdState, ogd_bound, ogd_tune, ogd_tune_switching, run_ogd
from mtswitch.specialists import circadian_weights, specialist_hedge_run


def _all_schedules(max_total=8):
    for T in range(1, max_total + 1):
        yield TaskSchedule.contiguous([T])
    for T in range(2, max_total + 1):
        for tasks in itertools.product((0, 1), repeat=T):
            if 0 in tasks and 1 in tasks:
                yield TaskSchedule(tasks, 2)


def test_c01_oracle_equivalence(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst, count = 0.0, 0
    for sch in _all_schedules():
        for n in (2, 3):
            # any valid parameters work; draw fresh ones for each schedule
            p = ExpertParams(n=n, s=sch.s, m=2, k=1, T=sch.T, theta=float(rng.uniform(0.05, 1.0)),
                             phi=float(rng.uniform(0.0, 0.95)), rho_hat=float(rng.uniform(0.05, 0.95)),
                             eta=float(rng.uniform(0.1, 3.0)))
            tables = (rng.random((200, sch.T, n)) < 0.5).astype(float)
            oracle = specialist_hedge_run(sch, tables, p)
            for b in range(200):
                trace, _ = run_experts(sch, tables[b], p)
                worst = max(worst, float(np.max(np.abs(trace - oracle[b]))))
            count += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed <= 120
    criterion(1, "oracle equivalence", ok, f"{count} schedule/n pairs, max dev {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_c02_simplex_invariants(criterion):
    rng = np.random.default_rng(202)
    n, s, T = 100, 5, 10_000
    state = ExpertState.initial(tune_params(n, s, 4, 50, T))
    worst_sum, w_ok = 0.0, True
    tasks = rng.integers(s, size=T)
    losses = rng.random((T, n))
    for tau in range(T):
        state = update_experts(state, int(tasks[tau]), losses[tau])
        worst_sum = max(worst_sum, abs(state.pi.sum() - 1.0))
        w_ok &= bool(np.all(state.w >= 0) and np.all(state.w <= 1))
    _, final = run_experts(TaskSchedule(tuple(tasks.tolist()), s), losses, state.params)
    ok = worst_sum <= 1e-9 and w_ok and abs(final.pi.sum() - 1) <= 1e-9
    criterion(2, "simplex and weight invariants", ok, f"max |sum(pi)-1| = {worst_sum:.2e}")
    assert ok


def test_c03_theorem1_bound(criterion):
    start = time.perf_counter()
    worst_ratio, runs = 0.0, 0
    for k, m in itertools.product((5, 20), (2, 4)):
        for rep in range(25):
            lengths = [700, 650, 650]
            pr = gen_expert_problem(64, lengths, k, m, 0.1, seed=1000 * k + 10 * m + rep)
            params = tune_params(64, 3, m, k, pr.T)
            trace, _ = run_experts(pr.schedule, pr.losses, params)
            regret = trace.sum() - pr.comparator_loss().sum()
            worst_ratio = max(worst_ratio, regret / theorem1_bound(64, 3, m, k, pr.T).bound)
            runs += 1
    elapsed = time.perf_counter() - start
    ok = worst_ratio <= 1.0 and elapsed <= 60 and runs == 100
    criterion(3, "expert regret within sqrt(2CT)", ok, f"{runs} runs, max regret/bound {worst_ratio:.3f}, {elapsed:.1f}s")
    assert ok


def _compositions(total):
    for cuts in itertools.product((0, 1), repeat=total - 1):
        parts, run = [], 1
        for c in cuts:
            if c:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield tuple(parts)


def test_c04_circadian_normalisation(criterion):
    grid = list(itertools.product((0.1, 0.5, 0.9), (0.0, 0.6, 1.0), (0.0, 0.3, 1.0)))
    worst, count = 0.0, 0
    for total in range(1, 13):
        for lengths in _compositions(total):
            for rho, theta, phi in grid:
                worst = max(worst, abs(circadian_weights(lengths, rho, theta, phi).sum() - 1.0))
            count += 1
    ok = worst <= 1e-9
    criterion(4, "circadian weights sum to one", ok, f"{count} length profiles x {len(grid)} params, max err {worst:.1e}")
    assert ok


def test_c05_two_leaf_kernel(criterion):
    # direct inversion of the three-vertex positive definite Laplacian
    L = np.array([[2.0, -1, -1], [-1, 1, 0], [-1, 0, 1]])
    G = np.linalg.inv(L + np.ones((3, 3)) / (9 * (5 / 9)))
    P = path_tree_kernel(2).P
    target = np.array([[10 / 9, 1 / 9], [1 / 9, 10 / 9]])
    err = max(np.abs(P - target).max(), np.abs(G[1:, 1:] - target).max())
    ok = err <= 1e-9
    criterion(5, "path-tree kernel at T=2", ok, f"max err {err:.1e}")
    assert ok


def _cut_counts(f_global, sch):
    """Intra-task switches and task-boundary disagreements of f in contiguous layout."""
    order = np.argsort(MultitaskPathTreeKernel(sch).leaf)
    f = f_global[order]
    k = s = 0
    offsets = list(sch.offsets()) + [sch.T]
    for i in range(sch.s):
        seg = f[offsets[i]:offsets[i + 1]]
        k += int(np.sum(seg[1:] != seg[:-1]))
        if i + 1 < sch.s:
            s += int(f[offsets[i + 1] - 1] != f[offsets[i + 1]])
    return k, s


def test_c06_kernel_bounds(criterion):
    rng = np.random.default_rng(606)
    start = time.perf_counter()
    worst_diag, worst_cut = 0.0, 0.0
    for e in range(1, 11):
        T = 2 ** e
        lg = ceil_log2(T)
        for rep in range(50):
            s = int(rng.integers(1, min(4, T) + 1))
            lengths = np.ones(s, dtype=int) + rng.multinomial(T - s, np.ones(s) / s)
            sch = TaskSchedule(tuple(rng.permutation(np.repeat(np.arange(s), lengths)).tolist()), s)
            kern = MultitaskPathTreeKernel(sch)
            gram = kern.gram()
            maxdiag = float(np.max(np.diag(gram)))
            worst_diag = max(worst_diag, maxdiag / (2 * lg))
            # indicator of one mode of a random switching comparator
            k = int(rng.integers(0, min(12, T - s) + 1))
            m = int(rng.integers(1 if k == 0 else 2, min(4, k + s) + 1))
            comp = gen_switching_comparator(s, list(lengths), k, m, rng)
            f = (comp.global_sequence(sch) == int(rng.integers(m))).astype(float)
            kf, sf = _cut_counts(f, sch)
            worst_cut = max(worst_cut, rkhs_norm_sq(gram, f) * maxdiag / ((kf + sf) * lg * lg + 2))
    elapsed = time.perf_counter() - start
    ok = worst_diag <= 1 + 1e-12 and worst_cut <= 1 + 1e-9 and elapsed <= 180
    criterion(6, "kernel diagonal and cut bounds", ok,
              f"max diag/2log T {worst_diag:.3f}, max norm ratio {worst_cut:.3f}, {elapsed:.1f}s")
    assert ok


def test_c07_resistance_lemma(criterion):
    ok_all, notes = True, []
    for depth in range(2, 7):
        tree = complete_tree_laplacian(depth)
        Lp = laplacian_pinv(tree.L)
        R = resistance_matrix(Lp)
        D = geodesic_matrix(tree.L)
        exact = float(np.max(np.abs(R - D)))
        half_diam = 0.5 * float(R.max())
        ok = exact <= 1e-9 and float(np.max(np.diag(Lp))) <= half_diam + 1e-12
        ok_all &= ok
        notes.append(f"d{depth}:{np.max(np.diag(Lp)):.2f}<={half_diam:.1f}")
    criterion(7, "resistance lemma on complete trees", ok_all, ", ".join(notes))
    assert ok_all


def test_c08_matrix_mw(criterion):
    start = time.perf_counter()
    pr = gen_biclustered_labels(8, 3, [64, 64], seed=808, k=6)
    assert count_switches_modes(pr.comparator) == (6, 3)
    K = gaussian_gram(pr.points, 1.0)
    norms = [rkhs_norm_sq(K, pr.U_star[:, h]) for h in range(3)]
    cc = comparator_complexity(pr.comparator, norms, 2, 6, 3, pr.T, 1.0)
    cfg = MatMWConfig.tuned((64, 64), cc.C, 3, 1.0)
    kernels = MatMWKernels(K, MultitaskPathTreeKernel(pr.schedule))
    state = MatMWState()
    sym_ok, pd_ok, worst_trace = True, True, 0.0
    expected = np.empty(pr.T)
    for tau in range(pr.T):
        x = int(pr.instances[tau])
        basis = trial_basis(state, kernels, x, tau)
        W, eigs = weight_matrix(state, cfg, kernels, x, tau, basis)
        sym_ok &= bool(np.array_equal(W, W.T))
        pd_ok &= bool(np.all(eigs > 0))
        pred = predict_matmw(state, cfg, kernels, x, tau)
        worst_trace = max(worst_trace, abs(pred.trace_x - 1.0))
        expected[tau] = expected_zero_one(pr.labels[tau], pred.ybar, cfg.gamma)
        state = update_matmw(state, cfg, x, tau, int(pr.labels[tau]), pred.ybar)
    regret = expected.sum() - pr.comparator_loss().sum()
    elapsed = time.perf_counter() - start
    ok = sym_ok and pd_ok and worst_trace <= 1e-9 and regret <= cc.bound and elapsed <= 600
    criterion(8, "matrix MW invariants and regret", ok,
              f"regret {regret:.2f} <= {cc.bound:.1f}, trace err {worst_trace:.1e}, {elapsed:.1f}s")
    assert ok


def test_c09_matrix_exponential(criterion):
    rng = np.random.default_rng(909)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 65))
        B = rng.standard_normal((d, d)) * rng.uniform(0.05, 1.0)
        A = (B + B.T) / 2
        R = expm_scaling_squaring(A)
        worst = max(worst, np.abs(expm_eigh(A) - R).max() / max(1.0, np.abs(R).max()))
    ok = worst <= 1e-7
    criterion(9, "matrix exponential paths agree", ok, f"max scaled err {worst:.1e}")
    assert ok


def test_c10_ogd_bounds(criterion):
    worst_static, worst_switch, worst_norm = 0.0, 0.0, 0.0
    for rep in range(100):
        pr = gen_linear_stream(1000, 10, 0, seed=rep, radius=10.0)
        U, X = 10.0, 1.0
        run = run_ogd(pr.instances, pr.labels, OgdState.linear(10, ogd_tune(U, X, 1000), U))
        worst_static = max(worst_static, run.hinge.sum() / ogd_bound(U, X, 1000))
        worst_norm = max(worst_norm, run.norms.max() / U)

        k = 1 + rep % 5
        pr = gen_linear_stream(1000, 10, k, seed=10_000 + rep, radius=10.0)
        u_max = float(np.max(np.linalg.norm(pr.U_star, axis=1)))
        tune = ogd_tune_switching(k, u_max, 1.0, 1000)
        run = run_ogd(pr.instances, pr.labels, OgdState.linear(10, tune.eta, tune.gamma))
        worst_switch = max(worst_switch, run.hinge.sum() / tune.bound(1.0, 1000))
        worst_norm = max(worst_norm, run.norms.max() / tune.gamma)
    ok = worst_static <= 1 and worst_switch <= 1 and worst_norm <= 1 + 1e-12
    criterion(10, "OGD hinge bounds and projection", ok,
              f"static {worst_static:.3f}, switching {worst_switch:.3f}, norm/gamma {worst_norm:.6f}")
    assert ok


def test_c11_mw_baseline(criterion):
    rng = np.random.default_rng(1111)
    n, T = 16, 5000
    worst = -np.inf
    for rep in range(100):
        losses = (rng.random((T, n)) < 0.5).astype(float) if rep % 2 else rng.random((T, n))
        regret = mw_run(losses, mw_eta(n, T)).sum() - losses.sum(axis=0).min()
        worst = max(worst, regret / mw_bound(n, T))
    ok = worst <= 1
    criterion(11, "MW baseline regret", ok, f"max regret/bound {worst:.3f}")
    assert ok


def test_c12_randomized_sign_bridge(criterion):
    inner = np.linspace(-1, 1, 1002)[1:-1]
    outer = np.linspace(-3, 3, 6001)
    exact = max(abs(2 * float(expected_zero_one(y, b)) - hinge_loss(y, b)) for y in (-1, 1) for b in inner)
    slack = min(hinge_loss(y, b) - 2 * float(expected_zero_one(y, b)) for y in (-1, 1) for b in outer)
    ok = exact <= 1e-12 and slack >= -1e-12
    criterion(12, "randomized-sign bridge", ok, f"max |2E[L01]-hinge| inside {exact:.1e}, min slack {slack:.2f}")
    assert ok


@pytest.mark.parametrize("algorithm,problem", [
    ("experts", "lengths = 60, 40\nk = 4\nm = 3\nn = 8\nnoise = 0.1\n"),
    ("mw", "lengths = 100\nk = 0\nm = 1\nn = 8\n"),
    ("specialist-oracle", "lengths = 4, 4\nk = 2\nm = 2\nn = 3\n"),
    ("matmw", "lengths = 20, 20\nk = 2\nm = 2\np = 6\n"),
    ("ogd", "lengths = 200\nk = 2\nm = 3\ndim = 6\n"),
])
def test_c13_reproducible_runs(criterion, tmp_path, algorithm, problem):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[run]\nalgorithm = {algorithm}\nseed = 17\n[problem]\n{problem}")
    codes = [cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    same = (tmp_path / "a/trace.csv").read_bytes() == (tmp_path / "b/trace.csv").read_bytes()
    ok = codes == [0, 0] and same
    criterion(13, f"byte-identical reruns ({algorithm})", ok)
    assert ok
