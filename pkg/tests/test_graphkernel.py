import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtswitch.core import ParameterError, TaskSchedule
from mtswitch.graphkernel import (
    MultitaskPathTreeKernel,
    build_tree_laplacian,
    ceil_log2,
    complete_tree_laplacian,
    delta_gram,
    delta_kernel,
    effective_resistance,
    gaussian_gram,
    gaussian_kernel,
    geodesic_matrix,
    laplacian_pinv,
    path_tree_kernel,
    pd_laplacian,
    rkhs_norm_sq,
)


@pytest.mark.parametrize("T,N", [(1, 1), (2, 3), (5, 15), (8, 15), (9, 31)])
def test_vertex_count(T, N):
    assert build_tree_laplacian(T).N == N


@pytest.mark.parametrize("T", range(1, 65))
def test_laplacian_identity(T):
    L = build_tree_laplacian(T).L
    assert np.all(L @ np.ones(L.shape[0]) == 0)
    off = L[~np.eye(L.shape[0], dtype=bool)]
    assert set(np.unique(off)) <= {0.0, -1.0}


def test_degree_pattern():
    tree = complete_tree_laplacian(3)
    deg = np.diag(tree.L)
    heap_deg = np.empty_like(deg)
    heap_deg[tree.heap] = deg
    assert heap_deg[0] == 2 and np.all(heap_deg[1:7] == 3) and np.all(heap_deg[7:] == 1)
    assert np.all(deg[: tree.T] == 1)


def test_small_tree_pinv_diagonal():
    tree = build_tree_laplacian(2)
    Lp = laplacian_pinv(tree.L)
    by_heap = np.empty(3)
    by_heap[tree.heap] = np.diag(Lp)
    assert np.allclose(by_heap, [2 / 9, 5 / 9, 5 / 9], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 40))
def test_pinv_axioms_random_trees(seed, N):
    rng = np.random.default_rng(seed)
    L = np.zeros((N, N))
    for v in range(1, N):
        u = int(rng.integers(v))
        L[u, v] = L[v, u] = -1
        L[u, u] += 1
        L[v, v] += 1
    Lp = laplacian_pinv(L)
    assert np.allclose(Lp @ L @ Lp, Lp, atol=1e-9)
    assert np.allclose(L @ Lp @ L, L, atol=1e-8)
    assert np.allclose(Lp, Lp.T, atol=1e-12)
    assert np.allclose(L @ Lp, np.eye(N) - 1.0 / N, atol=1e-9)
    assert np.allclose(Lp @ np.ones(N), 0, atol=1e-9)
    R = geodesic_matrix(L)
    i, j = rng.integers(N, size=2)
    assert effective_resistance(Lp, i, j) == pytest.approx(R[i, j], abs=1e-9)


def test_disconnected_graph_rejected():
    L = np.diag([1.0, 1.0, 0.0])
    L[0, 1] = L[1, 0] = -1
    with pytest.raises(ParameterError):
        laplacian_pinv(L)


def test_resistance_examples():
    tree = complete_tree_laplacian(2)
    Lp = laplacian_pinv(tree.L)
    root = int(np.flatnonzero(tree.heap == 0)[0])
    left = int(np.flatnonzero(tree.heap == 1)[0])
    assert effective_resistance(Lp, root, left) == pytest.approx(1.0, abs=1e-12)
    assert effective_resistance(Lp, 0, 1) == pytest.approx(2.0, abs=1e-12)


def test_pd_laplacian_is_pd():
    Lc, R_L = pd_laplacian(build_tree_laplacian(6).L)
    assert np.linalg.eigvalsh(Lc)[0] > 0
    assert R_L == pytest.approx(np.max(np.diag(laplacian_pinv(build_tree_laplacian(6).L))))


def test_two_leaf_kernel_direct_inverse():
    # independent 3x3 construction: root joined to two leaves, written out by hand
    L = np.array([[2.0, -1, -1], [-1, 1, 0], [-1, 0, 1]])
    R_L = 5 / 9
    G = np.linalg.inv(L + np.ones((3, 3)) / (9 * R_L))
    assert np.allclose(G[1:, 1:], [[10 / 9, 1 / 9], [1 / 9, 10 / 9]], atol=1e-12)
    P = path_tree_kernel(2).P
    assert np.allclose(P, G[1:, 1:], atol=1e-12)


def test_single_trial_kernel_rejected():
    with pytest.raises(ParameterError):
        path_tree_kernel(1)


@pytest.mark.parametrize("T", [2, 3, 4, 7, 8, 16, 33, 64, 100, 128])
def test_kernel_diagonal_and_pd(T):
    K = path_tree_kernel(T)
    assert K.max_diag <= 2 * ceil_log2(T) + 1e-12
    assert np.linalg.eigvalsh(K.P)[0] > 0
    assert np.array_equal(K.P, K.P.T)


def test_single_task_multitask_kernel_equals_base():
    mt = MultitaskPathTreeKernel(TaskSchedule.contiguous([12]))
    assert np.array_equal(mt.gram(), path_tree_kernel(12).P)


def test_multitask_offsets():
    mt = MultitaskPathTreeKernel(TaskSchedule.from_tasks([0, 1, 0, 1]))
    P = path_tree_kernel(4).P
    assert mt(0, 2) == P[0, 1]
    assert mt(1, 3) == P[2, 3]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_multitask_gram_is_permutation(seed):
    rng = np.random.default_rng(seed)
    s = int(rng.integers(1, 4))
    tasks = rng.integers(0, s, size=int(rng.integers(2, 40))).tolist()
    sch = TaskSchedule.from_tasks(tasks, s)
    if sch.T < 2:
        return
    mt = MultitaskPathTreeKernel(sch)
    perm = np.zeros((sch.T, sch.T))
    perm[np.arange(sch.T), mt.leaf] = 1
    assert np.allclose(mt.gram(), perm @ path_tree_kernel(sch.T).P @ perm.T, atol=1e-15)


def test_horizon_shorter_than_schedule():
    with pytest.raises(ParameterError):
        MultitaskPathTreeKernel(TaskSchedule.contiguous([5]), horizon=4)


def test_rkhs_norm_basics():
    assert rkhs_norm_sq(np.eye(3), np.zeros(3)) == 0
    assert rkhs_norm_sq(np.eye(3), [1, -2, 3]) == pytest.approx(14)
    with pytest.raises(ParameterError):
        rkhs_norm_sq(np.ones((2, 2)), [1, 1])


def _switches(f):
    return int(np.sum(f[1:] != f[:-1]))


@pytest.mark.parametrize("T", [4, 16, 64, 256])
def test_cut_bound_single_task(T, rng):
    K = path_tree_kernel(T)
    lg = ceil_log2(T)
    for _ in range(20):
        f = (rng.random(T) < 0.5).astype(float)
        if rng.random() < 0.5:
            f = np.repeat(rng.integers(0, 2, size=4), T // 4).astype(float)
        assert rkhs_norm_sq(K.P, f) * K.max_diag <= _switches(f) * lg * lg + 2 + 1e-9


def test_gaussian_kernel():
    k = gaussian_kernel(0.5)
    x = np.array([1.0, 2.0])
    assert k(x, x) == 1.0
    assert k(x, x + [0.5, 0]) == pytest.approx(math.exp(-0.5))
    pts = np.random.default_rng(0).standard_normal((6, 3))
    G = gaussian_gram(pts, 0.5)
    assert np.allclose(G, [[k(a, b) for b in pts] for a in pts], atol=1e-14)
    with pytest.raises(ParameterError):
        gaussian_kernel(0)


def test_delta_kernel_values():
    k = delta_kernel()
    assert k("a", "a") == 1 and k("a", "b") == -1
    assert np.array_equal(delta_gram([0, 1, 1]), [[1, -1, -1], [-1, 1, 1], [-1, 1, 1]])


def test_delta_gram_on_distinct_points():
    # 2I - J: one point is fine, two is singular, three or more is indefinite
    assert rkhs_norm_sq(delta_gram([0]), [1.0]) == 1.0
    for d in (2, 3, 5):
        with pytest.raises(ParameterError):
            rkhs_norm_sq(delta_gram(range(d)), np.ones(d))
    rng = np.random.default_rng(4)
    for d in (3, 4, 7):
        f = rng.choice([-1.0, 1.0], size=d)
        value = f @ np.linalg.solve(delta_gram(range(d)), f)
        S = f.sum()
        assert value == pytest.approx(d / 2 + S * S / (2 * (2 - d)), abs=1e-9)
