"""Laplacian kernels on fully complete binary trees.

The path-tree kernel is the inverse of the positive definite Laplacian of a
fully complete binary tree, restricted to its first T leaves.  Its diagonal
grows like log T and binary functions with few switches along the leaves
have small RKHS norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

from .core import ParameterError, TaskSchedule


def ceil_log2(T: int) -> int:
    return max(0, math.ceil(math.log2(T))) if T > 1 else 0


@dataclass(frozen=True)
class TreeLaplacian:
    """Laplacian of a fully complete binary tree.

    Vertices are reordered so that indices ``0..T-1`` are the first T leaves
    from left to right.  ``heap[v]`` is the heap index (root 0, children
    ``2j+1`` and ``2j+2``) of vertex ``v``.
    """

    T: int
    depth: int
    L: np.ndarray
    heap: np.ndarray

    @property
    def N(self) -> int:
        return self.L.shape[0]

    @property
    def leaf_order(self) -> np.ndarray:
        return np.arange(self.T)

    @property
    def adjacency(self) -> np.ndarray:
        A = -self.L.copy()
        np.fill_diagonal(A, 0.0)
        return A


def complete_tree_laplacian(depth: int, T: int | None = None) -> TreeLaplacian:
    N = 2 ** (depth + 1) - 1
    n_leaves = 2 ** depth
    if T is None:
        T = n_leaves
    if not 1 <= T <= n_leaves:
        raise ParameterError(f"a depth-{depth} tree has {n_leaves} leaves, asked for {T}")
    first_leaf = n_leaves - 1
    leaves = list(range(first_leaf, first_leaf + n_leaves))
    rest = [v for v in range(N) if v not in set(leaves[:T])]
    heap = np.array(leaves[:T] + rest, dtype=np.intp)
    position = np.empty(N, dtype=np.intp)
    position[heap] = np.arange(N)

    L = np.zeros((N, N))
    for child in range(1, N):
        a, b = position[child], position[(child - 1) // 2]
        L[a, b] = L[b, a] = -1.0
        L[a, a] += 1.0
        L[b, b] += 1.0
    return TreeLaplacian(T, depth, L, heap)


def build_tree_laplacian(T: int) -> TreeLaplacian:
    if T < 1:
        raise ParameterError("T must be positive")
    return complete_tree_laplacian(ceil_log2(T), T)


def laplacian_pinv(L: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a connected graph Laplacian."""
    L = np.asarray(L, dtype=float)
    N = L.shape[0]
    A = (L != 0) & ~np.eye(N, dtype=bool)
    n_comp, _ = connected_components(A, directed=False)
    if n_comp != 1:
        raise ParameterError(f"graph has {n_comp} components; Laplacian pseudo-inverse needs a connected graph")
    J = np.full((N, N), 1.0 / N)
    # for a connected graph the all-ones vector spans the kernel
    Lp = np.linalg.inv(L + J) - J
    return (Lp + Lp.T) / 2.0


def effective_resistance(Lp: np.ndarray, i: int, j: int) -> float:
    return float(Lp[i, i] + Lp[j, j] - 2.0 * Lp[i, j])


def resistance_matrix(Lp: np.ndarray) -> np.ndarray:
    d = np.diag(Lp)
    return d[:, None] + d[None, :] - 2.0 * Lp


def geodesic_matrix(L: np.ndarray) -> np.ndarray:
    A = (np.asarray(L) != 0) & ~np.eye(L.shape[0], dtype=bool)
    return shortest_path(A.astype(float), method="D", unweighted=True)


def spd_inverse(M: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via its eigenbasis."""
    vals, vecs = np.linalg.eigh(M)
    if vals[0] <= 0:
        raise ParameterError(f"matrix is not positive definite (min eigenvalue {vals[0]:.3g})")
    inv = (vecs / vals) @ vecs.T
    return (inv + inv.T) / 2.0


def pd_laplacian(L: np.ndarray) -> tuple[np.ndarray, float]:
    """``L + (1/N)(1/N)^T / R_L`` with ``R_L = max_i L^+_ii``; returns it with R_L."""
    N = L.shape[0]
    Lp = laplacian_pinv(L)
    R_L = float(np.max(np.diag(Lp)))
    if R_L <= 0:
        raise ParameterError("a single vertex has no positive definite Laplacian")
    return L + np.full((N, N), 1.0 / (N * N * R_L)), R_L


@dataclass(frozen=True)
class PathTreeKernel:
    T: int
    P: np.ndarray
    G: np.ndarray
    R_L: float

    @property
    def max_diag(self) -> float:
        return float(np.max(np.diag(self.P)))

    def __call__(self, tau: int, upsilon: int) -> float:
        return float(self.P[tau, upsilon])


@lru_cache(maxsize=16)
def path_tree_kernel(T: int) -> PathTreeKernel:
    if T < 2:
        raise ParameterError("the path-tree kernel needs T >= 2")
    tree = build_tree_laplacian(T)
    Lc, R_L = pd_laplacian(tree.L)
    G = spd_inverse(Lc)
    G.setflags(write=False)
    P = G[:T, :T].copy()
    P.setflags(write=False)
    return PathTreeKernel(T, P, G, R_L)


class MultitaskPathTreeKernel:
    """Path-tree kernel with each task occupying a contiguous leaf segment."""

    def __init__(self, schedule: TaskSchedule, horizon: int | None = None):
        T = schedule.T if horizon is None else horizon
        if T < schedule.T:
            raise ParameterError("horizon shorter than the schedule")
        self.schedule = schedule
        self.base = path_tree_kernel(T)
        offsets = schedule.offsets()
        self.leaf = np.array(
            [offsets[i] + t for i, t in zip(schedule.tasks, schedule.local_times)], dtype=np.intp
        )

    def __call__(self, tau: int, upsilon: int) -> float:
        return float(self.base.P[self.leaf[tau], self.leaf[upsilon]])

    def gram(self, trials=None) -> np.ndarray:
        idx = self.leaf if trials is None else self.leaf[np.asarray(trials, dtype=np.intp)]
        return self.base.P[np.ix_(idx, idx)]

    @property
    def max_diag(self) -> float:
        return float(np.max(np.diag(self.gram())))


def multitask_path_tree_kernel(schedule: TaskSchedule) -> MultitaskPathTreeKernel:
    return MultitaskPathTreeKernel(schedule)


def rkhs_norm_sq(gram: np.ndarray, f) -> float:
    """``f^T gram^{-1} f``: squared norm of the minimum-norm interpolant."""
    gram = np.asarray(gram, dtype=float)
    f = np.asarray(f, dtype=float)
    try:
        c = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("gram matrix is not strictly positive definite") from exc
    z = np.linalg.solve(c, f)
    return float(z @ z)


def gaussian_kernel(width: float):
    if width <= 0:
        raise ParameterError("Gaussian width must be positive")

    def k(x, z):
        d = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
        return float(np.exp(-(d @ d) / (2.0 * width * width)))

    k.width = width
    return k


def gaussian_gram(points: np.ndarray, width: float) -> np.ndarray:
    sq = np.sum(points ** 2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * points @ points.T, 0.0)
    np.fill_diagonal(d2, 0.0)
    return np.exp(-d2 / (2.0 * width * width))


def delta_kernel():
    def k(x, z):
        return 2.0 * (x == z) - 1.0

    return k


def delta_gram(keys) -> np.ndarray:
    keys = np.asarray(keys)
    return 2.0 * (keys[:, None] == keys[None, :]) - 1.0
