"""Randomized constrained online gradient descent on the hinge loss.

Two weight representations share one update rule: a dense vector for linear
instances and a dual expansion over support points for kernels.  Prediction
draws a uniform threshold in [-1, 1], so the expected zero-one loss is half
the hinge loss while the margin stays below one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ParameterError, expected_zero_one, hinge_loss, randomized_sign

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


def linear_kernel(S: np.ndarray, x: np.ndarray) -> np.ndarray:
    return S @ x


def rbf_kernel(width: float) -> Kernel:
    if width <= 0:
        raise ParameterError("kernel width must be positive")

    def k(S, x):
        d = S - x
        return np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * width * width))

    return k


@dataclass
class OgdState:
    """Learner state.  Updates happen in place and the state is returned.

    With ``kernel`` unset the weight is the dense vector ``w``; otherwise it
    is ``sum_j coef[j] * kernel(support[j], .)`` and ``w`` is unused.
    """

    eta: float
    gamma: float
    w: np.ndarray | None = None
    kernel: Kernel | None = None
    support: list = field(default_factory=list)
    coef: list = field(default_factory=list)
    norm_sq: float = 0.0

    def __post_init__(self):
        if self.eta <= 0 or self.gamma <= 0:
            raise ParameterError("eta and gamma must be positive")
        if self.kernel is None and self.w is None:
            raise ParameterError("a linear state needs an initial weight vector")

    @classmethod
    def linear(cls, dim: int, eta: float, gamma: float) -> "OgdState":
        return cls(eta, gamma, w=np.zeros(dim))

    @classmethod
    def dual(cls, kernel: Kernel, eta: float, gamma: float) -> "OgdState":
        return cls(eta, gamma, kernel=kernel)

    @property
    def norm(self) -> float:
        if self.kernel is None:
            return float(np.linalg.norm(self.w))
        return math.sqrt(max(self.norm_sq, 0.0))


def _margin(state: OgdState, x) -> float:
    x = np.asarray(x, dtype=float)
    if state.kernel is None:
        return float(state.w @ x)
    if not state.support:
        return 0.0
    return float(np.asarray(state.coef) @ state.kernel(np.asarray(state.support), x))


def ogd_predict(state: OgdState, x, rng: np.random.Generator | None = None):
    """Return ``(ybar, yhat)``; ``yhat`` is None without an rng."""
    ybar = _margin(state, x)
    return ybar, (None if rng is None else randomized_sign(ybar, 1.0, rng))


def ogd_update(state: OgdState, x, y: int, ybar: float | None = None) -> OgdState:
    if y not in (-1, 1):
        raise ParameterError("labels must be -1 or +1")
    x = np.asarray(x, dtype=float)
    if ybar is None:
        ybar = _margin(state, x)
    if ybar * y > 1.0:
        return state
    step = state.eta * y
    if state.kernel is None:
        w = state.w + step * x
        nrm = float(np.linalg.norm(w))
        state.w = w if nrm <= state.gamma else w * (state.gamma / nrm)
        return state
    kxx = float(state.kernel(x[None, :], x)[0])
    # ||w + c k(x, .)||^2 expands through the margin already computed
    norm_sq = state.norm_sq + 2.0 * step * ybar + step * step * kxx
    state.support.append(x)
    state.coef.append(step)
    if norm_sq > state.gamma ** 2:
        scale = state.gamma / math.sqrt(norm_sq)
        state.coef = [c * scale for c in state.coef]
        norm_sq = state.gamma ** 2
    state.norm_sq = norm_sq
    return state


def ogd_tune(U: float, X: float, T: int) -> float:
    if U <= 0 or X <= 0 or T <= 0:
        raise ParameterError("U, X and T must be positive")
    return U / (X * math.sqrt(T))


@dataclass(frozen=True)
class SwitchingTuning:
    eta: float
    gamma: float
    U: float

    def bound(self, X: float, T: int) -> float:
        return math.sqrt(self.U ** 2 * X * X * T)


def ogd_tune_switching(k: int, u_max: float, X: float, T: int) -> SwitchingTuning:
    """Step size and radius for a comparator sequence with ``k`` switches."""
    if k < 0:
        raise ParameterError("k must be non-negative")
    U = math.sqrt(4 * k + 1) * u_max
    return SwitchingTuning(ogd_tune(U, X, T), u_max, U)


def ogd_bound(U: float, X: float, T: int) -> float:
    return math.sqrt(U * U * X * X * T)


@dataclass
class OgdRun:
    ybar: np.ndarray
    hinge: np.ndarray
    expected_loss: np.ndarray
    norms: np.ndarray
    mistakes: int


def run_ogd(xs, ys, state: OgdState, rng: np.random.Generator | None = None) -> OgdRun:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys)
    T = len(ys)
    ybar = np.empty(T)
    norms = np.empty(T)
    mistakes = 0
    for t in range(T):
        ybar[t], yhat = ogd_predict(state, xs[t], rng)
        mistakes += int(yhat is not None and yhat != ys[t])
        ogd_update(state, xs[t], int(ys[t]), ybar[t])
        norms[t] = state.norm
    hinge = np.array([hinge_loss(int(y), b) for y, b in zip(ys, ybar)])
    return OgdRun(ybar, hinge, expected_zero_one(ys, ybar, 1.0), norms, mistakes)
