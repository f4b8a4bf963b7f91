"""Matrix multiplicative weights for switching multitask binary prediction.

Each trial is embedded as a trace-one rank-one matrix built from square
roots of two grams: the instance kernel over the retained instances plus the
current one, and the multitask path-tree kernel over the retained trials plus
the current one.  The weight matrix is the matrix exponential of the signed
sum of retained embeddings, re-embedded in the current basis on every trial.
Updates fire only on margin errors, so the basis grows with mistakes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .core import ComparatorSequence, ParameterError, TaskSchedule, count_switches_modes, expected_zero_one
from .graphkernel import MultitaskPathTreeKernel, ceil_log2

SQRT_FLOOR = 1e-12


class EstimateViolation(ParameterError):
    """An observed quantity exceeds the upper estimate the learner was given."""


@dataclass(frozen=True)
class MatMWConfig:
    s: int
    lengths: tuple[int, ...]
    T: int
    eta: float
    C_hat: float
    m: int
    XK2_hat: float
    XP2_hat: float
    gamma: float

    def __post_init__(self):
        if self.C_hat <= 0 or self.eta <= 0:
            raise ParameterError("C_hat and eta must be positive")
        if self.m < 1:
            raise ParameterError("mode estimate m must be positive")
        if self.XK2_hat <= 0 or self.XP2_hat <= 0 or self.gamma <= 0:
            raise ParameterError("radius estimates and gamma must be positive")
        if sum(self.lengths) != self.T or len(self.lengths) != self.s:
            raise ParameterError("lengths must have s entries summing to T")

    @classmethod
    def tuned(cls, lengths: Sequence[int], C_hat: float, m: int, XK2_hat: float = 1.0,
              eta: float | None = None, gamma: float | None = None) -> "MatMWConfig":
        lengths = tuple(int(n) for n in lengths)
        T = sum(lengths)
        if T < 2:
            raise ParameterError("need T >= 2")
        if eta is None:
            eta = math.sqrt(C_hat * math.log(2 * T) / (2 * T * m))
        if gamma is None:
            gamma = 1.0 / math.sqrt(m)
        return cls(len(lengths), lengths, T, float(eta), float(C_hat), int(m),
                   float(XK2_hat), float(2 * ceil_log2(T)), float(gamma))

    @property
    def log_scale(self) -> float:
        return math.log(self.C_hat / (2.0 * self.T * self.m))

    def bound(self) -> float:
        return 4.0 * math.sqrt(2.0 * self.C_hat * self.T * math.log(2 * self.T))


@dataclass(frozen=True)
class MatMWKernels:
    """Instance gram over a finite key pool and the multitask time kernel."""

    instance_gram: np.ndarray
    time: MultitaskPathTreeKernel

    def __post_init__(self):
        K = np.asarray(self.instance_gram, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ParameterError("instance gram must be square")
        object.__setattr__(self, "instance_gram", K)


@dataclass(frozen=True)
class MatMWState:
    """Retained updates ``(trial, label, key)`` and the sets they induce."""

    updates: tuple[tuple[int, int, int], ...] = ()
    X: tuple[int, ...] = ()
    trials: tuple[int, ...] = ()

    @property
    def dimension(self) -> int:
        return len(self.X) + len(self.trials) + 2


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(M)
    root = (vecs * np.sqrt(np.maximum(vals, SQRT_FLOOR))) @ vecs.T
    return (root + root.T) / 2.0


@dataclass(frozen=True)
class TrialBasis:
    """Square-root grams for the instance and trial sets of one trial."""

    keys: tuple[int, ...]
    trials: tuple[int, ...]
    sqrt_K: np.ndarray
    sqrt_P: np.ndarray
    diag_K: np.ndarray
    diag_P: np.ndarray
    key_pos: dict = field(repr=False)
    trial_pos: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.keys) + len(self.trials) + 2


def trial_basis(state: MatMWState, kernels: MatMWKernels, x: int, tau: int) -> TrialBasis:
    keys = state.X if x in state.X else state.X + (x,)
    trials = state.trials if tau in state.trials else state.trials + (tau,)
    K = kernels.instance_gram[np.ix_(keys, keys)]
    P = kernels.time.gram(trials)
    return TrialBasis(
        keys, trials, psd_sqrt(K), psd_sqrt(P), np.diag(K).copy(), np.diag(P).copy(),
        {k: j for j, k in enumerate(keys)}, {t: j for j, t in enumerate(trials)},
    )


def _embed_columns(basis: TrialBasis, config: MatMWConfig, keys, trials) -> np.ndarray:
    """Embedding vectors of ``(key, trial)`` pairs as columns of a ``d x r`` array."""
    ki = np.array([basis.key_pos[k] for k in keys], dtype=np.intp)
    ti = np.array([basis.trial_pos[t] for t in trials], dtype=np.intp)
    kd, pd = basis.diag_K[ki], basis.diag_P[ti]
    if np.any(kd > config.XK2_hat * (1 + 1e-12)):
        raise EstimateViolation(f"K(x, x) = {kd.max():.6g} exceeds XK2_hat = {config.XK2_hat:.6g}")
    if np.any(pd > config.XP2_hat * (1 + 1e-12)):
        raise EstimateViolation(f"P(t, t) = {pd.max():.6g} exceeds XP2_hat = {config.XP2_hat:.6g}")
    # one padding coordinate per half lifts each half to squared norm 1/2
    pad_K = np.sqrt(np.maximum(0.5 - kd / (2 * config.XK2_hat), 0.0))
    pad_P = np.sqrt(np.maximum(0.5 - pd / (2 * config.XP2_hat), 0.0))
    return np.vstack([
        basis.sqrt_K[:, ki] / math.sqrt(2 * config.XK2_hat),
        pad_K[None, :],
        basis.sqrt_P[:, ti] / math.sqrt(2 * config.XP2_hat),
        pad_P[None, :],
    ])


def embed(state: MatMWState, config: MatMWConfig, kernels: MatMWKernels, x: int, tau: int,
          basis: TrialBasis | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return the embedding vector of ``(x, tau)`` and its outer product."""
    basis = basis or trial_basis(state, kernels, x, tau)
    v = _embed_columns(basis, config, [x], [tau])[:, 0]
    return v, np.outer(v, v)


def _exponent_spectrum(state: MatMWState, config: MatMWConfig, basis: TrialBasis):
    """Eigenpairs of the sum of signed retained embeddings, scaled by eta."""
    d = basis.dimension
    if not state.updates:
        return np.zeros(d), np.eye(d)
    trials, ys, keys = zip(*state.updates)
    V = _embed_columns(basis, config, keys, trials)
    S = config.eta * (V * np.asarray(ys, dtype=float)) @ V.T
    return np.linalg.eigh((S + S.T) / 2.0)


def weight_matrix(state: MatMWState, config: MatMWConfig, kernels: MatMWKernels, x: int, tau: int,
                  basis: TrialBasis | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Weight matrix of the current trial and its eigenvalues (ascending)."""
    basis = basis or trial_basis(state, kernels, x, tau)
    lam, Q = _exponent_spectrum(state, config, basis)
    w_eigs = np.exp(config.log_scale + lam)
    W = (Q * w_eigs) @ Q.T
    return (W + W.T) / 2.0, w_eigs


def expm_eigh(A: np.ndarray) -> np.ndarray:
    """Exponential of a symmetric matrix via its eigendecomposition."""
    A = np.asarray(A, dtype=float)
    vals, vecs = np.linalg.eigh((A + A.T) / 2.0)
    E = (vecs * np.exp(vals)) @ vecs.T
    return (E + E.T) / 2.0


def expm_scaling_squaring(A: np.ndarray) -> np.ndarray:
    """Independent Pade scaling-and-squaring exponential; used as a check only."""
    return scipy.linalg.expm(np.asarray(A, dtype=float))


class MatMWPrediction(NamedTuple):
    ybar: float
    yhat: int | None
    trace_x: float
    min_eig: float


def predict_matmw(state: MatMWState, config: MatMWConfig, kernels: MatMWKernels, x: int, tau: int,
                  rng: np.random.Generator | None = None) -> MatMWPrediction:
    basis = trial_basis(state, kernels, x, tau)
    v = _embed_columns(basis, config, [x], [tau])[:, 0]
    lam, Q = _exponent_spectrum(state, config, basis)
    # tr(W vv^T) = sum_i w_i (q_i . v)^2
    ybar = float(np.exp(config.log_scale + lam) @ (Q.T @ v) ** 2) - 1.0
    yhat = None
    if rng is not None:
        yhat = 1 if ybar - rng.uniform(-config.gamma, config.gamma) >= 0 else -1
    return MatMWPrediction(ybar, yhat, float(v @ v), float(np.exp(config.log_scale + lam[0])))


def update_matmw(state: MatMWState, config: MatMWConfig, x: int, tau: int, y: int, ybar: float) -> MatMWState:
    if y not in (-1, 1):
        raise ParameterError("labels must be -1 or +1")
    if y * ybar > config.gamma:
        return state
    X = state.X if x in state.X else state.X + (x,)
    return replace(state, updates=state.updates + ((tau, int(y), x),), X=X, trials=state.trials + (tau,))


@dataclass
class MatMWRun:
    ybar: np.ndarray
    expected_loss: np.ndarray
    trace_x: np.ndarray
    min_eig: np.ndarray
    yhat: np.ndarray | None
    state: MatMWState

    @property
    def n_updates(self) -> int:
        return len(self.state.updates)


def run_matmw(schedule: TaskSchedule, instances, labels, config: MatMWConfig, kernels: MatMWKernels,
              rng: np.random.Generator | None = None) -> MatMWRun:
    instances = np.asarray(instances, dtype=np.intp)
    labels = np.asarray(labels)
    if instances.shape != (schedule.T,) or labels.shape != (schedule.T,):
        raise ValueError("one instance and one label per trial are required")
    state = MatMWState()
    ybar = np.empty(schedule.T)
    trace_x = np.empty(schedule.T)
    min_eig = np.empty(schedule.T)
    yhat = np.empty(schedule.T, dtype=int) if rng is not None else None
    for tau in range(schedule.T):
        x = int(instances[tau])
        pred = predict_matmw(state, config, kernels, x, tau, rng)
        ybar[tau], trace_x[tau], min_eig[tau] = pred.ybar, pred.trace_x, pred.min_eig
        if yhat is not None:
            yhat[tau] = pred.yhat
        state = update_matmw(state, config, x, tau, int(labels[tau]), pred.ybar)
    expected = expected_zero_one(labels, ybar, config.gamma)
    return MatMWRun(ybar, expected, trace_x, min_eig, yhat, state)


class ComparatorComplexity(NamedTuple):
    C: float
    bound: float


def comparator_complexity(h_star: ComparatorSequence, norms_sq: Sequence[float], s: int, k: int, m: int,
                          T: int, XK2: float = 1.0) -> ComparatorComplexity:
    """Complexity of a kernel comparator and the matching regret bound.

    ``norms_sq[h]`` is the squared RKHS norm of mode ``h``; ``k`` and ``m``
    may be upper estimates of the comparator's own counts.
    """
    k_true, m_true = count_switches_modes(h_star)
    if len(norms_sq) != m_true:
        raise ParameterError(f"{len(norms_sq)} norms given for {m_true} modes")
    if k < k_true or m < m_true:
        raise ParameterError(f"estimates (k={k}, m={m}) below the comparator's ({k_true}, {m_true})")
    if T < 2:
        raise ParameterError("need T >= 2")
    lg = ceil_log2(T)
    C = float(np.sum(norms_sq)) * XK2 + 2.0 * (s + k - 1) * m * lg * lg + 2.0 * m * m
    return ComparatorComplexity(C, 4.0 * math.sqrt(2.0 * C * T * math.log(2 * T)))


def quasi_dimension_star(U_star, C, row_gram, col_gram, gamma: float,
                         row_radius: float | None = None, col_radius: float | None = None) -> float:
    """Upper bound on the quasi-dimension for the decomposition ``H = U* C^T``.

    Radii default to the maximal gram diagonals.
    """
    U_star = np.asarray(U_star, dtype=float)
    C = np.asarray(C, dtype=float)
    row_gram = np.asarray(row_gram, dtype=float)
    col_gram = np.asarray(col_gram, dtype=float)
    if U_star.ndim != 2 or C.ndim != 2 or U_star.shape[1] != C.shape[1]:
        raise ParameterError("U* and C must be matrices with the same number of columns")
    if row_gram.shape != (U_star.shape[0],) * 2 or col_gram.shape != (C.shape[0],) * 2:
        raise ParameterError("gram shapes do not match U* and C")
    R_row = float(np.max(np.diag(row_gram))) if row_radius is None else row_radius
    R_col = float(np.max(np.diag(col_gram))) if col_radius is None else col_radius
    row_term = np.trace(U_star.T @ np.linalg.solve(row_gram, U_star))
    col_term = np.trace(C.T @ np.linalg.solve(col_gram, C))
    return float(gamma * gamma * row_term * R_row + col_term * R_col)
