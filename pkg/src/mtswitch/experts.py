"""Linear-time switching multitask learner over a finite expert class.

The learner keeps a global distribution ``pi`` over the n experts and one
local weight vector per task.  Only the global vector and the local vector
of the current task are touched on a trial, so prediction and update cost
O(n).  :mod:`mtswitch.specialists` holds the exponential-time oracle it is
equivalent to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .core import DegeneracyError, ParameterError, TaskSchedule
from .genbench import binary_entropy

EPS_FLOOR = 1e-300


@dataclass(frozen=True)
class ExpertParams:
    n: int
    s: int
    m: int
    k: int
    T: int
    theta: float
    phi: float
    rho_hat: float
    eta: float

    def __post_init__(self):
        for name in ("theta", "phi", "rho_hat"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name}={value} outside [0, 1]")
        if self.eta <= 0:
            raise ParameterError("eta must be positive")


def _check_counts(n, s, m, k, T):
    if m <= 1:
        raise ParameterError("mode estimate m must exceed 1")
    if T <= s:
        raise ParameterError("horizon T must exceed the task count s")
    if k < 0 or k > T - s:
        raise ParameterError(f"switch estimate k={k} outside [0, T - s]")
    if n < 1:
        raise ParameterError("need at least one expert")


def complexity(n: int, s: int, m: int, k: int, T: int) -> float:
    """Four-term entropy complexity C that sets the learning rate."""
    _check_counts(n, s, m, k, T)
    span = T - s
    return (
        m * math.log(n / m)
        + s * m * binary_entropy(1.0 / m)
        + span * binary_entropy(k / span)
        + (m - 1) * span * binary_entropy(k / ((m - 1) * span))
    )


def complexity_loose(n: int, s: int, m: int, k: int, T: int) -> float:
    """Closed-form upper bound on :func:`complexity`."""
    _check_counts(n, s, m, k, T)
    c = m * math.log(n / m) + s * (math.log(m) + 1.0)
    if k > 0:
        c += k * (math.log(m - 1) + 2.0 * math.log((T - s) / k) + 2.0)
    return c


def tune_params(n: int, s: int, m: int, k: int, T: int) -> ExpertParams:
    c = complexity(n, s, m, k, T)
    span = T - s
    return ExpertParams(
        n=n,
        s=s,
        m=m,
        k=k,
        T=T,
        theta=1.0 - k / span,
        phi=k / ((m - 1) * span),
        rho_hat=1.0 / m,
        eta=math.sqrt(2.0 * c / T),
    )


@dataclass(frozen=True)
class Theorem1Bound:
    C: float
    C_loose: float
    bound: float
    bound_loose: float


def theorem1_bound(n: int, s: int, m: int, k: int, T: int) -> Theorem1Bound:
    """Expected-regret bound sqrt(2CT) and its looser closed form."""
    c = complexity(n, s, m, k, T)
    c_loose = complexity_loose(n, s, m, k, T)
    return Theorem1Bound(c, c_loose, math.sqrt(2 * c * T), math.sqrt(2 * c_loose * T))


@dataclass(frozen=True)
class ExpertState:
    pi: np.ndarray
    w: np.ndarray
    params: ExpertParams
    degenerate: int = 0

    @classmethod
    def initial(cls, params: ExpertParams) -> "ExpertState":
        pi = np.full(params.n, 1.0 / params.n)
        w = np.full((params.s, params.n), params.rho_hat)
        return cls(pi, w, params)


def predict_experts(state: ExpertState, task: int, rng: np.random.Generator | None = None):
    """Return the allocation ``v`` for ``task`` and, given an rng, a sampled expert."""
    if not 0 <= task < state.w.shape[0]:
        raise IndexError(f"task {task} out of range")
    pw = state.pi * state.w[task]
    total = pw.sum()
    if total <= 0.0:
        raise DegeneracyError("pi . w is zero; no expert carries weight")
    v = pw / total
    if rng is None:
        return v, None
    # inverse CDF, lowest index wins ties
    idx = int(np.searchsorted(np.cumsum(v), rng.random(), side="right"))
    return v, min(idx, len(v) - 1)


def update_experts(state: ExpertState, task: int, losses) -> ExpertState:
    losses = np.asarray(losses, dtype=float)
    if losses.shape != state.pi.shape:
        raise ValueError("one loss per expert is required")
    if np.any(losses < 0) or np.any(losses > 1):
        raise ValueError("losses must lie in [0, 1]")
    p = state.params
    wi = state.w[task]
    delta = wi * np.exp(-p.eta * losses)
    dot = state.pi @ wi
    pd = state.pi @ delta
    if dot <= 0.0 or pd <= 0.0:
        raise DegeneracyError("pi . w is zero; no expert carries weight")
    beta = dot / pd
    eps = 1.0 - wi + beta * delta
    low = eps < EPS_FLOOR
    degenerate = state.degenerate + int(low.sum())
    eps = np.where(low, EPS_FLOOR, eps)
    w = state.w.copy()
    w[task] = np.minimum((p.phi * (1.0 - wi) + p.theta * beta * delta) / eps, 1.0)
    return replace(state, pi=state.pi * eps, w=w, degenerate=degenerate)


def run_experts(schedule: TaskSchedule, losses, params: ExpertParams,
                state: ExpertState | None = None):
    """Expected-loss trace of the learner over a ``T x n`` loss table.

    Uses the compiled loop when it was built.  Returns ``(trace, final_state)``.
    """
    losses = np.ascontiguousarray(losses, dtype=np.float64)
    if losses.shape != (schedule.T, params.n):
        raise ValueError(f"loss table shape {losses.shape} != {(schedule.T, params.n)}")
    if schedule.s > params.s:
        raise ParameterError("schedule uses more tasks than the learner was built for")
    if state is None:
        state = ExpertState.initial(params)
    pi = state.pi.copy()
    w = np.ascontiguousarray(state.w, dtype=np.float64).copy()
    trace, degenerate = _backend.experts_trace(
        schedule.task_array(), losses, pi, w, params.eta, params.theta, params.phi
    )
    return np.asarray(trace), ExpertState(pi, w, params, state.degenerate + degenerate)


def mw_run(losses, eta: float) -> np.ndarray:
    """Expected-loss trace of plain exponential weights from the uniform start."""
    if eta <= 0:
        raise ParameterError("eta must be positive")
    losses = np.ascontiguousarray(losses, dtype=np.float64)
    return np.asarray(_backend.mw_trace(losses, float(eta)))


def mw_eta(n: int, T: int) -> float:
    return math.sqrt(2.0 * math.log(n) / T)


def mw_bound(n: int, T: int) -> float:
    return math.sqrt(2.0 * math.log(n) * T)
