"""Run any learner on a planted problem and record a regret ledger."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import ParameterError, RegretLedger
from .experts import mw_bound, mw_eta, mw_run, run_experts, theorem1_bound, tune_params
from .genbench import PlantedProblem
from .graphkernel import MultitaskPathTreeKernel, gaussian_gram, rkhs_norm_sq
from .matmw import MatMWConfig, MatMWKernels, comparator_complexity, run_matmw
from .ogd import OgdState, ogd_bound, ogd_tune_switching, run_ogd
from .specialists import specialist_hedge_run

ALGORITHMS = ("experts", "mw", "specialist-oracle", "matmw", "ogd")
PROBLEM_KIND = {
    "experts": "experts",
    "mw": "experts",
    "specialist-oracle": "experts",
    "matmw": "matrix",
    "ogd": "linear",
}


@dataclass(frozen=True)
class Overrides:
    """Optional algorithm parameters; ``None`` means tuned from the problem."""

    eta: float | None = None
    C_hat: float | None = None
    gamma: float | None = None
    XK2_hat: float | None = None
    k_hat: int | None = None
    m_hat: int | None = None
    width: float = 1.0


@dataclass
class RunResult:
    ledger: RegretLedger
    params: dict = field(default_factory=dict)


def _expert_estimates(problem: PlantedProblem, ov: Overrides) -> tuple[int, int]:
    k = problem.k if ov.k_hat is None else ov.k_hat
    # the learner needs at least two modes even when the comparator uses one
    m = max(problem.m if ov.m_hat is None else ov.m_hat, 2)
    return k, m


def run_algorithm(algorithm: str, problem: PlantedProblem, overrides: Overrides | None = None,
                  rng: np.random.Generator | None = None) -> RunResult:
    if algorithm not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    if PROBLEM_KIND[algorithm] != problem.kind:
        raise ParameterError(f"{algorithm} needs a {PROBLEM_KIND[algorithm]} problem, got {problem.kind}")
    ov = overrides or Overrides()
    return _RUNNERS[algorithm](problem, ov, rng)


def _run_experts(problem, ov, rng, oracle=False):
    n = problem.losses.shape[1]
    s, T = problem.schedule.s, problem.T
    k, m = _expert_estimates(problem, ov)
    params = tune_params(n, s, m, k, T)
    if ov.eta is not None:
        params = replace(params, eta=ov.eta)
    if oracle:
        trace = specialist_hedge_run(problem.schedule, problem.losses, params)
    else:
        trace, _ = run_experts(problem.schedule, problem.losses, params)
    bound = theorem1_bound(n, s, m, k, T).bound
    mistakes = 0
    if rng is not None:
        # sample one expert per trial from the allocation implied by the trace
        mistakes = int(np.sum(rng.random(T) < trace))
    ledger = RegretLedger(problem.schedule, trace, problem.comparator_loss(), None, trace, bound, mistakes)
    return RunResult(ledger, {"n": n, "s": s, "m": m, "k": k, "T": T, "eta": params.eta,
                              "theta": params.theta, "phi": params.phi, "rho_hat": params.rho_hat})


def _run_mw(problem, ov, rng):
    n, T = problem.losses.shape[1], problem.T
    eta = mw_eta(n, T) if ov.eta is None else ov.eta
    trace = mw_run(problem.losses, eta)
    best = int(np.argmin(problem.losses.sum(axis=0)))
    mistakes = int(np.sum(rng.random(T) < trace)) if rng is not None else 0
    ledger = RegretLedger(problem.schedule, trace, problem.losses[:, best], None, trace, mw_bound(n, T), mistakes)
    return RunResult(ledger, {"n": n, "T": T, "eta": eta, "best_expert": best})


def _run_matmw(problem, ov, rng):
    K = gaussian_gram(problem.points, ov.width)
    XK2 = float(np.max(np.diag(K))) if ov.XK2_hat is None else ov.XK2_hat
    k = problem.k if ov.k_hat is None else ov.k_hat
    m = problem.m if ov.m_hat is None else ov.m_hat
    lengths = problem.schedule.lengths
    T, s = problem.T, problem.schedule.s
    if ov.C_hat is None:
        norms = [rkhs_norm_sq(K, problem.U_star[:, h]) for h in range(problem.m)]
        C_hat = comparator_complexity(problem.comparator, norms, s, k, m, T, XK2).C
    else:
        C_hat = ov.C_hat
    config = MatMWConfig.tuned(lengths, C_hat, m, XK2, eta=ov.eta, gamma=ov.gamma)
    kernels = MatMWKernels(K, MultitaskPathTreeKernel(problem.schedule))
    run = run_matmw(problem.schedule, problem.instances, problem.labels, config, kernels, rng)
    mistakes = int(np.sum(run.yhat != problem.labels)) if run.yhat is not None else 0
    ledger = RegretLedger(problem.schedule, run.expected_loss, problem.comparator_loss(),
                          problem.labels, run.ybar, config.bound(), mistakes)
    return RunResult(ledger, {"T": T, "s": s, "k": k, "m": m, "eta": config.eta, "C_hat": C_hat,
                              "gamma": config.gamma, "XK2_hat": XK2, "XP2_hat": config.XP2_hat,
                              "updates": run.n_updates})


def _run_ogd(problem, ov, rng):
    X = float(np.max(np.linalg.norm(problem.instances, axis=1)))
    u_max = float(np.max(np.linalg.norm(problem.U_star, axis=1)))
    k = problem.k if ov.k_hat is None else ov.k_hat
    tuning = ogd_tune_switching(k, u_max, X, problem.T)
    eta = tuning.eta if ov.eta is None else ov.eta
    gamma = tuning.gamma if ov.gamma is None else ov.gamma
    state = OgdState.linear(problem.instances.shape[1], eta, gamma)
    run = run_ogd(problem.instances, problem.labels, state, rng)
    # 2 E[L01] <= hinge, so the hinge bound transfers to zero-one regret
    modes = problem.comparator.global_sequence(problem.schedule)
    comp_margin = np.einsum("ij,ij->i", problem.instances, problem.U_star[modes]) * problem.labels
    comp_hinge = float(np.maximum(0.0, 1.0 - comp_margin).sum())
    comp01 = problem.comparator_loss()
    bound = 0.5 * (comp_hinge + ogd_bound(tuning.U, X, problem.T)) - float(comp01.sum())
    ledger = RegretLedger(problem.schedule, run.expected_loss, comp01, problem.labels, run.ybar,
                          bound, run.mistakes)
    return RunResult(ledger, {"T": problem.T, "k": k, "eta": eta, "gamma": gamma, "U": tuning.U,
                              "X": X, "hinge_regret": float(run.hinge.sum() - comp_hinge),
                              "max_norm": float(run.norms.max()) if run.norms.size else 0.0})


_RUNNERS = {
    "experts": _run_experts,
    "specialist-oracle": lambda p, ov, rng: _run_experts(p, ov, rng, oracle=True),
    "mw": _run_mw,
    "matmw": _run_matmw,
    "ogd": _run_ogd,
}
