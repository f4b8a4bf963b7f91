"""Planted problem generators, entropy helper and regret reports."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ComparatorSequence,
    ParameterError,
    RegretLedger,
    TaskSchedule,
    count_switches_modes,
)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"binary entropy needs p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_schedule(lengths: Sequence[int], seed) -> TaskSchedule:
    """Uniformly random interleaving of tasks with the given lengths."""
    rng = _rng(seed)
    tasks = np.repeat(np.arange(len(lengths)), lengths)
    return TaskSchedule(tuple(rng.permutation(tasks).tolist()), len(lengths))


def gen_switching_comparator(s: int, lengths: Sequence[int], k: int, m: int, seed) -> ComparatorSequence:
    """Comparator with exactly ``k`` intra-task switches and ``m`` modes."""
    lengths = [int(n) for n in lengths]
    if len(lengths) != s:
        raise ParameterError(f"{len(lengths)} task lengths given for s={s}")
    if any(n < 1 for n in lengths):
        raise ParameterError("every task needs at least one trial")
    T = sum(lengths)
    if not 0 <= k <= T - s:
        raise ParameterError(f"k={k} infeasible: need 0 <= k <= T - s = {T - s}")
    if not 1 <= m <= k + s:
        raise ParameterError(f"m={m} infeasible: need 1 <= m <= k + s = {k + s}")
    if k > 0 and m < 2:
        raise ParameterError("a switch needs at least two modes")
    rng = _rng(seed)

    boundaries = [(i, t) for i, n in enumerate(lengths) for t in range(n - 1)]
    chosen = set()
    if k:
        picks = rng.choice(len(boundaries), size=k, replace=False)
        chosen = {boundaries[j] for j in picks}

    # segments in task order; each is (task, start, stop)
    segments = []
    for i, n in enumerate(lengths):
        start = 0
        for t in range(n - 1):
            if (i, t) in chosen:
                segments.append((i, start, t + 1))
                start = t + 1
        segments.append((i, start, n))

    unused = set(range(m))
    colours = []
    prev_task, prev = -1, None
    for j, (i, _, _) in enumerate(segments):
        remaining = len(segments) - j
        if len(unused) == remaining:
            options = sorted(unused)
        else:
            options = [c for c in range(m) if not (i == prev_task and c == prev)]
        c = int(options[rng.integers(len(options))])
        colours.append(c)
        unused.discard(c)
        prev_task, prev = i, c

    # relabel by first appearance so ids are dense and deterministic
    relabel = {}
    for c in colours:
        relabel.setdefault(c, len(relabel))
    modes = [[0] * n for n in lengths]
    for (i, a, b), c in zip(segments, colours):
        for t in range(a, b):
            modes[i][t] = relabel[c]
    return ComparatorSequence(tuple(tuple(seq) for seq in modes))


@dataclass(frozen=True)
class PlantedProblem:
    """A realizable (or noisy) multitask problem with its planted comparator.

    ``kind`` is ``"experts"`` for loss-table problems and ``"matrix"`` for
    biclustered instance/label streams.
    """

    kind: str
    schedule: TaskSchedule
    comparator: ComparatorSequence
    k: int
    m: int
    labels: np.ndarray
    losses: np.ndarray | None = None
    expert_of_mode: np.ndarray | None = None
    instances: np.ndarray | None = None
    U_star: np.ndarray | None = None
    C: np.ndarray | None = None
    points: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.schedule.T

    def comparator_loss(self) -> np.ndarray:
        if self.kind == "experts":
            active = self.expert_of_mode[self.comparator.global_sequence(self.schedule)]
            return self.losses[np.arange(self.T), active]
        modes = self.comparator.global_sequence(self.schedule)
        if self.kind == "linear":
            margins = np.einsum("ij,ij->i", self.instances, self.U_star[modes])
            return (np.where(margins >= 0, 1, -1) != self.labels).astype(float)
        predicted = self.U_star[self.instances, modes]
        return (predicted != self.labels).astype(float)


def gen_adversarial_expert_losses(n: int, comparator: ComparatorSequence, schedule: TaskSchedule,
                                  noise_rate: float, seed):
    """``T x n`` 0/1 loss table; returns ``(losses, expert_of_mode)``.

    The expert playing the active mode errs with probability ``noise_rate``;
    every other entry is a fair coin.
    """
    if not 0.0 <= noise_rate < 0.5:
        raise ParameterError("noise_rate must lie in [0, 1/2)")
    _, m = count_switches_modes(comparator)
    if m > n:
        raise ParameterError(f"{m} modes need at least {m} experts, got n={n}")
    rng = _rng(seed)
    expert_of_mode = rng.choice(n, size=m, replace=False)
    T = schedule.T
    losses = (rng.random((T, n)) < 0.5).astype(float)
    active = expert_of_mode[comparator.global_sequence(schedule)]
    losses[np.arange(T), active] = (rng.random(T) < noise_rate).astype(float)
    return losses, expert_of_mode


def gen_expert_problem(n: int, lengths: Sequence[int], k: int, m: int, noise_rate: float, seed) -> PlantedProblem:
    rng = _rng(seed)
    schedule = gen_schedule(lengths, rng)
    comparator = gen_switching_comparator(len(lengths), lengths, k, m, rng)
    losses, expert_of_mode = gen_adversarial_expert_losses(n, comparator, schedule, noise_rate, rng)
    # each expert predicts a label; a loss of 1 means it disagreed with y
    labels = np.where(rng.random(schedule.T) < 0.5, -1, 1)
    return PlantedProblem("experts", schedule, comparator, k, m, labels,
                          losses=losses, expert_of_mode=expert_of_mode)


def gen_biclustered_labels(p: int, m: int, lengths: Sequence[int], seed, k: int | None = None,
                           dim: int = 5) -> PlantedProblem:
    """Labels read off a binary biclustered matrix ``H = U* C^T``.

    Instance keys are drawn uniformly from ``range(p)`` and each key is also
    given a point in ``R^dim`` for vector kernels.  ``k`` defaults to the
    fewest switches able to realise ``m`` modes.
    """
    if p < 1 or m < 1:
        raise ParameterError("p and m must be positive")
    s = len(lengths)
    if k is None:
        k = max(0, m - s)
    rng = _rng(seed)
    schedule = gen_schedule(lengths, rng)
    comparator = gen_switching_comparator(s, lengths, k, m, rng)
    for _ in range(1000):
        U_star = np.where(rng.random((p, m)) < 0.5, -1, 1)
        if m > 2 ** p or len({tuple(col) for col in U_star.T}) == m:
            break
    modes = comparator.global_sequence(schedule)
    C = np.zeros((schedule.T, m), dtype=int)
    C[np.arange(schedule.T), modes] = 1
    instances = rng.integers(p, size=schedule.T)
    labels = U_star[instances, modes]
    points = rng.standard_normal((p, dim))
    return PlantedProblem("matrix", schedule, comparator, k, m, labels,
                          instances=instances, U_star=U_star, C=C, points=points)


def gen_linear_stream(T: int, dim: int, k: int, seed, radius: float = 10.0, margin: float = 1.0,
                      m: int | None = None) -> PlantedProblem:
    """Unit-norm instances labelled by ``k``-switching separators of norm ``radius``.

    Every instance keeps ``|<u, x>| >= margin`` against the active separator, so
    the comparator's hinge loss is zero.
    """
    if dim < 1 or T < 1:
        raise ParameterError("dim and T must be positive")
    if margin >= radius:
        raise ParameterError("margin must be below the separator radius")
    m = k + 1 if m is None else m
    rng = _rng(seed)
    schedule = TaskSchedule.contiguous([T])
    comparator = gen_switching_comparator(1, [T], k, m, rng)
    U = rng.standard_normal((m, dim))
    U *= radius / np.linalg.norm(U, axis=1, keepdims=True)
    modes = comparator.global_sequence(schedule)
    X = np.empty((T, dim))
    for t in range(T):
        while True:
            x = rng.standard_normal(dim)
            x /= np.linalg.norm(x)
            if abs(U[modes[t]] @ x) >= margin:
                break
        X[t] = x
    labels = np.where(np.einsum("ij,ij->i", X, U[modes]) >= 0, 1, -1)
    return PlantedProblem("linear", schedule, comparator, k, m, labels, instances=X, U_star=U)


@dataclass(frozen=True)
class RegretReport:
    cum_regret: np.ndarray
    regret: float
    bound: float
    within_bound: bool
    mistakes: int


def evaluate(ledger: RegretLedger, bound: float | None = None) -> RegretReport:
    bound = ledger.bound if bound is None else bound
    cum = ledger.cum_regret
    regret = float(cum[-1]) if cum.size else 0.0
    within = not (regret > bound)
    return RegretReport(cum, regret, float(bound), within, int(ledger.mistakes))
