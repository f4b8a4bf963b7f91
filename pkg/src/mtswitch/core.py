"""Protocol types shared by every learner.

Indices are zero-based throughout: tasks are ``0..s-1``, global trials are
``0..T-1`` and the local time of a trial within its task is ``0..T^i-1``.
Labels are the integers ``-1`` and ``+1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """Raised when an algorithm or generator parameter is out of range."""


class DegeneracyError(ArithmeticError):
    """Raised when a weight normaliser collapses to zero."""


@dataclass(frozen=True)
class TaskSchedule:
    """Task vector of a multitask run.

    ``tasks[tau]`` is the task active on global trial ``tau``.  The routing
    from a global trial to its local time is computed once on construction.
    """

    tasks: tuple[int, ...]
    s: int
    lengths: tuple[int, ...] = field(init=False)
    local_times: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        tasks = tuple(int(t) for t in self.tasks)
        if self.s < 1:
            raise ParameterError("task count s must be positive")
        if any(t < 0 or t >= self.s for t in tasks):
            raise ParameterError(f"task ids must lie in [0, {self.s})")
        counts = [0] * self.s
        local = []
        for t in tasks:
            local.append(counts[t])
            counts[t] += 1
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "lengths", tuple(counts))
        object.__setattr__(self, "local_times", tuple(local))

    @classmethod
    def from_tasks(cls, tasks: Sequence[int], s: int | None = None) -> "TaskSchedule":
        tasks = [int(t) for t in tasks]
        if s is None:
            s = max(tasks) + 1 if tasks else 1
        return cls(tuple(tasks), s)

    @classmethod
    def contiguous(cls, lengths: Sequence[int]) -> "TaskSchedule":
        """All trials of task 0, then all of task 1, and so on."""
        tasks = [i for i, n in enumerate(lengths) for _ in range(n)]
        return cls(tuple(tasks), len(lengths))

    @property
    def T(self) -> int:
        return len(self.tasks)

    def offsets(self) -> np.ndarray:
        """Start of each task's segment when tasks are laid out contiguously."""
        return np.concatenate([[0], np.cumsum(self.lengths)[:-1]]).astype(int)

    def task_array(self) -> np.ndarray:
        return np.asarray(self.tasks, dtype=np.intp)


def route(schedule: TaskSchedule, tau: int) -> tuple[int, int]:
    """Map a global trial to ``(task, local_time)``."""
    if not 0 <= tau < schedule.T:
        raise IndexError(f"trial {tau} outside [0, {schedule.T})")
    return schedule.tasks[tau], schedule.local_times[tau]


def zero_one_loss(y: int, yhat: int) -> int:
    return int(y != yhat)


def hinge_loss(y: int, ybar: float) -> float:
    return max(0.0, 1.0 - y * ybar)


def prob_positive(ybar, gamma: float = 1.0):
    """P(sign(ybar - Y) = +1) for Y ~ Uniform(-gamma, gamma)."""
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    return np.clip((np.asarray(ybar, dtype=float) + gamma) / (2.0 * gamma), 0.0, 1.0)


def expected_zero_one(y, ybar, gamma: float = 1.0):
    """Closed-form E[L01(y, yhat)] under the randomized sign prediction."""
    p = prob_positive(ybar, gamma)
    return np.where(np.asarray(y) > 0, 1.0 - p, p)


def randomized_sign(ybar: float, gamma: float, rng: np.random.Generator) -> int:
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    threshold = rng.uniform(-gamma, gamma)
    return 1 if ybar - threshold >= 0 else -1


@dataclass(frozen=True)
class ComparatorSequence:
    """Per-task sequences of mode ids; ``modes[i][t]`` is h^i_t."""

    modes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        modes = tuple(tuple(int(h) for h in seq) for seq in self.modes)
        object.__setattr__(self, "modes", modes)
        used = sorted({h for seq in modes for h in seq})
        if used != list(range(len(used))):
            raise ParameterError("mode ids must be dense in [0, m)")

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(seq) for seq in self.modes)

    def check_schedule(self, schedule: TaskSchedule) -> None:
        if self.lengths != schedule.lengths:
            raise ParameterError(
                f"comparator lengths {self.lengths} do not match schedule {schedule.lengths}"
            )

    def global_sequence(self, schedule: TaskSchedule) -> np.ndarray:
        """Mode id active on each global trial."""
        self.check_schedule(schedule)
        return np.array(
            [self.modes[i][t] for i, t in zip(schedule.tasks, schedule.local_times)],
            dtype=np.intp,
        )


def count_switches_modes(c: ComparatorSequence) -> tuple[int, int]:
    """Intra-task switch count k and distinct-mode count m."""
    k = 0
    for seq in c.modes:
        k += sum(1 for a, b in zip(seq, seq[1:]) if a != b)
    m = len({h for seq in c.modes for h in seq})
    return k, m


@dataclass
class RegretLedger:
    """Per-trial expected losses of a learner next to the comparator's losses."""

    schedule: TaskSchedule
    expected_loss: np.ndarray
    comparator_loss: np.ndarray
    y: np.ndarray | None = None
    ybar: np.ndarray | None = None
    bound: float = float("nan")
    mistakes: int = 0

    def __post_init__(self):
        self.expected_loss = np.asarray(self.expected_loss, dtype=float)
        self.comparator_loss = np.asarray(self.comparator_loss, dtype=float)
        if self.expected_loss.shape != (self.schedule.T,):
            raise ValueError("one expected loss per trial is required")
        if self.comparator_loss.shape != (self.schedule.T,):
            raise ValueError("one comparator loss per trial is required")
        if np.any(self.expected_loss < -1e-12) or np.any(self.expected_loss > 1 + 1e-12):
            raise ValueError("expected losses must lie in [0, 1]")

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.expected_loss - self.comparator_loss)

    @property
    def regret(self) -> float:
        return float(self.cum_regret[-1]) if self.schedule.T else 0.0

    def rows(self):
        """Yield ``(trial, task, local_time, y, ybar, expected, comparator, cum)``."""
        cum = self.cum_regret
        for tau in range(self.schedule.T):
            yield (
                tau,
                self.schedule.tasks[tau],
                self.schedule.local_times[tau],
                None if self.y is None else int(self.y[tau]),
                None if self.ybar is None else float(self.ybar[tau]),
                float(self.expected_loss[tau]),
                float(self.comparator_loss[tau]),
                float(cum[tau]),
            )
