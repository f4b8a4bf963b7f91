"""Exponential-time Specialist Hedge over expert x shortened-circadian pairs.

This is the brute-force reference for :mod:`mtswitch.experts`.  A shortened
circadian assigns awake (1) or asleep (0) to every (task, local time) slot;
its prior weight is the probability of that pattern under s independent
two-state Markov chains.  Only usable for a handful of trials.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import ParameterError, TaskSchedule

MAX_SLOTS = 16


class ModelError(RuntimeError):
    """The specialist model has no awake mass on some trial."""


@dataclass(frozen=True)
class ShortenedCircadian:
    values: tuple[tuple[int, ...], ...]

    def __call__(self, task: int, t: int) -> int:
        return self.values[task][t]

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.values)


def _guard(lengths: Sequence[int]) -> int:
    total = int(sum(lengths))
    if total > MAX_SLOTS:
        raise ParameterError(f"{total} slots exceeds the oracle limit of {MAX_SLOTS}")
    return total


def circadian_matrix(lengths: Sequence[int]) -> np.ndarray:
    """All 2^S awake patterns as rows of a read-only ``(2^S, S)`` 0/1 array.

    Column ``offset[task] + t`` holds slot ``(task, t)``.
    """
    _guard(lengths)
    return _pattern_rows(sum(int(n) for n in lengths))


@lru_cache(maxsize=MAX_SLOTS + 1)
def _pattern_rows(total: int) -> np.ndarray:
    codes = np.arange(2 ** total, dtype=np.int64)[:, None]
    rows = ((codes >> np.arange(total)) & 1).astype(np.intp)
    rows.setflags(write=False)
    return rows


def enumerate_circadians(schedule: TaskSchedule | Sequence[int]) -> list[ShortenedCircadian]:
    lengths = schedule.lengths if isinstance(schedule, TaskSchedule) else tuple(schedule)
    rows = circadian_matrix(lengths)
    bounds = np.cumsum([0, *lengths])
    return [
        ShortenedCircadian(
            tuple(tuple(int(b) for b in row[bounds[i]:bounds[i + 1]]) for i in range(len(lengths)))
        )
        for row in rows
    ]


def _chain_probs(rho_hat, theta, phi):
    start = np.array([1.0 - rho_hat, rho_hat])
    trans = np.array([[1.0 - phi, phi], [1.0 - theta, theta]])
    return start, trans


def circadian_weight(omega: ShortenedCircadian, params) -> float:
    """Markov-chain probability of ``omega`` (params needs rho_hat, theta, phi)."""
    start, trans = _chain_probs(params.rho_hat, params.theta, params.phi)
    weight = 1.0
    for seq in omega.values:
        if not seq:
            continue
        weight *= start[seq[0]]
        for a, b in zip(seq, seq[1:]):
            weight *= trans[a, b]
    return float(weight)


def circadian_weights(lengths: Sequence[int], rho_hat, theta, phi) -> np.ndarray:
    """Vectorised weights for the rows of :func:`circadian_matrix`."""
    rows = circadian_matrix(lengths)
    start, trans = _chain_probs(rho_hat, theta, phi)
    weight = np.ones(rows.shape[0])
    offset = 0
    for n_i in lengths:
        if n_i:
            seg = rows[:, offset:offset + n_i]
            weight *= start[seg[:, 0]]
            for t in range(n_i - 1):
                weight *= trans[seg[:, t], seg[:, t + 1]]
        offset += n_i
    return weight


def specialist_hedge_run(schedule: TaskSchedule, losses, params) -> np.ndarray:
    """Per-trial loss of Specialist Hedge with shortened circadians.

    ``losses`` is ``(T, n)`` or a batch ``(B, T, n)`` of independent tables,
    in which case the result is ``(B, T)``.
    """
    losses = np.asarray(losses, dtype=float)
    batched = losses.ndim == 3
    if not batched:
        losses = losses[None]
    B, T, n = losses.shape
    if T != schedule.T:
        raise ValueError("loss table length does not match the schedule")
    rows = circadian_matrix(schedule.lengths).astype(bool)
    prior = circadian_weights(schedule.lengths, params.rho_hat, params.theta, params.phi)
    p = np.broadcast_to(prior / n, (B, n, prior.size)).copy()
    offsets = schedule.offsets()
    out = np.empty((B, T))
    for tau in range(T):
        awake = rows[:, offsets[schedule.tasks[tau]] + schedule.local_times[tau]]
        pa = p[:, :, awake]
        mass = pa.sum(axis=(1, 2))
        if np.any(mass <= 0.0):
            raise ModelError(f"no awake specialist carries weight on trial {tau}")
        cost = losses[:, tau, :]
        per_expert = pa.sum(axis=2)
        out[:, tau] = (per_expert * cost).sum(axis=1) / mass
        scaled = pa * np.exp(-params.eta * cost)[:, :, None]
        scaled *= (mass / scaled.sum(axis=(1, 2)))[:, None, None]
        p[:, :, awake] = scaled
    return out if batched else out[0]
