"""Pure-Python twins of the compiled trial loops in ``_kernels.pyx``."""
import numpy as np

from .core import DegeneracyError

EPS_FLOOR = 1e-300


def experts_trace(tasks, losses, pi, w, eta, theta, phi):
    T = losses.shape[0]
    expected = np.empty(T)
    degenerate = 0
    for tau in range(T):
        i = tasks[tau]
        wi = w[i]
        lo = losses[tau]
        pw = pi * wi
        dot = pw.sum()
        delta = wi * np.exp(-eta * lo)
        pd = pi @ delta
        if dot <= 0.0 or pd <= 0.0:
            raise DegeneracyError(f"pi . w vanished on trial {tau}")
        expected[tau] = (pw @ lo) / dot
        beta = dot / pd
        eps = 1.0 - wi + beta * delta
        low = eps < EPS_FLOOR
        if low.any():
            degenerate += int(low.sum())
            eps = np.where(low, EPS_FLOOR, eps)
        pi *= eps
        w[i] = np.minimum((phi * (1.0 - wi) + theta * beta * delta) / eps, 1.0)
    return expected, degenerate


def mw_trace(losses, eta):
    T, n = losses.shape
    expected = np.empty(T)
    logw = np.zeros(n)
    for t in range(T):
        v = np.exp(logw - logw.max())
        expected[t] = (v @ losses[t]) / v.sum()
        logw -= eta * losses[t]
    return expected
