# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial loops for the finite-expert learners."""
from libc.math cimport exp

import numpy as np

from mtswitch.core import DegeneracyError

DEF EPS_FLOOR = 1e-300


def experts_trace(const Py_ssize_t[:] tasks, const double[:, :] losses,
                  double[:] pi, double[:, :] w,
                  double eta, double theta, double phi):
    """Run the switching multitask update over a whole loss table.

    ``pi`` and ``w`` are updated in place.  Returns the per-trial expected
    loss and the number of floored epsilon components.
    """
    cdef Py_ssize_t T = losses.shape[0]
    cdef Py_ssize_t n = losses.shape[1]
    cdef Py_ssize_t tau, h, i
    cdef double dot, num, pd, beta, eps, wh, dh
    cdef long degenerate = 0
    cdef double[:] delta = np.empty(n, dtype=np.float64)
    out = np.empty(T, dtype=np.float64)
    cdef double[:] expected = out

    for tau in range(T):
        i = tasks[tau]
        dot = 0.0
        num = 0.0
        pd = 0.0
        for h in range(n):
            wh = pi[h] * w[i, h]
            dot += wh
            num += wh * losses[tau, h]
            dh = w[i, h] * exp(-eta * losses[tau, h])
            delta[h] = dh
            pd += pi[h] * dh
        if dot <= 0.0 or pd <= 0.0:
            raise DegeneracyError(f"pi . w vanished on trial {tau}")
        expected[tau] = num / dot
        beta = dot / pd
        for h in range(n):
            wh = w[i, h]
            dh = delta[h]
            eps = 1.0 - wh + beta * dh
            if eps < EPS_FLOOR:
                eps = EPS_FLOOR
                degenerate += 1
            pi[h] *= eps
            wh = (phi * (1.0 - wh) + theta * beta * dh) / eps
            w[i, h] = 1.0 if wh > 1.0 else wh
    return out, degenerate


def mw_trace(const double[:, :] losses, double eta):
    """Exponential weights from the uniform start; returns v_t . l_t per trial."""
    cdef Py_ssize_t T = losses.shape[0]
    cdef Py_ssize_t n = losses.shape[1]
    cdef Py_ssize_t t, h
    cdef double z, num, mx
    cdef double[:] logw = np.zeros(n, dtype=np.float64)
    cdef double[:] v = np.empty(n, dtype=np.float64)
    out = np.empty(T, dtype=np.float64)
    cdef double[:] expected = out

    for t in range(T):
        mx = logw[0]
        for h in range(1, n):
            if logw[h] > mx:
                mx = logw[h]
        z = 0.0
        for h in range(n):
            v[h] = exp(logw[h] - mx)
            z += v[h]
        num = 0.0
        for h in range(n):
            num += v[h] * losses[t, h]
        expected[t] = num / z
        for h in range(n):
            logw[h] -= eta * losses[t, h]
    return out
