# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil reductions with Neumaier-compensated accumulation."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def sliced_energy(double[:, ::1] values, double lam, double delta):
    """0.5·lam·Σ_i |u_i − 2(1−delta)·u_{i+1} + u_{i+2}|² over i = 0..N−2."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i, c
    cdef double w = 2.0 * (1.0 - delta)
    cdef double s = 0.0, comp = 0.0, term, t, a
    for i in range(n - 2):
        for c in range(3):
            a = values[i, c] - w * values[i + 1, c] + values[i + 2, c]
            term = a * a
            t = s + term
            if fabs(s) >= fabs(term):
                comp += (s - t) + term
            else:
                comp += (term - t) + s
            s = t
    return 0.5 * lam * (s + comp)


def sliced_energy_gradient(double[:, ::1] values, double lam, double delta):
    """Energy together with its gradient with respect to every spin component."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i, c
    cdef double w = 2.0 * (1.0 - delta)
    cdef double s = 0.0, comp = 0.0, term, t, a
    g_arr = np.zeros((n, 3), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    for i in range(n - 2):
        for c in range(3):
            a = values[i, c] - w * values[i + 1, c] + values[i + 2, c]
            term = a * a
            t = s + term
            if fabs(s) >= fabs(term):
                comp += (s - t) + term
            else:
                comp += (term - t) + s
            s = t
            g[i, c] += lam * a
            g[i + 1, c] -= lam * w * a
            g[i + 2, c] += lam * a
    return 0.5 * lam * (s + comp), g_arr
