# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled bath-sum kernel."""
import numpy as np
cimport numpy as cnp


def bath_sums(const double complex[::1] z, const double[::1] modes, const double[:, ::1] weights):
    """S[j, m] = sum_k weights[j, k] / (z[m] - modes[k])."""
    cdef Py_ssize_t nz = z.shape[0], nk = modes.shape[0], nw = weights.shape[0]
    cdef Py_ssize_t m, k, j
    cdef double zr, zi, dr, inv, re, im
    cdef double complex[:, ::1] out
    if weights.shape[1] != nk:
        raise ValueError("weights must have one column per mode")
    res = np.zeros((nw, nz), dtype=np.complex128)
    out = res
    cdef double[::1] acc_re = np.zeros(nw)
    cdef double[::1] acc_im = np.zeros(nw)
    with nogil:
        for m in range(nz):
            zr = z[m].real
            zi = z[m].imag
            for j in range(nw):
                acc_re[j] = 0.0
                acc_im[j] = 0.0
            for k in range(nk):
                dr = zr - modes[k]
                inv = 1.0 / (dr * dr + zi * zi)
                re = dr * inv
                im = -zi * inv
                for j in range(nw):
                    acc_re[j] += weights[j, k] * re
                    acc_im[j] += weights[j, k] * im
            for j in range(nw):
                out[j, m] = acc_re[j] + 1j * acc_im[j]
    return res
