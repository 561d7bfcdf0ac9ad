# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Array-gain kernels over planar panels.

Both kernels return ``|sum_{h,v} e[h, v] exp(-j (psi_az h + psi_el v))|^2 / (m_h m_v)``,
the power a unit steering vector collects from the panel weights ``e``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def gain_points(double complex[:, ::1] e, double[::1] psi_az, double[::1] psi_el):
    """Gain at arbitrary ``(psi_az[k], psi_el[k])`` pairs."""
    cdef Py_ssize_t mh = e.shape[0], mv = e.shape[1], n = psi_az.shape[0]
    cdef Py_ssize_t k, h, v
    cdef double complex acc, row, ph, pv, step_h, step_v
    cdef double norm = 1.0 / (mh * mv)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    if psi_el.shape[0] != n:
        raise ValueError("psi_az and psi_el lengths differ")
    for k in range(n):
        step_h = cos(psi_az[k]) - 1j * sin(psi_az[k])
        step_v = cos(psi_el[k]) - 1j * sin(psi_el[k])
        acc = 0
        ph = 1
        for h in range(mh):
            row = 0
            pv = 1
            for v in range(mv):
                row = row + e[h, v] * pv
                pv = pv * step_v
            acc = acc + row * ph
            ph = ph * step_h
        o[k] = (acc.real * acc.real + acc.imag * acc.imag) * norm
    return out


def gain_separable(double complex[:, ::1] e, double[::1] psi_az, double[::1] psi_el):
    """Gain on the tensor grid ``psi_az x psi_el``; shape ``(len(psi_az), len(psi_el))``."""
    cdef Py_ssize_t mh = e.shape[0], mv = e.shape[1]
    cdef Py_ssize_t na = psi_az.shape[0], ne = psi_el.shape[0]
    cdef Py_ssize_t a, b, h, v
    cdef double complex pv, step, ph, acc
    cdef double norm = 1.0 / (mh * mv)
    # inner[b, h] = sum_v e[h, v] exp(-j psi_el[b] v)
    inner_arr = np.empty((ne, mh), dtype=np.complex128)
    cdef double complex[:, ::1] inner = inner_arr
    for b in range(ne):
        step = cos(psi_el[b]) - 1j * sin(psi_el[b])
        for h in range(mh):
            inner[b, h] = 0
        pv = 1
        for v in range(mv):
            for h in range(mh):
                inner[b, h] = inner[b, h] + e[h, v] * pv
            pv = pv * step
    # azimuth phasors tabulated once so the inner sum has no serial dependency
    tab_arr = np.empty((na, mh), dtype=np.complex128)
    cdef double complex[:, ::1] tab = tab_arr
    for a in range(na):
        step = cos(psi_az[a]) - 1j * sin(psi_az[a])
        ph = 1
        for h in range(mh):
            tab[a, h] = ph
            ph = ph * step
    cdef double re, im
    out = np.empty((na, ne), dtype=np.float64)
    cdef double[:, ::1] o = out
    for a in range(na):
        for b in range(ne):
            re = 0
            im = 0
            for h in range(mh):
                re = re + inner[b, h].real * tab[a, h].real - inner[b, h].imag * tab[a, h].imag
                im = im + inner[b, h].real * tab[a, h].imag + inner[b, h].imag * tab[a, h].real
            o[a, b] = (re * re + im * im) * norm
    return out
