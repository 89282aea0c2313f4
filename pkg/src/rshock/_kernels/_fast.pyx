# cython: language_level=3
"""Compiled hot kernels; semantics mirror ``_pure.py`` line for line."""

from libc.math cimport fabs, log, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def conj_lines(double[:, ::1] w, double[:, ::1] v_out, long long[:, ::1] arg_out):
    cdef Py_ssize_t nlines = w.shape[0]
    cdef Py_ssize_t n = w.shape[1]
    cdef Py_ssize_t m_tot = 3 * n
    cdef double h = 1.0 / n
    cdef cnp.ndarray[double, ndim=1] x_arr = np.empty(m_tot)
    cdef cnp.ndarray[double, ndim=1] g_arr = np.empty(m_tot)
    cdef cnp.ndarray[long long, ndim=1] hull_arr = np.empty(m_tot, dtype=np.int64)
    cdef double[::1] x = x_arr
    cdef double[::1] g = g_arr
    cdef long long[::1] hull = hull_arr
    cdef Py_ssize_t row, i, j, k, ptr
    cdef long long i1, i2, a, b, ih
    cdef double xm, yy
    for row in range(nlines):
        for i in range(m_tot):
            xm = (i - n) * h
            x[i] = xm
            g[i] = 0.5 * xm * xm + w[row, i % n]
        k = 0
        for i in range(m_tot):
            while k >= 2:
                i1 = hull[k - 2]
                i2 = hull[k - 1]
                if (x[i2] - x[i1]) * (g[i] - g[i1]) - (g[i2] - g[i1]) * (x[i] - x[i1]) <= 0.0:
                    k -= 1
                else:
                    break
            hull[k] = i
            k += 1
        ptr = 0
        for j in range(n):
            yy = j * h
            while ptr + 1 < k:
                a = hull[ptr]
                b = hull[ptr + 1]
                if (g[b] - g[a]) / (x[b] - x[a]) < yy:
                    ptr += 1
                else:
                    break
            ih = hull[ptr]
            v_out[row, j] = x[ih] * yy - g[ih] - 0.5 * yy * yy
            arg_out[row, j] = ih - n


def psor_sweeps(double[:, ::1] u, double[:, ::1] obstacle, double[:, ::1] source,
                double c, double omega, int nsweeps, unsigned char[:, ::1] skip):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef int s
    cdef double ugs, un
    for s in range(nsweeps):
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            for j in range(n):
                jm = j - 1 if j > 0 else n - 1
                jp = j + 1 if j < n - 1 else 0
                if skip[i, j]:
                    u[i, j] = obstacle[i, j]
                    continue
                ugs = 0.25 * (u[im, j] + u[ip, j] + u[i, jm] + u[i, jp] + c * source[i, j])
                un = u[i, j] + omega * (ugs - u[i, j])
                if un > obstacle[i, j]:
                    un = obstacle[i, j]
                u[i, j] = un


cdef inline double _solve_node(double t, double cap, double rhs, double r,
                               double a0, double b0, double c2, double k,
                               double delta, double logd, bint two_d,
                               bint* capped) nogil:
    cdef double ac, bc, detc, lc, at, bt, det, dd, gval, dg, tn, scale
    cdef int it
    if two_d:
        ac = a0 - 2.0 * k * cap
        bc = b0 - 2.0 * k * cap
        detc = ac * bc - c2
    else:
        detc = a0 - 2.0 * k * cap
    lc = log(detc) if detc > delta else logd
    if cap - rhs - r * lc <= 0.0:
        capped[0] = True
        return cap
    capped[0] = False
    if t > cap:
        t = cap
    for it in range(50):
        if two_d:
            at = a0 - 2.0 * k * t
            bt = b0 - 2.0 * k * t
            det = at * bt - c2
            dd = 2.0 * k * (at + bt)
        else:
            det = a0 - 2.0 * k * t
            dd = 2.0 * k
        if det > delta:
            gval = t - rhs - r * log(det)
            dg = 1.0 + r * dd / det
        else:
            gval = t - rhs - r * logd
            dg = 1.0
        tn = t - gval / dg
        if tn > cap:
            tn = cap
        scale = 1.0 if fabs(t) < 1.0 else fabs(t)
        if fabs(tn - t) <= 1e-15 * scale:
            return tn
        t = tn
    return t


def flow_polish_1d(double[::1] u, double[::1] rhs, double r, double delta,
                   double tol, int max_sweeps):
    cdef Py_ssize_t n = u.shape[0]
    cdef double k = <double>(n * n)
    cdef double logd = log(delta)
    cdef int sweeps = 0
    cdef int capped = 0
    cdef Py_ssize_t i, im, ip
    cdef double a0, cap, t, mv, maxmove
    cdef bint was_capped
    while sweeps < max_sweeps:
        maxmove = 0.0
        capped = 0
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            a0 = 1.0 + (u[im] + u[ip]) * k
            cap = (a0 - delta) / (2.0 * k)
            t = _solve_node(u[i], cap, rhs[i], r, a0, 0.0, 0.0, k, delta, logd,
                            False, &was_capped)
            if was_capped:
                capped += 1
            mv = fabs(t - u[i])
            if mv > maxmove:
                maxmove = mv
            u[i] = t
        sweeps += 1
        if maxmove < tol:
            break
    return sweeps, capped


def flow_polish_2d(double[:, ::1] u, double[:, ::1] rhs, double r, double delta,
                   double tol, int max_sweeps):
    cdef Py_ssize_t n = u.shape[0]
    cdef double k = <double>(n * n)
    cdef double logd = log(delta)
    cdef int sweeps = 0
    cdef int capped = 0
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double a0, b0, c, rad, cap, t, mv, maxmove
    cdef bint was_capped
    while sweeps < max_sweeps:
        maxmove = 0.0
        capped = 0
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            for j in range(n):
                jm = j - 1 if j > 0 else n - 1
                jp = j + 1 if j < n - 1 else 0
                a0 = 1.0 + (u[im, j] + u[ip, j]) * k
                b0 = 1.0 + (u[i, jm] + u[i, jp]) * k
                c = (u[ip, jp] - u[ip, jm] - u[im, jp] + u[im, jm]) * k * 0.25
                rad = sqrt(0.25 * (a0 - b0) * (a0 - b0) + c * c)
                cap = (0.5 * (a0 + b0) - rad - delta) / (2.0 * k)
                t = _solve_node(u[i, j], cap, rhs[i, j], r, a0, b0, c * c, k,
                                delta, logd, True, &was_capped)
                if was_capped:
                    capped += 1
                mv = fabs(t - u[i, j])
                if mv > maxmove:
                    maxmove = mv
                u[i, j] = t
        sweeps += 1
        if maxmove < tol:
            break
    return sweeps, capped
