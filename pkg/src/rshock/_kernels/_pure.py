"""Pure Python fallback kernels.

Reference semantics for the compiled extension in ``_fast.pyx``: both
backends keep the same loop structure and arithmetic order so results are
bit-identical (the extension is built with FP contraction disabled).
"""

from math import log, sqrt

import numpy as np

BACKEND = "pure"


def conj_lines(w, v_out, arg_out):
    """Quasi-periodic discrete Legendre transform, one line per row.

    For each row of ``w`` (periodic part of f(x) = x^2/2 + w on N nodes)
    computes the periodic part of the conjugate on the dual grid,

        v[j] = max_{m in [-N, 2N)} (x_m * y_j - x_m^2/2 - w[m mod N]) - y_j^2/2,

    via the lower convex hull of the lifted points and a merge of sorted
    hull slopes against the sorted dual nodes.  Ties take the smallest m.
    """
    nlines, n = w.shape
    m_tot = 3 * n
    h = 1.0 / n
    x = np.empty(m_tot)
    g = np.empty(m_tot)
    hull = np.empty(m_tot, dtype=np.int64)
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
            i = hull[ptr]
            v_out[row, j] = x[i] * yy - g[i] - 0.5 * yy * yy
            arg_out[row, j] = i - n


def psor_sweeps(u, obstacle, source, c, omega, nsweeps, skip):
    """nsweeps of projected SOR for min(obstacle - u, s*Lap_h u + source) = 0.

    Row-major sweep order, relaxation omega, projection after each node
    update.  ``c = h^2 / s`` scales the source into the 5-point update.
    Nodes with ``skip`` set are pinned to the obstacle.
    """
    n = u.shape[0]
    for _ in range(nsweeps):
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


def _solve_node(t, cap, rhs, r, a0, b0, c2, k, delta, logd, two_d):
    """Scalar complementarity solve at one node of an implicit flow step.

    Either the monotone equation t - rhs - r*log(det(t)) = 0 has its root
    below the convexity cap, or the node sits on the cap.  Returns
    (value, capped).
    """
    if two_d:
        ac = a0 - 2.0 * k * cap
        bc = b0 - 2.0 * k * cap
        detc = ac * bc - c2
    else:
        detc = a0 - 2.0 * k * cap
    lc = log(detc) if detc > delta else logd
    if cap - rhs - r * lc <= 0.0:
        return cap, True
    if t > cap:
        t = cap
    for _ in range(50):
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
        if abs(tn - t) <= 1e-15 * (1.0 if abs(t) < 1.0 else abs(t)):
            return tn, False
        t = tn
    return t, False


def flow_polish_1d(u, rhs, r, delta, tol, max_sweeps):
    """Projected nonlinear Gauss-Seidel for one implicit 1D flow step.

    Finishes the step to the exact nodewise complementarity solution of

        min( u_i - rhs_i - r*log(hess_i),  (hess_i - delta) / (2k) ) = 0,

    hess_i = 1 + (u_{i-1} - 2 u_i + u_{i+1}) k, k = N^2.  Returns
    (sweeps, capped_nodes).
    """
    n = u.shape[0]
    k = float(n * n)
    logd = log(delta)
    sweeps = 0
    capped = 0
    while sweeps < max_sweeps:
        maxmove = 0.0
        capped = 0
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            a0 = 1.0 + (u[im] + u[ip]) * k
            cap = (a0 - delta) / (2.0 * k)
            t, was_capped = _solve_node(
                u[i], cap, rhs[i], r, a0, 0.0, 0.0, k, delta, logd, False
            )
            if was_capped:
                capped += 1
            mv = abs(t - u[i])
            if mv > maxmove:
                maxmove = mv
            u[i] = t
        sweeps += 1
        if maxmove < tol:
            break
    return sweeps, capped


def flow_polish_2d(u, rhs, r, delta, tol, max_sweeps):
    """2D analogue of :func:`flow_polish_1d` with the full 2x2 determinant.

    The convexity cap uses the smallest Hessian eigenvalue, which is linear
    in the node value, so the cap is closed-form.
    """
    n = u.shape[0]
    k = float(n * n)
    logd = log(delta)
    sweeps = 0
    capped = 0
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
                t, was_capped = _solve_node(
                    u[i, j], cap, rhs[i, j], r, a0, b0, c * c, k, delta, logd, True
                )
                if was_capped:
                    capped += 1
                mv = abs(t - u[i, j])
                if mv > maxmove:
                    maxmove = mv
                u[i, j] = t
        sweeps += 1
        if maxmove < tol:
            break
    return sweeps, capped
