# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, sin, exp, fabs, M_PI
from libc.stdint cimport uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_POW_53 = 1.1102230246251565e-16


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def mix64(x):
    return int(_mix(<uint64_t>(x & 0xFFFFFFFFFFFFFFFF)))


cdef inline double _u(uint64_t seed, uint64_t i) nogil:
    return <double>(_mix(seed + i * GOLDEN) >> 11) * TWO_POW_53


def uniform(seed, counter, Py_ssize_t n):
    cdef uint64_t s = <uint64_t>seed
    cdef uint64_t c = <uint64_t>counter
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = _u(s, c + <uint64_t>(i + 1))
    return out


def normal(seed, counter, Py_ssize_t n):
    cdef uint64_t s = <uint64_t>seed
    cdef uint64_t c = <uint64_t>counter
    cdef Py_ssize_t pairs = (n + 1) // 2
    cdef cnp.ndarray[double, ndim=1] buf = np.empty(2 * pairs)
    cdef double[::1] o = buf
    cdef Py_ssize_t k
    cdef double u1, u2, r, theta
    with nogil:
        for k in range(pairs):
            u1 = 1.0 - _u(s, c + <uint64_t>(2 * k + 1))
            u2 = _u(s, c + <uint64_t>(2 * k + 2))
            r = sqrt(-2.0 * log(u1))
            theta = 2.0 * M_PI * u2
            o[2 * k] = r * cos(theta)
            o[2 * k + 1] = r * sin(theta)
    return buf[:n]


cdef double _off_norm(double[:, ::1] a, Py_ssize_t n) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return sqrt(acc)


def jacobi_eigh(a_in, double tol=1e-12, int max_sweeps=100):
    cdef cnp.ndarray[double, ndim=2] a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a_arr.shape[0]
    cdef cnp.ndarray[double, ndim=2] v_arr = np.eye(n)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef int sweeps = 0
    cdef int sweep
    cdef double apq, app, aqq, theta, t, c, s, x, y, off
    cdef bint converged = False
    with nogil:
        for sweep in range(1, max_sweeps + 1):
            off = _off_norm(a, n)
            if off < tol:
                sweeps = sweep - 1
                converged = True
                break
            sweeps = sweep
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    app = a[p, p]
                    aqq = a[q, q]
                    theta = (aqq - app) / (2.0 * apq)
                    if theta >= 0:
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(n):
                        x = a[k, p]
                        y = a[k, q]
                        a[k, p] = c * x - s * y
                        a[k, q] = s * x + c * y
                    for k in range(n):
                        x = a[p, k]
                        y = a[q, k]
                        a[p, k] = c * x - s * y
                        a[q, k] = s * x + c * y
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for k in range(n):
                        x = v[k, p]
                        y = v[k, q]
                        v[k, p] = c * x - s * y
                        v[k, q] = s * x + c * y
        if not converged:
            off = _off_norm(a, n)
            converged = off < tol
    if not converged:
        raise ArithmeticError(f"Jacobi did not converge: off-diagonal norm {off:.3e}")
    return np.diag(a_arr).copy(), v_arr, sweeps


def sq_dists(a_in, b_in):
    cdef double[:, ::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    acc += diff * diff
                o[i, j] = acc
    return out


def rbf_mean(a_in, b_in, double gamma):
    cdef double[:, ::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, total = 0.0
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    acc += diff * diff
                total += exp(-gamma * acc)
    return total / (n * m)


cdef extern from *:
    """
    static void sfd_adamw(double *restrict p, const double *restrict g, double *restrict m,
                          double *restrict v, Py_ssize_t n, double lr, double beta1, double beta2,
                          double eps, double decay, int use_decay, double c1, double c2) {
        Py_ssize_t i;
        if (use_decay)
            for (i = 0; i < n; i++) p[i] = p[i] * decay;
        for (i = 0; i < n; i++) {
            double gi = g[i];
            double mi = m[i] * beta1 + (1.0 - beta1) * gi;
            double vi = v[i] * beta2 + (1.0 - beta2) * (gi * gi);
            m[i] = mi;
            v[i] = vi;
            p[i] = p[i] - lr * (mi / c1) / (sqrt(vi / c2) + eps);
        }
    }
    """
    void sfd_adamw(double *p, const double *g, double *m, double *v, Py_ssize_t n, double lr, double beta1,
                   double beta2, double eps, double decay, int use_decay, double c1, double c2) nogil


def adamw_update(p_in, g_in, m_in, v_in, double lr, double beta1, double beta2, double eps,
                 double weight_decay, double c1, double c2):
    cdef double[::1] p = p_in.reshape(-1)
    cdef double[::1] g = np.ascontiguousarray(g_in, dtype=np.float64).reshape(-1)
    cdef double[::1] m = m_in.reshape(-1)
    cdef double[::1] v = v_in.reshape(-1)
    cdef Py_ssize_t n = p.shape[0]
    if n == 0:
        return
    with nogil:
        sfd_adamw(&p[0], &g[0], &m[0], &v[0], n, lr, beta1, beta2, eps, 1.0 - lr * weight_decay,
                  weight_decay != 0.0, c1, c2)
