# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Signatures mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, erfc
from scipy.special.cython_special cimport erfcx

cnp.import_array()

cdef double SQRT2 = sqrt(2.0)
cdef double SQRT_2_OVER_PI = sqrt(2.0 / 3.141592653589793)
cdef double LOG_SQRT_2PI = 0.5 * log(2.0 * 3.141592653589793)


cdef inline double _sqdist(const double[:, ::1] A, Py_ssize_t i,
                           const double[:, ::1] B, Py_ssize_t j,
                           Py_ssize_t d) nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0, t
    for k in range(d):
        t = A[i, k] - B[j, k]
        acc += t * t
    return acc


def eq_cross(const double[:, ::1] A, const double[:, ::1] B,
             double theta, double gamma):
    cdef Py_ssize_t m = A.shape[0], n = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j
    out = np.empty((m, n))
    cdef double[:, ::1] K = out
    with nogil:
        for i in range(m):
            for j in range(n):
                K[i, j] = theta * exp(-gamma * _sqdist(A, i, B, j, d))
    return out


def gp_predict(const double[:, ::1] Xq, const double[:, ::1] X,
               const double[::1] alpha, const double[:, ::1] chol,
               double theta, double gamma, bint with_grad):
    cdef Py_ssize_t m = Xq.shape[0], n = X.shape[0], d = Xq.shape[1]
    cdef Py_ssize_t q, i, l, a
    mu_arr = np.empty(m)
    var_arr = np.empty(m)
    dmu_arr = np.zeros((m, d))
    dvar_arr = np.zeros((m, d))
    cdef double[::1] mu = mu_arr
    cdef double[::1] var = var_arr
    cdef double[:, ::1] dmu = dmu_arr
    cdef double[:, ::1] dvar = dvar_arr
    cdef double[::1] k = np.empty(n)
    cdef double[::1] v = np.empty(n)
    cdef double acc, coef
    with nogil:
        for q in range(m):
            acc = 0.0
            for l in range(n):
                k[l] = theta * exp(-gamma * _sqdist(Xq, q, X, l, d))
                acc += k[l] * alpha[l]
            mu[q] = acc
            # forward substitution: chol v = k
            for i in range(n):
                acc = k[i]
                for l in range(i):
                    acc -= chol[i, l] * v[l]
                v[i] = acc / chol[i, i]
            acc = 0.0
            for i in range(n):
                acc += v[i] * v[i]
            var[q] = theta - acc
            if with_grad:
                # back substitution: chol^T w = v, stored in place
                for i in range(n - 1, -1, -1):
                    acc = v[i]
                    for l in range(i + 1, n):
                        acc -= chol[l, i] * v[l]
                    v[i] = acc / chol[i, i]
                for l in range(n):
                    coef = -2.0 * gamma * k[l]
                    for a in range(d):
                        dmu[q, a] += coef * (Xq[q, a] - X[l, a]) * alpha[l]
                        dvar[q, a] -= 2.0 * coef * (Xq[q, a] - X[l, a]) * v[l]
    return mu_arr, var_arr, dmu_arr, dvar_arr


def mean_grad_hess(const double[:, ::1] Xq, const double[:, ::1] X,
                   const double[::1] alpha, double theta, double gamma):
    cdef Py_ssize_t m = Xq.shape[0], n = X.shape[0], d = Xq.shape[1]
    cdef Py_ssize_t q, l, a, b
    grad_arr = np.zeros((m, d))
    hess_arr = np.zeros((m, d, d))
    cdef double[:, ::1] grad = grad_arr
    cdef double[:, :, ::1] hess = hess_arr
    cdef double ka, g2 = 4.0 * gamma * gamma
    with nogil:
        for q in range(m):
            for l in range(n):
                ka = theta * exp(-gamma * _sqdist(Xq, q, X, l, d)) * alpha[l]
                for a in range(d):
                    grad[q, a] -= 2.0 * gamma * (Xq[q, a] - X[l, a]) * ka
                    for b in range(d):
                        hess[q, a, b] += g2 * (Xq[q, a] - X[l, a]) * (Xq[q, b] - X[l, b]) * ka
                    hess[q, a, a] -= 2.0 * gamma * ka
    return grad_arr, hess_arr


cdef inline void _log_ndtr_ratio(double s, double* logcdf, double* ratio) nogil:
    cdef double ex, tail
    if s < 0.0:
        ex = erfcx(-s / SQRT2)
        logcdf[0] = log(0.5 * ex) - 0.5 * s * s
        ratio[0] = SQRT_2_OVER_PI / ex
    else:
        tail = 0.5 * erfc(s / SQRT2)
        logcdf[0] = log1p(-tail)
        ratio[0] = exp(-0.5 * s * s - LOG_SQRT_2PI) / (1.0 - tail)


def log_penalizers(const double[:, ::1] Xq, const double[:, ::1] centers,
                   const double[::1] mu_c, const double[::1] sigma_c,
                   const double[::1] lips, double M):
    cdef Py_ssize_t m = Xq.shape[0], nc = centers.shape[0], d = Xq.shape[1]
    cdef Py_ssize_t q, j, a
    total_arr = np.zeros(m)
    grad_arr = np.zeros((m, d))
    cdef double[::1] total = total_arr
    cdef double[:, ::1] grad = grad_arr
    cdef double r, s, logcdf, ratio, scale
    with nogil:
        for q in range(m):
            for j in range(nc):
                r = sqrt(_sqdist(Xq, q, centers, j, d))
                s = (lips[j] * r - M + mu_c[j]) / sigma_c[j]
                _log_ndtr_ratio(s, &logcdf, &ratio)
                total[q] += logcdf
                if r > 0.0:
                    scale = ratio * lips[j] / (sigma_c[j] * r)
                    for a in range(d):
                        grad[q, a] += scale * (Xq[q, a] - centers[j, a])
    return total_arr, grad_arr
