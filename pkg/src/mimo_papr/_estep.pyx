# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused per-coefficient E-step update (compiled backend).

Single pass over the coefficients: truncated-Gaussian posterior and moments,
Gamma precision updates, then the Bernoulli responsibility. Mirrors the
branches of _estep_py exactly.
"""
from libc.math cimport erf, erfc, exp, log, sqrt

cdef double SQRT2 = sqrt(2.0)
cdef double INV_SQRT2 = 1.0 / sqrt(2.0)
cdef double INV_SQRT_2PI = 0.3989422804014326779399460599343818684759
cdef double PHI_UNDERFLOW = 1e-300
cdef double LN_ETA_FLOOR = -700.0
cdef double TILT_WIDTH = 1e-4


cdef inline double _phi_std(double t) nogil:
    return 0.5 * erfc(-t * INV_SQRT2)


cdef inline double _npdf_std(double t) nogil:
    return INV_SQRT_2PI * exp(-0.5 * t * t)


cdef inline double _digamma(double x) nogil:
    # Recurrence to x >= 6, then the asymptotic series.
    cdef double r = 0.0
    cdef double f
    while x < 6.0:
        r -= 1.0 / x
        x += 1.0
    f = 1.0 / (x * x)
    return r + log(x) - 0.5 / x - f * (
        1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (
            1.0 / 240.0 - f * (1.0 / 132.0 - f * 691.0 / 32760.0)))))


cdef inline double _ln_eta(double v, double ealpha) nogil:
    cdef double val = 0.5 * erf(SQRT2 * v * sqrt(ealpha))
    if val <= 0.0:
        return LN_ETA_FLOOR
    val = log(val)
    if val < LN_ETA_FLOOR:
        return LN_ETA_FLOOR
    return val


cdef inline void _trunc_moments(double mu, double sigma2, double v,
                                double *ex_out, double *ex2_out, double *phi_out) nogil:
    cdef double sig = sqrt(sigma2)
    cdef double sgn = 1.0 if mu >= 0.0 else -1.0
    cdef double m = mu if mu >= 0.0 else -mu
    cdef double beta, alpha, phi, pa, pb, ex, ex2, lam, z, mid

    if 2.0 * v < TILT_WIDTH * sig:
        # Narrow interval: exponential-tilt series.
        lam = m / sigma2
        z = lam * v
        mid = _npdf_std(m / sig)
        phi = 2.0 * v / sig * mid * (1.0 + z * z / 6.0)
        ex = v * (z / 3.0 - z * z * z / 45.0)
        ex2 = v * v * (1.0 / 3.0 + 2.0 * z * z / 45.0)
    else:
        beta = (v - m) / sig
        alpha = (-v - m) / sig
        phi = _phi_std(beta) - _phi_std(alpha)
        pa = _npdf_std(alpha)
        pb = _npdf_std(beta)
        if phi < PHI_UNDERFLOW:
            ex = v
            ex2 = v * v
        else:
            ex = m + sig * (pa - pb) / phi
            ex2 = m * ex + sigma2 - sig * v * (pa + pb) / phi

    if phi < PHI_UNDERFLOW:
        ex = v
        ex2 = v * v
        phi = PHI_UNDERFLOW
    if phi > 1.0:
        phi = 1.0
    if ex > v:
        ex = v
    elif ex < -v:
        ex = -v
    if ex2 < ex * ex:
        ex2 = ex * ex
    if ex2 > v * v:
        ex2 = v * v

    ex_out[0] = sgn * ex
    ex2_out[0] = ex2
    phi_out[0] = phi


def estep_update(double[::1] r_hat, double[::1] tau_r,
                 double v, double a, double b, double pi,
                 double[::1] mu, double[::1] sigma2, double[::1] phi,
                 double[::1] ex, double[::1] ex2,
                 double[::1] a1, double[::1] b1, double[::1] a2, double[::1] b2,
                 double[::1] ealpha1, double[::1] ealpha2,
                 double[::1] elnalpha1, double[::1] elnalpha2,
                 double[::1] ekappa):
    cdef Py_ssize_t n = r_hat.shape[0]
    cdef Py_ssize_t i
    cdef double logit_pi = log(pi / (1.0 - pi))
    cdef double ek, ea1, ea2, prec, sig2, m
    cdef double exi, ex2i, phii, exv_m, exv_p
    cdef double na1, nb1, na2, nb2, nea1, nea2, nel1, nel2, c, e

    with nogil:
        for i in range(n):
            ek = ekappa[i]
            ea1 = ealpha1[i]
            ea2 = ealpha2[i]

            prec = ek * ea1 + (1.0 - ek) * ea2 + 1.0 / tau_r[i]
            sig2 = 1.0 / prec
            m = ((ek * (ea1 + ea2) - ea2) * v + r_hat[i] / tau_r[i]) * sig2
            _trunc_moments(m, sig2, v, &exi, &ex2i, &phii)

            exv_m = ex2i - 2.0 * v * exi + v * v
            exv_p = ex2i + 2.0 * v * exi + v * v

            na1 = a + 0.5 * ek
            nb1 = b + 0.5 * ek * exv_m
            na2 = a + 0.5 * (1.0 - ek)
            nb2 = b + 0.5 * (1.0 - ek) * exv_p
            nea1 = na1 / nb1
            nea2 = na2 / nb2
            nel1 = _digamma(na1) - log(nb1)
            nel2 = _digamma(na2) - log(nb2)

            c = 0.5 * (nel1 - nel2 - nea1 * exv_m + nea2 * exv_p)
            c += _ln_eta(v, nea2) - _ln_eta(v, nea1)
            c += logit_pi

            mu[i] = m
            sigma2[i] = sig2
            phi[i] = phii
            ex[i] = exi
            ex2[i] = ex2i
            a1[i] = na1
            b1[i] = nb1
            a2[i] = na2
            b2[i] = nb2
            ealpha1[i] = nea1
            ealpha2[i] = nea2
            elnalpha1[i] = nel1
            elnalpha2[i] = nel2
            if c >= 0.0:
                ekappa[i] = 1.0 / (1.0 + exp(-c))
            else:
                e = exp(c)
                ekappa[i] = e / (1.0 + e)
