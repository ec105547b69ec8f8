"""Vectorized E-step updates (pure-numpy backend).

The compiled extension in _estep.pyx fuses the same per-coefficient updates
into a single C loop; this module is the import-time fallback and the
reference the extension is tested against.
"""
from __future__ import annotations

import numpy as np
from scipy import special as sp

SQRT2 = np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
PHI_UNDERFLOW = 1e-300
LN_ETA_FLOOR = -700.0
# Below this boundary-to-sigma width the two cdf evaluations cancel; switch to
# the exponential-tilt expansion of the narrow-interval moments.
TILT_WIDTH = 1e-4


def _phi_std(t):
    return 0.5 * sp.erfc(-t / SQRT2)


def _npdf_std(t):
    return INV_SQRT_2PI * np.exp(-0.5 * t * t)


def truncated_moments(mu, sigma2, v):
    """Mean, second moment, and mass of N(mu, sigma2) truncated to [-v, v].

    Moments follow the integration-by-parts identities

        E[x]   = mu + sigma * (pdf(alpha) - pdf(beta)) / Z
        E[x^2] = mu E[x] + sigma^2 - sigma * v * (pdf(beta) + pdf(alpha)) / Z

    with alpha = (-v - mu)/sigma, beta = (v - mu)/sigma and Z the interval
    mass. Very narrow intervals (2v << sigma) use an exponential-tilt series;
    an interval mass below 1e-300 collapses to the boundary nearest mu.
    """
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if v <= 0:
        raise ValueError("v must be positive")
    sig = np.sqrt(sigma2)
    sgn = np.where(mu >= 0, 1.0, -1.0)
    m = np.abs(mu)

    beta = (v - m) / sig
    alpha = (-v - m) / sig

    phi = _phi_std(beta) - _phi_std(alpha)
    pa = _npdf_std(alpha)
    pb = _npdf_std(beta)
    phi_safe = np.maximum(phi, PHI_UNDERFLOW)
    ex = m + sig * (pa - pb) / phi_safe
    ex2 = m * ex + sigma2 - sig * v * (pa + pb) / phi_safe

    # Narrow-interval branch: density ~ exp(lam * x) over [-v, v].
    narrow = (2.0 * v) < (TILT_WIDTH * sig)
    if np.any(narrow):
        lam = m / sigma2
        z = lam * v
        mid = _npdf_std(m / sig)
        phi_t = 2.0 * v / sig * mid * (1.0 + z * z / 6.0)
        ex_t = v * (z / 3.0 - z ** 3 / 45.0)
        ex2_t = v * v * (1.0 / 3.0 + 2.0 * z * z / 45.0)
        phi = np.where(narrow, phi_t, phi)
        ex = np.where(narrow, ex_t, ex)
        ex2 = np.where(narrow, ex2_t, ex2)

    # Deep-truncation collapse: all mass at the boundary nearest mu.
    under = phi < PHI_UNDERFLOW
    if np.any(under):
        ex = np.where(under, v, ex)
        ex2 = np.where(under, v * v, ex2)
        phi = np.where(under, PHI_UNDERFLOW, phi)

    ex = np.clip(ex, -v, v)
    ex2 = np.minimum(np.maximum(ex2, ex * ex), v * v)
    return sgn * ex, ex2, np.minimum(phi, 1.0)


def update_qx_arrays(r_hat, tau_r, v, ekappa, ealpha1, ealpha2):
    """Truncated-Gaussian coefficient posterior from the likelihood surrogate.

    Returns (mu, sigma2, phi, ex, ex2).
    """
    prec = ekappa * ealpha1 + (1.0 - ekappa) * ealpha2 + 1.0 / tau_r
    sigma2 = 1.0 / prec
    mu = ((ekappa * (ealpha1 + ealpha2) - ealpha2) * v + r_hat / tau_r) * sigma2
    ex, ex2, phi = truncated_moments(mu, sigma2, v)
    return mu, sigma2, phi, ex, ex2


def update_qalpha_arrays(ex, ex2, v, ekappa, a, b):
    """Gamma precision posteriors for both mixture components.

    Returns (a1, b1, a2, b2, ealpha1, ealpha2, elnalpha1, elnalpha2).
    """
    exv_m = ex2 - 2.0 * v * ex + v * v   # <(x - v)^2>
    exv_p = ex2 + 2.0 * v * ex + v * v   # <(x + v)^2>
    a1 = a + 0.5 * ekappa
    b1 = b + 0.5 * ekappa * exv_m
    a2 = a + 0.5 * (1.0 - ekappa)
    b2 = b + 0.5 * (1.0 - ekappa) * exv_p
    ealpha1 = a1 / b1
    ealpha2 = a2 / b2
    elnalpha1 = sp.digamma(a1) - np.log(b1)
    elnalpha2 = sp.digamma(a2) - np.log(b2)
    return a1, b1, a2, b2, ealpha1, ealpha2, elnalpha1, elnalpha2


def _ln_eta(v, ealpha):
    # eta = 1/2 - Phi(-2 v sqrt(alpha)) = Phi(2 v sqrt(alpha)) - 1/2
    #     = erf(sqrt(2) v sqrt(alpha)) / 2
    with np.errstate(divide="ignore"):
        val = np.log(0.5 * sp.erf(SQRT2 * v * np.sqrt(ealpha)))
    return np.maximum(val, LN_ETA_FLOOR)


def update_qkappa_arrays(ex, ex2, v, ealpha1, ealpha2, elnalpha1, elnalpha2, pi):
    """Bernoulli responsibility of the +v component.

    The quadratic terms carry the posterior precision means, and the
    normalization constants are evaluated at those means.
    """
    exv_m = ex2 - 2.0 * v * ex + v * v
    exv_p = ex2 + 2.0 * v * ex + v * v
    c = 0.5 * (elnalpha1 - elnalpha2 - ealpha1 * exv_m + ealpha2 * exv_p)
    c += _ln_eta(v, ealpha2) - _ln_eta(v, ealpha1)
    c += np.log(pi / (1.0 - pi))
    out = np.empty_like(c)
    pos = c >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-c[pos]))
    e = np.exp(c[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def estep_update(r_hat, tau_r, v, a, b, pi,
                 mu, sigma2, phi, ex, ex2,
                 a1, b1, a2, b2, ealpha1, ealpha2, elnalpha1, elnalpha2,
                 ekappa):
    """Fused in-place E-step: q(x), then q(alpha_1), q(alpha_2), then q(kappa)."""
    mu_n, sig2_n, phi_n, ex_n, ex2_n = update_qx_arrays(
        r_hat, tau_r, v, ekappa, ealpha1, ealpha2)
    mu[:] = mu_n
    sigma2[:] = sig2_n
    phi[:] = phi_n
    ex[:] = ex_n
    ex2[:] = ex2_n
    a1_n, b1_n, a2_n, b2_n, ea1_n, ea2_n, el1_n, el2_n = update_qalpha_arrays(
        ex, ex2, v, ekappa, a, b)
    a1[:] = a1_n
    b1[:] = b1_n
    a2[:] = a2_n
    b2[:] = b2_n
    ealpha1[:] = ea1_n
    ealpha2[:] = ea2_n
    elnalpha1[:] = el1_n
    elnalpha2[:] = el2_n
    ekappa[:] = update_qkappa_arrays(ex, ex2, v, ealpha1, ealpha2,
                                     elnalpha1, elnalpha2, pi)
