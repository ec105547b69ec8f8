"""Special functions used by the variational updates."""
from __future__ import annotations

import numpy as np
from scipy import special as sp

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def normal_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def normal_cdf(x):
    """Standard normal cdf, evaluated through erfc for tail accuracy."""
    x = np.asarray(x, dtype=float)
    return 0.5 * sp.erfc(-x / _SQRT2)


def log_gamma(a):
    """log Gamma(a) for a > 0."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("log_gamma requires positive arguments")
    return sp.gammaln(a)


def digamma(a):
    """Digamma psi(a) = d/da log Gamma(a) for a > 0."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("digamma requires positive arguments")
    return sp.digamma(a)
