"""Comparison schemes: zero-forcing, ZF plus clipping, and the accelerated
proximal-gradient solver for the max-magnitude regularized least-squares
problem  min  lam * ||x||_inf + ||y - A x||_2^2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemConfig


@dataclass
class FitraConfig:
    lam: float = 0.25
    max_iters: int = 2000
    power_iters: int = 50
    lipschitz_safety: float = 1.01
    restart_every: int = 0          # 0 disables restarts
    track_objective: bool = False

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.power_iters < 1:
            raise ValueError("power_iters must be >= 1")


def zf_precode(channel: np.ndarray, symbols: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Least-norm per-tone precoding H_n^H (H_n H_n^H)^{-1} s_n.

    Guard tones are set to exactly zero. Returns a tone-major (N, M) frame.
    """
    channel = np.asarray(channel)
    symbols = np.asarray(symbols)
    if channel.shape != (config.N, config.K, config.M):
        raise ValueError("channel shape mismatch")
    if symbols.shape != (config.N, config.K):
        raise ValueError("symbol frame shape mismatch")
    w = np.zeros((config.N, config.M), dtype=complex)
    tones = np.asarray(config.data_tones)
    H = channel[tones]
    G = np.matmul(H, H.conj().transpose(0, 2, 1))
    try:
        lam = np.linalg.solve(G, symbols[tones][:, :, None])
    except np.linalg.LinAlgError:
        for i, n in enumerate(tones):
            try:
                np.linalg.solve(G[i], symbols[n])
            except np.linalg.LinAlgError:
                raise np.linalg.LinAlgError(f"singular Gram matrix on tone {n}") from None
        raise
    w[tones] = np.matmul(H.conj().transpose(0, 2, 1), lam)[:, :, 0]
    return w


def clip(frame: np.ndarray, ratio: float) -> np.ndarray:
    """Hard-limit real and imaginary parts per antenna at ratio * RMS.

    The RMS is computed per antenna and per dimension from the samples before
    clipping.
    """
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    frame = np.asarray(frame, dtype=complex)
    if np.isinf(ratio):
        return frame.copy()
    re, im = frame.real, frame.imag
    thr_re = ratio * np.sqrt(np.mean(re ** 2, axis=-1, keepdims=True))
    thr_im = ratio * np.sqrt(np.mean(im ** 2, axis=-1, keepdims=True))
    return np.clip(re, -thr_re, thr_re) + 1j * np.clip(im, -thr_im, thr_im)


def project_l1_ball(z: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {u : ||u||_1 <= radius} by sort-and-threshold."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    z = np.asarray(z, dtype=float)
    mag = np.abs(z)
    if mag.sum() <= radius:
        return z.copy()
    u = np.sort(mag)[::-1]
    cum = np.cumsum(u)
    j = np.arange(1, z.size + 1)
    rho = np.nonzero(u - (cum - radius) / j > 0)[0][-1]
    theta = (cum[rho] - radius) / (rho + 1.0)
    return np.sign(z) * np.maximum(mag - theta, 0.0)


def prox_inf_norm(z: np.ndarray, tau: float) -> np.ndarray:
    """prox of tau * ||.||_inf via Moreau: z minus the l1-ball projection."""
    if tau <= 0:
        return np.asarray(z, dtype=float).copy()
    return z - project_l1_ball(z, tau)


def estimate_lipschitz(op, power_iters: int, rng: np.random.Generator) -> float:
    """2 * largest squared singular value of the operator, by power iteration."""
    b = rng.standard_normal(op.shape[1])
    b /= np.linalg.norm(b)
    smax_sq = 0.0
    for _ in range(power_iters):
        b = op.apply_adjoint(op.apply(b))
        nb = np.linalg.norm(b)
        if nb == 0 or not np.isfinite(nb):
            raise RuntimeError("power iteration failed to converge")
        smax_sq = nb
        b /= nb
    return 2.0 * smax_sq


def fitra(y: np.ndarray, op, cfg: FitraConfig | None = None,
          rng: np.random.Generator | None = None, x0: np.ndarray | None = None,
          callback=None):
    """Accelerated proximal-gradient minimization of lam*||x||_inf + ||y-Ax||^2.

    Gradient step 2 A^T (A x - y) with step size 1/L, L estimated by power
    iteration with a small safety factor; standard momentum; the inf-norm prox
    evaluated through the l1-ball projection. Returns (x, info) where info
    carries the step size, best objective seen, and the optional objective
    trace.
    """
    cfg = cfg or FitraConfig()
    rng = rng or np.random.default_rng(0)
    y = np.asarray(y, dtype=float)
    I = op.shape[1]
    L = estimate_lipschitz(op, cfg.power_iters, rng) * cfg.lipschitz_safety
    x = np.zeros(I) if x0 is None else np.asarray(x0, dtype=float).copy()
    z = x.copy()
    tk = 1.0
    best_obj = np.inf
    trace = []
    for k in range(cfg.max_iters):
        grad = 2.0 * op.apply_adjoint(op.apply(z) - y)
        xn = prox_inf_norm(z - grad / L, cfg.lam / L)
        if not np.all(np.isfinite(xn)):
            raise FloatingPointError(f"non-finite iterate at iteration {k}")
        tk1 = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        z = xn + ((tk - 1.0) / tk1) * (xn - x)
        x, tk = xn, tk1
        if cfg.restart_every and (k + 1) % cfg.restart_every == 0:
            z = x.copy()
            tk = 1.0
        if cfg.track_objective:
            r = y - op.apply(x)
            obj = cfg.lam * np.abs(x).max() + float(r @ r)
            trace.append(obj)
            best_obj = min(best_obj, obj)
        if callback is not None:
            callback(k, x)
    info = {"step_size": 1.0 / L, "best_objective": best_obj,
            "objective_trace": np.asarray(trace)}
    return x, info
