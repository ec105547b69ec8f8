"""Single-pass message-passing likelihood approximation.

Given input posterior moments (x_hat, tau_x) and noise precision beta, one
pass produces per-coefficient Gaussian likelihood surrogates (r_hat, tau_r)
and posterior moments (u_hat, tau_u) of the noiseless output u = A x. The
Onsager state s_hat persists across outer iterations and must be zero before
the first one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAU_FLOOR = 1e-12


@dataclass
class GampState:
    s_hat: np.ndarray
    p_hat: np.ndarray
    tau_p: np.ndarray
    tau_s: np.ndarray
    r_hat: np.ndarray
    tau_r: np.ndarray
    u_hat: np.ndarray
    tau_u: np.ndarray
    n_clamped_p: int = 0
    n_clamped_r: int = 0

    @classmethod
    def initial(cls, J: int, I: int) -> "GampState":
        z_j = np.zeros(J)
        z_i = np.zeros(I)
        return cls(s_hat=z_j, p_hat=z_j.copy(), tau_p=np.ones(J), tau_s=np.ones(J),
                   r_hat=z_i, tau_r=np.ones(I), u_hat=z_j.copy(), tau_u=np.ones(J))


def gamp_pass(op, x_hat: np.ndarray, tau_x: np.ndarray, y: np.ndarray,
              beta: float, state: GampState) -> GampState:
    """One likelihood-approximation pass for the Gaussian output channel.

    Step 1: tau_p = (A o A) tau_x;      p_hat = A x_hat - tau_p * s_hat
    Step 2: tau_u = tau_p / (tau_p beta + 1)
            u_hat = tau_u * (y beta + p_hat / tau_p)
            s_hat = (u_hat - p_hat) / tau_p
            tau_s = (1 - tau_u / tau_p) / tau_p
    Step 3: tau_r = 1 / (A o A)^T tau_s; r_hat = x_hat + tau_r * (A^T s_hat)
    """
    if not np.isfinite(beta) or beta <= 0:
        raise ValueError(f"beta must be positive and finite, got {beta}")
    x_hat = np.asarray(x_hat, dtype=float)
    tau_x = np.asarray(tau_x, dtype=float)
    if np.any(tau_x <= 0):
        raise ValueError("tau_x must be positive elementwise")

    tau_p = op.apply_squared(tau_x, "forward")
    if np.any(tau_p < 0):
        raise ValueError("negative tau_p: corrupted operator or variances")
    n_clamped_p = int(np.count_nonzero(tau_p < TAU_FLOOR))
    tau_p = np.maximum(tau_p, TAU_FLOOR)
    p_hat = op.apply(x_hat) - tau_p * state.s_hat

    tau_u = tau_p / (tau_p * beta + 1.0)
    u_hat = tau_u * (y * beta + p_hat / tau_p)
    s_hat = (u_hat - p_hat) / tau_p
    tau_s = (1.0 - tau_u / tau_p) / tau_p
    if np.any(tau_s <= 0):
        raise ValueError("nonpositive tau_s: corrupted operator or variances")

    denom = op.apply_squared(tau_s, "adjoint")
    if np.any(denom < 0):
        raise ValueError("negative adjoint variance sum")
    with np.errstate(divide="ignore"):
        tau_r = 1.0 / denom
    n_clamped_r = int(np.count_nonzero(tau_r < TAU_FLOOR))
    tau_r = np.clip(tau_r, TAU_FLOOR, 1.0 / TAU_FLOOR)
    r_hat = x_hat + tau_r * op.apply_adjoint(s_hat)

    return GampState(s_hat=s_hat, p_hat=p_hat, tau_p=tau_p, tau_s=tau_s,
                     r_hat=r_hat, tau_r=tau_r, u_hat=u_hat, tau_u=tau_u,
                     n_clamped_p=n_clamped_p, n_clamped_r=n_clamped_r)
