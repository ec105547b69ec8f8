"""Link metrics: peak-to-average power ratio, residual multi-user
interference, out-of-band ratio, empirical exceedance curves, and simulated
symbol error rates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import QAM16_LEVELS, SystemConfig, qam16_scale

DB_FLOOR = -300.0
# Relative residual energies below this are treated as exact cancelation, so
# machine-precision leftovers of exact schemes report the dB floor.
EXACT_ZERO_RATIO = 1e-24


def ratio_to_db(ratio: float) -> float:
    """10 log10 with the -300 dB floor for (near-)zero ratios."""
    if ratio <= 0.0:
        return DB_FLOOR
    return max(10.0 * np.log10(ratio), DB_FLOOR)


def _oversample(ahat: np.ndarray, L: int) -> np.ndarray:
    """Interpolate by an L-times longer IDFT of the zero-padded spectrum."""
    n = ahat.shape[-1]
    spec = np.fft.fft(ahat, axis=-1)
    pad = np.zeros(ahat.shape[:-1] + ((L - 1) * n,), dtype=complex)
    return np.fft.ifft(np.concatenate([spec, pad], axis=-1), axis=-1) * L


def papr(ahat_m: np.ndarray, L: int = 1) -> float:
    """Peak-to-average power ratio of one antenna's time signal, in dB.

    Uses the split-peak norm max(||Re||_inf, ||Im||_inf)^2 scaled by twice the
    (oversampled) length over the squared l2 norm. L > 1 evaluates the ratio
    on the L-times oversampled signal.
    """
    ahat_m = np.asarray(ahat_m, dtype=complex).ravel()
    if not np.any(ahat_m):
        raise ValueError("PAPR of the zero signal is undefined")
    if L < 1:
        raise ValueError("L must be >= 1")
    sig = _oversample(ahat_m, L) if L > 1 else ahat_m
    n = sig.size
    peak = max(np.abs(sig.real).max(), np.abs(sig.imag).max())
    energy = float(np.sum(sig.real ** 2 + sig.imag ** 2))
    return 10.0 * np.log10(2.0 * n * peak * peak / energy)


def papr_frame(ahat: np.ndarray, L: int = 1) -> np.ndarray:
    """Per-antenna PAPR (dB) of an antenna-major (M, N) time frame."""
    return np.array([papr(row, L) for row in np.atleast_2d(ahat)])


def mui_ratio(symbols: np.ndarray, w: np.ndarray, channel: np.ndarray,
              config: SystemConfig) -> float:
    """Residual interference energy over signal energy (linear, data tones)."""
    tones = np.asarray(config.data_tones)
    S = np.asarray(symbols)[tones]
    H = np.asarray(channel)[tones]
    W = np.asarray(w)[tones]
    den = float(np.sum(np.abs(S) ** 2))
    if den == 0.0:
        raise ValueError("zero symbol energy")
    resid = S - np.matmul(H, W[:, :, None])[:, :, 0]
    num = float(np.sum(np.abs(resid) ** 2))
    ratio = num / den
    return 0.0 if ratio < EXACT_ZERO_RATIO else ratio


def mui(symbols: np.ndarray, w: np.ndarray, channel: np.ndarray,
        config: SystemConfig) -> float:
    """Multi-user interference in dB (floored at -300 dB)."""
    return ratio_to_db(mui_ratio(symbols, w, channel, config))


def obr_ratio(w: np.ndarray, config: SystemConfig) -> float:
    """Guard-band to in-band average per-tone power ratio (linear)."""
    guard = np.asarray(config.guard_tones)
    data = np.asarray(config.data_tones)
    if guard.size == 0:
        raise ValueError("OBR requires a nonempty guard set")
    W = np.asarray(w)
    p_in = float(np.sum(np.abs(W[data]) ** 2))
    if p_in == 0.0:
        raise ValueError("zero in-band power")
    p_out = float(np.sum(np.abs(W[guard]) ** 2))
    ratio = (len(data) * p_out) / (len(guard) * p_in)
    return 0.0 if ratio < EXACT_ZERO_RATIO else ratio


def obr(w: np.ndarray, config: SystemConfig) -> float:
    """Out-of-band power ratio in dB (floored at -300 dB)."""
    return ratio_to_db(obr_ratio(w, config))


def ccdf(samples_db, thresholds_db) -> np.ndarray:
    """Empirical exceedance probability P(sample > threshold) per threshold."""
    samples = np.asarray(samples_db, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("need at least one sample")
    thresholds = np.asarray(thresholds_db, dtype=float).ravel()
    return (samples[None, :] > thresholds[:, None]).mean(axis=1)


def detect_qam16(z: np.ndarray, K: int) -> np.ndarray:
    """Nearest-point detection; returns integer indices 0..15."""
    c = qam16_scale(K)
    re = np.digitize(np.asarray(z).real, c * np.array([-2.0, 0.0, 2.0]))
    im = np.digitize(np.asarray(z).imag, c * np.array([-2.0, 0.0, 2.0]))
    return re + 4 * im


def symbol_indices(symbols: np.ndarray, K: int) -> np.ndarray:
    """Indices of constellation points for an exact symbol frame."""
    return detect_qam16(symbols, K)


def ser_simulate(x_hat: np.ndarray, symbols: np.ndarray, channel: np.ndarray,
                 config: SystemConfig, snr_db: float, rng: np.random.Generator,
                 n_draws: int = 100) -> float:
    """Monte-Carlo symbol error rate at a given SNR.

    The SNR convention is ||x_hat||^2 / (M N_o), with x_hat the solver's real
    stacked solution, so higher-energy solutions pay a noise penalty. Each
    draw adds per-entry complex Gaussian noise of variance N_o to the
    channel-filtered data tones and detects per user by the nearest
    constellation point.
    """
    from .model import precoded_from_stack

    x_hat = np.asarray(x_hat, dtype=float)
    tones = np.asarray(config.data_tones)
    w = precoded_from_stack(x_hat, config.M, config.N)
    received_mean = np.matmul(np.asarray(channel)[tones], w[tones][:, :, None])[:, :, 0]
    tx_idx = symbol_indices(np.asarray(symbols)[tones], config.K)
    energy = float(x_hat @ x_hat)
    n_o = energy / (config.M * 10.0 ** (snr_db / 10.0))
    scale = np.sqrt(n_o / 2.0)
    errors = 0
    total = tx_idx.size * n_draws
    for _ in range(n_draws):
        noise = scale * (rng.standard_normal(received_mean.shape)
                         + 1j * rng.standard_normal(received_mean.shape))
        rx_idx = detect_qam16(received_mean + noise, config.K)
        errors += int(np.count_nonzero(rx_idx != tx_idx))
    return errors / total


@dataclass
class TrialRecord:
    """Per-trial, per-solver metric bundle."""

    solver: str
    trial: int
    papr_db: np.ndarray            # per-antenna samples
    mui_lin: float
    obr_lin: float
    iterations: int
    wall_time_s: float
    boundary_frac: float | None = None
    ser: dict = field(default_factory=dict)   # snr_db -> error rate
    trace: dict | None = None                 # iteration traces when enabled

    @property
    def mui_db(self) -> float:
        return ratio_to_db(self.mui_lin)

    @property
    def obr_db(self) -> float:
        return ratio_to_db(self.obr_lin)

    @property
    def papr_db_mean(self) -> float:
        return float(np.mean(self.papr_db))
