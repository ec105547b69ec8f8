"""OFDM frame model: constellation, tone plan, reordering, DFTs, real stacking.

Array conventions used throughout the package:

* symbol frames ``S``: complex ``(N, K)``, row ``n`` is the per-user vector on
  tone ``n`` (exactly zero on guard tones);
* precoded frames ``w``: complex ``(N, M)``, tone-major;
* frequency-domain antenna frames ``a``: complex ``(M, N)``, antenna-major;
* time-domain antenna frames ``ahat``: complex ``(M, N)``, antenna-major;
* real stacks: all real parts first, then all imaginary parts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QAM16_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])

_ALPHABETS = ("16qam",)


def qam16_scale(K: int) -> float:
    """Per-dimension scale making a K-user 16-QAM vector satisfy E||s_n||^2 = 1."""
    return 1.0 / np.sqrt(10.0 * K)


def constellation(alphabet: str, K: int) -> np.ndarray:
    """All constellation points (complex 1-D array) at the K-user scaling."""
    if alphabet not in _ALPHABETS:
        raise ValueError(f"unknown alphabet {alphabet!r}")
    c = qam16_scale(K)
    re, im = np.meshgrid(QAM16_LEVELS, QAM16_LEVELS)
    return (c * (re + 1j * im)).ravel()


def centered_data_tones(N: int, n_data: int) -> tuple:
    """Contiguous centered data block; guards split across both index ends.

    An odd guard count puts the extra tone at the low end.
    """
    if not 0 < n_data <= N:
        raise ValueError("n_data must lie in (0, N]")
    n_guard = N - n_data
    lo = (n_guard + 1) // 2
    return tuple(range(lo, lo + n_data))


@dataclass(frozen=True)
class SystemConfig:
    """Static system dimensions and solver-independent settings."""

    M: int
    K: int
    N: int
    data_tones: tuple
    D: int
    alphabet: str = "16qam"
    oversample_L: int = 1
    seed: int = 0

    def __post_init__(self):
        tones = tuple(sorted(set(int(n) for n in self.data_tones)))
        object.__setattr__(self, "data_tones", tones)
        if self.M < 1 or self.K < 1 or self.N < 1 or self.D < 1:
            raise ValueError("M, K, N, D must be positive")
        if self.K > self.M:
            raise ValueError("require K <= M")
        if self.alphabet not in _ALPHABETS:
            raise ValueError(f"unknown alphabet {self.alphabet!r}")
        if self.oversample_L < 1:
            raise ValueError("oversample_L must be >= 1")
        if not tones:
            raise ValueError("need at least one data tone")
        if tones[0] < 0 or tones[-1] >= self.N:
            raise ValueError("data tones out of range")
        if self.J > self.I:
            raise ValueError("target dimension exceeds signal dimension (J > I)")

    @property
    def guard_tones(self) -> tuple:
        data = set(self.data_tones)
        return tuple(n for n in range(self.N) if n not in data)

    @property
    def n_data(self) -> int:
        return len(self.data_tones)

    @property
    def n_guard(self) -> int:
        return self.N - len(self.data_tones)

    @property
    def J(self) -> int:
        return 2 * (self.n_data * self.K + self.n_guard * self.M)

    @property
    def I(self) -> int:
        return 2 * self.N * self.M

    @classmethod
    def with_centered_tones(cls, M: int, K: int, N: int, n_data: int, D: int, **kw) -> "SystemConfig":
        return cls(M=M, K=K, N=N, data_tones=centered_data_tones(N, n_data), D=D, **kw)


class RealStackLayout:
    """Index maps between (tone, user/antenna) coordinates and flat stacks.

    The target stack concatenates, in tone order, the K-entry symbol vector of
    each data tone and the M-entry zero vector of each guard tone; the signal
    stack is the antenna-major time-domain frame. Real stacks place all real
    parts before all imaginary parts.
    """

    def __init__(self, config: SystemConfig):
        self.config = config
        N, M, K = config.N, config.M, config.K
        self.data_tones = np.asarray(config.data_tones, dtype=np.intp)
        self.guard_tones = np.asarray(config.guard_tones, dtype=np.intp)
        sizes = np.full(N, M, dtype=np.intp)
        sizes[self.data_tones] = K
        self.tone_offset = np.concatenate([[0], np.cumsum(sizes)])
        self.J2 = int(self.tone_offset[-1])
        self.I2 = N * M
        self.J = 2 * self.J2
        self.I = 2 * self.I2
        self.idx_data = np.concatenate(
            [np.arange(self.tone_offset[n], self.tone_offset[n] + K) for n in self.data_tones]
        ) if len(self.data_tones) else np.empty(0, dtype=np.intp)
        self.idx_guard = np.concatenate(
            [np.arange(self.tone_offset[n], self.tone_offset[n] + M) for n in self.guard_tones]
        ) if len(self.guard_tones) else np.empty(0, dtype=np.intp)

    def target_from_symbols(self, S: np.ndarray) -> np.ndarray:
        """Real J-vector stacking the per-tone targets of a symbol frame."""
        cfg = self.config
        if S.shape != (cfg.N, cfg.K):
            raise ValueError(f"symbol frame must be {(cfg.N, cfg.K)}, got {S.shape}")
        sbar = np.zeros(self.J2, dtype=complex)
        sbar[self.idx_data] = S[self.data_tones].ravel()
        return stack_real(sbar)


def generate_symbols(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. uniform constellation symbols on data tones, zeros on guards."""
    if config.alphabet not in _ALPHABETS:
        raise ValueError(f"unknown alphabet {config.alphabet!r}")
    S = np.zeros((config.N, config.K), dtype=complex)
    tones = np.asarray(config.data_tones)
    idx = rng.integers(0, 16, size=(len(tones), config.K))
    c = qam16_scale(config.K)
    S[tones] = c * (QAM16_LEVELS[idx % 4] + 1j * QAM16_LEVELS[idx // 4])
    return S


def reorder(w: np.ndarray) -> np.ndarray:
    """Tone-major precoded frame (N, M) -> antenna-major frequency frame (M, N)."""
    if w.ndim != 2:
        raise ValueError("expected a 2-D (N, M) frame")
    return np.ascontiguousarray(w.T)


def inverse_reorder(a: np.ndarray) -> np.ndarray:
    """Antenna-major frequency frame (M, N) -> tone-major precoded frame (N, M)."""
    if a.ndim != 2:
        raise ValueError("expected a 2-D (M, N) frame")
    return np.ascontiguousarray(a.T)


def idft_frame(a: np.ndarray, N: int | None = None) -> np.ndarray:
    """Per-antenna unitary IDFT of a frequency frame."""
    a = np.asarray(a)
    n = a.shape[-1]
    if N is not None and n != N:
        raise ValueError(f"frame length {n} does not match N={N}")
    return np.fft.ifft(a, axis=-1) * np.sqrt(n)


def dft_frame(ahat: np.ndarray, N: int | None = None) -> np.ndarray:
    """Per-antenna unitary DFT of a time frame (inverse of idft_frame)."""
    ahat = np.asarray(ahat)
    n = ahat.shape[-1]
    if N is not None and n != N:
        raise ValueError(f"frame length {n} does not match N={N}")
    return np.fft.fft(ahat, axis=-1) / np.sqrt(n)


def dft_matrix(N: int) -> np.ndarray:
    """Unitary DFT matrix F with F[n, t] = exp(-2j pi n t / N) / sqrt(N)."""
    n = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(n, n) / N) / np.sqrt(N)


def stack_real(z: np.ndarray) -> np.ndarray:
    """Complex vector -> [Re; Im] real stack."""
    z = np.asarray(z).ravel()
    return np.concatenate([z.real, z.imag])


def unstack_real(x: np.ndarray) -> np.ndarray:
    """[Re; Im] real stack -> complex vector."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size % 2:
        raise ValueError("real stack must have even length")
    h = x.size // 2
    return x[:h] + 1j * x[h:]


def time_frame_to_stack(ahat: np.ndarray) -> np.ndarray:
    """Antenna-major time frame (M, N) -> real I-vector."""
    return stack_real(np.asarray(ahat).ravel())


def stack_to_time_frame(x: np.ndarray, M: int, N: int) -> np.ndarray:
    """Real I-vector -> antenna-major time frame (M, N)."""
    z = unstack_real(x)
    if z.size != M * N:
        raise ValueError(f"stack length {2 * z.size} does not match 2*M*N={2 * M * N}")
    return z.reshape(M, N)


def precoded_from_stack(x: np.ndarray, M: int, N: int) -> np.ndarray:
    """Real I-vector -> tone-major precoded frame (N, M) via per-antenna DFT."""
    return inverse_reorder(dft_frame(stack_to_time_frame(x, M, N)))


def stack_from_precoded(w: np.ndarray) -> np.ndarray:
    """Tone-major precoded frame (N, M) -> real I-vector via per-antenna IDFT."""
    return time_frame_to_stack(idft_frame(reorder(w)))
