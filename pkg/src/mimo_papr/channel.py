"""Tap-delay-line MIMO channel and its per-tone frequency response."""
from __future__ import annotations

import json

import numpy as np


def draw_taps(K: int, M: int, D: int, rng: np.random.Generator) -> np.ndarray:
    """Draw D complex K x M tap matrices with i.i.d. CN(0, 1) entries.

    Real and imaginary parts are i.i.d. N(0, 1/2) so each entry has unit
    variance. Returns an array of shape (D, K, M).
    """
    if K < 1 or M < 1 or D < 1:
        raise ValueError("K, M, D must be positive")
    re = rng.standard_normal((D, K, M))
    im = rng.standard_normal((D, K, M))
    return np.sqrt(0.5) * (re + 1j * im)


def freq_response(taps: np.ndarray, N: int) -> np.ndarray:
    """Per-tone response H_n = sum_{d=1..D} taps_d * exp(-2j pi d n / N).

    No tap normalization is applied; the per-tone entry variance is D.
    Returns an array of shape (N, K, M).
    """
    taps = np.asarray(taps)
    D = taps.shape[0]
    if D > N:
        raise ValueError("require D <= N")
    d = np.arange(1, D + 1)
    n = np.arange(N)
    phase = np.exp(-2j * np.pi * np.outer(n, d) / N)  # (N, D)
    return np.tensordot(phase, taps, axes=(1, 0))


def save_taps_npz(path, taps: np.ndarray) -> None:
    np.savez_compressed(path, taps=np.asarray(taps))


def load_taps_npz(path) -> np.ndarray:
    with np.load(path) as data:
        return np.asarray(data["taps"])


def save_taps_json(path, taps: np.ndarray) -> None:
    taps = np.asarray(taps)
    payload = {
        "shape": list(taps.shape),
        "re": taps.real.ravel().tolist(),
        "im": taps.imag.ravel().tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_taps_json(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    shape = tuple(payload["shape"])
    re = np.asarray(payload["re"], dtype=float).reshape(shape)
    im = np.asarray(payload["im"], dtype=float).reshape(shape)
    return re + 1j * im
