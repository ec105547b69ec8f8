"""Real-valued constraint operator mapping time-domain stacks to per-tone targets.

The underlying complex map C sends an antenna-major time frame through
per-antenna unitary DFTs, the tone reordering, and per-tone channel rows
(identity rows on guard tones). The real operator is

    A = [[Re C, -Im C], [Im C, Re C]],

acting on x = [Re ahat; Im ahat] and producing y = [Re sbar; Im sbar].

Two modes are provided: ``dense`` stores the Re/Im blocks of C (and their
entrywise squares) explicitly and is the correctness reference; ``fast``
applies C via FFTs and per-tone products. The entrywise squares split as
|C|^2 (cos^2, sin^2) of the entry phases; with the constant-modulus DFT
factor the cos^2/sin^2 parts reduce to a mean term plus a second-harmonic
DFT term, so fast mode evaluates the squared products exactly in
O(M N log N + |T| K M) as well (see apply_squared).
"""
from __future__ import annotations

import numpy as np

from .model import RealStackLayout, SystemConfig, dft_matrix

# Default gate on J*I for dense mode, in matrix entries.
DEFAULT_DENSE_BUDGET = int(2.5e8)


class ConstraintOperator:
    """Forward/adjoint/squared application of the stacked constraint matrix."""

    def __init__(self, channel: np.ndarray, config: SystemConfig, mode: str = "dense",
                 max_dense_entries: int = DEFAULT_DENSE_BUDGET):
        channel = np.asarray(channel)
        if channel.shape != (config.N, config.K, config.M):
            raise ValueError(
                f"channel shape {channel.shape} does not match config {(config.N, config.K, config.M)}"
            )
        if mode not in ("dense", "fast"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.config = config
        self.channel = channel
        self.layout = RealStackLayout(config)
        self.shape = (self.layout.J, self.layout.I)
        self._H_data = np.ascontiguousarray(channel[self.layout.data_tones])
        self._H_data_H = np.ascontiguousarray(self._H_data.conj().transpose(0, 2, 1))
        self._absH2 = np.abs(self._H_data) ** 2
        self._H2 = self._H_data ** 2
        # second-harmonic bin indices 2n mod N (tones) and 2t mod N (samples)
        self._harm_data = (2 * self.layout.data_tones) % config.N
        self._harm_guard = (2 * self.layout.guard_tones) % config.N
        self._harm_time = (2 * np.arange(config.N)) % config.N
        self._sqrtN = np.sqrt(config.N)
        if mode == "dense":
            if self.layout.J * self.layout.I > max_dense_entries:
                raise ValueError(
                    f"dense mode refused: J*I = {self.layout.J * self.layout.I} exceeds "
                    f"budget {max_dense_entries}"
                )
            self._build_dense()
        self.frob_sq = self._frobenius_sq()
        self.inf_norm = self._induced_inf_norm()

    # -- construction -----------------------------------------------------

    def _build_dense(self):
        cfg, lay = self.config, self.layout
        N, M, K = cfg.N, cfg.M, cfg.K
        F = dft_matrix(N)
        C = np.zeros((lay.J2, lay.I2), dtype=complex)
        for n in range(N):
            o = lay.tone_offset[n]
            if n in set(cfg.data_tones):
                # rows (n, k), columns (m, t): H_n[k, m] * F[n, t]
                block = self.channel[n][:, :, None] * F[n][None, None, :]
                C[o:o + K] = block.reshape(K, M * N)
            else:
                for m in range(M):
                    C[o + m, m * N:(m + 1) * N] = F[n]
        self._ReC = np.ascontiguousarray(C.real)
        self._ImC = np.ascontiguousarray(C.imag)
        self._P = self._ReC ** 2
        self._Q = self._ImC ** 2

    def _frobenius_sq(self) -> float:
        if self.mode == "dense":
            return 2.0 * float(self._P.sum() + self._Q.sum())
        # Unitary DFT and permutation preserve Frobenius norms, so only the
        # per-tone blocks contribute: data tones give ||H_n||_F^2, guard tones
        # an M x M identity each. The real form doubles everything.
        lay = self.layout
        h = float(np.sum(np.abs(self._H_data) ** 2))
        return 2.0 * (h + len(lay.guard_tones) * self.config.M)

    def _induced_inf_norm(self) -> float:
        # Max absolute row sum of A. Rows of the [Re C, -Im C] half and the
        # [Im C, Re C] half have identical absolute sums: |Re c| + |Im c|.
        if self.mode == "dense":
            return float((np.abs(self._ReC) + np.abs(self._ImC)).sum(axis=1).max())
        cfg, lay = self.config, self.layout
        N = cfg.N
        t = np.arange(N)
        best = 0.0
        for n in lay.guard_tones:
            p = np.exp(-2j * np.pi * n * t / N) / self._sqrtN
            best = max(best, float((np.abs(p.real) + np.abs(p.imag)).sum()))
        for i, n in enumerate(lay.data_tones):
            p = np.exp(-2j * np.pi * n * t / N) / self._sqrtN
            prod = self._H_data[i][:, :, None] * p[None, None, :]
            rowsums = (np.abs(prod.real) + np.abs(prod.imag)).sum(axis=(1, 2))
            best = max(best, float(rowsums.max()))
        return best

    # -- application ------------------------------------------------------

    def _check_len(self, vec, expected, what):
        if vec.shape != (expected,):
            raise ValueError(f"{what} must have shape ({expected},), got {vec.shape}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Forward product A @ x."""
        x = np.asarray(x, dtype=float)
        self._check_len(x, self.layout.I, "x")
        lay = self.layout
        if self.mode == "dense":
            x1, x2 = x[:lay.I2], x[lay.I2:]
            u = self._ReC @ x1 - self._ImC @ x2
            w = self._ImC @ x1 + self._ReC @ x2
            return np.concatenate([u, w])
        cfg = self.config
        ahat = (x[:lay.I2] + 1j * x[lay.I2:]).reshape(cfg.M, cfg.N)
        W = (np.fft.fft(ahat, axis=1) / self._sqrtN).T  # (N, M) tone-major
        out = np.empty(lay.J2, dtype=complex)
        if len(lay.data_tones):
            prod = np.matmul(self._H_data, W[lay.data_tones][:, :, None])[:, :, 0]
            out[lay.idx_data] = prod.ravel()
        if len(lay.guard_tones):
            out[lay.idx_guard] = W[lay.guard_tones].ravel()
        return np.concatenate([out.real, out.imag])

    def apply_adjoint(self, r: np.ndarray) -> np.ndarray:
        """Adjoint product A.T @ r."""
        r = np.asarray(r, dtype=float)
        self._check_len(r, self.layout.J, "r")
        lay = self.layout
        if self.mode == "dense":
            r1, r2 = r[:lay.J2], r[lay.J2:]
            u = self._ReC.T @ r1 + self._ImC.T @ r2
            w = -self._ImC.T @ r1 + self._ReC.T @ r2
            return np.concatenate([u, w])
        cfg = self.config
        rho = r[:lay.J2] + 1j * r[lay.J2:]
        W = np.zeros((cfg.N, cfg.M), dtype=complex)
        if len(lay.data_tones):
            g = rho[lay.idx_data].reshape(len(lay.data_tones), cfg.K)
            W[lay.data_tones] = np.matmul(self._H_data_H, g[:, :, None])[:, :, 0]
        if len(lay.guard_tones):
            W[lay.guard_tones] = rho[lay.idx_guard].reshape(len(lay.guard_tones), cfg.M)
        ahat = np.fft.ifft(W.T, axis=1) * self._sqrtN
        return np.concatenate([ahat.real.ravel(), ahat.imag.ravel()])

    def apply_squared(self, v: np.ndarray, direction: str = "forward") -> np.ndarray:
        """(A o A) @ v or its transpose, o denoting the entrywise square.

        Both modes are exact. In fast mode the squared entries split as
        |C|^2 cos^2(psi) and |C|^2 sin^2(psi) with psi the entry phase;
        cos^2 = (1 + cos 2 psi) / 2 turns the sum into a symmetric term
        driven by the mean of the Re/Im halves plus a second-harmonic DFT
        term driven by their difference, evaluated with one FFT batch.
        """
        v = np.asarray(v, dtype=float)
        if direction not in ("forward", "adjoint"):
            raise ValueError(f"unknown direction {direction!r}")
        expected = self.layout.I if direction == "forward" else self.layout.J
        self._check_len(v, expected, "v")
        if np.any(v < 0):
            raise ValueError("variance vector must be nonnegative")
        lay = self.layout
        cfg = self.config
        if self.mode == "dense":
            if direction == "forward":
                v1, v2 = v[:lay.I2], v[lay.I2:]
                u = self._P @ v1 + self._Q @ v2
                w = self._Q @ v1 + self._P @ v2
            else:
                v1, v2 = v[:lay.J2], v[lay.J2:]
                u = self._P.T @ v1 + self._Q.T @ v2
                w = self._Q.T @ v1 + self._P.T @ v2
            return np.concatenate([u, w])
        N, M, T = cfg.N, cfg.M, len(lay.data_tones)
        if direction == "forward":
            vr = v[:lay.I2].reshape(M, N)
            vi = v[lay.I2:].reshape(M, N)
            per_antenna = 0.5 * (vr + vi).sum(axis=1) / N    # (M,)
            D = np.fft.fft(vr - vi, axis=1)                  # (M, N)
            sym = np.empty(lay.J2)
            asym = np.empty(lay.J2)
            if T:
                sym[lay.idx_data] = (self._absH2 @ per_antenna).ravel()
                Dsel = D[:, self._harm_data]                 # (M, T)
                rows = np.einsum("nkm,mn->nk", self._H2, Dsel)
                asym[lay.idx_data] = (0.5 / N) * rows.real.ravel()
            if len(lay.guard_tones):
                sym[lay.idx_guard] = np.tile(per_antenna, len(lay.guard_tones))
                asym[lay.idx_guard] = (0.5 / N) * D[:, self._harm_guard].T.real.ravel()
            return np.maximum(np.concatenate([sym + asym, sym - asym]), 0.0)
        tt = v[:lay.J2]
        tb = v[lay.J2:]
        s = 0.5 * (tt + tb)
        e = (tt - tb).astype(complex)
        col = np.zeros(M)
        g = np.zeros((N, M), dtype=complex)
        if T:
            sd = s[lay.idx_data].reshape(T, cfg.K)
            col += np.einsum("nkm,nk->m", self._absH2, sd)
            g[lay.data_tones] = np.einsum("nkm,nk->nm", self._H2,
                                          e[lay.idx_data].reshape(T, cfg.K))
        if len(lay.guard_tones):
            col += s[lay.idx_guard].reshape(len(lay.guard_tones), M).sum(axis=0)
            g[lay.guard_tones] = e[lay.idx_guard].reshape(len(lay.guard_tones), M)
        col /= N
        G = np.fft.fft(g, axis=0)                            # over tones
        asym = (0.5 / N) * G[self._harm_time, :].T.real      # (M, N)
        sym = np.repeat(col, N)
        asym = asym.ravel()
        return np.maximum(np.concatenate([sym + asym, sym - asym]), 0.0)

    def to_dense(self) -> np.ndarray:
        """Materialize the full real J x I matrix (dense mode only)."""
        if self.mode != "dense":
            raise ValueError("to_dense requires dense mode")
        top = np.hstack([self._ReC, -self._ImC])
        bot = np.hstack([self._ImC, self._ReC])
        return np.vstack([top, bot])


def build_operator(channel: np.ndarray, config: SystemConfig, mode: str = "dense",
                   max_dense_entries: int = DEFAULT_DENSE_BUDGET) -> ConstraintOperator:
    """Build the constraint operator for a frequency channel and config."""
    return ConstraintOperator(channel, config, mode=mode, max_dense_entries=max_dense_entries)


class MatrixOperator:
    """Wrap an explicit real matrix behind the operator interface.

    Used for small diagnostic problems and oracle tests; apply_squared is
    always exact.
    """

    def __init__(self, A: np.ndarray):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            raise ValueError("A must be 2-D")
        self.A = A
        self.A2 = A ** 2
        self.mode = "matrix"
        self.shape = A.shape
        self.frob_sq = float(self.A2.sum())
        self.inf_norm = float(np.abs(A).sum(axis=1).max()) if A.size else 0.0

    def apply(self, x):
        return self.A @ np.asarray(x, dtype=float)

    def apply_adjoint(self, r):
        return self.A.T @ np.asarray(r, dtype=float)

    def apply_squared(self, v, direction="forward"):
        v = np.asarray(v, dtype=float)
        if np.any(v < 0):
            raise ValueError("variance vector must be nonnegative")
        if direction == "forward":
            return self.A2 @ v
        if direction == "adjoint":
            return self.A2.T @ v
        raise ValueError(f"unknown direction {direction!r}")
