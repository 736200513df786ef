"""Affine-domain modulation: DAFT/IDAFT, chirp-periodic prefix and Gray QAM.

All transforms accept arrays whose last axis is the subcarrier/sample axis,
so a whole frame of symbols can be processed in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "AfdmWaveformConfig",
    "default_c1",
    "chirp",
    "idaft",
    "daft",
    "add_cpp",
    "remove_cpp",
    "qam_map",
    "qam_demap",
    "qam_constellation",
]


def default_c1(N: int, alpha_max: int, guard: int = 0) -> float:
    """Integer-Doppler full-diversity pre-chirp ``(2(alpha_max + guard) + 1) / (2N)``."""
    return (2 * (alpha_max + guard) + 1) / (2 * N)


@dataclass(frozen=True)
class AfdmWaveformConfig:
    """Waveform dimensions.

    Attributes
    ----------
    N : int
        Number of chirp subcarriers per symbol.
    n_cp : int
        Prefix length in samples.
    c1 : float
        Time-domain pre-chirp.
    R : int
        Square QAM order.
    """

    N: int
    n_cp: int
    c1: float
    R: int = 4

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        if not 0 <= self.n_cp < self.N:
            raise ConfigurationError("prefix length must satisfy 0 <= n_cp < N")
        _axis_bits(self.R)

    @property
    def symbol_length(self) -> int:
        return self.N + self.n_cp

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.R))


def chirp(c, n) -> np.ndarray:
    """``exp(j 2 pi c n^2)`` with the phase reduced modulo one turn first."""
    n = np.asarray(n, dtype=np.float64)
    ph = np.asarray(c, dtype=np.float64) * n * n
    return np.exp(2j * np.pi * (ph - np.round(ph)))


def idaft(x, c1: float, c2) -> np.ndarray:
    """Inverse DAFT, affine domain to time domain.

    ``s[n] = N^-1/2 sum_m x[m] exp(j2pi(c1 n^2 + c2[m] m^2 + m n / N))``.
    `c2` may be a scalar or a per-subcarrier vector broadcastable to `x`.
    """
    x = np.asarray(x, dtype=complex)
    N = x.shape[-1]
    n = np.arange(N)
    return chirp(c1, n) * np.fft.ifft(x * chirp(c2, n), norm="ortho")


def daft(r, c1: float, c2) -> np.ndarray:
    """Forward DAFT, the exact inverse of :func:`idaft` for matching chirps."""
    r = np.asarray(r, dtype=complex)
    N = r.shape[-1]
    n = np.arange(N)
    return np.conj(chirp(c2, n)) * np.fft.fft(r * np.conj(chirp(c1, n)), norm="ortho")


def add_cpp(s, c1: float, n_cp: int) -> np.ndarray:
    """Prepend the chirp-periodic prefix.

    Prefix sample ``n`` in ``[-n_cp, -1]`` is ``s[n+N] exp(-j2pi c1 (N^2 + 2Nn))``.
    """
    s = np.asarray(s, dtype=complex)
    if n_cp == 0:
        return s.copy()
    N = s.shape[-1]
    n = np.arange(-n_cp, 0)
    ph = c1 * (N * N + 2.0 * N * n)
    rot = np.exp(-2j * np.pi * (ph - np.round(ph)))
    return np.concatenate([s[..., N - n_cp:] * rot, s], axis=-1)


def remove_cpp(r, n_cp: int, N: int | None = None) -> np.ndarray:
    r = np.asarray(r)
    if N is not None and r.shape[-1] != N + n_cp:
        raise ConfigurationError(f"expected {N + n_cp} samples, got {r.shape[-1]}")
    if r.shape[-1] <= n_cp:
        raise ConfigurationError("input shorter than the prefix")
    return r[..., n_cp:]


# ---------------------------------------------------------------------------
# Gray-coded square QAM
def _axis_bits(R: int) -> int:
    b2 = int(R).bit_length() - 1
    if R < 4 or (1 << b2) != R or b2 % 2:
        raise ConfigurationError(f"QAM order must be a square power of two >= 4, got {R}")
    return b2 // 2


def _scale(R: int) -> float:
    return np.sqrt(2.0 * (R - 1) / 3.0)


def _gray_to_level(b: int):
    # level index i -> Gray label g and back
    side = 1 << b
    i = np.arange(side)
    g = i ^ (i >> 1)
    inv = np.empty(side, dtype=np.int64)
    inv[g] = i
    return g, inv


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    w = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return (bits.astype(np.int64) * w).sum(axis=-1)


def _int_to_bits(v: np.ndarray, b: int) -> np.ndarray:
    shifts = np.arange(b - 1, -1, -1)
    return ((v[..., None] >> shifts) & 1).astype(np.uint8)


def qam_map(bits, R: int = 4) -> np.ndarray:
    """Map bits to unit-energy Gray square-QAM symbols.

    Each symbol takes ``log2 R`` bits: the first half selects the in-phase
    level and the second half the quadrature level, most significant first.
    """
    b = _axis_bits(R)
    bits = np.asarray(bits).ravel()
    if bits.size % (2 * b):
        raise ConfigurationError(f"bit count {bits.size} not divisible by {2 * b}")
    side = 1 << b
    _, inv = _gray_to_level(b)
    groups = bits.reshape(-1, 2, b)
    lev = inv[_bits_to_int(groups)]  # (n, 2)
    amp = (side - 1) - 2.0 * lev
    return (amp[:, 0] + 1j * amp[:, 1]) / _scale(R)


def _axis_decide(a: np.ndarray, b: int) -> np.ndarray:
    side = 1 << b
    g, _ = _gray_to_level(b)
    t = ((side - 1) - a) / 2.0
    lo = np.clip(np.floor(t), 0, side - 1).astype(np.int64)
    hi = np.clip(lo + 1, 0, side - 1)
    frac = t - lo
    pick_hi = frac > 0.5
    tie = frac == 0.5
    pick_hi |= tie & (g[hi] < g[lo])
    lev = np.where(pick_hi, hi, lo)
    lev = np.where(t < 0, 0, lev)
    return g[lev]


def qam_demap(symbols, R: int = 4) -> np.ndarray:
    """Hard nearest-point decisions back to bits.

    A value exactly half way between two levels goes to the level with the
    smaller Gray label, so an all-zero input decodes to all-zero bits.
    """
    b = _axis_bits(R)
    y = np.asarray(symbols, dtype=complex).ravel() * _scale(R)
    gi = _axis_decide(y.real, b)
    gq = _axis_decide(y.imag, b)
    return np.concatenate([_int_to_bits(gi, b), _int_to_bits(gq, b)], axis=-1).ravel()


def qam_constellation(R: int = 4):
    """All points with their bit labels, ordered by label value."""
    b = _axis_bits(R)
    nbits = 2 * b
    labels = _int_to_bits(np.arange(R), nbits)
    return qam_map(labels.ravel(), R), labels
