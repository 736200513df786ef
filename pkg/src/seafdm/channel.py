"""Doubly-dispersive (delay-Doppler) multipath channel.

A realization is a short list of paths, each with a complex gain, an integer
delay in samples and a Doppler shift normalized to the subcarrier spacing.
The same realization can be applied to a time-domain sample stream or turned
into the N x N affine-domain matrix seen by a receiver.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import ceil

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .modem import chirp

__all__ = [
    "ChannelPath",
    "ChannelRealization",
    "sample_jakes_channel",
    "apply_channel",
    "add_awgn",
    "noise_variance",
    "dirichlet_kernel",
    "effective_matrix",
    "time_domain_matrix",
    "write_channel_csv",
    "read_channel_csv",
]


@dataclass(frozen=True)
class ChannelPath:
    gain: complex
    delay: int
    doppler: float

    @property
    def doppler_integer(self) -> int:
        # nearest integer, with the fractional part in (-1/2, 1/2]
        return int(ceil(self.doppler - 0.5))

    @property
    def doppler_fraction(self) -> float:
        return self.doppler - self.doppler_integer


@dataclass(frozen=True)
class ChannelRealization:
    """A set of paths together with the block geometry it was drawn for."""

    paths: tuple
    N: int
    n_cp: int
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ConfigurationError("a channel needs at least one path")

    @property
    def P(self) -> int:
        return len(self.paths)

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths], dtype=complex)

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.paths], dtype=np.int64)

    @property
    def dopplers(self) -> np.ndarray:
        return np.array([p.doppler for p in self.paths], dtype=float)

    def advanced(self, n0: int) -> "ChannelRealization":
        """The same channel seen from a block starting `n0` samples later.

        Doppler phase keeps running across blocks, so each gain picks up
        ``exp(j 2 pi nu n0 / N)``.
        """
        paths = tuple(
            ChannelPath(p.gain * np.exp(2j * np.pi * p.doppler * n0 / self.N), p.delay, p.doppler)
            for p in self.paths
        )
        return ChannelRealization(paths, self.N, self.n_cp, dict(self.meta))

    @classmethod
    def identity(cls, N: int, n_cp: int = 0) -> "ChannelRealization":
        return cls((ChannelPath(1.0 + 0j, 0, 0.0),), N, n_cp)


def noise_variance(snr_db: float) -> float:
    """Per-sample noise variance for unit signal power."""
    return float(10.0 ** (-snr_db / 10.0))


def sample_jakes_channel(P: int, alpha_max: float, delay_taps, rng, N: int = 1024,
                         n_cp: int = 17) -> ChannelRealization:
    """Draw a Rayleigh multipath channel with Jakes-distributed Doppler.

    Gains are CN(0, 1/P); Doppler is ``alpha_max * cos(theta)`` with theta
    uniform on [-pi, pi].
    """
    taps = list(delay_taps)
    if len(taps) != P:
        raise ConfigurationError(f"{P} paths need {P} delay taps, got {len(taps)}")
    h = (rng.standard_normal(P) + 1j * rng.standard_normal(P)) * np.sqrt(0.5 / P)
    nu = alpha_max * np.cos(rng.uniform(-np.pi, np.pi, P))
    paths = tuple(ChannelPath(complex(h[i]), int(taps[i]), float(nu[i])) for i in range(P))
    return ChannelRealization(paths, N, n_cp)


def apply_channel(s, ch: ChannelRealization, origin: int | None = None) -> np.ndarray:
    """Pass a time-domain stream through the channel.

    ``r[i] = sum_p h_p s[i - l_p] exp(j 2 pi nu_p (i - origin) / N)``, with
    samples before the start of `s` taken as zero.  For a single prefixed
    block the default origin is the first sample after the prefix.
    """
    s = np.asarray(s, dtype=complex)
    if origin is None:
        origin = ch.n_cp
    i = np.arange(s.size) - origin
    r = np.zeros_like(s)
    for p in ch.paths:
        if not 0 <= p.delay <= ch.n_cp:
            raise ConfigurationError(f"delay tap {p.delay} outside [0, {ch.n_cp}]")
        shifted = np.zeros_like(s)
        shifted[p.delay:] = s[: s.size - p.delay]
        r += p.gain * np.exp(2j * np.pi * p.doppler * i / ch.N) * shifted
    return r


def add_awgn(r, noise_var: float, rng) -> np.ndarray:
    """Add circularly symmetric complex Gaussian noise of variance `noise_var`."""
    r = np.asarray(r, dtype=complex)
    if noise_var < 0:
        raise ConfigurationError("noise variance must be nonnegative")
    if noise_var == 0:
        return r.copy()
    w = rng.standard_normal(r.shape + (2,)) @ np.array([1.0, 1j])
    return r + np.sqrt(noise_var / 2.0) * w


def dirichlet_kernel(x, N: int) -> np.ndarray:
    """``sum_{n<N} exp(-j 2 pi x n / N)``, set to N where ``x`` is a multiple of N."""
    x = np.asarray(x, dtype=float)
    den = np.sin(np.pi * x / N)
    sing = np.abs(den) < 1e-12
    safe = np.where(sing, 1.0, den)
    val = np.exp(-1j * np.pi * x * (N - 1) / N) * np.sin(np.pi * x) / safe
    return np.where(sing, N + 0j, val)


def _path_core(ch: ChannelRealization, N: int, c1: float) -> np.ndarray:
    """Channel matrix between chirp-free affine domains (both c2 = 0)."""
    d = np.arange(-(N - 1), N)
    q = np.arange(N)
    p = q[:, None]
    H = np.zeros((N, N), dtype=complex)
    for path in ch.paths:
        l, nu = path.delay, path.doppler
        kern = dirichlet_kernel(d - nu + 2 * N * c1 * l, N)
        col = chirp(c1, l) * np.exp(-2j * np.pi * q * l / N)
        H += (path.gain / N) * kern[(p - q) + (N - 1)] * col[None, :]
    return H


def effective_matrix(ch: ChannelRealization, c1: float, c2_tx, c2_rx, N: int | None = None):
    """Affine-domain channel matrix for given transmit and receive chirps.

    Parameters
    ----------
    ch : ChannelRealization
    c1 : float
    c2_tx, c2_rx : float or ndarray of shape (N,)
        Per-subcarrier chirps used by the transmitter and the receiver.

    Returns
    -------
    ndarray of complex, shape (N, N)
    """
    N = N or ch.N
    m = np.arange(N)
    H = _path_core(ch, N, c1)
    tx = chirp(np.broadcast_to(np.asarray(c2_tx, float), (N,)), m)
    rx = np.conj(chirp(np.broadcast_to(np.asarray(c2_rx, float), (N,)), m))
    return rx[:, None] * H * tx[None, :]


def _wrap_phase(c1: float, N: int, idx: np.ndarray) -> np.ndarray:
    # chirp-periodic extension: s[b + kN] = s[b] exp(j 2 pi c1 (k^2 N^2 + 2 k N b))
    k = np.floor_divide(idx, N)
    b = idx - k * N
    ph = c1 * (k * k * float(N) * N + 2.0 * k * N * b)
    return np.exp(2j * np.pi * (ph - np.round(ph))), b


def time_domain_matrix(ch: ChannelRealization, c1: float, N: int | None = None):
    """Sparse N x N time-domain channel acting on one prefixed block.

    Delays may be negative (a receiver window that starts late); the block is
    then extended chirp-periodically, which is what the affine-domain model
    assumes.
    """
    N = N or ch.N
    n = np.arange(N)
    rows, cols, vals = [], [], []
    for path in ch.paths:
        ph, b = _wrap_phase(c1, N, n - path.delay)
        rows.append(n)
        cols.append(b)
        vals.append(path.gain * np.exp(2j * np.pi * path.doppler * n / N) * ph)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))


def write_channel_csv(path, ch: ChannelRealization):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gain_re", "gain_im", "tap", "doppler"])
        for p in ch.paths:
            w.writerow([repr(float(np.real(p.gain))), repr(float(np.imag(p.gain))), p.delay,
                        repr(float(p.doppler))])


def read_channel_csv(path, N: int, n_cp: int) -> ChannelRealization:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    paths = tuple(ChannelPath(complex(float(r["gain_re"]), float(r["gain_im"])), int(r["tap"]),
                              float(r["doppler"])) for r in rows)
    return ChannelRealization(paths, N, n_cp)
