"""Uniform chirp-parameter codebook and LPPN-driven selection of c2 values."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .lppn import LppnGenerator

__all__ = ["ChirpCodebook", "build_codebook", "index_from_chips", "next_c2_vector",
           "write_c2_csv"]


@dataclass(frozen=True)
class ChirpCodebook:
    """M candidate c2 values spread uniformly over [-c2_max, +c2_max].

    For ``M == 1`` the codebook holds only ``-c2_max`` and ``interval`` is 0.
    """

    c2_max: float
    M: int

    def __post_init__(self):
        if not self.c2_max > 0:
            raise ConfigurationError(f"c2_max must be positive, got {self.c2_max}")
        if int(self.M) < 1:
            raise ConfigurationError(f"codebook size must be >= 1, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def interval(self) -> float:
        return 2.0 * self.c2_max / (self.M - 1) if self.M > 1 else 0.0

    @property
    def values(self) -> np.ndarray:
        return self.value(np.arange(self.M))

    def value(self, k):
        k = np.asarray(k)
        if self.M == 1:
            return np.full(k.shape, -self.c2_max)
        # pin the end points so A_{M-1} is exactly +c2_max
        v = -self.c2_max + k * self.interval
        return np.where(k == self.M - 1, self.c2_max, v)

    @property
    def bits_per_index(self) -> int:
        b = self.M.bit_length() - 1
        if 1 << b != self.M:
            raise ConfigurationError(f"chip-driven selection needs a power-of-two M, got {self.M}")
        return b


def build_codebook(c2_max: float, M: int) -> ChirpCodebook:
    return ChirpCodebook(float(c2_max), M)


def index_from_chips(chips) -> int:
    """Read a chip window as an unsigned integer, first chip most significant."""
    c = np.asarray(chips, dtype=np.int64).ravel()
    v = 0
    for b in c:
        v = (v << 1) | int(b)
    return v


def _window_indices(seq: np.ndarray, b: int, n: int) -> np.ndarray:
    idx = np.zeros(n, dtype=np.int64)
    for z in range(b):
        idx = (idx << 1) | seq[z:z + n]
    return idx


def next_c2_vector(gen: LppnGenerator, codebook: ChirpCodebook, N: int) -> np.ndarray:
    """Draw the per-subcarrier c2 values of the next symbol.

    Subcarrier ``m`` uses the ``log2 M`` chips ending at the generator's
    current position plus ``m``; consecutive windows overlap in all but one
    chip.  Chips before the start of the sequence count as 1.  The generator
    advances by exactly `N` chips, also for ``M == 1``.

    Returns
    -------
    ndarray of float, shape (N,)
    """
    return codebook.value(next_c2_indices(gen, codebook, N))


def next_c2_indices(gen: LppnGenerator, codebook: ChirpCodebook, N: int) -> np.ndarray:
    """Like :func:`next_c2_vector` but returns codebook indices."""
    b = codebook.bits_per_index
    history = gen.peek_back(b - 1) if b > 1 else np.zeros(0, dtype=np.uint8)
    chips = gen.next_chips(N)
    if b == 0:
        return np.zeros(N, dtype=np.int64)
    seq = np.concatenate([history, chips]).astype(np.int64)
    return _window_indices(seq, b, N)


def write_c2_csv(path, vectors, start_symbol: int = 0):
    """Dump c2 vectors as rows of (symbol, subcarrier, c2)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["symbol", "subcarrier", "c2"])
        for mu, vec in enumerate(vectors, start=start_symbol):
            for m, c in enumerate(vec):
                w.writerow([mu, m, repr(float(c))])
