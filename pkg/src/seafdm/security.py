"""Closed-form eavesdropper SINR and the search-error model.

An eavesdropper that demodulates with the wrong chirp sees each symbol
rotated by a random phase ``exp(j 2 pi c q^2)``, with ``c`` drawn from the
codebook.  Averaging that phase over a uniform codebook gives a geometric
series, which is what :func:`sinr_eve_symbol` evaluates.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .codebook import ChirpCodebook
from .errors import ConfigurationError

__all__ = [
    "SinrScenario",
    "sinr_bob",
    "codebook_phase_mean",
    "sinr_eve_symbol",
    "sinr_eve_average",
    "monte_carlo_phase_expectation",
    "sinr_from_phase_mean",
    "xi_max",
    "search_error_bound",
    "sinr_sweep",
    "write_sinr_csv",
    "db",
    "from_db",
]

INTEGER_TOL = 1e-12


def db(x):
    return 10.0 * np.log10(x)


def from_db(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SinrScenario:
    """Linear output SNRs of Bob and Eve plus the codebook in use.

    The gammas already include transmit power and large-scale fading.
    """

    gamma_bob: float
    gamma_eve: float
    N: int
    codebook: ChirpCodebook

    def __post_init__(self):
        if not (self.gamma_bob > 0 and self.gamma_eve > 0):
            raise ConfigurationError("output SNRs must be positive")
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")

    @classmethod
    def from_db(cls, gamma_bob_db: float, gamma_eve_db: float, N: int, c2_max: float, M: int):
        return cls(float(from_db(gamma_bob_db)), float(from_db(gamma_eve_db)), N,
                   ChirpCodebook(float(c2_max), int(M)))


def sinr_bob(scenario: SinrScenario) -> float:
    """Bob undoes the chirps exactly, so his SINR is his output SNR."""
    return scenario.gamma_bob


def _frac(x):
    return x - np.round(x)


def codebook_phase_mean(q, c2_max: float, M: int):
    """Mean of ``exp(j 2 pi c q^2)`` over the M uniform codebook values.

    Returns the mean together with a mask of the ``q`` for which the
    codebook step times ``q^2`` is an integer (all phases coincide).
    """
    q = np.asarray(q, dtype=np.float64)
    q2 = q * q
    if M == 1:
        return np.exp(-2j * np.pi * _frac(c2_max * q2)), np.ones(q.shape, dtype=bool)
    step = 2.0 * c2_max / (M - 1)
    f = _frac(step * q2)
    integer = np.abs(f) <= INTEGER_TOL
    lead = np.exp(-2j * np.pi * _frac(c2_max * q2))
    fs = np.where(integer, 0.5, f)  # the ratio is unused on the integer branch
    # geometric series over the M codebook phases; e^{j2pi step q^2 M} only
    # depends on the fractional part of step * q^2 because M is an integer
    ratio = np.expm1(2j * np.pi * _frac(fs * M)) / np.expm1(2j * np.pi * fs)
    mean = np.where(integer, lead, lead * ratio / M)
    return mean, integer


def sinr_from_phase_mean(gamma: float, phase_mean):
    """SINR of a symbol rotated by a random phase with the given mean."""
    err = 2.0 - 2.0 * np.real(phase_mean)
    return gamma / (gamma * err + 1.0)


def sinr_eve_symbol(q, scenario: SinrScenario):
    """Per-symbol effective SINR at an eavesdropper with no chirp knowledge.

    Symbols where the codebook step times ``q^2`` is an integer, and every
    symbol when ``M == 1``, take the value ``gamma_eve``.
    """
    cb = scenario.codebook
    g = scenario.gamma_eve
    q = np.asarray(q)
    if cb.M == 1:
        return np.full(q.shape, g, dtype=float) if q.ndim else float(g)
    mean, integer = codebook_phase_mean(q, cb.c2_max, cb.M)
    out = np.where(integer, g, sinr_from_phase_mean(g, mean))
    return out if q.ndim else float(out)


def sinr_eve_average(scenario: SinrScenario) -> float:
    """Average of :func:`sinr_eve_symbol` over the N subcarriers (linear)."""
    return float(np.mean(sinr_eve_symbol(np.arange(scenario.N), scenario)))


def monte_carlo_phase_expectation(q: int, codebook: ChirpCodebook, trials: int, rng,
                                  chunk: int = 1 << 20) -> complex:
    """Empirical mean of ``exp(j 2 pi c q^2)`` with ``c`` drawn uniformly from the codebook."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    q2 = float(q) * float(q)
    acc = 0j
    left = trials
    while left:
        n = min(chunk, left)
        c = codebook.value(rng.integers(0, codebook.M, n))
        acc += np.exp(2j * np.pi * _frac(c * q2)).sum()
        left -= n
    return complex(acc / trials)


def xi_max(M: int, u: int) -> int:
    """Worst-case index distance between a codebook entry and the nearest search point.

    The search grid takes every u-th codebook entry starting from the first.
    """
    if M < 2 or not 1 <= u <= M - 1:
        raise ConfigurationError("need M >= 2 and 1 <= u <= M - 1")
    return max(M - 1 - u * ((M - 1) // u), u // 2)


def search_error_bound(codebook: ChirpCodebook, u: int) -> float:
    """Largest chirp error left by a search with step ``u`` codebook intervals."""
    return xi_max(codebook.M, u) * codebook.interval


def sinr_sweep(c2_max_values, gamma_eve_db: float, N: int, M: int, gamma_bob_db: float | None = None):
    """Average Eve SINR in dB for each c2_max."""
    gb = gamma_eve_db if gamma_bob_db is None else gamma_bob_db
    rows = []
    for c in c2_max_values:
        sc = SinrScenario.from_db(gb, gamma_eve_db, N, c, M)
        rows.append((float(c), float(db(sinr_eve_average(sc)))))
    return rows


def write_sinr_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c2max", "sinr_eve_dB"])
        for c, s in rows:
            w.writerow([repr(c), repr(s)])
