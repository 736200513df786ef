"""Long-period pseudo-noise (LPPN) chip generator.

Four shortened-cycle shift registers are paired (X1A/X1B and X2A/X2B).
Inside each pair the two registers have coprime cycle lengths and slide
against each other ("precession") until the B register has completed its
allotted number of cycles, after which it is held.  The X2 pair additionally
holds both registers for ``d`` extra chips so that the X1 and X2 epochs have
coprime lengths.  The output chip is ``X1 xor X2``.

The generator exposes a streaming interface (``next_chip``/``next_chips``)
but keeps its position as a single chip index internally.  Register outputs
for one short cycle are produced once by actually stepping each LFSR and are
then looked up, which makes random access and state restore cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    InvalidSeedError,
    InvalidStateError,
    SerializationError,
    StateFormatError,
)

__all__ = [
    "lfsr_step",
    "msequence",
    "RegisterConfig",
    "PrecessionConfig",
    "LppnConfig",
    "ShortCycleRegister",
    "LppnState",
    "LppnGenerator",
    "DEFAULT_LPPN_CONFIG",
    "COUNTER_WIDTHS",
    "state_vector_length",
]

# bit widths of n_x1a, n_x1b, n_x2a, n_x2b, n_x1, n_x2 in the state vector
COUNTER_WIDTHS = (12, 12, 12, 12, 24, 24)


def _as_bits(v, name="bits") -> np.ndarray:
    a = np.asarray(v, dtype=np.int64).ravel()
    if a.size and ((a < 0) | (a > 1)).any():
        raise ConfigurationError(f"{name} must contain only 0/1")
    return a.astype(np.uint8)


def lfsr_step(state, taps):
    """Advance a Fibonacci shift register by one chip.

    Parameters
    ----------
    state : array_like of {0, 1}
        Register contents, first stage first.
    taps : array_like of {0, 1}
        Feedback coefficients, same length as `state`.

    Returns
    -------
    new_state : ndarray of uint8
    out : int
        The bit that was in the last stage before the shift.
    """
    s = _as_bits(state, "state")
    e = _as_bits(taps, "taps")
    if s.size != e.size or s.size == 0:
        raise ConfigurationError(
            f"state and taps must have equal nonzero length, got {s.size} and {e.size}"
        )
    out = int(s[-1])
    fb = int(np.bitwise_xor.reduce(s & e)) if s.size else 0
    new = np.empty_like(s)
    new[0] = fb
    new[1:] = s[:-1]
    return new, out


def msequence(taps, seed, length: int) -> np.ndarray:
    """Output stream of an LFSR, typically a maximal-length one.

    Raises
    ------
    InvalidSeedError
        If `seed` is all zero.
    """
    s = _as_bits(seed, "seed")
    if not s.any():
        raise InvalidSeedError("all-zero seed never leaves the zero state")
    out = np.empty(int(length), dtype=np.uint8)
    for i in range(int(length)):
        s, out[i] = lfsr_step(s, taps)
    return out


@dataclass(frozen=True)
class RegisterConfig:
    """One shortened-cycle shift register.

    Attributes
    ----------
    taps : tuple of int
        Feedback coefficient vector.
    initial_state : tuple of int
        Contents loaded at every reset.
    short_cycle : int
        Number of chips emitted before the register is reset.
    """

    taps: tuple
    initial_state: tuple
    short_cycle: int

    def __post_init__(self):
        taps = tuple(int(b) for b in self.taps)
        init = tuple(int(b) for b in self.initial_state)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "initial_state", init)
        if len(taps) != len(init) or len(taps) == 0:
            raise ConfigurationError("taps and initial_state must have the same nonzero length")
        if any(b not in (0, 1) for b in taps + init):
            raise ConfigurationError("register vectors must be binary")
        if int(self.short_cycle) < 1:
            raise ConfigurationError("short_cycle must be >= 1")

    @property
    def stages(self) -> int:
        return len(self.taps)


@dataclass(frozen=True)
class PrecessionConfig:
    theta_x1a: int
    theta_x2a: int
    theta_x1: int
    d: int


@dataclass(frozen=True)
class LppnConfig:
    """Full generator configuration with the derived epoch lengths.

    The constructor checks the coprimality and threshold relations that
    make the combined period equal to ``t_l``.
    """

    x1a: RegisterConfig
    x1b: RegisterConfig
    x2a: RegisterConfig
    x2b: RegisterConfig
    precession: PrecessionConfig
    check_invariants: bool = field(default=True, compare=False)

    def __post_init__(self):
        S = self.x1a.stages
        if any(r.stages != S for r in self.registers):
            raise ConfigurationError("all four registers must have the same length")
        p = self.precession
        if min(p.theta_x1a, p.theta_x2a, p.theta_x1) < 1 or p.d < 0:
            raise ConfigurationError("thresholds must be positive and d nonnegative")
        if self.theta_x1b < 1 or self.theta_x2b < 1:
            raise ConfigurationError("B registers must complete at least one cycle per epoch")
        if self.check_invariants:
            self.validate()

    def validate(self):
        T1A, T1B = self.x1a.short_cycle, self.x1b.short_cycle
        T2A, T2B = self.x2a.short_cycle, self.x2b.short_cycle
        if gcd(T1A, T1B) != 1 or gcd(T2A, T2B) != 1:
            raise ConfigurationError("paired short cycles must be coprime")
        if gcd(self.t_x1, self.t_x2) != 1:
            raise ConfigurationError("X1 and X2 epoch lengths must be coprime")
        if self.precession.theta_x1 != self.t_x2:
            raise ConfigurationError(
                f"theta_x1 must equal the X2 epoch length {self.t_x2}, got {self.precession.theta_x1}"
            )
        # the B register must not wrap so far that a pair repeats inside an epoch
        if self.precession.theta_x1a * T1B - self.t_x1 > T1B * (T1B - T1A):
            raise ConfigurationError("X1 precession would repeat within an epoch")

    @property
    def registers(self):
        return (self.x1a, self.x1b, self.x2a, self.x2b)

    @property
    def stages(self) -> int:
        return self.x1a.stages

    @property
    def theta_x1b(self) -> int:
        return (self.x1a.short_cycle * self.precession.theta_x1a) // self.x1b.short_cycle

    @property
    def theta_x2b(self) -> int:
        return (self.x2a.short_cycle * self.precession.theta_x2a) // self.x2b.short_cycle

    @property
    def t_x1(self) -> int:
        return self.x1a.short_cycle * self.precession.theta_x1a

    @property
    def t_x2(self) -> int:
        return self.x2a.short_cycle * self.precession.theta_x2a + self.precession.d

    @property
    def theta_x1(self) -> int:
        return self.precession.theta_x1

    @property
    def theta_x2(self) -> int:
        # X2 epochs per full period
        return self.t_x1

    @property
    def t_l(self) -> int:
        return self.t_x1 * self.precession.theta_x1

    @property
    def thresholds(self):
        """Cycle thresholds ordered like the counters."""
        p = self.precession
        return (p.theta_x1a, self.theta_x1b, p.theta_x2a, self.theta_x2b,
                self.theta_x1, self.theta_x2)


DEFAULT_LPPN_CONFIG = LppnConfig(
    x1a=RegisterConfig((0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 1, 1),
                       (0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0), 4092),
    x1b=RegisterConfig((1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 1, 1),
                       (0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0), 4093),
    x2a=RegisterConfig((1, 0, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1),
                       (1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1), 4092),
    x2b=RegisterConfig((0, 1, 1, 1, 0, 0, 0, 1, 1, 0, 0, 1),
                       (0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0), 4093),
    precession=PrecessionConfig(theta_x1a=3750, theta_x2a=3750, theta_x1=15345037, d=37),
)


def state_vector_length(cfg: LppnConfig) -> int:
    return sum(COUNTER_WIDTHS) + 4 * cfg.stages


class ShortCycleRegister:
    """A shift register that reloads its initial state every `short_cycle` chips."""

    def __init__(self, cfg: RegisterConfig):
        self.cfg = cfg
        self.state = np.array(cfg.initial_state, dtype=np.uint8)
        self.position = 0
        self.cycles = 0

    def next(self) -> int:
        self.state, out = lfsr_step(self.state, self.cfg.taps)
        self.position += 1
        if self.position == self.cfg.short_cycle:
            self.state = np.array(self.cfg.initial_state, dtype=np.uint8)
            self.position = 0
            self.cycles += 1
        return out


def _pack(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


class _RegisterTable:
    """Outputs and states for one short cycle, obtained by stepping the LFSR."""

    def __init__(self, cfg: RegisterConfig):
        T = cfg.short_cycle
        reg = ShortCycleRegister(cfg)
        self.states = np.empty((T, cfg.stages), dtype=np.uint8)
        self.outputs = np.empty(T, dtype=np.uint8)
        self.lookup: dict[int, list[int]] = {}
        for i in range(T):
            self.states[i] = reg.state
            self.lookup.setdefault(_pack(reg.state), []).append(i)
            self.outputs[i] = reg.next()
        self.T = T


@dataclass(frozen=True)
class LppnState:
    """Dynamic generator state: four register contents and six counters.

    Counters follow the order n_x1a, n_x1b, n_x2a, n_x2b, n_x1, n_x2.
    A counter equal to its threshold marks a register that is currently held.
    """

    registers: tuple  # four tuples of bits
    counters: tuple
    chip_index: int

    def to_bits(self) -> np.ndarray:
        """Big-endian fixed-width encoding: counters first, then registers."""
        out = []
        for value, width in zip(self.counters, COUNTER_WIDTHS):
            if value < 0 or value >= (1 << width):
                raise SerializationError(f"counter value {value} does not fit {width} bits")
            out.extend((value >> (width - 1 - i)) & 1 for i in range(width))
        for reg in self.registers:
            out.extend(reg)
        return np.array(out, dtype=np.uint8)


class LppnGenerator:
    """Stateful LPPN chip source.

    Parameters
    ----------
    config : LppnConfig, optional
        Defaults to :data:`DEFAULT_LPPN_CONFIG`.
    chip_index : int, optional
        Starting position, modulo the full period.

    Examples
    --------
    >>> g = LppnGenerator()
    >>> int(g.next_chip())
    1
    """

    _table_cache: dict = {}

    def __init__(self, config: LppnConfig | None = None, chip_index: int = 0):
        self.config = config or DEFAULT_LPPN_CONFIG
        key = self.config
        tabs = LppnGenerator._table_cache.get(key)
        if tabs is None:
            tabs = tuple(_RegisterTable(r) for r in self.config.registers)
            LppnGenerator._table_cache[key] = tabs
        self._tabs = tabs
        self._k = int(chip_index) % self.config.t_l

    # ------------------------------------------------------------------
    @property
    def chip_index(self) -> int:
        return self._k

    def clone(self) -> "LppnGenerator":
        return LppnGenerator(self.config, self._k)

    def seek(self, chip_index: int):
        """Jump to an absolute chip position (modulo the full period)."""
        self._k = int(chip_index) % self.config.t_l

    def __eq__(self, other):
        return (isinstance(other, LppnGenerator) and other.config == self.config
                and other._k == self._k)

    # ------------------------------------------------------------------
    def _components(self, k: np.ndarray):
        cfg = self.config
        ta, tb, tc, td = self._tabs
        j1 = k % cfg.t_x1
        xa = ta.outputs[j1 % ta.T]
        run_b = tb.T * cfg.theta_x1b
        xb = np.where(j1 < run_b, tb.outputs[j1 % tb.T], tb.outputs[tb.T - 1])
        j2 = k % cfg.t_x2
        run_c = tc.T * cfg.precession.theta_x2a
        run_d = td.T * cfg.theta_x2b
        xc = np.where(j2 < run_c, tc.outputs[j2 % tc.T], tc.outputs[tc.T - 1])
        xd = np.where(j2 < run_d, td.outputs[j2 % td.T], td.outputs[td.T - 1])
        return xa ^ xb, xc ^ xd

    def chips_at(self, start: int, n: int):
        """X1 and X2 chips at absolute positions start..start+n-1 (no state change)."""
        n = int(n)
        x1 = np.empty(n, dtype=np.uint8)
        x2 = np.empty(n, dtype=np.uint8)
        step = 1 << 20
        tl = self.config.t_l
        for lo in range(0, n, step):
            hi = min(n, lo + step)
            k = (int(start) + np.arange(lo, hi, dtype=np.int64)) % tl
            x1[lo:hi], x2[lo:hi] = self._components(k)
        return x1, x2

    def next_components(self, n: int):
        """Emit `n` chips and return the separate X1 and X2 streams."""
        x1, x2 = self.chips_at(self._k, n)
        self._k = (self._k + int(n)) % self.config.t_l
        return x1, x2

    def next_chips(self, n: int) -> np.ndarray:
        x1, x2 = self.next_components(n)
        return x1 ^ x2

    def next_chip(self) -> int:
        return int(self.next_chips(1)[0])

    def next_x1(self, n: int = 1) -> np.ndarray:
        """X1 chips only; the generator still advances by `n` chips."""
        return self.next_components(n)[0]

    def next_x2(self, n: int = 1) -> np.ndarray:
        return self.next_components(n)[1]

    def peek_back(self, n: int, fill: int = 1) -> np.ndarray:
        """The `n` chips preceding the current position.

        Positions before the start of the period are reported as `fill`.
        """
        n = int(n)
        out = np.full(n, fill, dtype=np.uint8)
        avail = min(n, self._k)
        if avail:
            x1, x2 = self.chips_at(self._k - avail, avail)
            out[n - avail:] = x1 ^ x2
        return out

    # ------------------------------------------------------------------
    def state(self) -> LppnState:
        cfg = self.config
        ta, tb, tc, td = self._tabs
        k = self._k
        n_x1, j1 = divmod(k, cfg.t_x1)
        n_x2, j2 = divmod(k, cfg.t_x2)

        def reg_state(tab, j, theta):
            # returns (register bits, cycle counter); held registers keep the
            # state that emitted the last chip of the final cycle
            if j < tab.T * theta:
                c, pos = divmod(j, tab.T)
                return tuple(int(b) for b in tab.states[pos]), c
            return tuple(int(b) for b in tab.states[tab.T - 1]), theta

        ra, ca = reg_state(ta, j1, cfg.precession.theta_x1a)
        rb, cb = reg_state(tb, j1, cfg.theta_x1b)
        rc, cc = reg_state(tc, j2, cfg.precession.theta_x2a)
        rd, cd = reg_state(td, j2, cfg.theta_x2b)
        return LppnState((ra, rb, rc, rd), (ca, cb, cc, cd, n_x1, n_x2), k)

    def serialize(self) -> np.ndarray:
        """Fixed-width binary state vector (144 bits for the default preset)."""
        return self.state().to_bits()

    @classmethod
    def restore(cls, bits, config: LppnConfig | None = None) -> "LppnGenerator":
        """Rebuild a generator from a serialized state vector.

        Raises
        ------
        StateFormatError
            Wrong length or non-binary content.
        InvalidStateError
            Fields decode to a state the generator cannot be in.
        """
        config = config or DEFAULT_LPPN_CONFIG
        w = np.asarray(bits).ravel()
        D = state_vector_length(config)
        if w.size != D:
            raise StateFormatError(f"state vector must have {D} bits, got {w.size}")
        if ((w != 0) & (w != 1)).any():
            raise StateFormatError("state vector must be binary")
        w = w.astype(np.int64)
        counters = []
        pos = 0
        for width in COUNTER_WIDTHS:
            counters.append(_pack(w[pos:pos + width]))
            pos += width
        S = config.stages
        regs = [tuple(int(b) for b in w[pos + i * S: pos + (i + 1) * S]) for i in range(4)]

        thr = config.thresholds
        # n_x1 and n_x2 count completed epochs, so they stay below their thresholds
        limits = thr[:4] + (thr[4] - 1, thr[5] - 1)
        for name, c, lim in zip(("n_x1a", "n_x1b", "n_x2a", "n_x2b", "n_x1", "n_x2"),
                                counters, limits):
            if c > lim:
                raise InvalidStateError(f"{name}={c} exceeds its threshold {lim}")

        gen = cls(config)
        ta = gen._tabs[0]
        n_x1a = counters[0]
        if n_x1a >= config.precession.theta_x1a:
            raise InvalidStateError("X1A is never held")
        for p in ta.lookup.get(_pack(regs[0]), []):
            k = counters[4] * config.t_x1 + n_x1a * ta.T + p
            gen.seek(k)
            st = gen.state()
            if st.counters == tuple(counters) and st.registers == tuple(regs):
                return gen
        raise InvalidStateError("register contents and counters are inconsistent")
