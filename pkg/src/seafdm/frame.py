"""Three-block frame, receiver synchronization and eavesdropper receivers.

A frame holds K symbols.  Symbols ``0..J-1`` carry a known PN header, symbols
``J..E-1`` carry the spread generator state, and symbols ``E..K-1`` carry
payload under LPPN-driven chirps.  Every symbol has a pilot at affine index
0 and ``Q`` empty guard bins on each side of it.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .channel import ChannelRealization
from .codebook import ChirpCodebook, next_c2_vector
from .equalizer import (EmptyChannelError, TimeDomainMmse, estimate_channel, pilot_aided_mmse,
                         pilot_response)
from .errors import (ConfigurationError, FrameNotFoundError, InvalidStateError, NumericalRankError,
                     StateFormatError)
from .lppn import LppnConfig, LppnGenerator, msequence, state_vector_length, DEFAULT_LPPN_CONFIG
from .modem import add_cpp, chirp, daft, default_c1, idaft, qam_demap, qam_map

__all__ = [
    "HEADER_TAPS",
    "SPREADING_SEQUENCE",
    "FrameLayout",
    "pilot_amplitude",
    "spread_state",
    "despread",
    "build_frame",
    "FrameTx",
    "SymbolDemodulator",
    "detect_frame",
    "refine_offset",
    "SyncStage",
    "SyncState",
    "BobResult",
    "bob_receive_frame",
    "eve_search_c2",
    "eve_receive_frame",
    "write_frame_binary",
]

log = logging.getLogger(__name__)

# x^13 + x^4 + x^3 + x + 1, period 8191 with the register convention of lfsr_step
HEADER_TAPS = (0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 1, 1)
HEADER_SEED = (1,) + (0,) * 12
SPREADING_SEQUENCE = (1, 0, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0)


def pilot_amplitude(snr_p_db: float, noise_var: float, floor: float = 1.0) -> float:
    """Pilot amplitude for a given pilot SNR, never weaker than a data symbol."""
    return float(np.sqrt(max(10.0 ** (snr_p_db / 10.0) * noise_var, floor)))


@dataclass(frozen=True)
class FrameLayout:
    """Frame geometry.

    ``N = 2Q + L + 1``: pilot at index 0, data on ``Q+1 .. Q+L``, zeros
    elsewhere.  ``F = 0`` sends the state vector without spreading.
    """

    N: int = 1024
    n_cp: int = 17
    Q: int = 50
    J: int = 4
    E: int = 8
    K: int = 256
    F: int = 15
    R: int = 4
    u: float = 0.0
    alpha_max: int = 2
    c1: float | None = None
    m_F: tuple = SPREADING_SEQUENCE
    state_bits: int = 144
    sync_pilot_floor: float = 10.0
    header_bits: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.c1 is None:
            object.__setattr__(self, "c1", default_c1(self.N, self.alpha_max))
        if self.L < 1:
            raise ConfigurationError("N too small for the guard width")
        if not 0 < self.J < self.E < self.K:
            raise ConfigurationError("need 0 < J < E < K")
        if not 0 <= self.n_cp < self.N:
            raise ConfigurationError("bad prefix length")
        if self.F:
            object.__setattr__(self, "m_F", tuple(int(b) for b in self.m_F[: self.F]))
            if len(self.m_F) != self.F:
                raise ConfigurationError(f"spreading sequence shorter than F={self.F}")
        if self.block2_capacity < self.state_bits * max(self.F, 1):
            raise ConfigurationError(
                f"state vector needs {self.state_bits * max(self.F, 1)} bits, block 2 holds "
                f"{self.block2_capacity}")
        nh = self.J * self.L * self.bits_per_symbol
        hdr = msequence(HEADER_TAPS, HEADER_SEED, nh)
        object.__setattr__(self, "header_bits", hdr)

    @property
    def L(self) -> int:
        return self.N - 2 * self.Q - 1

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.R))

    @property
    def data_slice(self) -> slice:
        return slice(self.Q + 1, self.Q + 1 + self.L)

    @property
    def symbol_length(self) -> int:
        return self.N + self.n_cp

    @property
    def frame_length(self) -> int:
        return self.K * self.symbol_length

    @property
    def block2_capacity(self) -> int:
        return (self.E - self.J) * self.L * self.bits_per_symbol

    @property
    def payload_bits(self) -> int:
        return (self.K - self.E) * self.L * self.bits_per_symbol

    @property
    def max_guard_delay(self) -> int:
        """Largest |delay| whose pilot response stays inside the guard band."""
        b = 2.0 * self.N * self.c1
        return int(min(self.n_cp, np.floor((self.Q - self.alpha_max - 3) / b)))

    def sync_pilot(self, pilot_amp: float) -> float:
        """Pilot amplitude of blocks 1-2, kept well above the data symbols.

        Frame search equalizes misaligned windows in which data leaks into
        the guard band; a dominant pilot keeps the channel estimate anchored.
        """
        return max(float(pilot_amp), self.sync_pilot_floor)

    def symbol_vector(self, data_symbols, pilot_amp: float) -> np.ndarray:
        x = np.zeros(self.N, dtype=complex)
        x[0] = pilot_amp
        x[self.data_slice] = data_symbols
        return x


# ---------------------------------------------------------------------------
def spread_state(w, m_F) -> np.ndarray:
    """Bipolar direct-sequence spreading: every state bit times the chip pattern."""
    wb = 2 * np.asarray(w, dtype=np.int64).ravel() - 1
    mb = 2 * np.asarray(m_F, dtype=np.int64).ravel() - 1
    if mb.size == 0:
        return wb.astype(float)
    return np.kron(wb, mb).astype(float)


def despread(S, m_F) -> np.ndarray:
    """Correlate each row of received bipolar chips with the pattern and slice.

    Parameters
    ----------
    S : array_like, shape (D, F)
        One row per state bit.  With an empty pattern, a (D,) or (D, 1)
        array of bipolar values is sliced directly.
    """
    S = np.asarray(S, dtype=float)
    mb = 2 * np.asarray(m_F, dtype=np.int64).ravel() - 1
    if mb.size == 0:
        return (S.reshape(-1) > 0).astype(np.uint8)
    stat = S.reshape(-1, mb.size) @ mb / mb.size
    return (stat > 0).astype(np.uint8)


def _block2_bits(w, layout: FrameLayout) -> np.ndarray:
    chips = spread_state(w, layout.m_F[: layout.F] if layout.F else ())
    bits = np.zeros(layout.block2_capacity, dtype=np.uint8)
    bits[: chips.size] = chips > 0
    return bits


# ---------------------------------------------------------------------------
@dataclass
class FrameTx:
    samples: np.ndarray
    symbols: np.ndarray  # (K, N) affine-domain vectors
    c2: np.ndarray  # (K, N) transmit chirps
    state_bits: np.ndarray
    payload: np.ndarray


def build_frame(payload_bits, gen: LppnGenerator, layout: FrameLayout, codebook: ChirpCodebook,
                pilot_amp: float = 1.0) -> FrameTx:
    """Assemble one frame and advance `gen` through its secured block.

    The state vector is taken from `gen` before any chirp of block 3 is
    drawn, so a receiver that restores it continues exactly where block 3
    starts.
    """
    payload_bits = np.asarray(payload_bits, dtype=np.uint8).ravel()
    if payload_bits.size != layout.payload_bits:
        raise ConfigurationError(
            f"payload must have {layout.payload_bits} bits, got {payload_bits.size}")
    N, L, R = layout.N, layout.L, layout.R
    w = gen.serialize()
    if w.size != layout.state_bits:
        raise ConfigurationError("generator state size differs from the layout")

    X = np.zeros((layout.K, N), dtype=complex)
    C2 = np.full((layout.K, N), float(layout.u))
    hdr = qam_map(layout.header_bits, R).reshape(layout.J, L)
    b2 = qam_map(_block2_bits(w, layout), R).reshape(layout.E - layout.J, L)
    pay = qam_map(payload_bits, R).reshape(layout.K - layout.E, L)
    for k in range(layout.K):
        if k < layout.J:
            d = hdr[k]
        elif k < layout.E:
            d = b2[k - layout.J]
        else:
            d = pay[k - layout.E]
            C2[k] = next_c2_vector(gen, codebook, N)
        X[k] = layout.symbol_vector(d, pilot_amp if k >= layout.E else layout.sync_pilot(pilot_amp))
    S = add_cpp(idaft(X, layout.c1, C2), layout.c1, layout.n_cp)
    return FrameTx(S.reshape(-1), X, C2, w, payload_bits)


def write_frame_binary(path, samples):
    """Interleaved re/im little-endian float64."""
    s = np.asarray(samples, dtype=np.complex128)
    np.stack([s.real, s.imag], axis=-1).astype("<f8").tofile(path)


# ---------------------------------------------------------------------------
class SymbolDemodulator:
    """Pilot-aided demodulation of single symbols cut from a sample stream.

    Parameters
    ----------
    layout : FrameLayout
    noise_var : float
    pilot_amp : float
    channel : ChannelRealization, optional
        Known channel (perfect CSI), defined with time origin at stream
        sample `channel_origin`.  Without it the pilot is used.
    """

    def __init__(self, layout: FrameLayout, noise_var: float, pilot_amp: float,
                 channel: ChannelRealization | None = None, channel_origin: int = 0,
                 delay_range=None, estimator_opts=None):
        self.layout = layout
        self.noise_var = float(noise_var)
        self.pilot_amp = float(pilot_amp)
        self.channel = channel
        self.channel_origin = channel_origin
        g = layout.max_guard_delay
        self.delay_range = delay_range if delay_range is not None else (0, g)
        self.estimator_opts = dict(estimator_opts or {})

    def channel_for(self, y0, start: int) -> ChannelRealization:
        lay = self.layout
        if self.channel is not None:
            return self.channel.advanced(start - self.channel_origin)
        est = estimate_channel(y0, lay.N, lay.c1, self.pilot_amp, lay.Q, self.noise_var,
                               self.delay_range, lay.alpha_max, **self.estimator_opts)
        return est.to_realization(lay.N, lay.n_cp)

    def remodulator(self, c2):
        """Map a chirp-free estimate to the chirp-free data vector of its hard decisions."""
        lay = self.layout
        rot = chirp(np.broadcast_to(np.asarray(c2, float), (lay.N,)), np.arange(lay.N))

        def remodulate(x0):
            xd = np.zeros(lay.N, dtype=complex)
            xh = np.conj(rot[lay.data_slice]) * x0[lay.data_slice]
            xd[lay.data_slice] = rot[lay.data_slice] * qam_map(qam_demap(xh, lay.R), lay.R)
            return xd

        return remodulate

    def chirp_free(self, r, start: int, c2=None):
        """MMSE estimate of the chirp-free symbol vector whose body starts at `start`.

        With an estimated channel and a known transmit-chirp assumption `c2`,
        a decision-directed second pass refines the channel estimate.
        Returns the estimate and the channel that was used.
        """
        lay = self.layout
        block = np.asarray(r[start:start + lay.N])
        if block.size < lay.N:
            block = np.concatenate([block, np.zeros(lay.N - block.size, complex)])
        y0 = daft(block, lay.c1, 0.0)
        if self.channel is None:
            return pilot_aided_mmse(y0, lay.N, lay.c1, self.pilot_amp, lay.Q, self.noise_var,
                                    self.delay_range, lay.alpha_max, lay.n_cp,
                                    None if c2 is None else self.remodulator(c2),
                                    **self.estimator_opts)
        ch = self.channel_for(y0, start)
        y0 = y0 - self.pilot_amp * pilot_response(ch, lay.c1, lay.N)
        x0 = TimeDomainMmse(ch, lay.c1, self.noise_var, lay.N)(y0)
        return x0, ch

    def data(self, r, start: int, c2) -> np.ndarray:
        """Equalized data symbols assuming transmit chirps `c2`."""
        lay = self.layout
        x0, _ = self.chirp_free(r, start, c2)
        xh = np.conj(chirp(np.broadcast_to(np.asarray(c2, float), (lay.N,)), np.arange(lay.N))) * x0
        return xh[lay.data_slice]

    def bits(self, r, start: int, c2) -> np.ndarray:
        return qam_demap(self.data(r, start, c2), self.layout.R)


def _symbol_start(layout: FrameLayout, offset: int, k: int) -> int:
    return offset + k * layout.symbol_length + layout.n_cp


@dataclass
class FrameDetection:
    offset: int
    coarse_offset: int
    correlation: int
    paths: list = field(default_factory=list)


def _header_correlation(r, t, layout, demod, need):
    """Bipolar header correlation of the window starting at `t`, with early exit."""
    L2 = layout.L * layout.bits_per_symbol
    hb = 2 * layout.header_bits.astype(np.int64) - 1
    total = 0
    for j in range(layout.J):
        try:
            bits = demod.bits(r, _symbol_start(layout, t, j), layout.u)
            total += int(np.dot(2 * bits.astype(np.int64) - 1, hb[j * L2:(j + 1) * L2]))
        except (EmptyChannelError, NumericalRankError):
            # a window whose channel cannot be inverted carries no header
            pass
        if total + (layout.J - 1 - j) * L2 < need:
            return total, False
    return total, total >= need


def detect_frame(r, layout: FrameLayout, noise_var: float, pilot_amp: float,
                 threshold_frac: float = 0.7, start: int = 0, stop: int | None = None,
                 refine: bool = True, max_windows: int | None = None) -> FrameDetection:
    """Find the first frame in a sample stream.

    Windows of J symbols slide by the prefix length.  Each is demodulated
    with the constant header chirp and its bits correlated (bipolar)
    against the known header; the first window reaching
    ``threshold_frac`` of the header length is accepted.  The coarse
    position is then refined to sample resolution with
    :func:`refine_offset`.

    Raises
    ------
    FrameNotFoundError
    """
    r = np.asarray(r)
    span = layout.J * layout.symbol_length
    g = layout.max_guard_delay
    # the strong header pilot needs no decision-directed refinement while scanning
    demod = SymbolDemodulator(layout, noise_var, layout.sync_pilot(pilot_amp), delay_range=(-g, g),
                              estimator_opts={"passes": 1})
    need = threshold_frac * layout.header_bits.size
    stop = r.size - span if stop is None else min(stop, r.size - span)
    count = 0
    for t in range(start, stop + 1, max(layout.n_cp, 1)):
        corr, ok = _header_correlation(r, t, layout, demod, need)
        count += 1
        if ok:
            det = FrameDetection(t, t, corr)
            if refine:
                off, paths = refine_offset(r, t, layout, noise_var, pilot_amp)
                det.offset, det.paths = off, paths
                # confirm the refined alignment still carries the header
                corr2, ok2 = _header_correlation(r, off, layout, demod, need)
                if ok2:
                    det.correlation = corr2
                else:
                    det.offset = t
            return det
        if max_windows is not None and count >= max_windows:
            break
    raise FrameNotFoundError("no window reached the header correlation threshold")


def header_waveform(layout: FrameLayout, pilot_amp: float) -> np.ndarray:
    """Time samples of block 1, which a legitimate receiver can regenerate."""
    hdr = qam_map(layout.header_bits, layout.R).reshape(layout.J, layout.L)
    amp = layout.sync_pilot(pilot_amp)
    X = np.stack([layout.symbol_vector(hdr[j], amp) for j in range(layout.J)])
    return add_cpp(idaft(X, layout.c1, layout.u), layout.c1, layout.n_cp).reshape(-1)


def refine_offset(r, coarse: int, layout: FrameLayout, noise_var: float, pilot_amp: float,
                  search: int | None = None, kappa: float = 30.0, rel_floor: float = 1e-3,
                  max_paths: int = 8):
    """Sample-accurate frame start from the first arriving path.

    The known header waveform is cross-correlated with the stream over a
    range of lags and a band of Doppler shifts.  Paths are picked greedily
    and cancelled (joint least squares on their gains) until nothing exceeds
    ``max(kappa * noise floor, rel_floor * strongest)``.  The frame starts
    at the earliest detected lag.

    Returns
    -------
    offset : int
    paths : list of (lag, doppler, gain)
    """
    r = np.asarray(r, dtype=complex)
    s = header_waveform(layout, pilot_amp)
    Lh = s.size
    N = layout.N
    search = 2 * layout.n_cp if search is None else search
    lags = np.arange(-search, search + 1)
    lo = max(0, coarse - search)
    hi = min(r.size, coarse + search + Lh)
    seg = np.zeros(Lh + 2 * search, dtype=complex)
    seg[lo - (coarse - search):hi - (coarse - search)] = r[lo:hi]
    n = np.arange(Lh)
    es = float(np.vdot(s, s).real)
    noise_floor = noise_var * es

    nfft = 1 << int(np.ceil(np.log2(4 * Lh)))
    f = np.fft.fftfreq(nfft)  # cycles per sample
    band = np.abs(f * N) <= layout.alpha_max + 1.0

    def tone(nu):
        return np.exp(2j * np.pi * nu * n / N)

    def column(lag, nu):
        # contribution of a unit path at (lag, nu) to the segment
        col = np.zeros(seg.size, dtype=complex)
        i0 = lag + search
        col[i0:i0 + Lh] = s * tone(nu)
        return col

    found = []
    resid = seg.copy()
    strongest = None
    while len(found) < max_paths:
        Z = np.empty((lags.size, int(band.sum())))
        for i, lag in enumerate(lags):
            z = resid[lag + search: lag + search + Lh] * np.conj(s)
            Z[i] = np.abs(np.fft.fft(z, nfft)[band]) ** 2
        i, k = np.unravel_index(int(np.argmax(Z)), Z.shape)
        if strongest is None:
            strongest = Z[i, k]
        if Z[i, k] < max(kappa * noise_floor, rel_floor * strongest) or Z[i, k] <= 0:
            break
        lag = int(lags[i])
        z = resid[lag + search: lag + search + Lh] * np.conj(s)
        f0 = f[band][k] * N
        res = minimize_scalar(lambda nu: -abs(np.vdot(tone(nu), z)),
                              bounds=(f0 - 0.5 * N / nfft * 2, f0 + 0.5 * N / nfft * 2),
                              method="bounded", options={"xatol": 1e-7})
        found.append((lag, float(res.x)))
        A = np.stack([column(l_, nu_) for l_, nu_ in found], axis=1)
        g, *_ = np.linalg.lstsq(A, seg, rcond=None)
        resid = seg - A @ g
    if not found:
        raise FrameNotFoundError("no path found around the coarse position")
    A = np.stack([column(l_, nu_) for l_, nu_ in found], axis=1)
    g, *_ = np.linalg.lstsq(A, seg, rcond=None)
    paths = [(l_, nu_, complex(g_)) for (l_, nu_), g_ in zip(found, g)]
    first = min(l_ for l_, _ in found)
    return coarse + first, paths


# ---------------------------------------------------------------------------
class SyncStage(enum.IntEnum):
    SEARCHING = 0
    LPPN_SYNC = 1
    SECURED = 2


@dataclass
class SyncState:
    stage: SyncStage = SyncStage.SEARCHING
    frame_offset: int | None = None
    generator: LppnGenerator | None = None
    events: list = field(default_factory=list)

    def advance(self, stage: SyncStage, **info):
        if stage < self.stage:
            raise RuntimeError("sync stages only move forward")
        if stage == SyncStage.SECURED and self.generator is None:
            raise RuntimeError("secured stage needs a restored generator")
        self.stage = stage
        self.log(stage.name.lower(), **info)

    def log(self, event: str, **info):
        self.events.append((event, info))
        log.debug("%s %s", event, info)

    def to_text(self) -> str:
        lines = []
        for ev, info in self.events:
            kv = " ".join(f"{k}={v}" for k, v in info.items())
            lines.append(f"{ev} {kv}".rstrip())
        return "\n".join(lines)


@dataclass
class BobResult:
    payload: np.ndarray
    state: SyncState
    received_state_bits: np.ndarray | None = None
    restored: bool = False


def _demod_block(r, layout, demod, offset, first, last, c2s):
    out = []
    for i, k in enumerate(range(first, last)):
        out.append(demod.bits(r, _symbol_start(layout, offset, k), c2s[i]))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.uint8)


def bob_receive_frame(r, layout: FrameLayout, codebook: ChirpCodebook, noise_var: float,
                      pilot_amp: float, lppn_config: LppnConfig | None = None,
                      offset: int | None = None, threshold_frac: float = 0.7,
                      channel: ChannelRealization | None = None, channel_origin: int = 0,
                      search_start: int = 0) -> BobResult:
    """Legitimate receiver: find the frame, recover the generator state, decode.

    Parameters
    ----------
    offset : int, optional
        Skip frame search and use this frame start.
    channel : ChannelRealization, optional
        Perfect CSI for all symbols; otherwise pilot-based estimation.

    Raises
    ------
    FrameNotFoundError
        Stage 1 failed.
    """
    lppn_config = lppn_config or DEFAULT_LPPN_CONFIG
    st = SyncState()
    if offset is None:
        det = detect_frame(r, layout, noise_var, pilot_amp, threshold_frac, start=search_start)
        offset = det.offset
        st.frame_offset = offset
        st.advance(SyncStage.LPPN_SYNC, frame_offset=offset, coarse_offset=det.coarse_offset,
                   header_correlation=det.correlation)
    else:
        st.frame_offset = offset
        st.advance(SyncStage.LPPN_SYNC, frame_offset=offset, coarse_offset=None,
                   header_correlation=None)

    sync_demod = SymbolDemodulator(layout, noise_var, layout.sync_pilot(pilot_amp), channel,
                                   channel_origin)
    demod = SymbolDemodulator(layout, noise_var, pilot_amp, channel, channel_origin)
    D = layout.state_bits
    eq2 = np.concatenate([sync_demod.data(r, _symbol_start(layout, offset, k), layout.u)
                          for k in range(layout.J, layout.E)])
    if layout.F and layout.R == 4:
        # soft despreading: QPSK maps bit 1 to a negative component
        chips = -np.stack([eq2.real, eq2.imag], axis=1).reshape(-1)[: D * layout.F]
        w_rx = despread(chips.reshape(D, layout.F), layout.m_F)
    elif layout.F:
        chips = 2.0 * qam_demap(eq2, layout.R)[: D * layout.F] - 1.0
        w_rx = despread(chips.reshape(D, layout.F), layout.m_F)
    else:
        w_rx = qam_demap(eq2, layout.R)[:D].astype(np.uint8)

    nb3 = layout.K - layout.E
    try:
        gen = LppnGenerator.restore(w_rx, lppn_config)
    except (InvalidStateError, StateFormatError) as exc:
        st.log("restore_failed", reason=str(exc))
        # keep demodulating with the public constant chirp; the result is
        # what a receiver without the secret stream would see
        payload = _demod_block(r, layout, demod, offset, layout.E, layout.K, [layout.u] * nb3)
        return BobResult(payload, st, w_rx, False)

    st.generator = gen
    st.advance(SyncStage.SECURED, chip_index=gen.chip_index)
    c2s = [next_c2_vector(gen, codebook, layout.N) for _ in range(nb3)]
    payload = _demod_block(r, layout, demod, offset, layout.E, layout.K, c2s)
    st.log("payload", bits=payload.size)
    return BobResult(payload, st, w_rx, True)


# ---------------------------------------------------------------------------
def eve_search_c2(true_c2, c2_max: float, delta_e: float) -> np.ndarray:
    """Closest point of the grid ``-c2_max + k * delta_e`` inside the codebook range."""
    true_c2 = np.asarray(true_c2, dtype=float)
    kmax = int(np.floor(2 * c2_max / delta_e + 1e-9))
    k = np.clip(np.round((true_c2 + c2_max) / delta_e), 0, kmax)
    return -c2_max + k * delta_e


def eve_receive_frame(r, layout: FrameLayout, codebook: ChirpCodebook, noise_var: float,
                      pilot_amp: float, strategy: str = "zero", true_c2=None,
                      delta_e: float | None = None, offset: int | None = None,
                      threshold_frac: float = 0.7, channel: ChannelRealization | None = None,
                      channel_origin: int = 0) -> np.ndarray:
    """Eavesdropper decoding of block 3.

    ``strategy="zero"`` demodulates with ``c2 = 0``.  ``strategy="search"``
    uses, per subcarrier, the grid point closest to the true chirp
    (`true_c2`, shape (K - E, N)), i.e. the best outcome of a search with
    step `delta_e`.
    """
    if offset is None:
        offset = detect_frame(r, layout, noise_var, pilot_amp, threshold_frac).offset
    nb3 = layout.K - layout.E
    if strategy == "zero":
        c2s = [0.0] * nb3
    elif strategy == "search":
        if true_c2 is None or delta_e is None:
            raise ConfigurationError("search strategy needs the true chirps and a step")
        c2s = [eve_search_c2(c, codebook.c2_max, delta_e) for c in np.asarray(true_c2)]
    else:
        raise ConfigurationError(f"unknown eavesdropper strategy {strategy!r}")
    demod = SymbolDemodulator(layout, noise_var, pilot_amp, channel, channel_origin)
    return _demod_block(r, layout, demod, offset, layout.E, layout.K, c2s)
