"""Seeded experiment runner: BER, SINR and search-interval sweeps, sync demo.

Every frame draws its randomness from ``SeedSequence([seed, frame])`` so a
frame sees the same bits, channels and unit noise at every sweep point and
for every receiver.  Frames are processed in fixed-size batches and the
stopping rule is checked between batches, which keeps results independent
of the number of worker threads.
"""
from __future__ import annotations

import ast
import configparser
import csv
import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelRealization, add_awgn, apply_channel, noise_variance, sample_jakes_channel
from .codebook import ChirpCodebook, build_codebook, next_c2_vector
from .equalizer import TimeDomainMmse, pilot_aided_mmse, pilot_response
from .errors import ConfigurationError, FrameNotFoundError, SeafdmError
from .frame import FrameLayout, bob_receive_frame, build_frame, eve_search_c2, pilot_amplitude
from .lppn import LppnGenerator
from .modem import add_cpp, chirp, daft, default_c1, idaft, qam_demap, qam_map
from .security import sinr_sweep

__all__ = [
    "ExperimentConfig",
    "PRESETS",
    "load_config",
    "SweepResult",
    "run_ber_sweep",
    "run_sinr_sweep",
    "run_search_interval_sweep",
    "run_sync_demo",
    "lppn_dump",
]

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """All knobs of one experiment.

    ``symbol_layout`` selects ``"full"`` (every subcarrier carries data, needs
    perfect CSI) or ``"pilot"`` (pilot at index 0 with ``Q`` guards).  The
    sweep lists used depend on the experiment: ``snr_db`` for BER sweeps,
    ``c2max_values`` for SINR sweeps and ``delta_e_values`` for search sweeps.
    """

    name: str = "simulation"
    # waveform
    N: int = 1024
    n_cp: int = 17
    c1: float | None = None
    R: int = 4
    M: int = 1024
    c2_max: float = 4.88e-6
    # frame layout
    Q: int = 50
    J: int = 4
    E: int = 8
    K: int = 256
    F: int = 15
    u: float = 0.0
    # channel
    P: int = 3
    delay_taps: tuple = (0, 1, 2)
    alpha_max: int = 2
    # sweeps
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    c2max_values: tuple = tuple(float(v) for v in np.logspace(-9, -1, 33))
    delta_e_values: tuple = (9.77e-8, 1.95e-7, 3.9e-7, 7.8e-7, 1.56e-6, 3.12e-6)
    search_snr_db: float = 25.0
    # Monte-Carlo control
    frames: int = 1000
    min_frames: int = 1
    target_errors: int = 100
    batch: int = 8
    seed: int = 1
    threads: int = 1
    # receivers
    csi: str = "perfect"
    snr_p_db: float = 30.0
    symbol_layout: str = "full"
    eve_strategy: str = "zero"
    eve_channel: str = "independent"
    # analytic SINR
    gamma_eve_db: float = 25.0
    sinr_M: int = 100_000
    # sync demo: (F, snr_db, threshold_frac) per case
    sync_cases: tuple = ((15, 10.0, 0.5), (0, 0.0, 0.3))
    sync_frames: int = 100
    sync_lead_max: int = 400
    # LPPN export
    lppn_start: int = 0
    lppn_count: int = 10_000
    output: str = "results.csv"

    def __post_init__(self):
        self.delay_taps = tuple(int(t) for t in self.delay_taps)
        for key in ("snr_db", "c2max_values", "delta_e_values"):
            setattr(self, key, tuple(float(v) for v in np.atleast_1d(getattr(self, key))))
        self.sync_cases = tuple((int(f), float(s), float(t)) for f, s, t in self.sync_cases)
        self.validate()

    def validate(self):
        if self.frames < 1 or self.min_frames < 0 or self.batch < 1 or self.sync_frames < 1:
            raise ConfigurationError("frame counts must be positive")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if len(self.delay_taps) != self.P:
            raise ConfigurationError(f"{self.P} paths need {self.P} delay taps")
        if any(not 0 <= t <= self.n_cp for t in self.delay_taps):
            raise ConfigurationError("delay taps must lie within the prefix")
        if self.csi not in ("perfect", "estimated"):
            raise ConfigurationError(f"csi must be 'perfect' or 'estimated', got {self.csi!r}")
        if self.symbol_layout not in ("full", "pilot"):
            raise ConfigurationError(f"unknown symbol layout {self.symbol_layout!r}")
        if self.csi == "estimated" and self.symbol_layout != "pilot":
            raise ConfigurationError("estimated CSI needs the pilot symbol layout")
        if self.eve_strategy not in ("zero", "search"):
            raise ConfigurationError(f"unknown eavesdropper strategy {self.eve_strategy!r}")
        if self.eve_channel not in ("independent", "shared"):
            raise ConfigurationError(f"eve_channel must be 'independent' or 'shared'")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")
        ChirpCodebook(self.c2_max, self.M)

    @property
    def c1_value(self) -> float:
        return default_c1(self.N, self.alpha_max) if self.c1 is None else float(self.c1)

    def layout(self, **over) -> FrameLayout:
        kw = dict(N=self.N, n_cp=self.n_cp, Q=self.Q, J=self.J, E=self.E, K=self.K, F=self.F,
                  R=self.R, u=self.u, alpha_max=self.alpha_max, c1=self.c1_value)
        kw.update(over)
        return FrameLayout(**kw)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


PRESETS = {
    # simulation parameters: one symbol per frame, three Jakes paths
    "simulation": ExperimentConfig(),
    # over-the-air parameters: 256-symbol frames, two paths about three samples apart
    "testbed": ExperimentConfig(name="testbed", n_cp=13, K=256, P=2, delay_taps=(0, 3), alpha_max=1),
}


def _parse_value(raw: str):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw.strip()


def load_config(path=None, text: str | None = None, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file; a ``preset`` key picks the starting point."""
    if path is not None:
        text = Path(path).read_text()
    values = {}
    if text:
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string("[experiment]\n" + text)
        except configparser.Error as exc:
            raise ConfigurationError(f"bad config syntax: {exc}") from exc
        values = {k: _parse_value(v) for k, v in cp["experiment"].items()}
    preset = values.pop("preset", "simulation")
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return PRESETS[preset].replace(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


# ---------------------------------------------------------------------------
@dataclass
class SweepResult:
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self, path):
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return path

    def gnuplot_script(self, csv_name: str, logy: bool = True) -> str:
        lines = ["set datafile separator ','", "set key autotitle columnhead", "set grid"]
        if logy:
            lines.append("set logscale y")
        if self.columns[0] in ("c2max", "delta_e"):
            lines.append("set logscale x")
        lines.append(f"set xlabel '{self.columns[0]}'")
        plots = [f"'{csv_name}' using 1:{i + 1} with linespoints"
                 for i, c in enumerate(self.columns[1:], start=1) if c != "frames"]
        lines.append("plot " + ", \\\n     ".join(plots))
        return "\n".join(lines) + "\n"

    def write(self, path, logy: bool = True):
        """CSV plus a companion gnuplot script next to it."""
        p = self.to_csv(path)
        p.with_suffix(".gp").write_text(self.gnuplot_script(p.name, logy))
        return p


# ---------------------------------------------------------------------------
class _Link:
    """Fixed parts of one BER experiment shared by all frames."""

    def __init__(self, cfg: ExperimentConfig, codebook: ChirpCodebook):
        self.cfg = cfg
        self.N = cfg.N
        self.c1 = cfg.c1_value
        self.codebook = codebook
        codebook.bits_per_index  # chip-driven selection needs a power-of-two M
        # the baseline sends every subcarrier with the single chirp -c2_max
        self.baseline_c2 = build_codebook(cfg.c2_max, 1).value(np.zeros(cfg.N, dtype=int))
        if cfg.symbol_layout == "pilot":
            self.layout = cfg.layout()
            self.data = self.layout.data_slice
        else:
            self.layout = None
            self.data = slice(0, cfg.N)
        self.n_data = self.data.stop - self.data.start
        self.bits_per_frame = self.n_data * int(np.log2(cfg.R))
        # frames are single symbols; frame f uses the chips of symbol f
        self.chip_base = int(np.random.default_rng(cfg.seed).integers(0, 2 ** 40))

    def draws(self, frame: int):
        ss = np.random.SeedSequence([self.cfg.seed, frame])
        names = ("bits", "bob_channel", "bob_noise", "eve_channel", "eve_noise")
        return dict(zip(names, (np.random.default_rng(s) for s in ss.spawn(len(names)))))

    def symbol(self, bits, pilot_amp):
        x = np.zeros(self.N, dtype=complex)
        x[self.data] = qam_map(bits, self.cfg.R)
        if self.layout is not None:
            x[0] = pilot_amp
        return x

    def chirps(self, frame: int, codebook: ChirpCodebook):
        gen = LppnGenerator(chip_index=self.chip_base + frame * self.N)
        return next_c2_vector(gen, codebook, self.N)

    def transmit(self, x, c2):
        return add_cpp(idaft(x, self.c1, c2), self.c1, self.cfg.n_cp)

    def channel(self, rng) -> ChannelRealization:
        c = self.cfg
        return sample_jakes_channel(c.P, c.alpha_max, c.delay_taps, rng, c.N, c.n_cp)

    def remodulator(self, c2_rx):
        rot = chirp(np.broadcast_to(np.asarray(c2_rx, float), (self.N,)), np.arange(self.N))[self.data]
        R = self.cfg.R

        def remodulate(x0):
            xd = np.zeros(self.N, dtype=complex)
            xd[self.data] = rot * qam_map(qam_demap(np.conj(rot) * x0[self.data], R), R)
            return xd

        return remodulate

    def receive(self, s, ch, unit_noise, noise_var, pilot_amp, c2_rx, cache=None):
        """Chirp-free MMSE with known or estimated channel, then chirp removal."""
        cfg = self.cfg
        r = apply_channel(s, ch) + np.sqrt(noise_var) * unit_noise
        y0 = daft(r[cfg.n_cp:], self.c1, 0.0)
        if cfg.csi == "estimated":
            lay = self.layout
            x0, _ = pilot_aided_mmse(y0, self.N, self.c1, pilot_amp, lay.Q, noise_var,
                                     (0, lay.max_guard_delay), cfg.alpha_max, cfg.n_cp,
                                     self.remodulator(c2_rx))
        else:
            if self.layout is not None:
                y0 = y0 - pilot_amp * pilot_response(ch, self.c1, self.N)
            # the equalizer depends only on the channel, so receivers sharing it share the factorization
            key = (id(ch), noise_var)
            eq = cache.get(key) if cache is not None else None
            if eq is None:
                eq = TimeDomainMmse(ch, self.c1, noise_var, self.N)
                if cache is not None:
                    cache[key] = eq
            x0 = eq(y0)
        xh = np.conj(chirp(np.broadcast_to(np.asarray(c2_rx, float), (self.N,)), np.arange(self.N))) * x0
        return qam_demap(xh[self.data], cfg.R)


def _unit_noise(rng, n):
    return add_awgn(np.zeros(n, dtype=complex), 1.0, rng)


def _ber_frame(link: _Link, frame: int, snr_db: float, delta_e: float | None = None,
               receivers=("bob", "eve", "baseline")):
    cfg = link.cfg
    d = link.draws(frame)
    noise_var = noise_variance(snr_db)
    amp = pilot_amplitude(cfg.snr_p_db, noise_var)
    bits = d["bits"].integers(0, 2, link.bits_per_frame)
    x = link.symbol(bits, amp)
    c2_alice = link.chirps(frame, link.codebook)
    s = link.transmit(x, c2_alice)
    n_len = cfg.N + cfg.n_cp
    ch_b = link.channel(d["bob_channel"])
    w_b = _unit_noise(d["bob_noise"], n_len)
    if cfg.eve_channel == "shared":
        ch_e, w_e = ch_b, w_b
    else:
        ch_e = link.channel(d["eve_channel"])
        w_e = _unit_noise(d["eve_noise"], n_len)
    cache = {}
    out = {}
    if "bob" in receivers:
        # Bob regenerates the chirps from his own synchronized generator
        c2_bob = link.chirps(frame, link.codebook)
        out["bob"] = int(np.sum(link.receive(s, ch_b, w_b, noise_var, amp, c2_bob, cache) != bits))
    if "baseline" in receivers:
        c2_base = link.baseline_c2
        s0 = link.transmit(x, c2_base)
        out["baseline"] = int(np.sum(link.receive(s0, ch_b, w_b, noise_var, amp, c2_base, cache)
                                     != bits))
    if "eve" in receivers:
        if cfg.eve_strategy == "search":
            if delta_e is None:
                raise ConfigurationError("search strategy needs a search interval")
            c2_eve = eve_search_c2(c2_alice, cfg.c2_max, delta_e)
        else:
            c2_eve = np.zeros(cfg.N)
        out["eve"] = int(np.sum(link.receive(s, ch_e, w_e, noise_var, amp, c2_eve, cache) != bits))
    return out


def _run_point(link: _Link, stop_on, job, pool):
    """Accumulate per-frame error counts until the stopping rule fires."""
    cfg = link.cfg
    totals = {}
    frames = 0
    while frames < cfg.frames:
        n = min(cfg.batch, cfg.frames - frames)
        ids = range(frames, frames + n)
        results = list(pool.map(job, ids)) if pool else [job(i) for i in ids]
        for res in results:
            for k, v in res.items():
                totals[k] = totals.get(k, 0) + v
        frames += n
        if frames >= cfg.min_frames and min(totals[k] for k in stop_on) >= cfg.target_errors:
            break
    return totals, frames


def _pool(cfg):
    return ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None


def run_ber_sweep(cfg: ExperimentConfig) -> SweepResult:
    """BER of Bob, Eve and the constant-chirp baseline versus SNR.

    Rows are ``(snr_db, ber_bob, ber_eve, ber_baseline, frames)``.  A point
    stops once both Bob and the baseline have ``target_errors`` bit errors
    (after at least ``min_frames`` frames) or at the ``frames`` cap.
    """
    if not cfg.snr_db:
        raise ConfigurationError("the SNR sweep is empty")
    link = _Link(cfg, build_codebook(cfg.c2_max, cfg.M))
    rows = []
    pool = _pool(cfg)
    t0 = time.time()
    try:
        for snr in cfg.snr_db:
            totals, frames = _run_point(link, ("bob", "baseline"),
                                        lambda f, snr=snr: _ber_frame(link, f, snr), pool)
            nb = frames * link.bits_per_frame
            rows.append((snr, totals["bob"] / nb, totals["eve"] / nb, totals["baseline"] / nb, frames))
            log.info("snr %.1f dB: %s after %d frames", snr, totals, frames)
    finally:
        if pool:
            pool.shutdown()
    return SweepResult(("snr_db", "ber_bob", "ber_eve", "ber_baseline", "frames"), rows,
                       {"bits_per_frame": link.bits_per_frame, "seconds": time.time() - t0})


def run_sinr_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Analytic average Eve SINR versus c2_max; rows ``(c2max, sinr_eve_dB)``."""
    if not cfg.c2max_values:
        raise ConfigurationError("the c2max sweep is empty")
    rows = sinr_sweep(cfg.c2max_values, cfg.gamma_eve_db, cfg.N, cfg.sinr_M)
    return SweepResult(("c2max", "sinr_eve_dB"), rows)


def run_search_interval_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Eve BER versus the search interval at ``search_snr_db``; rows ``(delta_e, ber_eve)``.

    Eve uses the best grid point for every subcarrier and sees Bob's channel
    and noise, so the chirp quantization error is the only difference
    between them.  Bob's BER on the same frames is kept in ``meta["ber_bob"]``.
    """
    if not cfg.delta_e_values:
        raise ConfigurationError("the search-interval sweep is empty")
    cfg = cfg.replace(eve_strategy="search", eve_channel="shared")
    link = _Link(cfg, build_codebook(cfg.c2_max, cfg.M))
    rows, bob, frames_used = [], [], []
    pool = _pool(cfg)
    try:
        for de in cfg.delta_e_values:
            job = (lambda f, de=de: _ber_frame(link, f, cfg.search_snr_db, de, ("bob", "eve")))
            totals, frames = _run_point(link, ("eve",), job, pool)
            nb = frames * link.bits_per_frame
            rows.append((de, totals["eve"] / nb))
            bob.append(totals["bob"] / nb)
            frames_used.append(frames)
    finally:
        if pool:
            pool.shutdown()
    return SweepResult(("delta_e", "ber_eve"), rows, {"ber_bob": bob, "frames": frames_used})


# ---------------------------------------------------------------------------
@dataclass
class SyncFrameLog:
    case: int
    frame: int
    F: int
    snr_db: float
    detected: bool
    offset_error: int | None
    state_bit_errors: int | None
    restored: bool
    block3_ber: float

    def to_text(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)}" for f in dataclasses.fields(self))


def run_sync_demo(cfg: ExperimentConfig):
    """Send whole frames through the channel and report each sync stage.

    Each case ``(F, snr_db, threshold_frac)`` runs ``sync_frames`` frames with
    a random lead-in before the frame.  Frame-search failures are logged
    and scored as a block-3 BER of 0.5.

    Returns
    -------
    logs : list of SyncFrameLog
    summary : SweepResult
        Rows ``(F, snr_db, detect_rate, restore_rate, ber_block3, frames)``.
    """
    codebook = build_codebook(cfg.c2_max, cfg.M)
    logs, rows = [], []
    for ci, (F, snr, thr) in enumerate(cfg.sync_cases):
        layout = cfg.layout(F=F)
        noise_var = noise_variance(snr)
        amp = pilot_amplitude(cfg.snr_p_db, noise_var)
        for f in range(cfg.sync_frames):
            # cases share frames, channels and noise so they differ only in F, SNR, threshold
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, f]))
            gen = LppnGenerator(chip_index=int(rng.integers(0, 2 ** 40)))
            payload = rng.integers(0, 2, layout.payload_bits)
            tx = build_frame(payload, gen, layout, codebook, amp)
            lead = int(rng.integers(0, cfg.sync_lead_max + 1))
            stream = np.concatenate([np.zeros(lead, complex), tx.samples,
                                     np.zeros(2 * layout.symbol_length, complex)])
            ch = sample_jakes_channel(cfg.P, cfg.alpha_max, cfg.delay_taps, rng, cfg.N, cfg.n_cp)
            r = apply_channel(stream, ch, origin=0) + np.sqrt(noise_var) * _unit_noise(rng, stream.size)
            try:
                res = bob_receive_frame(r, layout, codebook, noise_var, amp, threshold_frac=thr)
            except FrameNotFoundError:
                logs.append(SyncFrameLog(ci, f, F, snr, False, None, None, False, 0.5))
                continue
            except SeafdmError as exc:
                log.warning("frame %d: %s", f, exc)
                logs.append(SyncFrameLog(ci, f, F, snr, True, None, None, False, 0.5))
                continue
            logs.append(SyncFrameLog(
                ci, f, F, snr, True, int(res.state.frame_offset - lead),
                int(np.sum(res.received_state_bits != tx.state_bits)), bool(res.restored),
                float(np.mean(res.payload != payload))))
        case_logs = [lg for lg in logs if lg.case == ci]
        n = len(case_logs)
        rows.append((F, snr, sum(lg.offset_error == 0 for lg in case_logs) / n,
                     sum(lg.restored for lg in case_logs) / n,
                     float(np.mean([lg.block3_ber for lg in case_logs])), n))
    summary = SweepResult(("F", "snr_db", "detect_rate", "restore_rate", "ber_block3", "frames"), rows)
    return logs, summary


def lppn_dump(cfg: ExperimentConfig, path):
    """Write ``chip,x1,x2,lppn`` rows for ``lppn_count`` chips from ``lppn_start``."""
    gen = LppnGenerator(chip_index=cfg.lppn_start)
    x1, x2 = gen.chips_at(cfg.lppn_start, cfg.lppn_count)
    k = np.arange(cfg.lppn_start, cfg.lppn_start + cfg.lppn_count)
    table = np.stack([k, x1, x2, x1 ^ x2], axis=1)
    np.savetxt(path, table, fmt="%d", delimiter=",", header="chip,x1,x2,lppn", comments="")
    return Path(path)
