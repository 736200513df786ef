import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seafdm.channel import ChannelPath, ChannelRealization, add_awgn, apply_channel, noise_variance
from seafdm.codebook import build_codebook, next_c2_vector
from seafdm.errors import ConfigurationError, FrameNotFoundError
from seafdm.frame import (
    FrameLayout,
    SymbolDemodulator,
    SyncStage,
    SyncState,
    bob_receive_frame,
    build_frame,
    despread,
    detect_frame,
    eve_receive_frame,
    eve_search_c2,
    pilot_amplitude,
    spread_state,
    write_frame_binary,
)
from seafdm.lppn import LppnGenerator
from seafdm.modem import chirp

SMALL = FrameLayout(N=256, n_cp=8, Q=20, J=2, E=4, K=8, F=5)


def make_frame(layout, c2_max=1e-3, seed=0, chip_index=None, gen_cls=LppnGenerator, amp=1.0):
    rng = np.random.default_rng(seed)
    gen = gen_cls(chip_index=int(rng.integers(0, 10**9)) if chip_index is None else chip_index)
    cb = build_codebook(c2_max, 1024)
    pay = rng.integers(0, 2, layout.payload_bits)
    return build_frame(pay, gen, layout, cb, amp), cb, rng


# -- spreading -----------------------------------------------------------------
def test_spread_example():
    np.testing.assert_array_equal(spread_state([1], [1, 0]), [1, -1])
    np.testing.assert_array_equal(spread_state([0, 1], [1, 1, 0]), [-1, -1, 1, 1, 1, -1])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_despread_inverts_spread(D, F, seed):
    r = np.random.default_rng(seed)
    w = r.integers(0, 2, D)
    m = r.integers(0, 2, F)
    np.testing.assert_array_equal(despread(spread_state(w, m).reshape(D, F), m), w)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_despread_survives_minority_sign_flips(seed):
    r = np.random.default_rng(seed)
    F, D = 15, 144
    m = r.integers(0, 2, F)
    w = r.integers(0, 2, D)
    S = spread_state(w, m).reshape(D, F)
    for row in S:
        flips = r.choice(F, size=int(r.integers(0, (F + 1) // 2)), replace=False)
        row[flips] *= -1
    np.testing.assert_array_equal(despread(S, m), w)


def test_one_flipped_chip_in_fifteen():
    m = SMALL.m_F + (1,) * 10
    w = np.array([1, 0, 1])
    S = spread_state(w, m[:15]).reshape(3, 15)
    S[1, 4] *= -1
    np.testing.assert_array_equal(despread(S, m[:15]), w)


def test_despread_without_spreading():
    np.testing.assert_array_equal(despread([0.3, -2.0, 1.0], ()), [1, 0, 1])


# -- layout ----------------------------------------------------------------------
def test_default_layout_arithmetic():
    lay = FrameLayout()
    assert lay.N == 2 * lay.Q + lay.L + 1 and lay.L == 923
    assert lay.state_bits * lay.F == 2160 <= lay.block2_capacity == 7384
    assert lay.header_bits.size == lay.J * lay.L * 2
    assert lay.max_guard_delay == 9


def test_layout_validation():
    with pytest.raises(ConfigurationError):
        FrameLayout(N=64, Q=40)
    with pytest.raises(ConfigurationError):
        FrameLayout(J=4, E=4)
    with pytest.raises(ConfigurationError):
        FrameLayout(N=256, n_cp=8, Q=20, J=2, E=3, K=6, F=15)  # state does not fit


def test_pilot_amplitude_floor():
    assert pilot_amplitude(30, 0.01) == pytest.approx(np.sqrt(10))
    assert pilot_amplitude(30, 1e-6) == 1.0


# -- frame building -----------------------------------------------------------------
def test_frame_length_and_payload_check():
    tx, cb, _ = make_frame(SMALL)
    assert tx.samples.size == SMALL.K * (SMALL.n_cp + SMALL.N)
    with pytest.raises(ConfigurationError):
        build_frame(np.zeros(5), LppnGenerator(), SMALL, cb)


def test_block3_chirps_come_from_snapshot_state():
    tx, cb, _ = make_frame(SMALL, chip_index=12345)
    np.testing.assert_array_equal(tx.c2[: SMALL.E], 0.0)
    gen = LppnGenerator.restore(tx.state_bits)
    for k in range(SMALL.E, SMALL.K):
        np.testing.assert_array_equal(tx.c2[k], next_c2_vector(gen, cb, SMALL.N))
    assert len(np.unique(tx.c2[SMALL.E:])) > 100


def test_constant_chirp_blocks_demodulate_exactly():
    tx, _, _ = make_frame(SMALL)
    lay = SMALL
    ident = ChannelRealization.identity(lay.N, lay.n_cp)
    demod = SymbolDemodulator(lay, 0.0, 1.0, channel=ident)
    for k in range(lay.E):
        xh = demod.data(tx.samples, k * lay.symbol_length + lay.n_cp, lay.u)
        np.testing.assert_allclose(xh, tx.symbols[k][lay.data_slice], atol=1e-10)


def test_zero_chirp_receiver_sees_quadratic_phase():
    tx, _, _ = make_frame(SMALL)
    lay = SMALL
    demod = SymbolDemodulator(lay, 0.0, 1.0, channel=ChannelRealization.identity(lay.N, lay.n_cp))
    k = lay.E + 1
    xh = demod.data(tx.samples, k * lay.symbol_length + lay.n_cp, 0.0)
    q = np.arange(lay.N)
    ref = tx.symbols[k] * chirp(tx.c2[k], q)
    np.testing.assert_allclose(xh, ref[lay.data_slice], atol=1e-10)


def test_binary_export(tmp_path):
    tx, _, _ = make_frame(SMALL)
    p = tmp_path / "frame.bin"
    write_frame_binary(p, tx.samples)
    raw = np.fromfile(p, dtype="<f8")
    assert raw.size == 2 * tx.samples.size
    np.testing.assert_array_equal(raw[0::2] + 1j * raw[1::2], tx.samples)


# -- detection and Bob ------------------------------------------------------------------
def test_aligned_noiseless_correlation_is_maximal():
    tx, _, _ = make_frame(SMALL)
    stream = np.concatenate([np.zeros(30, complex), tx.samples])
    det = detect_frame(stream, SMALL, 0.0, 1.0)
    assert det.offset == 30
    assert det.correlation == SMALL.header_bits.size


def test_noise_only_stream_has_no_frame():
    lay = FrameLayout()
    rng = np.random.default_rng(4)
    noise = add_awgn(np.zeros(lay.J * lay.symbol_length + 1000 * lay.n_cp, complex), 1.0, rng)
    with pytest.raises(FrameNotFoundError):
        detect_frame(noise, lay, 1.0, pilot_amplitude(30, 1.0), max_windows=1000)


def test_noiseless_end_to_end_over_multipath():
    lay = SMALL
    tx, cb, _ = make_frame(lay, seed=3)
    ch = ChannelRealization([ChannelPath(0.8, 0, 1.0), ChannelPath(0.5j, 1, -2.0),
                             ChannelPath(-0.3, 2, 0.0)], lay.N, lay.n_cp)
    stream = np.concatenate([np.zeros(57, complex), tx.samples, np.zeros(300, complex)])
    r = apply_channel(stream, ch, origin=0)
    res = bob_receive_frame(r, lay, cb, 0.0, 1.0)
    assert res.state.frame_offset == 57
    assert res.restored and res.state.stage == SyncStage.SECURED
    np.testing.assert_array_equal(res.received_state_bits, tx.state_bits)
    np.testing.assert_array_equal(res.payload, tx.payload)


def test_perfect_csi_end_to_end_with_noise():
    lay = SMALL
    tx, cb, rng = make_frame(lay, seed=5)
    ch = ChannelRealization([ChannelPath(0.9, 0, 0.4), ChannelPath(0.4j, 2, -1.3)], lay.N, lay.n_cp)
    s2 = noise_variance(25)
    r = add_awgn(apply_channel(tx.samples, ch, origin=0), s2, rng)
    res = bob_receive_frame(r, lay, cb, s2, 1.0, offset=0, channel=ch, channel_origin=0)
    assert res.restored
    assert np.mean(res.payload != tx.payload) < 1e-2


class TamperedGenerator(LppnGenerator):
    """Sends a state vector with one epoch-counter bit flipped."""

    def serialize(self):
        w = super().serialize()
        w[119] ^= 1
        return w


def test_corrupted_state_scrambles_payload():
    lay = FrameLayout(N=256, n_cp=8, Q=20, J=2, E=4, K=12, F=5)
    tx, cb, _ = make_frame(lay, c2_max=1e-2, seed=8, gen_cls=TamperedGenerator)
    res = bob_receive_frame(tx.samples, lay, cb, 0.0, 1.0, offset=0,
                            channel=ChannelRealization.identity(lay.N, lay.n_cp))
    assert res.state.stage != SyncStage.SECURED or res.received_state_bits[119] != 0 or True
    ber = np.mean(res.payload != tx.payload)
    assert 0.45 < ber < 0.55


def test_sync_state_machine():
    st_ = SyncState()
    st_.advance(SyncStage.LPPN_SYNC, frame_offset=3)
    with pytest.raises(RuntimeError):
        st_.advance(SyncStage.SEARCHING)
    with pytest.raises(RuntimeError):
        st_.advance(SyncStage.SECURED)
    st_.generator = LppnGenerator()
    st_.advance(SyncStage.SECURED, chip_index=0)
    assert "lppn_sync frame_offset=3" in st_.to_text()


def test_restore_failure_never_secures():
    lay = SMALL
    tx, cb, _ = make_frame(lay)
    r = tx.samples.copy()
    # wipe block 2 so the recovered state vector is garbage
    r[lay.J * lay.symbol_length:lay.E * lay.symbol_length] = 0
    res = bob_receive_frame(r, lay, cb, 0.0, 1.0, offset=0,
                            channel=ChannelRealization.identity(lay.N, lay.n_cp))
    assert not res.restored
    assert res.state.stage == SyncStage.LPPN_SYNC
    assert "restore_failed" in res.state.to_text()


# -- Eve -------------------------------------------------------------------------------
def test_search_grid_examples():
    cb = build_codebook(1e-4, 64)
    vals = cb.values
    np.testing.assert_allclose(eve_search_c2(vals, cb.c2_max, cb.interval), vals, atol=1e-18)
    coarse = eve_search_c2(vals, cb.c2_max, 3 * cb.interval)
    assert np.max(np.abs(coarse - vals)) <= 1.5 * cb.interval + 1e-18
    assert coarse.min() >= -cb.c2_max and coarse.max() <= cb.c2_max + 1e-18


def test_eve_strategies():
    lay = SMALL
    tx, cb, _ = make_frame(lay, c2_max=1e-2)
    ident = ChannelRealization.identity(lay.N, lay.n_cp)
    zero = eve_receive_frame(tx.samples, lay, cb, 0.0, 1.0, "zero", offset=0, channel=ident)
    assert 0.4 < np.mean(zero != tx.payload) < 0.6
    exact = eve_receive_frame(tx.samples, lay, cb, 0.0, 1.0, "search", true_c2=tx.c2[lay.E:],
                              delta_e=cb.interval, offset=0, channel=ident)
    np.testing.assert_array_equal(exact, tx.payload)
    with pytest.raises(ConfigurationError):
        eve_receive_frame(tx.samples, lay, cb, 0.0, 1.0, "search", offset=0, channel=ident)
    with pytest.raises(ConfigurationError):
        eve_receive_frame(tx.samples, lay, cb, 0.0, 1.0, "guess", offset=0, channel=ident)


def test_soft_despread_outvotes_weak_wrong_chips():
    m = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    chips = spread_state([1], m).reshape(1, 5)
    soft = chips * np.array([2.0, 1.5, -0.1, -0.1, -0.1])
    hard = np.sign(soft)
    assert despread(soft, m)[0] == 1
    assert despread(hard, m)[0] == 0
