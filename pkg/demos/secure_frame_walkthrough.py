"""One chirp-hopping frame end to end: Alice, the channel, Bob and Eve.

Run: python demos/secure_frame_walkthrough.py [snr_db]
"""
import sys

import numpy as np

from seafdm.channel import apply_channel, noise_variance, sample_jakes_channel
from seafdm.codebook import build_codebook
from seafdm.frame import bob_receive_frame, build_frame, eve_receive_frame, pilot_amplitude
from seafdm.harness import ExperimentConfig
from seafdm.lppn import LppnGenerator

snr_db = float(sys.argv[1]) if len(sys.argv) > 1 else 15.0
cfg = ExperimentConfig(K=10)
layout = cfg.layout()
rng = np.random.default_rng(7)

# Alice: the generator position is the shared secret that Bob recovers from block 2
codebook = build_codebook(cfg.c2_max, cfg.M)
alice = LppnGenerator(chip_index=int(rng.integers(0, 2**40)))
payload = rng.integers(0, 2, layout.payload_bits)
noise_var = noise_variance(snr_db)
amp = pilot_amplitude(cfg.snr_p_db, noise_var)
tx = build_frame(payload, alice, layout, codebook, amp)
print(f"frame: {layout.K} symbols of {layout.symbol_length} samples, {layout.payload_bits} payload bits")

lead = 250
stream = np.concatenate([np.zeros(lead, complex), tx.samples, np.zeros(layout.symbol_length, complex)])
ch = sample_jakes_channel(cfg.P, cfg.alpha_max, cfg.delay_taps, rng, cfg.N, cfg.n_cp)
noise = (rng.standard_normal(stream.size) + 1j * rng.standard_normal(stream.size)) * np.sqrt(noise_var / 2)
r = apply_channel(stream, ch, origin=0) + noise

bob = bob_receive_frame(r, layout, codebook, noise_var, amp)
print(bob.state.to_text())
print(f"Bob: frame offset error {bob.state.frame_offset - lead}, restored={bob.restored}, "
      f"payload BER {np.mean(bob.payload != payload):.4f}")

eve = eve_receive_frame(r, layout, codebook, noise_var, amp, strategy="zero")
print(f"Eve (c2 = 0): payload BER {np.mean(eve != payload):.4f}")
