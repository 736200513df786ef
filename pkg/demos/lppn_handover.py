"""Serialize the chip generator, rebuild it elsewhere and continue the same stream.

Run: python demos/lppn_handover.py
"""
import numpy as np

from seafdm.lppn import DEFAULT_LPPN_CONFIG, LppnGenerator

cfg = DEFAULT_LPPN_CONFIG
print(f"X1 epoch {cfg.t_x1} chips, X2 epoch {cfg.t_x2} chips, full period {cfg.t_l:.3e} chips")

alice = LppnGenerator(chip_index=123_456_789)
alice.next_chips(1000)
w = alice.serialize()
print(f"state vector: {w.size} bits")

bob = LppnGenerator.restore(w)
a, b = alice.next_chips(20), bob.next_chips(20)
print("Alice:", "".join(map(str, a)))
print("Bob:  ", "".join(map(str, b)))
print("identical:", bool(np.array_equal(a, b)), "at chip", bob.chip_index)
