"""Independent reference implementations used only by the test-suite.

Everything here is written the slow, obvious way so that it shares no code
path with the library: explicit per-chip branching for the LPPN generator,
explicit N x N matrices for the affine transforms and the channel.
"""
import numpy as np
from numba import njit


# ---------------------------------------------------------------------------
# LPPN: per-chip state machine with literal reset / hold branches
@njit(cache=True)
def _naive_lppn(n, taps, init, T, theta1a, theta2a, d, x1_out, x2_out):
    S = taps.shape[1]
    th1b = (T[0] * theta1a) // T[1]
    th2b = (T[2] * theta2a) // T[3]
    TX1 = T[0] * theta1a
    TX2 = T[2] * theta2a + d
    regs = init.copy()
    cyc = np.zeros(4, np.int64)
    last = np.zeros(4, np.uint8)
    p1 = 0  # chips already emitted in the current X1 epoch
    p2 = 0
    for k in range(n):
        outs = np.zeros(4, np.uint8)
        # 1-based position inside each epoch
        pos1 = p1 + 1
        pos2 = p2 + 1
        active = np.zeros(4, np.bool_)
        active[0] = True
        active[1] = pos1 <= T[1] * th1b
        active[2] = pos2 <= T[2] * theta2a
        active[3] = pos2 <= T[3] * th2b
        for r in range(4):
            if active[r]:
                o = regs[r, S - 1]
                fb = 0
                for i in range(S):
                    fb ^= taps[r, i] & regs[r, i]
                for i in range(S - 1, 0, -1):
                    regs[r, i] = regs[r, i - 1]
                regs[r, 0] = fb
                cyc[r] += 1
                if cyc[r] == T[r]:
                    cyc[r] = 0
                    for i in range(S):
                        regs[r, i] = init[r, i]
                last[r] = o
                outs[r] = o
            else:
                outs[r] = last[r]
        x1_out[k] = outs[0] ^ outs[1]
        x2_out[k] = outs[2] ^ outs[3]
        p1 += 1
        if p1 == TX1:
            p1 = 0
            for r in range(2):
                cyc[r] = 0
                for i in range(S):
                    regs[r, i] = init[r, i]
        p2 += 1
        if p2 == TX2:
            p2 = 0
            for r in range(2, 4):
                cyc[r] = 0
                for i in range(S):
                    regs[r, i] = init[r, i]


def naive_lppn(cfg, n):
    """Return (x1, x2) for the first `n` chips of a fresh generator."""
    regs = cfg.registers
    taps = np.array([r.taps for r in regs], dtype=np.uint8)
    init = np.array([r.initial_state for r in regs], dtype=np.uint8)
    T = np.array([r.short_cycle for r in regs], dtype=np.int64)
    x1 = np.empty(n, np.uint8)
    x2 = np.empty(n, np.uint8)
    p = cfg.precession
    _naive_lppn(n, taps, init, T, p.theta_x1a, p.theta_x2a, p.d, x1, x2)
    return x1, x2


# ---------------------------------------------------------------------------
# Explicit matrices
def dft_matrix(N):
    n = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(n, n) / N) / np.sqrt(N)


def daft_matrix(N, c1, c2):
    """A = diag(e^{-j2pi c2 m^2}) F diag(e^{-j2pi c1 n^2})."""
    n = np.arange(N)
    c2 = np.broadcast_to(np.asarray(c2, float), (N,))
    L1 = np.diag(np.exp(-2j * np.pi * c1 * n ** 2))
    L2 = np.diag(np.exp(-2j * np.pi * c2 * n ** 2))
    return L2 @ dft_matrix(N) @ L1


def time_channel_matrix(paths, N, c1):
    """Sum_i h_i Gamma_i Delta_i Pi^{l_i} acting on one CPP-protected block."""
    H = np.zeros((N, N), complex)
    n = np.arange(N)
    for h, l, nu in paths:
        Pi = np.roll(np.eye(N), l, axis=0)  # (Pi^l s)[n] = s[n-l]
        gamma = np.ones(N, complex)
        wrap = n < l
        gamma[wrap] = np.exp(-2j * np.pi * c1 * (N ** 2 - 2 * N * (l - n[wrap])))
        Delta = np.exp(2j * np.pi * nu * n / N)
        H += h * (gamma * Delta)[:, None] * Pi
    return H


def effective_matrix_bruteforce(paths, N, c1, c2_tx, c2_rx):
    A_tx = daft_matrix(N, c1, c2_tx)
    A_rx = daft_matrix(N, c1, c2_rx)
    return A_rx @ time_channel_matrix(paths, N, c1) @ A_tx.conj().T
