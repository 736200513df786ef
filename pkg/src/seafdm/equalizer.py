"""MMSE equalization, embedded-pilot channel estimation and hard detection.

Two equivalent MMSE solvers are provided.  :class:`MmseEqualizer` works on an
explicit affine-domain matrix with a dense Cholesky factorization.
:class:`TimeDomainMmse` exploits the fact that the chirp-free DAFT is
unitary: the same estimate is obtained by solving with the banded
time-domain channel, which has only P nonzeros per row.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import least_squares, minimize_scalar

from .channel import (ChannelPath, ChannelRealization, _wrap_phase, dirichlet_kernel,
                      time_domain_matrix)
from .errors import ConfigurationError, EmptyChannelError, NumericalRankError
from .modem import chirp, daft, idaft, qam_demap

__all__ = [
    "mmse_equalize",
    "MmseEqualizer",
    "TimeDomainMmse",
    "pilot_response",
    "EstimatedChannel",
    "estimate_channel",
    "refine_with_symbol",
    "pilot_aided_mmse",
    "detect_bits",
]


class MmseEqualizer:
    """Dense MMSE filter ``H^H (H H^H + s I)^-1`` with a reusable factorization.

    Parameters
    ----------
    H : ndarray, shape (N, K)
    noise_var : float
        Noise variance; 0 gives the zero-forcing (minimum-norm) solution.
    """

    def __init__(self, H, noise_var: float):
        self.H = np.asarray(H, dtype=complex)
        self.noise_var = float(noise_var)
        n, k = self.H.shape
        if self.noise_var > 0:
            G = self.H @ self.H.conj().T
            G[np.diag_indices(n)] += self.noise_var
            self._fac = ("chol", sla.cho_factor(G, lower=False, check_finite=False))
        elif n == k:
            lu, piv = sla.lu_factor(self.H, check_finite=False)
            d = np.abs(np.diag(lu))
            if d.min() <= n * np.finfo(float).eps * d.max():
                raise NumericalRankError("channel matrix is numerically singular")
            self._fac = ("lu", (lu, piv))
        else:
            G = self.H @ self.H.conj().T
            try:
                self._fac = ("chol", sla.cho_factor(G, lower=False, check_finite=False))
            except np.linalg.LinAlgError as exc:
                raise NumericalRankError("rows of H are linearly dependent") from exc

    def __call__(self, y) -> np.ndarray:
        kind, fac = self._fac
        y = np.asarray(y, dtype=complex)
        if kind == "lu":
            return sla.lu_solve(fac, y, check_finite=False)
        return self.H.conj().T @ sla.cho_solve(fac, y, check_finite=False)


def mmse_equalize(y, H, noise_var: float) -> np.ndarray:
    """One-shot MMSE estimate ``x = H^H (H H^H + noise_var I)^-1 y``."""
    return MmseEqualizer(H, noise_var)(y)


class TimeDomainMmse:
    """MMSE in the chirp-free affine domain, solved in the time domain.

    For a chirp-free affine observation ``y0 = A H_t A^H x + n`` with
    ``A = F diag(chirp(-c1))`` unitary, the MMSE estimate equals
    ``A H_t^H (H_t H_t^H + s I)^-1 A^H y0``.  ``H_t`` is sparse, so the
    factorization costs O(N P^2) instead of O(N^3).

    Receivers that use per-subcarrier chirps multiply the result by the
    conjugate of their transmit-chirp assumption.
    """

    def __init__(self, ch: ChannelRealization, c1: float, noise_var: float, N: int | None = None):
        self.N = N or ch.N
        self.c1 = c1
        self.noise_var = float(noise_var)
        self.Ht = time_domain_matrix(ch, c1, self.N).tocsc()
        try:
            if self.noise_var > 0:
                S = (self.Ht @ self.Ht.conj().T + self.noise_var * sp.identity(self.N, format="csc"))
                self._lu = spla.splu(S.tocsc())
                self._zf = False
            else:
                self._lu = spla.splu(self.Ht)
                self._zf = True
        except RuntimeError as exc:
            raise NumericalRankError(str(exc)) from exc

    def time_solve(self, r) -> np.ndarray:
        """Time-domain MMSE estimate of the transmitted block."""
        r = np.asarray(r, dtype=complex)
        z = self._lu.solve(r)
        if self._zf:
            return z
        return self.Ht.conj().T @ z

    def __call__(self, y0) -> np.ndarray:
        r = idaft(y0, self.c1, 0.0)
        return daft(self.time_solve(r), self.c1, 0.0)


def pilot_response(ch: ChannelRealization, c1: float, N: int | None = None, index: int = 0):
    """Chirp-free affine-domain response to a unit symbol at `index`."""
    N = N or ch.N
    e = np.zeros(N, dtype=complex)
    e[index] = 1.0
    s = idaft(e, c1, 0.0)
    return daft(time_domain_matrix(ch, c1, N) @ s, c1, 0.0)


def detect_bits(x_hat, R: int = 4) -> np.ndarray:
    """Hard nearest-point decisions; midpoints go to the lower Gray label."""
    return qam_demap(x_hat, R)


# ---------------------------------------------------------------------------
# Embedded-pilot channel estimation
@dataclass
class EstimatedChannel:
    paths: list
    threshold: float
    residual_energy: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_realization(self, N: int, n_cp: int) -> ChannelRealization:
        return ChannelRealization(tuple(self.paths), N, n_cp, {"estimated": True})

    @property
    def delays(self):
        return [p.delay for p in self.paths]


def _pilot_atoms(N, c1, window, delays, dopplers):
    """Responses (one row per path) at `window` bins of a unit pilot through unit paths."""
    b = 2.0 * N * c1
    l = np.atleast_1d(np.asarray(delays, dtype=float))
    nu = np.atleast_1d(np.asarray(dopplers, dtype=float))
    x = window[None, :] - nu[:, None] + b * l[:, None]
    return (chirp(c1, l)[:, None] / N) * dirichlet_kernel(x, N)


def estimate_channel(y0, N: int, c1: float, pilot_amp: float, guard: int, noise_var: float = 0.0,
                     delay_range=(0, 0), alpha_max: int = 2, kappa: float = 8.0,
                     rel_floor: float = 1e-3, fractional: bool = True,
                     max_paths: int = 8, fit_margin: int = 10,
                     polish_limit: int = 5, spill_margin: int = 3) -> EstimatedChannel:
    """Threshold-based path search around an embedded pilot at index 0.

    Parameters
    ----------
    y0 : ndarray, shape (N,)
        Chirp-free affine-domain observation of a symbol whose pilot sits at
        index 0 with guard bands of `guard` zeros on both sides.
    pilot_amp : float
        Transmitted pilot amplitude.
    noise_var : float
        Noise variance per affine-domain sample.
    delay_range : (int, int)
        Inclusive range of delays searched; negative delays model a
        receive window that starts after the first arrival.
    kappa, rel_floor : float
        A (delay, Doppler) candidate becomes a path when its matched-filter
        power against the residual exceeds ``max(kappa * noise_var, rel_floor * peak)``.
    fractional : bool
        Refine Doppler continuously; otherwise keep the integer peak.
    max_paths : int
        Upper bound on the number of paths, further limited by the delay range.
    fit_margin : int
        Gains and Dopplers are fitted on bins within this distance of a
        detected peak.
    polish_limit : int
        A final joint Doppler fit is run when at most this many paths were found.
    spill_margin : int
        Bins this close to where data starts leaking in through a detected
        path are treated as data bins as well.

    Raises
    ------
    EmptyChannelError
        When no bin clears the threshold.
    """
    y0 = np.asarray(y0, dtype=complex)
    b = 2.0 * N * c1
    lo, hi = delay_range
    win = np.arange(-guard, guard + 1)
    w = y0[win % N] / pilot_amp
    nv = noise_var / pilot_amp ** 2
    peak = float(np.max(np.abs(w) ** 2))
    thr = max(kappa * nv, rel_floor * peak)
    max_paths = min(hi - lo + 1, max_paths)

    bi = int(round(b))
    # admissible (delay, integer doppler) pairs whose pilot peak falls inside the window
    cand = [(l, a) for l in range(lo, hi + 1) for a in range(-alpha_max, alpha_max + 1)
            if -guard <= round(a - b * l) <= guard]
    if not cand:
        raise ConfigurationError("no admissible (delay, doppler) pair peaks inside the guard window")
    cand_l = np.array([c[0] for c in cand])
    cand_a = np.array([c[1] for c in cand], dtype=float)
    # each candidate is scored at a few Doppler offsets so fractional paths
    # are matched over their whole lobe instead of their peak bin only
    offsets = np.array([-0.5, -0.25, 0.0, 0.25, 0.5]) if fractional else np.zeros(1)
    grid_l = np.repeat(cand_l, offsets.size)
    grid_nu = np.clip((cand_a[:, None] + offsets[None, :]).ravel(), -alpha_max, alpha_max)
    grid_pos = grid_nu - b * grid_l
    grid_atoms = _pilot_atoms(N, c1, win, grid_l, grid_nu)
    grid_near = np.abs(win[None, :] - grid_pos[:, None]) <= fit_margin

    paths_l: list[int] = []
    paths_nu: list[float] = []
    res = w.copy()
    gains = np.zeros(0, dtype=complex)

    def spill(ls, nus):
        # window bins that receive data symbols through one of the paths
        out = np.zeros(win.size, dtype=bool)
        for l, nu in zip(ls, nus):
            out |= np.abs(win - (nu - b * l)) > guard - spill_margin
        return out

    def region(ls, nus):
        # bins close to the detected peaks; the outer guard bins carry most
        # of the data leakage and are left out of the fit
        sel = np.zeros(win.size, dtype=bool)
        for l, nu in zip(ls, nus):
            c = nu - b * l
            sel |= np.abs(win - c) <= fit_margin
        return sel & ~spill(ls, nus)

    def compatible(pos, ls, nus):
        # peaks farther apart than this would have their main lobes in each other's data spill
        return all(abs(pos - (nu - b * l)) <= guard - spill_margin - 2
                   for l, nu in zip(ls, nus))

    def atoms(ls, nus):
        return _pilot_atoms(N, c1, win, ls, nus).T

    def fit(ls, nus):
        A = atoms(ls, nus)
        sel = region(ls, nus)
        g, *_ = np.linalg.lstsq(A[sel], w[sel], rcond=None)
        return g, w - A @ g, sel

    def refine(i, ls, nus):
        # best Doppler for path i with the others held fixed
        others = [j for j in range(len(ls)) if j != i]
        if others:
            g, r, _ = fit([ls[j] for j in others], [nus[j] for j in others])
        else:
            r = w
        nu0 = nus[i]
        sel = region(ls, nus)
        bins, rs = win[sel], r[sel]

        def cost(nu):
            atom = _pilot_atoms(N, c1, bins, ls[i], nu)[0]
            return -abs(np.vdot(atom, rs)) ** 2 / np.vdot(atom, atom).real

        lo_nu, hi_nu = max(nu0 - 0.5, -alpha_max), min(nu0 + 0.5, alpha_max)
        out = minimize_scalar(cost, bounds=(lo_nu, hi_nu), method="bounded",
                              options={"xatol": 1e-7})
        return float(out.x)

    def polish(ls, nus):
        # joint Doppler fit with the gains projected out (variable projection)
        sel = region(ls, nus)

        ws = w[sel]
        bins = win[sel]

        def resid(v):
            A = _pilot_atoms(N, c1, bins, ls, v).T
            g, *_ = np.linalg.lstsq(A, ws, rcond=None)
            r = ws - A @ g
            return np.concatenate([r.real, r.imag])

        x0 = np.asarray(nus, dtype=float)
        lb = np.maximum(x0 - 0.5, -alpha_max)
        ub = np.minimum(x0 + 0.5, alpha_max)
        x0 = np.clip(x0, lb + 1e-9, ub - 1e-9)
        out = least_squares(resid, x0, bounds=(lb, ub), xtol=1e-10, ftol=1e-12,
                            gtol=1e-12, diff_step=1e-7)
        return [float(v) for v in out.x]

    def best_candidate(res, ls, nus):
        # matched-filter power of each grid atom against the residual, over
        # bins near its peak that no detected path fills with data
        ok = ~np.isin(grid_l, ls)
        if ls:
            ok &= np.array([compatible(p, ls, nus) for p in grid_pos])
        m = grid_near & ~spill(ls, nus)[None, :]
        num = np.abs(np.sum(np.conj(grid_atoms) * res[None, :] * m, axis=1)) ** 2
        den = np.sum(np.abs(grid_atoms) ** 2 * m, axis=1)
        score = np.where(ok & (den > 0), num / np.where(den > 0, den, 1.0), -1.0)
        k = int(np.argmax(score))
        return k, score[k]

    while len(paths_l) < max_paths:
        k, score = best_candidate(res, paths_l, paths_nu)
        if score < thr:
            break
        l = int(grid_l[k])
        paths_l.append(l)
        paths_nu.append(float(round(grid_nu[k])) if not fractional else float(grid_nu[k]))
        if fractional:
            paths_nu[-1] = refine(len(paths_l) - 1, paths_l, paths_nu)
            if not compatible(paths_nu[-1] - b * l, paths_l[:-1], paths_nu[:-1]):
                paths_l.pop()
                paths_nu.pop()
                break
        gains, res, _ = fit(paths_l, paths_nu)

    if fractional and 1 < len(paths_l) <= polish_limit:
        paths_nu = polish(paths_l, paths_nu)
        gains, res, _ = fit(paths_l, paths_nu)

    if not paths_l:
        raise EmptyChannelError(f"no pilot response above threshold {thr:.3g}")
    sel = region(paths_l, paths_nu)
    dof = max(int(sel.sum()) - 2 * len(paths_l), 1)
    # per-bin power left unexplained by the fit, in observation units
    residual_var = float(np.sum(np.abs(res[sel]) ** 2) / dof * pilot_amp ** 2)
    paths = [ChannelPath(complex(g), int(l), float(nu)) for g, l, nu in zip(gains, paths_l, paths_nu)]
    paths.sort(key=lambda p: p.delay)
    return EstimatedChannel(paths, thr * pilot_amp ** 2, float(np.sum(np.abs(res) ** 2)),
                            {"peak": peak, "integer_b": bi == b, "residual_var": residual_var})


def refine_with_symbol(y0, x, paths, N: int, c1: float, noise_var: float, delay_range,
                       alpha_max: int, kappa: float = 8.0, rel_floor: float = 1e-3,
                       oversample: int = 8, max_paths: int = 8):
    """Re-fit a path list against a whole known (or decided) transmitted symbol.

    Every path contributes a delayed, Doppler-rotated copy of the
    chirp-periodic block, so gains and Dopplers are fitted over all N
    samples instead of the pilot guard window.  Missing paths are added
    while their matched-filter power against the residual exceeds
    ``kappa`` times the residual variance, and paths whose removal costs
    less than that are dropped.

    Parameters
    ----------
    y0 : ndarray, shape (N,)
        Chirp-free affine-domain observation.
    x : ndarray, shape (N,)
        Chirp-free transmitted symbol, pilot included.
    paths : sequence of ChannelPath
        Starting estimate, typically from :func:`estimate_channel`.

    Returns
    -------
    list of ChannelPath, float
        Refined paths sorted by delay and the residual variance per sample.
    """
    r = idaft(np.asarray(y0, dtype=complex), c1, 0.0)
    s = idaft(np.asarray(x, dtype=complex), c1, 0.0)
    n = np.arange(N)
    lo, hi = delay_range
    max_paths = min(hi - lo + 1, max_paths)
    shifted = {}

    def delayed(l):
        if l not in shifted:
            ph, b = _wrap_phase(c1, N, n - l)
            shifted[l] = s[b] * ph
        return shifted[l]

    def columns(ls, nus):
        return np.stack([delayed(l) * np.exp(2j * np.pi * nu * n / N) for l, nu in zip(ls, nus)],
                        axis=1)

    def fit(ls, nus):
        A = columns(ls, nus)
        g, *_ = np.linalg.lstsq(A, r, rcond=None)
        return g, r - A @ g

    def polish(ls, nus):
        def resid(v):
            _, e = fit(ls, v)
            return np.concatenate([e.real, e.imag])

        x0 = np.asarray(nus, dtype=float)
        lb = np.maximum(x0 - 0.5, -alpha_max)
        ub = np.minimum(x0 + 0.5, alpha_max)
        x0 = np.clip(x0, lb + 1e-9, ub - 1e-9)
        out = least_squares(resid, x0, bounds=(lb, ub), xtol=1e-10, ftol=1e-12, gtol=1e-12,
                            diff_step=1e-7)
        return [float(v) for v in out.x]

    def noise_floor(e, p):
        return max(noise_var, float(np.vdot(e, e).real) / max(N - 2 * p, 1))

    ls = [p.delay for p in paths if lo <= p.delay <= hi]
    nus = [float(np.clip(p.doppler, -alpha_max, alpha_max)) for p in paths if lo <= p.delay <= hi]
    if ls:
        nus = polish(ls, nus)
        g, e = fit(ls, nus)
    else:
        g, e = np.zeros(0, dtype=complex), r

    # Doppler scan of each unused delay by a zero-padded FFT of the residual
    L = oversample * N
    k = np.arange(L)
    freq = np.where(k < L // 2, k, k - L) / oversample
    scan = np.abs(freq) <= alpha_max
    while len(ls) < max_paths:
        best = (0.0, None, None)
        for l in range(lo, hi + 1):
            if l in ls:
                continue
            d = delayed(l)
            power = np.abs(np.fft.fft(np.conj(d) * e, L)) ** 2 / np.vdot(d, d).real
            j = int(np.argmax(np.where(scan, power, -1.0)))
            if power[j] > best[0]:
                best = (float(power[j]), l, float(freq[j]))
        strongest = float(np.max(np.abs(g) ** 2)) * N if g.size else 0.0
        if best[1] is None or best[0] < max(kappa * noise_floor(e, len(ls)), rel_floor * strongest):
            break
        ls.append(best[1])
        nus.append(best[2])
        nus = polish(ls, nus)
        g, e = fit(ls, nus)

    # drop paths that explain less than a detection's worth of power
    while len(ls) > 1:
        base = float(np.vdot(e, e).real)
        costs = []
        for i in range(len(ls)):
            keep = [j for j in range(len(ls)) if j != i]
            _, ei = fit([ls[j] for j in keep], [nus[j] for j in keep])
            costs.append(float(np.vdot(ei, ei).real) - base)
        i = int(np.argmin(costs))
        if costs[i] >= kappa * noise_floor(e, len(ls)):
            break
        del ls[i], nus[i]
        g, e = fit(ls, nus)

    out = [ChannelPath(complex(gi), int(l), float(nu)) for gi, l, nu in zip(g, ls, nus)]
    out.sort(key=lambda p: p.delay)
    return out, noise_floor(e, len(ls))


def pilot_aided_mmse(y0, N: int, c1: float, pilot_amp: float, guard: int, noise_var: float,
                     delay_range, alpha_max: int, n_cp: int = 0, remodulate=None, passes: int = 3,
                     **estimator_opts):
    """Estimate the channel from the embedded pilot, cancel the pilot and equalize.

    With `remodulate` given, later passes treat the hard decisions as
    known symbols and re-fit the channel against the whole symbol with
    :func:`refine_with_symbol`; the pilot alone carries too little energy
    at low pilot amplitude to resolve weak paths.  The MMSE regularizer is
    the larger of `noise_var` and the fit's residual variance, so a
    noiseless observation with an imperfect estimate is not inverted
    exactly.

    Parameters
    ----------
    remodulate : callable, optional
        Maps a chirp-free MMSE estimate to the chirp-free data vector
        implied by hard decisions (zero on pilot and guard bins).
    passes : int
        Number of estimation passes when `remodulate` is given.

    Returns
    -------
    x0 : ndarray
        Chirp-free MMSE estimate with the pilot removed.
    ch : ChannelRealization
        Channel estimate of the retained pass.
    """
    y0 = np.asarray(y0, dtype=complex)
    est = estimate_channel(y0, N, c1, pilot_amp, guard, noise_var, delay_range, alpha_max,
                           **estimator_opts)
    ch = est.to_realization(N, n_cp)
    rv = est.meta["residual_var"]
    rounds = max(passes, 1) if remodulate is not None else 1
    best = None
    for k in range(rounds):
        if k:
            x = remodulate(best[1])
            x[0] += pilot_amp
            paths, rv = refine_with_symbol(y0, x, ch.paths, N, c1, noise_var, delay_range,
                                           alpha_max)
            if not paths or (k > 1 and rv >= best[0]):
                break
            ch = ChannelRealization(tuple(paths), N, n_cp, {"estimated": True})
        eq = TimeDomainMmse(ch, c1, max(noise_var, rv), N)
        best = (rv, eq(y0 - pilot_amp * pilot_response(ch, c1, N)), ch)
    return best[1], best[2]
