"""Beam alignment, pilot schedules, gain-ratio estimation and final codewords."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelRealization, rotate
from .design import Codebook, HybridSettings, dual_codebook


class EstimationFailed(ArithmeticError):
    """Pilot sums too small to form a ratio; retry with a longer schedule."""


@dataclass(frozen=True)
class AlignmentResult:
    tx: tuple[int, int]
    rx: tuple[int, int]
    power: float
    tx_index: int = 0
    rx_index: int = 0


@dataclass(frozen=True, eq=False)
class PilotSchedule:
    j: int
    alpha: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    upsilon: np.ndarray
    kappa1: complex
    kappa2: complex
    sigma_c: complex

    def __len__(self):
        return 4 * self.j

    def block(self, k: int) -> slice:
        return slice(k * self.j, (k + 1) * self.j)


def check_pilots(s: PilotSchedule, tol: float = 1e-9) -> bool:
    """Block-sum and receive-selector constraints of a pilot schedule."""
    J = s.j
    if any(len(x) != 4 * J for x in (s.alpha, s.beta, s.omega, s.upsilon)):
        return False
    want_a = [s.sigma_c, 0, s.sigma_c, 0]
    want_b = [0, s.sigma_c, 0, s.sigma_c]
    for k in range(4):
        if abs(s.alpha[s.block(k)].sum() - want_a[k]) > tol * max(1, J):
            return False
        if abs(s.beta[s.block(k)].sum() - want_b[k]) > tol * max(1, J):
            return False
    first, last = slice(0, 2 * J), slice(2 * J, 4 * J)
    return (np.allclose(s.omega[first], s.kappa1) and np.allclose(s.upsilon[first], 0)
            and np.allclose(s.omega[last], 0) and np.allclose(s.upsilon[last], s.kappa2))


def build_pilots(j: int, kappa1: complex = 1.0, kappa2: complex = 1.0) -> PilotSchedule:
    """First two DFT columns, in order then swapped, repeated twice.

    For ``j = 1`` the second column is taken as zero, so the block sum of
    the first column, ``j``, is the common constant.
    """
    if j < 1:
        raise ValueError("pilot block length must be >= 1")
    n = np.arange(j)
    col1 = np.ones(j, dtype=complex)
    col2 = np.exp(-2j * np.pi * n / j) if j > 1 else np.zeros(1, dtype=complex)
    alpha = np.concatenate([col1, col2, col1, col2])
    beta = np.concatenate([col2, col1, col2, col1])
    omega = np.concatenate([np.full(2 * j, kappa1, dtype=complex), np.zeros(2 * j, dtype=complex)])
    upsilon = np.concatenate([np.zeros(2 * j, dtype=complex), np.full(2 * j, kappa2, dtype=complex)])
    sched = PilotSchedule(j, alpha, beta, omega, upsilon, complex(kappa1), complex(kappa2), complex(j))
    if not check_pilots(sched):
        raise AssertionError(f"pilot schedule for J={j} violates the block-sum constraints")
    return sched


# --- codeword builders -----------------------------------------------------

def tx_weighted(c_single: np.ndarray, chi: float, phi: float, alpha: complex, beta: complex) -> np.ndarray:
    """``R(phi)^H ([sqrt(1/(1+chi)) alpha; sqrt(chi/(1+chi)) beta] (x) c)``, not normalized."""
    co, cross = np.sqrt(1 / (1 + chi)), np.sqrt(chi / (1 + chi))
    stacked = np.concatenate([co * alpha * c_single, cross * beta * c_single])
    return rotate(stacked, phi, adjoint=True)


def rx_weighted(c_single: np.ndarray, omega: complex, upsilon: complex) -> np.ndarray:
    return np.concatenate([omega * c_single, upsilon * c_single])


def _unit(w):
    return w / np.linalg.norm(w)


def alignment_codebooks(single_tx: Codebook, single_rx: Codebook, chi_mean: float, phi_mean: float,
                        hybridizer: Optional[HybridSettings] = None, alpha=1.0, beta=1.0,
                        omega=1.0, upsilon=None) -> tuple[Codebook, Codebook]:
    """Dual codebooks with constant polarization weights (no phase knowledge).

    ``upsilon`` defaults to ``sqrt(chi_mean)``.
    """
    if upsilon is None:
        upsilon = np.sqrt(chi_mean)
    tx = dual_codebook(single_tx, lambda c: _unit(tx_weighted(c, chi_mean, phi_mean, alpha, beta)),
                       hybridizer, "alignment")
    rx = dual_codebook(single_rx, lambda c: _unit(rx_weighted(c, omega, upsilon)), hybridizer, "alignment")
    return tx, rx


def final_tx(c_single, ratio_tx, chi, phi):
    if not np.isfinite(ratio_tx):
        raise ValueError("tx ratio must be finite")
    return _unit(tx_weighted(c_single, chi, phi, np.conj(ratio_tx), 1.0))


def final_rx(c_single, ratio_rx):
    if not np.isfinite(ratio_rx):
        raise ValueError("rx ratio must be finite")
    return _unit(rx_weighted(c_single, np.conj(ratio_rx), 1.0))


def finalize_codebooks(single_tx: Codebook, single_rx: Codebook, ratio_tx: complex, ratio_rx: complex,
                       chi_known: float, phi_known: float,
                       hybridizer: Optional[HybridSettings] = None) -> tuple[Codebook, Codebook]:
    tx = dual_codebook(single_tx, lambda c: final_tx(c, ratio_tx, chi_known, phi_known), hybridizer, "final")
    rx = dual_codebook(single_rx, lambda c: final_rx(c, ratio_rx), hybridizer, "final")
    return tx, rx


def realize(w: np.ndarray, hybridizer: Optional[HybridSettings]) -> np.ndarray:
    """Hybrid approximation of ``w`` keeping its norm (pilot slots may be below 1)."""
    if hybridizer is None:
        return w
    n = np.linalg.norm(w)
    if n == 0:
        return w
    return n * hybridizer.apply(w / n).weights


# --- over-the-air steps ----------------------------------------------------

def _noise(rng: np.random.Generator, shape, var):
    """CN(0, var) samples."""
    return np.sqrt(np.asarray(var) / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def beam_align(ch: ChannelRealization, tx_cb: Codebook, rx_cb: Codebook, snr: float,
               rng: Optional[np.random.Generator] = None) -> AlignmentResult:
    """Exhaustive sweep over codeword pairs; picks the largest received power.

    Transmit power is ``snr`` with unit noise variance.  Each pair sees its
    own noise vector; projecting CN(0, I) onto the combiner gives
    CN(0, |c_rx|^2), which is drawn directly.  ``snr = inf`` is noiseless.
    """
    if len(tx_cb) == 0 or len(rx_cb) == 0:
        raise ValueError("empty codebook")
    ctx = tx_cb.matrix()
    crx = rx_cb.matrix()
    if ctx.shape[1] != ch.h.shape[1] or crx.shape[1] != ch.h.shape[0]:
        raise ValueError("codebook dimensions do not match the channel")
    s = crx.conj() @ ch.h @ ctx.T
    if np.isinf(snr):
        power = np.abs(s) ** 2
    else:
        var = np.sum(np.abs(crx) ** 2, axis=1)[:, None] * np.ones((1, s.shape[1]))
        power = np.abs(np.sqrt(snr) * s + _noise(rng, s.shape, var)) ** 2
    r, t = np.unravel_index(int(np.argmax(power)), power.shape)
    return AlignmentResult(tx_cb.codewords[t].region, rx_cb.codewords[r].region,
                           float(power[r, t]), int(t), int(r))


def pilot_observations(ch: ChannelRealization, c_tx_single: np.ndarray, c_rx_single: np.ndarray,
                       pilots: PilotSchedule, snr: float, chi_known: float, phi_known: float,
                       rng: Optional[np.random.Generator] = None,
                       hybridizer: Optional[HybridSettings] = None) -> np.ndarray:
    """Received pilot symbols ``y_j`` for ``s = 1``."""
    y = np.empty(len(pilots), dtype=complex)
    cache = {}
    for j in range(len(pilots)):
        key = (pilots.alpha[j], pilots.beta[j], pilots.omega[j], pilots.upsilon[j])
        if key not in cache:
            ct = realize(tx_weighted(c_tx_single, chi_known, phi_known, key[0], key[1]), hybridizer)
            cr = realize(rx_weighted(c_rx_single, key[2], key[3]), hybridizer)
            cache[key] = (np.vdot(cr, ch.h @ ct), float(np.vdot(cr, cr).real))
        sig, nvar = cache[key]
        if np.isinf(snr):
            y[j] = sig
        else:
            y[j] = np.sqrt(snr) * sig + _noise(rng, (), nvar)
    return y


def ratios_from_sums(Y, pilots: PilotSchedule, chi_known: float, tol: float = 1e-12):
    """Tx phase ratio ``chi Y1 / Y2`` and Rx ratio ``xi_v / xi_h`` from the block sums."""
    y1, y2, y3, y4 = (Y[0] / np.conj(pilots.kappa1), Y[1] / np.conj(pilots.kappa1),
                      Y[2] / np.conj(pilots.kappa2), Y[3] / np.conj(pilots.kappa2))
    if abs(y2) < tol:
        raise EstimationFailed(f"|Y2| = {abs(y2):.3e} too small")
    ratio_tx = chi_known * y1 / y2
    num = abs(y1) ** 2 + abs(y2) ** 2 / chi_known
    den = y1 * np.conj(y3) + y2 * np.conj(y4) / chi_known
    if abs(den) < tol:
        raise EstimationFailed(f"rx ratio denominator {abs(den):.3e} too small")
    return complex(ratio_tx), complex(num / den)


def estimate_ratios(ch: ChannelRealization, c_tx_single: np.ndarray, c_rx_single: np.ndarray,
                    pilots: PilotSchedule, snr: float, chi_known: float, phi_known: float = 0.0,
                    rng: Optional[np.random.Generator] = None,
                    hybridizer: Optional[HybridSettings] = None) -> tuple[complex, complex]:
    """Send the ``4J`` pilot slots over the aligned pair and form both ratios.

    Slot ``j`` transmits with polarization weights ``(alpha_j, beta_j)`` and
    receives with ``(omega_j, upsilon_j)``.  Returns ``(ratio_tx, ratio_rx)``
    estimating ``e^{j zeta_vv} / e^{j zeta_vh}`` and ``xi_v / xi_h``.
    """
    y = pilot_observations(ch, c_tx_single, c_rx_single, pilots, snr, chi_known, phi_known, rng, hybridizer)
    Y = np.array([y[pilots.block(k)].sum() for k in range(4)])
    return ratios_from_sums(Y, pilots, chi_known)
