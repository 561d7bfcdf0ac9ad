"""Monte-Carlo link simulation, gain grids and rate statistics."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .array import ArrayGeometry, RegionPartition, paired_frequencies
from .channel import ChannelConfig, PolarizationState, db_to_linear, sample_channel
from .design import (Codebook, HybridSettings, SeCandidateSet, design_single_codebook, dual_codebook,
                     effective_single, ideal_gain)
from .protocol import (EstimationFailed, alignment_codebooks, beam_align, build_pilots, estimate_ratios,
                       final_rx, final_tx)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinkEnd:
    """Array and partition of one base station."""

    m_h: int = 8
    m_v: int = 8
    q_h: int = 6
    q_v: int = 6
    l_h: int = 7
    l_v: int = 7
    n_rf: int = 4

    @property
    def geom(self) -> ArrayGeometry:
        return ArrayGeometry(self.m_h, self.m_v, dual=True)

    @property
    def part(self) -> RegionPartition:
        return RegionPartition(self.q_h, self.q_v, self.l_h, self.l_v)


@dataclass(frozen=True)
class ExperimentConfig:
    tx: LinkEnd = field(default_factory=LinkEnd)
    rx: LinkEnd = field(default_factory=LinkEnd)
    phase_bits: Optional[int] = 4
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    criterion: str = "se"
    pilot_j: int = 1
    snr_db: tuple[float, ...] = (-15.0, -10.0, -5.0, 0.0, 5.0)
    trials: int = 1000
    seed: int = 0
    b_levels: int = 3
    kappa1: complex = 1.0
    kappa2: complex = 1.0
    threads: int = 1
    hybrid: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db:
            raise ValueError("snr_db must not be empty")
        if self.pilot_j < 1:
            raise ValueError("pilot_j must be >= 1")
        if self.criterion not in ("se", "mip", "baseline"):
            raise ValueError(f"criterion must be se, mip or baseline, got {self.criterion!r}")
        if self.phase_bits is not None and self.phase_bits < 1:
            raise ValueError("phase_bits must be >= 1 or null")
        if self.b_levels < 1 or self.threads < 1:
            raise ValueError("b_levels and threads must be >= 1")

    @property
    def hybridizers(self) -> tuple[Optional[HybridSettings], Optional[HybridSettings]]:
        if not self.hybrid:
            return None, None
        return HybridSettings(self.tx.n_rf, self.phase_bits), HybridSettings(self.rx.n_rf, self.phase_bits)


@dataclass(frozen=True, eq=False)
class LinkDesign:
    """Everything fixed before the first trial; shared read-only by all workers."""

    cfg: ExperimentConfig
    criterion: str
    single_tx: Codebook
    single_rx: Codebook
    align_tx: Codebook
    align_rx: Codebook
    hyb_tx: Optional[HybridSettings]
    hyb_rx: Optional[HybridSettings]
    chi_known: float
    phi_known: float


def nominal_pol(cfg: ExperimentConfig) -> PolarizationState:
    return PolarizationState(cfg.channel.chi_mean, cfg.channel.phi_mean)


def baseline_codebook(geom: ArrayGeometry, part: RegionPartition, pol: PolarizationState,
                      end: str = "tx", hybridizer: Optional[HybridSettings] = None) -> Codebook:
    """Region-center steering per polarization, combined with the gain ratio fixed to 1."""
    single = design_single_codebook("baseline", geom, part, end=end)
    if end == "tx":
        make = lambda c: final_tx(c, 1.0, pol.chi, pol.phi)  # noqa: E731
    else:
        make = lambda c: final_rx(c, 1.0)  # noqa: E731
    return dual_codebook(single, make, hybridizer, "baseline")


def build_design(cfg: ExperimentConfig, criterion: Optional[str] = None) -> LinkDesign:
    criterion = criterion or cfg.criterion
    pol = nominal_pol(cfg)
    hyb_tx, hyb_rx = cfg.hybridizers
    if criterion == "baseline":
        single_tx = design_single_codebook("baseline", cfg.tx.geom, cfg.tx.part, end="tx")
        single_rx = design_single_codebook("baseline", cfg.rx.geom, cfg.rx.part, end="rx")
        align_tx = baseline_codebook(cfg.tx.geom, cfg.tx.part, pol, "tx", hyb_tx)
        align_rx = baseline_codebook(cfg.rx.geom, cfg.rx.part, pol, "rx", hyb_rx)
    else:
        single_tx = design_single_codebook(criterion, cfg.tx.geom, cfg.tx.part, pol, hyb_tx,
                                           SeCandidateSet.build(cfg.tx.part, cfg.b_levels), "tx")
        single_rx = design_single_codebook(criterion, cfg.rx.geom, cfg.rx.part, pol, hyb_rx,
                                           SeCandidateSet.build(cfg.rx.part, cfg.b_levels), "rx")
        align_tx, _ = alignment_codebooks(single_tx, single_rx, pol.chi, pol.phi, hyb_tx)
        _, align_rx = alignment_codebooks(single_tx, single_rx, pol.chi, pol.phi, hyb_rx)
    return LinkDesign(cfg, criterion, single_tx, single_rx, align_tx, align_rx, hyb_tx, hyb_rx,
                      pol.chi, pol.phi)


# --- gain grids --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GainGrid:
    theta_az: np.ndarray
    theta_el: np.ndarray
    gain: np.ndarray
    ideal: float

    @property
    def gain_db(self) -> np.ndarray:
        return 10 * np.log10(np.maximum(self.gain, 1e-30))

    @property
    def gain_normalized(self) -> np.ndarray:
        return self.gain / self.ideal


def midpoints(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def reference_gain_grid(codeword: np.ndarray, pol: PolarizationState, geom: ArrayGeometry,
                        az_points: int, el_points: int, part: Optional[RegionPartition] = None,
                        end: str = "tx", az_range=(-np.pi / 2, np.pi / 2),
                        el_range=(-np.pi / 4, np.pi / 4)) -> GainGrid:
    """Gain of a dual codeword toward physical directions on an open angle grid.

    Rows follow azimuth, columns elevation.  ``ideal`` is the flat ideal
    gain of ``part`` (1 when no partition is given).
    """
    e = effective_single(codeword, pol, end).reshape(geom.m_h, geom.m_v)
    az = midpoints(*az_range, az_points)
    el = midpoints(*el_range, el_points)
    ta, te = np.meshgrid(az, el, indexing="ij")
    pa, pe = paired_frequencies(ta, te)
    g = kernels.gain_points(e, pa.ravel(), pe.ravel()).reshape(ta.shape)
    ideal = ideal_gain(part, geom) if part is not None else 1.0
    return GainGrid(ta, te, g, ideal)


def region_gain_samples(codebook: Codebook, pol: PolarizationState, points: int = 16,
                        end: Optional[str] = None) -> list[np.ndarray]:
    """Normalized gain of codeword ``(p, q)`` on a ``points x points`` spatial-frequency
    grid inside region ``(p, q)``, for every region."""
    end = end or codebook.end
    part, geom = codebook.part, codebook.geom
    g_ideal = ideal_gain(part, geom)
    out = []
    for cw in codebook.codewords:
        (a0, a1), (e0, e1) = part.bounds(*cw.region)
        e = effective_single(cw.weights, pol, end).reshape(geom.m_h, geom.m_v)
        out.append(kernels.gain_separable(e, midpoints(a0, a1, points), midpoints(e0, e1, points)) / g_ideal)
    return out


def codebook_gain_stats(codebook: Codebook, pol: PolarizationState, points: int = 16) -> dict:
    """Minimum, mean and peak normalized in-region gain across the codebook."""
    s = np.concatenate([g.ravel() for g in region_gain_samples(codebook, pol, points)])
    return {"min": float(s.min()), "mean": float(s.mean()), "peak": float(s.max())}


def gain_integral(c: np.ndarray, pol: PolarizationState, geom: ArrayGeometry, n: int = 512) -> float:
    """Riemann sum of the unpaired reference gain over ``[-pi, pi)^2``."""
    e = effective_single(c, pol, "tx").reshape(geom.m_h, geom.m_v)
    grid = -np.pi + 2 * np.pi * np.arange(n) / n
    g = kernels.gain_separable(e, grid, grid)
    return float(g.sum() * (2 * np.pi / n) ** 2)


# --- trials ------------------------------------------------------------------

@dataclass(frozen=True)
class TrialResult:
    rate: float
    rate_align: float
    gain: float
    tx_region: tuple[int, int]
    rx_region: tuple[int, int]
    ratio_tx: complex = complex("nan")
    ratio_rx: complex = complex("nan")
    estimation_failed: bool = False


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for trial ``index``; never depends on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def rate_of(h: np.ndarray, c_tx: np.ndarray, c_rx: np.ndarray, snr: float) -> tuple[float, float]:
    g = float(abs(np.vdot(c_rx, h @ c_tx)) ** 2)
    return float(np.log2(1 + snr * g)), g


def data_rate_trial(design: LinkDesign, snr_db: float, seed: int, index: int = 0,
                    pilot_j: Optional[int] = None) -> TrialResult:
    """One realization: channel, alignment, pilots, final codewords, rate."""
    cfg = design.cfg
    snr = db_to_linear(snr_db)
    rng = trial_rng(seed, index)
    ch = sample_channel(cfg.channel, rng, cfg.tx.geom, cfg.rx.geom)
    al = beam_align(ch, design.align_tx, design.align_rx, snr, rng)
    c_tx = design.align_tx.codewords[al.tx_index]
    c_rx = design.align_rx.codewords[al.rx_index]
    r_align, g_align = rate_of(ch.h, c_tx.weights, c_rx.weights, snr)
    if design.criterion == "baseline":
        return TrialResult(r_align, r_align, g_align, al.tx, al.rx)
    s_tx = design.single_tx.codewords[al.tx_index].weights
    s_rx = design.single_rx.codewords[al.rx_index].weights
    pilots = build_pilots(pilot_j or cfg.pilot_j, cfg.kappa1, cfg.kappa2)
    try:
        rt, rr = estimate_ratios(ch, s_tx, s_rx, pilots, snr, design.chi_known, design.phi_known,
                                 rng, design.hyb_tx)
    except EstimationFailed:
        log.debug("ratio estimation failed in trial %d; keeping alignment pair", index)
        return TrialResult(r_align, r_align, g_align, al.tx, al.rx, estimation_failed=True)
    w_tx = final_tx(s_tx, rt, design.chi_known, design.phi_known)
    w_rx = final_rx(s_rx, rr)
    if design.hyb_tx is not None:
        w_tx = design.hyb_tx.apply(w_tx).weights
    if design.hyb_rx is not None:
        w_rx = design.hyb_rx.apply(w_rx).weights
    r, g = rate_of(ch.h, w_tx, w_rx, snr)
    return TrialResult(r, r_align, g, al.tx, al.rx, rt, rr)


def run_trials(design: LinkDesign, snr_db: float, trials: int, seed: int, threads: int = 1,
               pilot_j: Optional[int] = None) -> list[TrialResult]:
    """Trials ``0..trials-1`` in index order, whatever the worker count."""
    def one(i):
        return data_rate_trial(design, snr_db, seed, i, pilot_j)

    if threads <= 1:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(trials)))


@dataclass(frozen=True)
class RateCurve:
    snr_db: tuple[float, ...]
    mean_rate: tuple[float, ...]
    stderr: tuple[float, ...]
    trials: int
    criterion: str
    stage: str = "final"


def summarize(rates) -> tuple[float, float]:
    r = np.asarray(rates, dtype=float)
    se = float(r.std(ddof=1) / np.sqrt(r.size)) if r.size > 1 else 0.0
    return float(r.mean()), se


def rate_curve(cfg: ExperimentConfig, design: Optional[LinkDesign] = None, stage: str = "final") -> RateCurve:
    design = design or build_design(cfg)
    means, errs = [], []
    for s in cfg.snr_db:
        res = run_trials(design, s, cfg.trials, cfg.seed, cfg.threads)
        vals = [t.rate if stage == "final" else t.rate_align for t in res]
        m, e = summarize(vals)
        means.append(m)
        errs.append(e)
    return RateCurve(tuple(cfg.snr_db), tuple(means), tuple(errs), cfg.trials, design.criterion, stage)


def empirical_cdf(rates) -> tuple[np.ndarray, np.ndarray]:
    r = np.sort(np.asarray(rates, dtype=float))
    return r, np.arange(1, r.size + 1) / r.size


def rate_cdf(cfg: ExperimentConfig, snr_db: float, design: Optional[LinkDesign] = None):
    design = design or build_design(cfg)
    res = run_trials(design, snr_db, cfg.trials, cfg.seed, cfg.threads)
    return empirical_cdf([t.rate for t in res])


def region_rate_bound_gap(codeword: np.ndarray, pol: PolarizationState, geom: ArrayGeometry,
                          part: RegionPartition, p: int, q: int, snr_eff: float, points: int = 64) -> float:
    """``mean log2(1 + snr_eff t) - log2(1 + snr_eff G)`` over uniform directions in
    region ``(p, q)``, ``t`` the unpaired reference gain.  Never positive."""
    (a0, a1), (e0, e1) = part.bounds(p, q)
    e = effective_single(codeword, pol, "tx").reshape(geom.m_h, geom.m_v)
    t = kernels.gain_separable(e, midpoints(a0, a1, points), midpoints(e0, e1, points))
    mean_rate = float(np.mean(np.log2(1 + snr_eff * t)))
    return mean_rate - float(np.log2(1 + snr_eff * ideal_gain(part, geom)))


def true_tx_ratio(pol: PolarizationState) -> complex:
    return complex(np.exp(1j * (pol.zeta_vv - pol.zeta_vh)))


def finalized_tx_codebook(design: LinkDesign, ratio_tx: complex) -> Codebook:
    return dual_codebook(design.single_tx,
                         lambda c: final_tx(c, ratio_tx, design.chi_known, design.phi_known),
                         design.hyb_tx, "final")


def trend_gain_stats(design: LinkDesign, draws: int = 8, points: int = 16, seed: int = 0) -> dict:
    """In-region normalized Tx gain statistics averaged over random polarization states.

    Each draw samples ``chi``, ``phi`` and the path phases from the channel
    config.  SE and MIP codewords are finalized with the true phase ratio
    (perfect estimation); the baseline keeps its fixed ratio of 1.
    """
    cfg = design.cfg.channel
    rng = np.random.default_rng(seed)
    acc = None
    for _ in range(draws):
        pol = PolarizationState(rng.uniform(*cfg.chi_range), rng.uniform(*cfg.phi_range),
                                *rng.uniform(0, 2 * np.pi, size=4))
        ratio = 1.0 if design.criterion == "baseline" else true_tx_ratio(pol)
        cb = finalized_tx_codebook(design, ratio)
        g = np.stack(region_gain_samples(cb, pol, points, "tx"))
        acc = g if acc is None else acc + g
    s = acc / draws
    return {"min": float(s.min()), "mean": float(s.mean()), "peak": float(s.max())}
