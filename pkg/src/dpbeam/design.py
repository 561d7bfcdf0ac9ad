"""Ideal patterns, squared-error and inner-product codeword design, dual lifting."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .array import (ArrayGeometry, DictionarySet, RegionPartition, build_dictionaries,
                    region_transform, steering_planar, AZ_LOW, AZ_SPAN, EL_LOW, EL_SPAN)
from .channel import PolarizationState, rotate
from .hybrid import HybridBeamformer, omp_decompose

CRITERIA = ("se", "mip", "baseline", "alignment", "final")


class DegenerateCandidate(ValueError):
    """Candidate phase vectors cancel to a zero codeword."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class HybridSettings:
    n_rf: int = 4
    phase_bits: Optional[int] = 4

    def apply(self, weights: np.ndarray) -> HybridBeamformer:
        return omp_decompose(weights, self.n_rf, self.phase_bits)


@dataclass(frozen=True, eq=False)
class Codeword:
    weights: np.ndarray
    criterion: str
    region: tuple[int, int]
    polarization: str = "single"
    end: str = "tx"
    hybrid: Optional[HybridBeamformer] = None
    single: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        n = np.linalg.norm(self.weights)
        if abs(n - 1) > 1e-10:
            raise ValueError(f"codeword norm {n!r} != 1")


@dataclass(frozen=True, eq=False)
class Codebook:
    """Codewords for every region of ``part`` in row-major ``(p, q)`` order."""

    end: str
    criterion: str
    geom: ArrayGeometry
    part: RegionPartition
    codewords: list[Codeword]

    def __len__(self):
        return len(self.codewords)

    def __getitem__(self, pq: tuple[int, int]) -> Codeword:
        p, q = pq
        self.part.check_region(p, q)
        return self.codewords[(p - 1) * self.part.q_v + (q - 1)]

    def matrix(self) -> np.ndarray:
        """``Q x M`` array of weights."""
        return np.stack([c.weights for c in self.codewords])

    @property
    def dual(self) -> bool:
        return self.codewords[0].polarization == "dual"


@dataclass(frozen=True, eq=False)
class IdealPatternVector:
    region: tuple[int, int]
    gain: float
    vector: np.ndarray


def ideal_gain(part: RegionPartition, geom: ArrayGeometry) -> float:
    return part.region_count * np.sqrt(2) / (geom.m_h * geom.m_v)


def ideal_pattern(part: RegionPartition, geom: ArrayGeometry, p: int, q: int) -> IdealPatternVector:
    """Flat gain ``Q sqrt(2) / (m_h m_v)`` on the sections of region ``(p, q)``."""
    g = ideal_gain(part, geom)
    if geom.m_h * geom.m_v <= part.region_count * np.sqrt(2):
        warnings.warn("ideal gain exceeds 1: array too small for this many regions")
    vec = np.zeros(part.region_count * part.section_count)
    vec[part.section_index(p, q)] = g
    return IdealPatternVector((p, q), g, vec)


def effective_single(c: np.ndarray, pol: PolarizationState, end: str = "tx") -> np.ndarray:
    """Collapse a dual codeword onto the single-panel vector the LOS channel sees.

    Tx: ``b (rho_vv c'_v + rho_vh c'_h)`` with ``c' = R(phi) c``.
    Rx: ``b_rx (xi_v c_v + xi_h c_h)``.
    """
    c = np.asarray(c)
    half = c.shape[0] // 2
    if end == "tx":
        cp = rotate(c, pol.phi)
        return pol.b * (pol.rho_vv * cp[:half] + pol.rho_vh * cp[half:])
    return pol.b_rx * (pol.xi_v * c[:half] + pol.xi_h * c[half:])


def pattern_vector(c: np.ndarray, pol: PolarizationState, dic: DictionarySet,
                   end: str = "tx") -> np.ndarray:
    """Section gains ``|b ([rho_vv rho_vh] (x) D^H) R(phi) c|^2`` of a dual codeword."""
    c = np.asarray(c)
    if c.shape[0] != 2 * dic.geom.panel_size:
        raise ValueError(f"expected dual codeword of length {2 * dic.geom.panel_size}, got {c.shape[0]}")
    e = effective_single(c, pol, end)
    return np.abs(dic.d.conj().T @ e) ** 2


def pattern_single(c: np.ndarray, dic: DictionarySet) -> np.ndarray:
    return np.abs(dic.d.conj().T @ np.asarray(c)) ** 2


def squared_error(g: np.ndarray, ideal: IdealPatternVector) -> float:
    return float(np.sum((ideal.vector - g) ** 2))


# --- candidate sets --------------------------------------------------------

def ramp_phases(length: int, levels: int) -> list[np.ndarray]:
    """Linear phase ramps ``exp(j (i-1) (-pi + 2 pi l / B))``, ``l = 1..B``."""
    i = np.arange(length)
    return [np.exp(1j * i * (-np.pi + 2 * np.pi * l / levels)) for l in range(1, levels + 1)]


def elementwise_phases(length: int, levels: int) -> list[np.ndarray]:
    """Every assignment of the ``B`` phase levels to each entry (``B^length`` vectors)."""
    vals = [np.exp(1j * (-np.pi + 2 * np.pi * l / levels)) for l in range(1, levels + 1)]
    return [np.array(t) for t in itertools.product(vals, repeat=length)]


@dataclass(frozen=True, eq=False)
class SeCandidateSet:
    b_levels: int
    g_h: list[np.ndarray]
    g_v: list[np.ndarray]

    def __post_init__(self):
        for q in itertools.chain(self.g_h, self.g_v):
            if not np.allclose(np.abs(q), 1.0, atol=1e-12):
                raise ValueError("candidate phase vectors must be unit modulus")
        if not self.g_h or not self.g_v:
            raise ValueError("empty candidate set")

    @classmethod
    def build(cls, part: RegionPartition, b_levels: int = 3,
              generator: Callable[[int, int], list[np.ndarray]] = ramp_phases) -> "SeCandidateSet":
        return cls(b_levels, generator(part.l_h, b_levels), generator(part.l_v, b_levels))

    def pairs(self) -> Iterable[tuple[np.ndarray, np.ndarray]]:
        return itertools.product(self.g_h, self.g_v)

    def __len__(self):
        return len(self.g_h) * len(self.g_v)


def se_single_candidate(q_lh: np.ndarray, q_lv: np.ndarray, dic: DictionarySet,
                        p: int = 1, q: int = 1) -> np.ndarray:
    """``(D_{h,p} q_lh) (x) (D_{v,q} q_lv)`` normalized."""
    c = np.kron(dic.d_h_p(p) @ q_lh, dic.d_v_q(q) @ q_lv)
    n = np.linalg.norm(c)
    if n < 1e-12:
        raise DegenerateCandidate("candidate combines to a zero vector")
    return c / n


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate so the largest-magnitude entry is real positive."""
    k = int(np.argmax(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[k]))


def power_iteration(a: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000):
    """Dominant eigenpair of a Hermitian PSD matrix from an all-ones start.

    Stops when successive Rayleigh quotients differ by less than ``tol``
    (relative to the quotient when it exceeds 1).  Returns
    ``(eigenvalue, unit eigenvector, iterations)``.
    """
    n = a.shape[0]
    v = np.ones(n, dtype=complex) / np.sqrt(n)
    w = a @ v
    rq = float(np.real(np.vdot(v, w)))
    for it in range(1, max_iter + 1):
        nw = np.linalg.norm(w)
        if nw == 0:
            # all-ones start in the null space; fall back to a unit vector basis
            v = np.zeros(n, dtype=complex)
            v[it % n] = 1
            w = a @ v
            continue
        v = w / nw
        w = a @ v
        new_rq = float(np.real(np.vdot(v, w)))
        if abs(new_rq - rq) < tol * max(1.0, abs(new_rq)):
            return new_rq, canonical_phase(v), it
        rq = new_rq
    resid = float(np.linalg.norm(w - rq * v))
    raise ConvergenceError("power iteration did not converge", resid)


def mip_single(dic: DictionarySet, p: int = 1, q: int = 1) -> np.ndarray:
    """Dominant eigenvector of ``D_pq D_pq^H``."""
    d = dic.d_pq(p, q)
    _, v, _ = power_iteration(d @ d.conj().T)
    return v


def rayleigh_quotient(a: np.ndarray, v: np.ndarray) -> float:
    return float(np.real(np.vdot(v, a @ v)) / np.real(np.vdot(v, v)))


def lift_tx(c_single: np.ndarray, pol: PolarizationState) -> np.ndarray:
    """``b R(phi)^H ([rho_vv*; rho_vh*] (x) c)``."""
    c_single = np.asarray(c_single)
    stacked = np.concatenate([np.conj(pol.rho_vv) * c_single, np.conj(pol.rho_vh) * c_single])
    return pol.b * rotate(stacked, pol.phi, adjoint=True)


def lift_rx(c_single: np.ndarray, pol: PolarizationState) -> np.ndarray:
    """``b_rx [xi_v*; xi_h*] (x) c``."""
    c_single = np.asarray(c_single)
    return pol.b_rx * np.concatenate([np.conj(pol.xi_v) * c_single, np.conj(pol.xi_h) * c_single])


def lift(c_single, pol, end="tx"):
    return lift_tx(c_single, pol) if end == "tx" else lift_rx(c_single, pol)


@dataclass(frozen=True)
class SeChoice:
    codeword: Codeword
    q_lh: np.ndarray
    q_lv: np.ndarray
    error: float
    index: int


def se_select(candidates: SeCandidateSet, dic: DictionarySet, pol: PolarizationState,
              p: int = 1, q: int = 1, hybridizer: Optional[HybridSettings] = None,
              end: str = "tx") -> SeChoice:
    """Pick the candidate whose (hybrid) dual pattern is closest to the ideal one.

    Degenerate candidates are skipped; ties keep the earliest candidate.
    """
    ideal = ideal_pattern(dic.part, dic.geom, p, q)
    best = None
    for idx, (qh, qv) in enumerate(candidates.pairs()):
        try:
            cs = se_single_candidate(qh, qv, dic, p, q)
        except DegenerateCandidate:
            continue
        dual = lift(cs, pol, end)
        hyb = None
        if hybridizer is not None:
            hyb = hybridizer.apply(dual)
            dual = hyb.weights
        err = squared_error(pattern_vector(dual, pol, dic, end), ideal)
        if best is None or err < best[0]:
            cw = Codeword(dual, "se", (p, q), "dual", end, hyb, cs)
            best = (err, cw, qh, qv, idx)
    if best is None:
        raise DegenerateCandidate("every candidate is degenerate")
    err, cw, qh, qv, idx = best
    return SeChoice(cw, qh, qv, err, idx)


def region_center(part: RegionPartition, p: int, q: int) -> tuple[float, float]:
    part.check_region(p, q)
    return (AZ_LOW + AZ_SPAN * (p - 0.5) / part.q_h, EL_LOW + EL_SPAN * (q - 0.5) / part.q_v)


def design_single_codebook(criterion: str, geom: ArrayGeometry, part: RegionPartition,
                           pol: Optional[PolarizationState] = None,
                           hybridizer: Optional[HybridSettings] = None,
                           candidates: Optional[SeCandidateSet] = None,
                           end: str = "tx", dic: Optional[DictionarySet] = None) -> Codebook:
    """Single-polarization codebook over every region.

    ``se`` selects the (1, 1) candidate (on hybrid dual codewords when
    ``hybridizer`` is given, using ``pol`` as the nominal polarization) and
    moves it to the other regions; ``mip`` solves each region directly;
    ``baseline`` steers at each region center.
    """
    geom = geom.single()
    dic = dic or build_dictionaries(geom, part)
    words = []
    if criterion == "se":
        candidates = candidates or SeCandidateSet.build(part)
        pol = pol or PolarizationState(0.3)
        choice = se_select(candidates, dic, pol, 1, 1, hybridizer, end)
        base = choice.codeword.single
        for p, q in part.regions():
            words.append(Codeword(region_transform(base, p, q, geom, part), "se", (p, q), "single", end))
    elif criterion == "mip":
        for p, q in part.regions():
            words.append(Codeword(mip_single(dic, p, q), "mip", (p, q), "single", end))
    elif criterion == "baseline":
        for p, q in part.regions():
            c = steering_planar(*region_center(part, p, q), geom)
            words.append(Codeword(c, "baseline", (p, q), "single", end))
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    return Codebook(end, criterion, geom, part, words)


def dual_codebook(single: Codebook, make: Callable[[np.ndarray], np.ndarray],
                  hybridizer: Optional[HybridSettings] = None, criterion: Optional[str] = None) -> Codebook:
    """Apply a single-to-dual map to every codeword, optionally hybridizing."""
    words = []
    for cw in single.codewords:
        w = make(cw.single if cw.single is not None else cw.weights)
        w = w / np.linalg.norm(w)
        hyb = None
        if hybridizer is not None:
            hyb = hybridizer.apply(w)
            w = hyb.weights
        words.append(Codeword(w, criterion or single.criterion, cw.region, "dual", single.end, hyb, cw.weights))
    geom = ArrayGeometry(single.geom.m_h, single.geom.m_v, dual=True)
    return Codebook(single.end, criterion or single.criterion, geom, single.part, words)


def with_criterion(cb: Codebook, criterion: str) -> Codebook:
    return replace(cb, criterion=criterion)
