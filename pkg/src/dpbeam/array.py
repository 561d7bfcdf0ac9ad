"""Array geometry, steering vectors and spatial-frequency region partitioning.

All vectors over a planar panel use the layout ``a_h (x) a_v``: the vertical
element index varies fastest.  Element spacing is fixed at half a wavelength,
so a physical angle maps to a phase increment of ``pi * sin(angle)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NewType

import numpy as np

# Per-element phase increment in radians.  Kept distinct from physical angles.
SpatialFrequency = NewType("SpatialFrequency", float)

AZ_SPAN = 2 * np.pi
EL_SPAN = 2 * np.pi / np.sqrt(2)
AZ_LOW = -np.pi
EL_LOW = -np.pi / np.sqrt(2)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array with ``m_h x m_v`` positions per polarization."""

    m_h: int
    m_v: int
    dual: bool = True

    def __post_init__(self):
        if int(self.m_h) < 1 or int(self.m_v) < 1:
            raise ValueError(f"array dimensions must be >= 1, got ({self.m_h}, {self.m_v})")

    @property
    def panel_size(self) -> int:
        """Ports of one polarization panel."""
        return self.m_h * self.m_v

    def port_count(self) -> int:
        return 2 * self.panel_size if self.dual else self.panel_size

    def single(self) -> "ArrayGeometry":
        return ArrayGeometry(self.m_h, self.m_v, dual=False)


@dataclass(frozen=True)
class RegionPartition:
    """Grid of ``q_h x q_v`` regions over the spatial-frequency rectangle
    ``[-pi, pi) x [-pi/sqrt(2), pi/sqrt(2))``, each split into ``l_h x l_v``
    sections.  Region indices ``(p, q)`` are 1-based."""

    q_h: int
    q_v: int
    l_h: int = 7
    l_v: int = 7

    def __post_init__(self):
        for name in ("q_h", "q_v", "l_h", "l_v"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def region_count(self) -> int:
        return self.q_h * self.q_v

    @property
    def section_count(self) -> int:
        return self.l_h * self.l_v

    def regions(self):
        """Region indices in row-major ``(p, q)`` order."""
        return [(p, q) for p in range(1, self.q_h + 1) for q in range(1, self.q_v + 1)]

    def check_region(self, p: int, q: int) -> None:
        if not (1 <= p <= self.q_h and 1 <= q <= self.q_v):
            raise IndexError(f"region ({p}, {q}) outside grid {self.q_h}x{self.q_v}")

    def bounds(self, p: int, q: int) -> tuple[tuple[float, float], tuple[float, float]]:
        """Half-open ``((az_lo, az_hi), (el_lo, el_hi))`` of region ``(p, q)``."""
        self.check_region(p, q)
        az = (AZ_LOW + AZ_SPAN * (p - 1) / self.q_h, AZ_LOW + AZ_SPAN * p / self.q_h)
        el = (EL_LOW + EL_SPAN * (q - 1) / self.q_v, EL_LOW + EL_SPAN * q / self.q_v)
        return az, el

    def contains(self, p: int, q: int, psi_az: float, psi_el: float) -> bool:
        (a0, a1), (e0, e1) = self.bounds(p, q)
        return a0 <= psi_az < a1 and e0 <= psi_el < e1

    def locate(self, psi_az: float, psi_el: float) -> tuple[int, int]:
        """Region containing a spatial-frequency point (azimuth wrapped to [-pi, pi))."""
        psi_az = (psi_az + np.pi) % (2 * np.pi) - np.pi
        p = int(np.floor((psi_az - AZ_LOW) / AZ_SPAN * self.q_h)) + 1
        q = int(np.floor((psi_el - EL_LOW) / EL_SPAN * self.q_v)) + 1
        return min(max(p, 1), self.q_h), min(max(q, 1), self.q_v)

    def section_index(self, p: int, q: int) -> np.ndarray:
        """Columns of the full dictionary belonging to region ``(p, q)``.

        Column order follows ``D_h (x) D_v``: azimuth section ``kh`` and
        elevation section ``kv`` sit at ``kh * (q_v * l_v) + kv``.
        """
        self.check_region(p, q)
        kh = np.arange((p - 1) * self.l_h, p * self.l_h)
        kv = np.arange((q - 1) * self.l_v, q * self.l_v)
        return (kh[:, None] * (self.q_v * self.l_v) + kv[None, :]).ravel()


def az_section_centers(part: RegionPartition) -> np.ndarray:
    n = part.q_h * part.l_h
    return AZ_LOW + np.pi / n + 2 * np.pi * np.arange(n) / n


def el_section_centers(part: RegionPartition) -> np.ndarray:
    n = part.q_v * part.l_v
    return EL_LOW + np.pi / (np.sqrt(2) * n) + 2 * np.pi * np.arange(n) / (np.sqrt(2) * n)


def steering_unpaired(psi: SpatialFrequency, m: int) -> np.ndarray:
    """Unit-norm ULA response ``[1, e^{j psi}, ..., e^{j psi (m-1)}] / sqrt(m)``."""
    return np.exp(1j * psi * np.arange(m)) / np.sqrt(m)


def steering_matrix(psis, m: int) -> np.ndarray:
    """Columns ``steering_unpaired(psi_k, m)`` for each entry of ``psis``."""
    psis = np.asarray(psis, dtype=float)
    return np.exp(1j * np.outer(np.arange(m), psis)) / np.sqrt(m)


def paired_frequencies(theta_az, theta_el):
    """Spatial frequencies of a physical direction at half-wavelength spacing."""
    theta_az = np.asarray(theta_az, dtype=float)
    theta_el = np.asarray(theta_el, dtype=float)
    return np.pi * np.sin(theta_az) * np.cos(theta_el), np.pi * np.sin(theta_el)


def steering_paired(theta_az: float, theta_el: float, geom: ArrayGeometry) -> np.ndarray:
    """Planar response ``a_h(theta_az, theta_el) (x) a_v(theta_el)``, length ``m_h*m_v``."""
    psi_az, psi_el = paired_frequencies(theta_az, theta_el)
    return np.kron(steering_unpaired(psi_az, geom.m_h), steering_unpaired(psi_el, geom.m_v))


def steering_planar(psi_az: SpatialFrequency, psi_el: SpatialFrequency, geom: ArrayGeometry) -> np.ndarray:
    return np.kron(steering_unpaired(psi_az, geom.m_h), steering_unpaired(psi_el, geom.m_v))


@dataclass(frozen=True, eq=False)
class DictionarySet:
    """Section-center steering dictionaries for one panel.

    ``d_h`` is ``m_h x (q_h*l_h)``, ``d_v`` is ``m_v x (q_v*l_v)`` and the
    full dictionary ``d = d_h (x) d_v`` is built lazily.
    """

    geom: ArrayGeometry
    part: RegionPartition
    d_h: np.ndarray
    d_v: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @cached_property
    def d(self) -> np.ndarray:
        return np.kron(self.d_h, self.d_v)

    def d_h_p(self, p: int) -> np.ndarray:
        l = self.part.l_h
        return self.d_h[:, (p - 1) * l:p * l]

    def d_v_q(self, q: int) -> np.ndarray:
        l = self.part.l_v
        return self.d_v[:, (q - 1) * l:q * l]

    def d_pq(self, p: int, q: int) -> np.ndarray:
        self.part.check_region(p, q)
        key = (p, q)
        if key not in self._cache:
            self._cache[key] = np.kron(self.d_h_p(p), self.d_v_q(q))
        return self._cache[key]


def build_dictionaries(geom: ArrayGeometry, part: RegionPartition) -> DictionarySet:
    d_h = steering_matrix(az_section_centers(part), geom.m_h)
    d_v = steering_matrix(el_section_centers(part), geom.m_v)
    return DictionarySet(geom.single(), part, d_h, d_v)


def region_shift(p: int, q: int, part: RegionPartition) -> tuple[float, float]:
    """Spatial-frequency offset of region ``(p, q)`` relative to ``(1, 1)``."""
    part.check_region(p, q)
    return 2 * np.pi * (p - 1) / part.q_h, 2 * np.pi * (q - 1) / (np.sqrt(2) * part.q_v)


def region_transform(c_single: np.ndarray, p: int, q: int, geom: ArrayGeometry,
                     part: RegionPartition) -> np.ndarray:
    """Move a single-polarization codeword designed for region (1, 1) into ``(p, q)``.

    Multiplies element-wise by a unit-modulus phase ramp, which shifts the
    whole beam pattern by the region offset and preserves the norm.
    """
    dh, dv = region_shift(p, q, part)
    d = steering_planar(dh, dv, geom)
    ramp = d / np.linalg.norm(d * d)
    return np.asarray(c_single) * ramp
