"""Dual-polarization Rician MIMO channel with recorded ground truth.

Port layout of every dual-polarized vector or matrix dimension is
``[v-polarized panel; h-polarized panel]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array import ArrayGeometry, steering_paired

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class PolarizationState:
    """XPD ``chi``, orientation difference ``phi`` and the four path phases."""

    chi: float
    phi: float = 0.0
    zeta_vv: float = 0.0
    zeta_vh: float = 0.0
    zeta_hv: float = 0.0
    zeta_hh: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.chi <= 1.0:
            raise ValueError(f"XPD must lie in [0, 1], got {self.chi}")
        # unit Tx normalization holds for every chi
        assert abs(abs(self.rho_vv) ** 2 + abs(self.rho_vh) ** 2 - 1.0) < 1e-12

    @property
    def co(self) -> float:
        return np.sqrt(1.0 / (1.0 + self.chi))

    @property
    def cross(self) -> float:
        return np.sqrt(self.chi / (1.0 + self.chi))

    @property
    def rho_vv(self) -> complex:
        return self.co * np.exp(1j * self.zeta_vv)

    @property
    def rho_vh(self) -> complex:
        return self.cross * np.exp(1j * self.zeta_vh)

    @property
    def rho_hv(self) -> complex:
        return self.cross * np.exp(1j * self.zeta_hv)

    @property
    def rho_hh(self) -> complex:
        return self.co * np.exp(1j * self.zeta_hh)

    def matrix(self) -> np.ndarray:
        """2x2 polarization matrix, rows = Rx (v, h), columns = Tx (v, h)."""
        return np.array([[self.rho_vv, self.rho_vh], [self.rho_hv, self.rho_hh]])

    @property
    def b(self) -> float:
        return (abs(self.rho_vv) ** 2 + abs(self.rho_vh) ** 2) ** -0.5

    @property
    def xi_v(self) -> float:
        return abs(self.rho_vv) ** 2 + abs(self.rho_vh) ** 2

    @property
    def xi_h(self) -> complex:
        return self.rho_vv * np.conj(self.rho_hv) + self.rho_vh * np.conj(self.rho_hh)

    @property
    def b_rx(self) -> float:
        return (abs(self.xi_v) ** 2 + abs(self.xi_h) ** 2) ** -0.5

    def nominal(self) -> "PolarizationState":
        """Same ``chi`` and ``phi`` with all phases zeroed (design-time knowledge)."""
        return PolarizationState(self.chi, self.phi)


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    aod: tuple[float, float]
    aoa: tuple[float, float]
    pol: PolarizationState


@dataclass(frozen=True)
class ChannelConfig:
    """Random-channel parameters.  ``k_db = inf`` gives a pure LOS channel."""

    k_db: float = 13.2
    n_nlos: int = 3
    chi_range: tuple[float, float] = (0.25, 0.35)
    phi_range: tuple[float, float] = (-np.pi / 36, np.pi / 36)
    az_range: tuple[float, float] = (-np.pi / 2, np.pi / 2)
    el_range: tuple[float, float] = (-np.pi / 4, np.pi / 4)

    def __post_init__(self):
        if np.isnan(self.k_db):
            raise ValueError("K-factor is NaN")
        if self.k_linear < 0:
            raise ValueError("K-factor must be non-negative")
        if self.n_nlos < 0:
            raise ValueError("n_nlos must be >= 0")
        for name in ("chi_range", "phi_range", "az_range", "el_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} is empty: ({lo}, {hi})")
        for name in ("az_range", "el_range"):
            lo, hi = getattr(self, name)
            if hi == lo:
                raise ValueError(f"{name} has zero width")
        if not (0 <= self.chi_range[0] and self.chi_range[1] <= 1):
            raise ValueError("chi_range must lie inside [0, 1]")

    @property
    def k_linear(self) -> float:
        return db_to_linear(self.k_db)

    @property
    def chi_mean(self) -> float:
        return 0.5 * (self.chi_range[0] + self.chi_range[1])

    @property
    def phi_mean(self) -> float:
        return 0.5 * (self.phi_range[0] + self.phi_range[1])


def db_to_linear(x_db: float) -> float:
    return float(10.0 ** (x_db / 10.0))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    pol: PolarizationState
    paths: list[PathComponent]
    k_factor: float
    n_nlos: int
    tx_geom: ArrayGeometry = field(repr=False, default=None)
    rx_geom: ArrayGeometry = field(repr=False, default=None)

    @property
    def los(self) -> PathComponent:
        return self.paths[0]


def rotation_matrix(phi: float, half_dim: int) -> np.ndarray:
    """Givens rotation ``[[cos, -sin], [sin, cos]] (x) I_half_dim``."""
    c, s = np.cos(phi), np.sin(phi)
    return np.kron(np.array([[c, -s], [s, c]]), np.eye(half_dim))


def rotate(x: np.ndarray, phi: float, adjoint: bool = False) -> np.ndarray:
    """Apply ``R(phi)`` (or ``R(phi)^H``) to a dual-polarized vector without forming it."""
    half = x.shape[0] // 2
    c, s = np.cos(phi), np.sin(phi)
    if adjoint:
        s = -s
    top, bot = x[:half], x[half:]
    return np.concatenate([c * top - s * bot, s * top + c * bot])


def path_component(pol: PolarizationState, gain: complex, aod, aoa,
                   tx_geom: ArrayGeometry, rx_geom: ArrayGeometry) -> np.ndarray:
    """One path ``h_i {(|P| . e^{j zeta}) (x) a_rx a_tx^H} R(phi)``, ``M_rx x M_tx``."""
    if not (tx_geom.dual and rx_geom.dual):
        raise ValueError("path_component expects dual-polarized geometries")
    a_tx = steering_paired(aod[0], aod[1], tx_geom)
    a_rx = steering_paired(aoa[0], aoa[1], rx_geom)
    core = np.kron(pol.matrix(), np.outer(a_rx, a_tx.conj()))
    return gain * (core @ rotation_matrix(pol.phi, tx_geom.panel_size))


def tx_side_los(pol: PolarizationState, aod, aoa, tx_geom: ArrayGeometry,
                rx_geom_single: ArrayGeometry, gain: complex = 1.0) -> np.ndarray:
    """LOS channel seen by a single (v) polarization Rx panel, ``(M_rx/2) x M_tx``."""
    a_tx = steering_paired(aod[0], aod[1], tx_geom)
    a_rx = steering_paired(aoa[0], aoa[1], rx_geom_single)
    row = np.array([[pol.rho_vv, pol.rho_vh]])
    core = np.kron(row, np.outer(a_rx, a_tx.conj()))
    return gain * (core @ rotation_matrix(pol.phi, tx_geom.panel_size))


def _draw_angle(rng: np.random.Generator, cfg: ChannelConfig):
    return (rng.uniform(*cfg.az_range), rng.uniform(*cfg.el_range))


def sample_channel(cfg: ChannelConfig, rng: np.random.Generator,
                   tx_geom: ArrayGeometry, rx_geom: ArrayGeometry) -> ChannelRealization:
    """Draw one channel realization.

    One ``chi`` and ``phi`` per realization shared by all paths; the four
    polarization phases are drawn independently per path.  The LOS gain has
    unit magnitude and uniform phase, NLOS gains are CN(0, 1).
    """
    chi = rng.uniform(*cfg.chi_range)
    phi = rng.uniform(*cfg.phi_range)
    m_tx, m_rx = tx_geom.port_count(), rx_geom.port_count()
    scale = np.sqrt(m_tx * m_rx / 4.0)
    k = cfg.k_linear
    los_only = np.isinf(k)
    n_nlos = 0 if los_only else cfg.n_nlos

    paths = []
    for i in range(n_nlos + 1):
        zetas = rng.uniform(0.0, TWO_PI, size=4)
        if i == 0:
            gain = np.exp(1j * rng.uniform(0.0, TWO_PI))
        else:
            gain = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
        aod = _draw_angle(rng, cfg)
        aoa = _draw_angle(rng, cfg)
        pol = PolarizationState(chi, phi, *zetas)
        paths.append(PathComponent(complex(gain), aod, aoa, pol))

    h = _assemble(paths, k, scale, tx_geom, rx_geom, los_only)
    return ChannelRealization(h, paths[0].pol, paths, k, n_nlos, tx_geom, rx_geom)


def _assemble(paths, k, scale, tx_geom, rx_geom, los_only):
    def comp(pc):
        return path_component(pc.pol, pc.gain, pc.aod, pc.aoa, tx_geom, rx_geom)

    if los_only:
        return scale * comp(paths[0])
    h = np.sqrt(k / (1 + k)) * scale * comp(paths[0])
    nlos = paths[1:]
    if nlos:
        acc = sum(comp(pc) for pc in nlos)
        h = h + np.sqrt(1 / (1 + k)) * scale / np.sqrt(len(nlos)) * acc
    return h


def los_matrix(ch: ChannelRealization) -> np.ndarray:
    """Unscaled LOS component ``H_0`` of a realization."""
    pc = ch.los
    return path_component(pc.pol, pc.gain, pc.aod, pc.aoa, ch.tx_geom, ch.rx_geom)
