"""Array geometry, spatial phases, steering vectors and Rician channel synthesis.

Conventions: half-wavelength element spacing everywhere, so the spatial phase
increments are u = pi*cos(phi), v = pi*sin(phi)*cos(theta) on the planar
surface and z = pi*sin(varpi) on the linear array. All angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

HALF_PI = math.pi / 2.0


def substream(seed: int, *key: int) -> np.random.Generator:
    """Keyed RNG substream: the same (seed, key) always yields the same stream."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def cscg(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmitter ULA size and reflecting-surface element layout.

    The surface has nx*ny passive elements on a uniform planar grid plus na
    active (sensing) elements arranged as an L-array along two orthogonal
    edges that share one corner element.
    """

    m_antennas: int
    nx: int
    ny: int
    na: int = 0

    def __post_init__(self):
        if self.m_antennas < 1:
            raise ValueError("m_antennas must be >= 1")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("passive grid dimensions must be >= 1")
        if self.na < 0:
            raise ValueError("active element count must be >= 0")
        if self.na > self.nx * self.ny:
            raise ValueError("active elements must stay a small fraction of the surface")

    @property
    def n_passive(self) -> int:
        return self.nx * self.ny

    @property
    def arm_lengths(self) -> tuple[int, int]:
        """L-array arm sizes (x arm, y arm); the corner element belongs to both."""
        if self.na < 3:
            raise ValueError("L-array needs at least 3 active elements")
        arm_x = math.ceil(self.na / 2)
        return arm_x, self.na - arm_x + 1


@dataclass(frozen=True)
class AngleSet:
    """Azimuth/elevation pair plus the linear-array angle, radians.

    Each angle is confined to the open interval (-pi/2, pi/2) so the steering
    vectors are unambiguous.
    """

    phi: float
    theta: float = 0.0
    varpi: float = 0.0

    def __post_init__(self):
        for name in ("phi", "theta", "varpi"):
            a = getattr(self, name)
            if not math.isfinite(a):
                raise ValueError(f"{name} must be finite")
            if not -HALF_PI < a < HALF_PI:
                raise ValueError(f"{name}={a} outside (-pi/2, pi/2)")


@dataclass(frozen=True)
class SpatialPhases:
    """Inter-element phase increments (u, v) on the planar grid and z on the ULA."""

    u: float
    v: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ("u", "v", "z"):
            p = getattr(self, name)
            if not math.isfinite(p) or abs(p) > math.pi + 1e-12:
                raise ValueError(f"{name}={p} outside [-pi, pi]")


@dataclass(frozen=True)
class PathLossModel:
    """Power-law path loss: gain(d) = 10^(-ref_loss_db/10) * d^(-exponent)."""

    ref_loss_db: float = 30.0
    exponent: float = 2.2
    d_hap_riss_m: float = 12.0
    d_riss_user_m: float = 3.0

    def __post_init__(self):
        if self.ref_loss_db < 0 or self.exponent < 0:
            raise ValueError("reference loss and exponent must be >= 0")
        if self.d_hap_riss_m <= 0 or self.d_riss_user_m <= 0:
            raise ValueError("distances must be positive")

    @classmethod
    def normalized(cls) -> "PathLossModel":
        """Unit-gain model (cascade loss exactly 1), used for normalized studies."""
        return cls(ref_loss_db=0.0, exponent=0.0)


def path_loss_linear(model: PathLossModel, d: float) -> float:
    """Linear power gain at distance d meters."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return 10.0 ** (-model.ref_loss_db / 10.0) * d ** (-model.exponent)


@dataclass(frozen=True)
class SystemParams:
    """Full scenario parameterization: geometry, fading, losses, powers, angles."""

    geometry: ArrayGeometry
    kappa_g: float = 1.0  # Rician factor of the HAP-to-surface channel
    kappa_h: float = 1.0  # Rician factor of the surface-to-user channel
    pathloss: PathLossModel = field(default_factory=PathLossModel)
    p_e_watts: float = 1.0
    p_i_watts: float = 1e-3
    noise_sigma2_watts: float = 1e-11  # -80 dBm
    hap_angles: AngleSet = field(default_factory=lambda: AngleSet(0.40, 0.25, 0.20))
    user_angles: AngleSet = field(default_factory=lambda: AngleSet(0.65, -0.30))

    def __post_init__(self):
        if self.kappa_g < 0 or self.kappa_h < 0:
            raise ValueError("Rician factors must be >= 0")
        if self.p_e_watts <= 0 or self.p_i_watts < 0:
            raise ValueError("transmit powers must be positive (p_i may be 0)")
        if self.noise_sigma2_watts <= 0:
            raise ValueError("noise power must be positive")

    @property
    def loss_hap_riss(self) -> float:
        return path_loss_linear(self.pathloss, self.pathloss.d_hap_riss_m)

    @property
    def loss_riss_user(self) -> float:
        return path_loss_linear(self.pathloss, self.pathloss.d_riss_user_m)

    @property
    def cascade_loss(self) -> float:
        """Total two-hop power gain (HAP -> surface -> user)."""
        return self.loss_hap_riss * self.loss_riss_user

    @property
    def hap_phases(self) -> "SpatialPhases":
        return angles_to_phases(self.hap_angles)

    @property
    def user_phases(self) -> "SpatialPhases":
        return angles_to_phases(self.user_angles)

    def with_power(self, p_e_watts: float) -> "SystemParams":
        return replace(self, p_e_watts=p_e_watts)


def angles_to_phases(angles: AngleSet) -> SpatialPhases:
    """Map physical angles to inter-element phase increments at d = lambda/2."""
    return SpatialPhases(
        u=math.pi * math.cos(angles.phi),
        v=math.pi * math.sin(angles.phi) * math.cos(angles.theta),
        z=math.pi * math.sin(angles.varpi),
    )


def upa_index_ramps(nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based (x, y) grid indices for each of the nx*ny elements.

    Element n maps to (ix, iy) = (n // ny, n % ny), matching the Kronecker
    layout of steering_upa.
    """
    n = np.arange(nx * ny)
    return n // ny, n % ny


def steering_upa(u: float, v: float, nx: int, ny: int) -> np.ndarray:
    """Unit-norm planar-array steering vector, Kronecker of the two axis ULAs."""
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be >= 1")
    ax = np.exp(1j * u * np.arange(nx)) / np.sqrt(nx)
    ay = np.exp(1j * v * np.arange(ny)) / np.sqrt(ny)
    return np.kron(ax, ay)


def steering_ula(z: float, m: int) -> np.ndarray:
    """Unit-norm linear-array steering vector, entry n = e^(i n z)/sqrt(m)."""
    if m < 1:
        raise ValueError("array size must be >= 1")
    return np.exp(1j * z * np.arange(m)) / np.sqrt(m)


def rician_weights(kappa: float) -> tuple[float, float]:
    """(LoS, NLoS) amplitude weights; kappa may be math.inf for pure LoS."""
    if math.isinf(kappa):
        return 1.0, 0.0
    return math.sqrt(kappa / (1.0 + kappa)), math.sqrt(1.0 / (1.0 + kappa))


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the two-hop channels with their LoS/NLoS split retained."""

    g_matrix: np.ndarray  # (N, M) HAP -> surface
    h_vector: np.ndarray  # (N,)   surface -> user
    g_los: np.ndarray
    h_los: np.ndarray
    g_nlos: np.ndarray
    h_nlos: np.ndarray


def los_components(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic LoS parts: sqrt(MN) a(u,v) b(z)^H and sqrt(N) a(u,v)."""
    geo = params.geometry
    ph_g = params.hap_phases
    ph_h = params.user_phases
    n, m = geo.n_passive, geo.m_antennas
    a_g = steering_upa(ph_g.u, ph_g.v, geo.nx, geo.ny)
    b_g = steering_ula(ph_g.z, m)
    g_los = math.sqrt(m * n) * np.outer(a_g, b_g.conj())
    h_los = math.sqrt(n) * steering_upa(ph_h.u, ph_h.v, geo.nx, geo.ny)
    return g_los, h_los


def synth_rician(params: SystemParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw one Rician block-fading realization of both hops."""
    geo = params.geometry
    n, m = geo.n_passive, geo.m_antennas
    g_los, h_los = los_components(params)
    g_nlos = cscg(rng, (n, m))
    h_nlos = cscg(rng, n)
    wg_los, wg_nlos = rician_weights(params.kappa_g)
    wh_los, wh_nlos = rician_weights(params.kappa_h)
    return ChannelRealization(
        g_matrix=wg_los * g_los + wg_nlos * g_nlos,
        h_vector=wh_los * h_los + wh_nlos * h_nlos,
        g_los=g_los,
        h_los=h_los,
        g_nlos=g_nlos,
        h_nlos=h_nlos,
    )
