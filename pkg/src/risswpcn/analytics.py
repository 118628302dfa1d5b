"""Closed-form expressions for expected received energy and spectral
efficiency, with and without direction-estimation errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrays import SystemParams

# Fit constants linking angle-domain error variances to the phase-domain
# Gaussian model (two-stage SISO/MISO least-squares search).
ETA_U_DEFAULT = 4.3575
ETA_V_DEFAULT = 1.395
ETA_Z_DEFAULT = 2.15


@dataclass(frozen=True)
class DoaErrorModel:
    """Gaussian error standard deviations, phase domain and angle domain.

    Phase-domain sigmas describe errors directly on the inter-element phase
    increments (user u/v, HAP-side u/v and z). Angle-domain sigmas describe
    errors on the physical angles; they enter the closed forms through the
    eta fit constants. All in radians.
    """

    sigma_hu: float = 0.0
    sigma_hv: float = 0.0
    sigma_gu: float = 0.0
    sigma_gv: float = 0.0
    sigma_gz: float = 0.0
    sigma_doa_h: float = 0.0
    sigma_doa_g: float = 0.0
    sigma_doa_p: float = 0.0
    eta_u: float = ETA_U_DEFAULT
    eta_v: float = ETA_V_DEFAULT
    eta_z: float = ETA_Z_DEFAULT

    def __post_init__(self):
        for name in (
            "sigma_hu", "sigma_hv", "sigma_gu", "sigma_gv", "sigma_gz",
            "sigma_doa_h", "sigma_doa_g", "sigma_doa_p",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if min(self.eta_u, self.eta_v, self.eta_z) <= 0:
            raise ValueError("eta constants must be positive")

    @classmethod
    def phase_domain(cls, sigma: float, **overrides) -> "DoaErrorModel":
        """All five phase-domain sigmas set to the same value."""
        base = dict(sigma_hu=sigma, sigma_hv=sigma, sigma_gu=sigma,
                    sigma_gv=sigma, sigma_gz=sigma)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def angle_domain(cls, sigma: float, **overrides) -> "DoaErrorModel":
        """All three angle-domain sigmas set to the same value."""
        base = dict(sigma_doa_h=sigma, sigma_doa_g=sigma, sigma_doa_p=sigma)
        base.update(overrides)
        return cls(**base)


def gaussian_dirichlet_sum(sigma2: float, n: int) -> float:
    """E{|sum_{m=0}^{n-1} e^(i m xi)|^2} for xi ~ Normal(0, sigma2).

    Equals the double sum over element pairs of e^(-(i-k)^2 sigma2 / 2),
    evaluated via the lag form: n + 2 * sum_d (n-d) e^(-d^2 sigma2 / 2).
    Monotone decreasing in sigma2, bounded in [n, n^2].
    """
    if sigma2 < 0:
        raise ValueError("variance must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    d = np.arange(1, n)
    return float(n + 2.0 * np.sum((n - d) * np.exp(-0.5 * d * d * sigma2)))


def gaussian_dirichlet_sum4(sigma2: float, n: int) -> float:
    """E{|sum_{m=0}^{n-1} e^(i m xi)|^4} for xi ~ Normal(0, sigma2).

    n^2 + 4n sum_i (n-i) e^(-i^2 s/2)
        + 2 sum_{i,j} (n-i)(n-j) (e^(-(i-j)^2 s/2) + e^(-(i+j)^2 s/2)).
    Collapses to n^4 at sigma2 = 0; bounded in [n^2, n^4].
    """
    if sigma2 < 0:
        raise ValueError("variance must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 1.0
    i = np.arange(1, n)
    wi = (n - i).astype(float)
    term1 = 4.0 * n * np.sum(wi * np.exp(-0.5 * i * i * sigma2))
    diff = i[:, None] - i[None, :]
    summ = i[:, None] + i[None, :]
    wij = wi[:, None] * wi[None, :]
    term2 = 2.0 * np.sum(
        wij * (np.exp(-0.5 * diff * diff * sigma2) + np.exp(-0.5 * summ * summ * sigma2))
    )
    return float(n * n + term1 + term2)


def expected_energy_perfect(params: SystemParams) -> float:
    """Mean received energy with exact angle knowledge, watts.

    rho * P_E * (N^2 M kh kg + N M kg + N kh + N) / ((1+kh)(1+kg)).
    """
    geo = params.geometry
    n, m = geo.n_passive, geo.m_antennas
    kh, kg = params.kappa_h, params.kappa_g
    core = n * n * m * kh * kg + n * m * kg + n * kh + n
    return params.cascade_loss * params.p_e_watts * core / ((1.0 + kh) * (1.0 + kg))


def miso_siso_ratio(m: int, n: int, kappa_h: float, kappa_g: float) -> float:
    """Expected-energy ratio of an M-antenna transmitter over a single antenna.

    Bounded in [1, M]; reaches M only when the transmitter-side channel has a
    LoS component (kappa_g > 0) to aim at.
    """
    if m < 1 or n < 1:
        raise ValueError("array sizes must be >= 1")
    num = n * n * m * kappa_h * kappa_g + n * m * kappa_g + n * kappa_h + n
    den = n * n * kappa_h * kappa_g + n * kappa_g + n * kappa_h + n
    return num / den


def se_upper_bound(params: SystemParams) -> float:
    """Jensen upper bound on the ergodic spectral efficiency, bits/s/Hz."""
    mean_snr = (
        expected_energy_perfect(params)
        * params.p_i_watts
        / (params.p_e_watts * params.noise_sigma2_watts)
    )
    return math.log2(1.0 + mean_snr)


def _energy_core_with_sums(params: SystemParams, au: float, av: float, az: float) -> float:
    """Shared assembly of the error-aware mean energy from the three pair sums."""
    geo = params.geometry
    n, m = geo.n_passive, geo.m_antennas
    kh, kg = params.kappa_h, params.kappa_g
    core = kh * kg * au * av * az / m + kg * n * az / m + kh * n + n
    return params.cascade_loss * params.p_e_watts * core / ((1.0 + kh) * (1.0 + kg))


def expected_energy_phase_error(params: SystemParams, err: DoaErrorModel) -> float:
    """Mean received energy under Gaussian phase-increment errors, watts.

    The user and HAP-side errors on each planar axis combine into a single
    variance (sum), the transmitter axis carries only the HAP-side z error.
    """
    geo = params.geometry
    au = gaussian_dirichlet_sum(err.sigma_hu**2 + err.sigma_gu**2, geo.nx)
    av = gaussian_dirichlet_sum(err.sigma_hv**2 + err.sigma_gv**2, geo.ny)
    az = gaussian_dirichlet_sum(err.sigma_gz**2, geo.m_antennas)
    return _energy_core_with_sums(params, au, av, az)


def expected_energy_doa_error(params: SystemParams, err: DoaErrorModel) -> float:
    """Mean received energy under Gaussian angle errors, watts.

    Angle-domain variances map to the phase-domain model through the eta fit
    constants: exponent eta*(i-k)^2*(sigma_h^2 + sigma_g^2) per planar axis and
    eta_z*(i-k)^2*sigma_p^2 on the transmitter axis.
    """
    geo = params.geometry
    s_uv = err.sigma_doa_h**2 + err.sigma_doa_g**2
    au = gaussian_dirichlet_sum(2.0 * err.eta_u * s_uv, geo.nx)
    av = gaussian_dirichlet_sum(2.0 * err.eta_v * s_uv, geo.ny)
    az = gaussian_dirichlet_sum(2.0 * err.eta_z * err.sigma_doa_p**2, geo.m_antennas)
    return _energy_core_with_sums(params, au, av, az)


def energy_bounds(params: SystemParams) -> tuple[float, float]:
    """(lower, upper) bounds on the error-aware mean energy, watts.

    The lower bound substitutes the worst-case pair sums (N and 1), the upper
    bound is the perfect-knowledge mean; the angle-error closed form stays
    between them for every error level.
    """
    geo = params.geometry
    n = geo.n_passive
    kh, kg = params.kappa_h, params.kappa_g
    lower_core = n * (kh * kg + kg + kh + 1.0)
    lower = params.cascade_loss * params.p_e_watts * lower_core / ((1.0 + kh) * (1.0 + kg))
    return lower, expected_energy_perfect(params)
