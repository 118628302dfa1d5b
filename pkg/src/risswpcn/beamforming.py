"""Reflection-phase design from angle estimates, transmit/receive filters and
the perfect-CSI alternating-optimization baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrays import (
    ArrayGeometry,
    ChannelRealization,
    SpatialPhases,
    steering_ula,
    upa_index_ramps,
)


@dataclass(frozen=True)
class RissPhaseConfig:
    """Unit-modulus reflection coefficients, one per passive element."""

    theta: np.ndarray

    def __post_init__(self):
        if not np.allclose(np.abs(self.theta), 1.0, atol=1e-9):
            raise ValueError("reflection coefficients must be unit modulus")


@dataclass(frozen=True)
class Precoder:
    """Transmit precoder (||w||^2 = power_watts) or unit-norm receive combiner."""

    w: np.ndarray
    power_watts: float


def riss_phase_design(
    est_user: SpatialPhases, est_hap: SpatialPhases, geometry: ArrayGeometry
) -> RissPhaseConfig:
    """Angle-matched reflection phases for the downlink.

    Element (ix, iy) gets exp(+i(ix*u_user + iy*v_user)) * exp(-i(ix*u_hap +
    iy*v_hap)), using the same index layout as steering_upa. With exact
    estimates the cascade of LoS steering vectors collapses to a constant.
    """
    ix, iy = upa_index_ramps(geometry.nx, geometry.ny)
    ramp = ix * (est_user.u - est_hap.u) + iy * (est_user.v - est_hap.v)
    return RissPhaseConfig(theta=np.exp(1j * ramp))


def mrt_precoder(z_hap: float, m: int, p_e_watts: float) -> Precoder:
    """Maximal-ratio transmission toward the HAP-side steering direction."""
    if p_e_watts <= 0:
        raise ValueError("transmit power must be positive")
    return Precoder(w=math.sqrt(p_e_watts) * steering_ula(z_hap, m), power_watts=p_e_watts)


def mrc_combiner(effective_channel: np.ndarray) -> Precoder:
    """Unit-norm combiner collinear with the given effective channel vector."""
    nrm = np.linalg.norm(effective_channel)
    if nrm == 0:
        raise ValueError("cannot combine on an all-zero channel")
    return Precoder(w=np.asarray(effective_channel) / nrm, power_watts=1.0)


def _cascade_row(real: ChannelRealization, phases: RissPhaseConfig) -> np.ndarray:
    """h^H diag(theta) G as a length-M row, via einsum (no BLAS dispatch)."""
    h, g = real.h_vector, real.g_matrix
    if phases.theta.shape[0] != h.shape[0] or g.shape[0] != h.shape[0]:
        raise ValueError("phase vector / channel dimensions mismatch")
    return np.einsum("n,n,nm->m", h.conj(), phases.theta, g)


def received_energy_instant(
    real: ChannelRealization,
    phases: RissPhaseConfig,
    precoder: Precoder,
    cascade_loss: float,
) -> float:
    """Instantaneous received energy rho * |h^H Theta G w|^2, watts."""
    row = _cascade_row(real, phases)
    if precoder.w.shape[0] != row.shape[0]:
        raise ValueError("precoder length does not match antenna count")
    s = np.einsum("m,m->", row, precoder.w)
    return float(cascade_loss * np.abs(s) ** 2)


def uplink_effective_channel(
    real: ChannelRealization, phases: RissPhaseConfig
) -> np.ndarray:
    """Effective uplink vector seen by the HAP across its M antennas.

    TDD reciprocity: the uplink cascade is the conjugate transpose of the
    downlink one with the same reflection phases, x = (h^H Theta G)^H.
    """
    return _cascade_row(real, phases).conj()


def uplink_snr_instant(
    real: ChannelRealization,
    phases: RissPhaseConfig,
    combiner: Precoder,
    p_i_watts: float,
    sigma2_watts: float,
    cascade_loss: float,
) -> float:
    """Instantaneous uplink SNR rho * P_I * |w~^H x|^2 / sigma^2."""
    if sigma2_watts <= 0:
        raise ValueError("noise power must be positive")
    x = uplink_effective_channel(real, phases)
    s = np.einsum("m,m->", combiner.w.conj(), x)
    return float(cascade_loss * p_i_watts * np.abs(s) ** 2 / sigma2_watts)


@dataclass(frozen=True)
class FullCsiResult:
    precoder: Precoder
    phases: RissPhaseConfig
    energy_watts: float
    objective_trace: np.ndarray  # energy after each full iteration
    iterations: int
    converged: bool


def fullcsi_alternating_opt(
    real: ChannelRealization,
    p_e_watts: float,
    cascade_loss: float,
    tol: float = 1e-6,
    max_iter: int = 100,
    init_theta: np.ndarray | None = None,
) -> FullCsiResult:
    """Perfect-CSI baseline: alternate MRT precoding and phase conjugation.

    For fixed phases the optimal w is MRT toward (h^H Theta G)^H; for fixed w
    each element conjugates the phase of h_n^* (G w)_n. Both half-steps are
    non-decreasing in the received energy; iteration stops when the relative
    improvement drops below tol. A non-converged run still returns the best
    point found, flagged via `converged`.
    """
    h, g = real.h_vector, real.g_matrix
    n = h.shape[0]
    theta = np.ones(n, dtype=complex) if init_theta is None else np.asarray(init_theta, dtype=complex)
    if theta.shape[0] != n:
        raise ValueError("init_theta length does not match element count")

    if not np.any(h) or not np.any(g):
        w = np.zeros(g.shape[1], dtype=complex)
        w[0] = math.sqrt(p_e_watts)
        return FullCsiResult(
            Precoder(w, p_e_watts), RissPhaseConfig(theta), 0.0, np.zeros(1), 0, True
        )

    trace = []
    prev = -np.inf
    converged = False
    it = 0
    w = None
    for it in range(1, max_iter + 1):
        row = np.einsum("n,n,nm->m", h.conj(), theta, g)
        nrm = np.linalg.norm(row)
        if nrm == 0:
            break
        w = math.sqrt(p_e_watts) * row.conj() / nrm
        gw = np.einsum("nm,m->n", g, w)
        c = h.conj() * gw
        theta = np.exp(-1j * np.angle(c))
        obj = cascade_loss * float(np.abs(np.sum(np.abs(c))) ** 2)
        trace.append(obj)
        if prev > 0 and (obj - prev) <= tol * prev:
            converged = True
            break
        prev = obj

    energy = received_energy_instant(real, RissPhaseConfig(theta), Precoder(w, p_e_watts), cascade_loss)
    return FullCsiResult(
        precoder=Precoder(w, p_e_watts),
        phases=RissPhaseConfig(theta),
        energy_watts=energy,
        objective_trace=np.asarray(trace),
        iterations=it,
        converged=converged,
    )
