"""L-array snapshot synthesis, ROOT-MUSIC direction estimation, empirical
error statistics and the eta fit linking angle errors to the phase model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .analytics import DoaErrorModel, expected_energy_doa_error
from .arrays import AngleSet, ArrayGeometry, SpatialPhases, angles_to_phases, cscg
from .gammadist import ks_distance


@dataclass
class SnapshotSet:
    """Active-element samples per arm plus the ground truth that produced them."""

    x_arm: np.ndarray  # (snapshots, x-arm length)
    y_arm: np.ndarray  # (snapshots, y-arm length)
    true_phases: SpatialPhases
    snr_db: float


@dataclass
class ErrorStats:
    """Phase-increment estimation errors accumulated over random directions."""

    samples: np.ndarray  # (trials, 2): (xi_u, xi_v)
    mean_u: float
    mean_v: float
    std_u: float
    std_v: float
    ks_normal_u: float
    ks_normal_v: float
    n_trials: int


def synth_snapshots(
    geometry: ArrayGeometry,
    true_angles: AngleSet,
    kappa: float,
    snr_db: float,
    n_snapshots: int,
    rng: np.random.Generator,
) -> SnapshotSet:
    """Simulate uplink snapshots on the L-array active elements.

    The fading (LoS steering plus CSCG diffuse part) is held fixed across the
    block; symbols and receiver noise are drawn per snapshot. The corner
    element is physically shared, so its fading and noise appear identically
    in both arms. SNR is LoS power to noise power per element.
    """
    arm_x, arm_y = geometry.arm_lengths
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot")
    ph = angles_to_phases(true_angles)
    w_los = math.sqrt(kappa / (1.0 + kappa)) if not math.isinf(kappa) else 1.0
    w_nlos = math.sqrt(1.0 / (1.0 + kappa)) if not math.isinf(kappa) else 0.0

    # active positions: x arm (n, 0) for n < arm_x, then y arm (0, n) for n >= 1
    n_active = arm_x + arm_y - 1
    los = np.empty(n_active, dtype=complex)
    los[:arm_x] = np.exp(1j * ph.u * np.arange(arm_x))
    los[arm_x:] = np.exp(1j * ph.v * np.arange(1, arm_y))
    channel = w_los * los + w_nlos * cscg(rng, n_active)

    los_power = w_los**2 if w_los > 0 else 1.0
    noise_var = los_power / 10.0 ** (snr_db / 10.0)
    symbols = cscg(rng, n_snapshots)
    noise = math.sqrt(noise_var) * cscg(rng, (n_snapshots, n_active))
    x = symbols[:, None] * channel[None, :] + noise

    x_idx = np.arange(arm_x)
    y_idx = np.concatenate(([0], np.arange(arm_x, n_active)))
    return SnapshotSet(x_arm=x[:, x_idx], y_arm=x[:, y_idx], true_phases=ph, snr_db=snr_db)


def root_music_arm(arm_samples: np.ndarray, n_sources: int = 1) -> float:
    """ROOT-MUSIC phase-increment estimate from one arm's snapshots.

    Forward-backward averaged sample covariance, noise-subspace polynomial,
    root inside and closest to the unit circle. Returns the root's angle in
    (-pi, pi].
    """
    x = np.asarray(arm_samples)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 2:
        raise ValueError("need (snapshots, arm length >= 2) samples")
    t, l = x.shape
    if n_sources >= l:
        raise ValueError("source count must be below the arm length")
    r = np.einsum("ti,tj->ij", x, x.conj()) / t
    if not np.any(r):
        raise ValueError("degenerate (all-zero) sample covariance")
    j = np.eye(l)[::-1]
    r_fb = (r + j @ r.conj() @ j) / 2.0
    _, vecs = np.linalg.eigh(r_fb)  # ascending eigenvalues
    noise = vecs[:, : l - n_sources]
    c = noise @ noise.conj().T
    coeffs = np.array([np.trace(c, offset=k) for k in range(l - 1, -l, -1)])
    roots = np.roots(coeffs)
    inside = roots[np.abs(roots) <= 1.0 + 1e-9]
    if inside.size == 0:
        inside = roots
    best = inside[np.argmin(np.abs(np.abs(inside) - 1.0))]
    return float(np.angle(best))


def estimate_doa_2d(snapshots: SnapshotSet) -> SpatialPhases:
    """Per-arm 1D estimates; pairing is trivial with a single source."""
    u = root_music_arm(snapshots.x_arm)
    v = root_music_arm(snapshots.y_arm)
    return SpatialPhases(u=u, v=v)


def _wrap_angle(x: np.ndarray | float):
    """Wrap to (-pi, pi]."""
    return -np.mod(-np.asarray(x) + math.pi, 2.0 * math.pi) + math.pi


def _normal_cdf(x: np.ndarray, mu: float, sd: float) -> np.ndarray:
    return 0.5 * (1.0 + erf((x - mu) / (sd * math.sqrt(2.0))))


def collect_error_stats(
    geometry: ArrayGeometry,
    kappa: float,
    snr_db: float,
    angle_range: tuple[float, float],
    n_trials: int,
    rng: np.random.Generator,
    n_snapshots: int = 64,
) -> ErrorStats:
    """Empirical (xi_u, xi_v) statistics over random directions.

    True azimuth and elevation are drawn uniformly from angle_range per trial;
    errors are truth minus estimate, wrapped to (-pi, pi], with a Gaussian
    fitted by sample moments and scored with a KS distance.
    """
    if n_trials < 100:
        raise ValueError("need at least 100 trials for stable statistics")
    lo, hi = angle_range
    samples = np.empty((n_trials, 2))
    for i in range(n_trials):
        angles = AngleSet(phi=rng.uniform(lo, hi), theta=rng.uniform(lo, hi))
        snap = synth_snapshots(geometry, angles, kappa, snr_db, n_snapshots, rng)
        est = estimate_doa_2d(snap)
        samples[i, 0] = _wrap_angle(snap.true_phases.u - est.u)
        samples[i, 1] = _wrap_angle(snap.true_phases.v - est.v)
    mu = samples.mean(axis=0)
    sd = samples.std(axis=0, ddof=1)
    ks = [
        ks_distance(samples[:, k], lambda x, k=k: _normal_cdf(x, mu[k], max(sd[k], 1e-300)))
        for k in (0, 1)
    ]
    return ErrorStats(
        samples=samples,
        mean_u=float(mu[0]),
        mean_v=float(mu[1]),
        std_u=float(sd[0]),
        std_v=float(sd[1]),
        ks_normal_u=float(ks[0]),
        ks_normal_v=float(ks[1]),
        n_trials=n_trials,
    )


@dataclass
class EnergyCurve:
    """Mean received energy versus angle-error level, from simulation."""

    sigmas: np.ndarray
    energies: np.ndarray
    params: object  # SystemParams of the run


@dataclass
class EtaFit:
    eta_u: float
    eta_v: float
    eta_z: float
    residual_siso: float
    residual_miso: float
    resolution: float  # final grid step of the refined search
    flagged: bool  # residual plateau: several grid points within 1% of the optimum


def _siso_sse(curve: EnergyCurve, eta_u: float, eta_v: float) -> float:
    pred = np.array([
        expected_energy_doa_error(
            curve.params,
            DoaErrorModel(sigma_doa_h=s, sigma_doa_g=s, eta_u=eta_u, eta_v=eta_v),
        )
        for s in curve.sigmas
    ])
    rel = (pred - curve.energies) / curve.energies
    return float(np.sum(rel * rel))


def _miso_sse(curve: EnergyCurve, eta_u: float, eta_v: float, eta_z: float) -> float:
    pred = np.array([
        expected_energy_doa_error(
            curve.params,
            DoaErrorModel(sigma_doa_h=s, sigma_doa_g=s, sigma_doa_p=s,
                          eta_u=eta_u, eta_v=eta_v, eta_z=eta_z),
        )
        for s in curve.sigmas
    ])
    rel = (pred - curve.energies) / curve.energies
    return float(np.sum(rel * rel))


def fit_eta(
    siso_curve: EnergyCurve,
    miso_curve: EnergyCurve,
    span_uv: tuple[float, float] = (0.25, 8.0),
    span_z: tuple[float, float] = (0.25, 8.0),
    coarse: int = 32,
    refinements: int = 3,
) -> EtaFit:
    """Two-stage least-squares grid search for the eta constants.

    Stage 1 fits (eta_u, eta_v) on a single-antenna curve, where the
    transmitter-axis factor drops out; stage 2 reuses them unchanged and fits
    eta_z on a multi-antenna curve whose sweep also perturbs the HAP-side
    angle. Each stage runs a coarse grid followed by local box refinements.
    Note the planar pair is only identifiable when the curve's grid has
    nx != ny; on a square grid the model is swap-symmetric.
    """
    lo_u = lo_v = span_uv[0]
    hi_u = hi_v = span_uv[1]
    plateau = False
    eta_u = eta_v = step = None
    for _ in range(refinements + 1):
        gu = np.linspace(lo_u, hi_u, coarse)
        gv = np.linspace(lo_v, hi_v, coarse)
        sse = np.array([[_siso_sse(siso_curve, eu, ev) for ev in gv] for eu in gu])
        i, k = np.unravel_index(np.argmin(sse), sse.shape)
        eta_u, eta_v, sse_siso = gu[i], gv[k], sse[i, k]
        plateau = plateau or int(np.sum(sse <= sse_siso * 1.01 + 1e-300)) > coarse
        step = max(gu[1] - gu[0], gv[1] - gv[0])
        lo_u, hi_u = max(span_uv[0], eta_u - 2 * step), min(span_uv[1], eta_u + 2 * step)
        lo_v, hi_v = max(span_uv[0], eta_v - 2 * step), min(span_uv[1], eta_v + 2 * step)

    lo_z, hi_z = span_z
    eta_z = None
    for _ in range(refinements + 1):
        gz = np.linspace(lo_z, hi_z, coarse * 2)
        sse_z = np.array([_miso_sse(miso_curve, eta_u, eta_v, ez) for ez in gz])
        i = int(np.argmin(sse_z))
        eta_z, sse_miso = gz[i], sse_z[i]
        plateau = plateau or int(np.sum(sse_z <= sse_miso * 1.01 + 1e-300)) > coarse
        step_z = gz[1] - gz[0]
        lo_z, hi_z = max(span_z[0], eta_z - 2 * step_z), min(span_z[1], eta_z + 2 * step_z)

    return EtaFit(
        eta_u=float(eta_u),
        eta_v=float(eta_v),
        eta_z=float(eta_z),
        residual_siso=float(sse_siso),
        residual_miso=float(sse_miso),
        resolution=float(max(step, step_z)),
        flagged=plateau,
    )
