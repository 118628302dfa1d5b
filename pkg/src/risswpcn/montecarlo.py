"""Vectorized trial engine for energy/SNR statistics, error injection,
non-linear harvesting, pilot-overhead accounting and frame-protocol simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import DoaErrorModel
from .arrays import (
    AngleSet,
    ChannelRealization,
    SystemParams,
    angles_to_phases,
    cscg,
    rician_weights,
    steering_ula,
    substream,
    upa_index_ramps,
)
from .beamforming import (
    mrc_combiner,
    mrt_precoder,
    received_energy_instant,
    riss_phase_design,
    uplink_snr_instant,
)

# Fixed chunk size: results are reproducible and independent of how callers
# parallelize, because substreams are keyed on (role, chunk index) only.
CHUNK = 8192

_ROLE_H = 1
_ROLE_G = 2
_ROLE_XI = 3
_ROLE_ANGLES = 4

Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class McConfig:
    """Trial count, seeding and optional estimation-error injection."""

    n_trials: int = 10000
    seed: int = 0
    error_domain: str = "none"  # none | phase | angle
    errors: DoaErrorModel | None = None
    randomize_angles: bool = True  # redraw base directions per trial (angle domain)
    angle_low: float = -math.pi / 3
    angle_high: float = math.pi / 3
    collect_samples: bool = False

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.error_domain not in ("none", "phase", "angle"):
            raise ValueError("error_domain must be none, phase or angle")
        if self.error_domain != "none" and self.errors is None:
            raise ValueError("error injection requested without an error model")


@dataclass
class McResult:
    mean: float
    var: float
    ci_low: float
    ci_high: float
    n_trials: int
    samples: np.ndarray | None = None


def _chunk_sizes(n_trials: int):
    full, rem = divmod(n_trials, CHUNK)
    for i in range(full):
        yield i, CHUNK
    if rem:
        yield full, rem


def _cascade_magnitudes(params: SystemParams, mc: McConfig, ci: int, b: int) -> np.ndarray:
    """|h^H Theta G beta(z_est)|^2 for one chunk of trials.

    This single magnitude drives both the downlink energy (times rho*P_E) and
    the uplink SNR with the angle-informed combiner (times rho*P_I/sigma^2).
    """
    geo = params.geometry
    n, m = geo.n_passive, geo.m_antennas
    ix, iy = upa_index_ramps(geo.nx, geo.ny)
    marange = np.arange(m)
    wh_los, wh_nlos = rician_weights(params.kappa_h)
    wg_los, wg_nlos = rician_weights(params.kappa_g)

    # base directions (scalars, or per-trial when randomized in angle mode)
    if mc.error_domain == "angle" and mc.randomize_angles:
        rng_a = substream(mc.seed, _ROLE_ANGLES, ci)
        phi_h, th_h, phi_g, th_g, vp_g = rng_a.uniform(
            mc.angle_low, mc.angle_high, size=(5, b)
        )
    else:
        phi_h = np.full(b, params.user_angles.phi)
        th_h = np.full(b, params.user_angles.theta)
        phi_g = np.full(b, params.hap_angles.phi)
        th_g = np.full(b, params.hap_angles.theta)
        vp_g = np.full(b, params.hap_angles.varpi)

    u_h = math.pi * np.cos(phi_h)
    v_h = math.pi * np.sin(phi_h) * np.cos(th_h)
    u_g = math.pi * np.cos(phi_g)
    v_g = math.pi * np.sin(phi_g) * np.cos(th_g)
    z_g = math.pi * np.sin(vp_g)

    if mc.error_domain == "phase":
        e = mc.errors
        rng_xi = substream(mc.seed, _ROLE_XI, ci)
        xi = rng_xi.standard_normal((5, b))
        u_h_e = u_h - e.sigma_hu * xi[0]
        v_h_e = v_h - e.sigma_hv * xi[1]
        u_g_e = u_g - e.sigma_gu * xi[2]
        v_g_e = v_g - e.sigma_gv * xi[3]
        z_g_e = z_g - e.sigma_gz * xi[4]
    elif mc.error_domain == "angle":
        e = mc.errors
        rng_xi = substream(mc.seed, _ROLE_XI, ci)
        d = rng_xi.standard_normal((5, b))
        phi_h_e = phi_h - e.sigma_doa_h * d[0]
        th_h_e = th_h - e.sigma_doa_h * d[1]
        phi_g_e = phi_g - e.sigma_doa_g * d[2]
        th_g_e = th_g - e.sigma_doa_g * d[3]
        vp_g_e = vp_g - e.sigma_doa_p * d[4]
        u_h_e = math.pi * np.cos(phi_h_e)
        v_h_e = math.pi * np.sin(phi_h_e) * np.cos(th_h_e)
        u_g_e = math.pi * np.cos(phi_g_e)
        v_g_e = math.pi * np.sin(phi_g_e) * np.cos(th_g_e)
        z_g_e = math.pi * np.sin(vp_g_e)
    else:
        u_h_e, v_h_e, u_g_e, v_g_e, z_g_e = u_h, v_h, u_g, v_g, z_g

    # reflection phases and transmit-side steering from the estimates
    theta = np.exp(
        1j * (ix[None, :] * (u_h_e - u_g_e)[:, None] + iy[None, :] * (v_h_e - v_g_e)[:, None])
    )
    beta_e = np.exp(1j * marange[None, :] * z_g_e[:, None]) / math.sqrt(m)

    # channels: unit-modulus LoS entries plus CSCG diffuse parts
    ramp_h = ix[None, :] * u_h[:, None] + iy[None, :] * v_h[:, None]
    ramp_g = ix[None, :] * u_g[:, None] + iy[None, :] * v_g[:, None]
    h_los = np.exp(1j * ramp_h)
    g_los = np.exp(1j * (ramp_g[:, :, None] - marange[None, None, :] * z_g[:, None, None]))

    rng_h = substream(mc.seed, _ROLE_H, ci)
    rng_g = substream(mc.seed, _ROLE_G, ci)
    h = wh_los * h_los + wh_nlos * cscg(rng_h, (b, n))
    g = wg_los * g_los + wg_nlos * cscg(rng_g, (b, n, m))

    row = np.einsum("bn,bn,bnm->bm", h.conj(), theta, g)
    val = np.einsum("bm,bm->b", row, beta_e)
    return np.abs(val) ** 2


def _iter_energy_chunks(params: SystemParams, mc: McConfig):
    scale = params.cascade_loss * params.p_e_watts
    for ci, b in _chunk_sizes(mc.n_trials):
        yield scale * _cascade_magnitudes(params, mc, ci, b)


def _mean_result(values_iter, n_trials: int, collect: bool) -> McResult:
    total = 0.0
    total_sq = 0.0
    kept = [] if collect else None
    for chunk in values_iter:
        total += float(np.sum(chunk))
        total_sq += float(np.sum(chunk * chunk))
        if collect:
            kept.append(chunk)
    mean = total / n_trials
    var = max(total_sq / n_trials - mean * mean, 0.0)
    if n_trials > 1:
        var *= n_trials / (n_trials - 1)
    hw = Z95 * math.sqrt(var / n_trials)
    return McResult(
        mean=mean,
        var=var,
        ci_low=mean - hw,
        ci_high=mean + hw,
        n_trials=n_trials,
        samples=np.concatenate(kept) if collect else None,
    )


def mc_energy(params: SystemParams, mc: McConfig) -> McResult:
    """Monte Carlo received energy: draw fading, design from (possibly
    perturbed) direction estimates, evaluate. 95% normal CI on the mean."""
    return _mean_result(_iter_energy_chunks(params, mc), mc.n_trials, mc.collect_samples)


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("need at least one trial")
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    hw = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return max(center - hw, 0.0), min(center + hw, 1.0)


@dataclass
class OutageResult:
    probability: float
    ci_low: float
    ci_high: float
    n_trials: int
    n_outages: int


def mc_outage(
    params: SystemParams, p_watts: float, t_thre_watts: float, mc: McConfig
) -> OutageResult:
    """Empirical P(received energy < threshold) at the given transmit power."""
    if t_thre_watts < 0:
        raise ValueError("threshold must be >= 0")
    scaled = params.with_power(p_watts)
    below = 0
    for chunk in _iter_energy_chunks(scaled, mc):
        below += int(np.sum(chunk < t_thre_watts))
    lo, hi = wilson_interval(below, mc.n_trials)
    return OutageResult(
        probability=below / mc.n_trials,
        ci_low=lo,
        ci_high=hi,
        n_trials=mc.n_trials,
        n_outages=below,
    )


def mc_ergodic_se(params: SystemParams, mc: McConfig) -> McResult:
    """Sample-mean uplink spectral efficiency log2(1 + SNR), bits/s/Hz.

    The receiver combines with the steering vector of its known HAP-side
    angle; by reciprocity the SNR numerator then shares the downlink energy
    statistics.
    """
    if params.noise_sigma2_watts <= 0:
        raise ValueError("noise power must be positive")
    snr_scale = params.cascade_loss * params.p_i_watts / params.noise_sigma2_watts

    def chunks():
        for ci, b in _chunk_sizes(mc.n_trials):
            yield np.log2(1.0 + snr_scale * _cascade_magnitudes(params, mc, ci, b))

    return _mean_result(chunks(), mc.n_trials, mc.collect_samples)


@dataclass(frozen=True)
class HarvestModel:
    """Logistic harvester: saturation power me, circuit constants a and b."""

    me: float = 0.02337
    a: float = 132.8
    b: float = 0.01181

    def __post_init__(self):
        if self.me <= 0 or self.a <= 0:
            raise ValueError("saturation power and slope must be positive")


def nonlinear_harvest(p_in, hm: HarvestModel):
    """Harvested power for incident power p_in >= 0 (scalar or array), watts.

    Zero-crossing logistic: the raw sigmoid is shifted so no input harvests
    nothing, and saturates at me as the input grows.
    """
    p = np.asarray(p_in, dtype=float)
    if np.any(p < 0):
        raise ValueError("incident power must be >= 0")
    omega = 1.0 / (1.0 + math.exp(hm.a * hm.b))
    raw = hm.me / (1.0 + np.exp(-hm.a * (p - hm.b)))
    out = (raw - hm.me * omega) / (1.0 - omega)
    return float(out) if np.isscalar(p_in) else out


def apply_pilot_overhead(value: float, n: int, t_c: int) -> float:
    """Scale a rate/energy figure by the time left after N+1 pilot symbols."""
    if n + 1 >= t_c:
        raise ValueError("pilot overhead exhausts the coherence block")
    return value * (t_c - n - 1) / t_c


@dataclass(frozen=True)
class DriftModel:
    """Per-frame Gaussian random-walk steps on the physical angles, radians."""

    user_angle_std: float = 0.0
    hap_angle_std: float = 0.0


@dataclass
class FrameRecord:
    frame: int
    user: int
    uplink_snr: float
    downlink_energy_watts: float
    hap_staleness_rad: float
    user_staleness_rad: float


def _reflect(x: float, lo: float, hi: float) -> float:
    period = 2.0 * (hi - lo)
    y = (x - lo) % period
    return lo + min(y, period - y)


_ANGLE_LIMIT = math.pi / 2 - 1e-3


def simulate_frames(
    params: SystemParams,
    k_users: int,
    n_frames: int,
    drift: DriftModel,
    rng: np.random.Generator,
    order: str = "uplink_first",
) -> list[FrameRecord]:
    """Frame-protocol simulation with per-user service rounds.

    Users take turns, one frame each. Uplink reflection combines the user's
    freshly sensed direction with HAP-side angles stamped K+1 frames earlier;
    the downlink runs on fully updated angles. With "downlink_first" the
    downlink instead reuses the direction sensed in the user's previous
    round, modelling the deferred-update ordering. Fading is drawn once and
    held fixed so that a drift-free run is exactly stationary; the drift model
    moves only the angle geometry.
    """
    if k_users < 1:
        raise ValueError("need at least one user")
    if order not in ("uplink_first", "downlink_first"):
        raise ValueError("order must be uplink_first or downlink_first")
    geo = params.geometry
    n, m = geo.n_passive, geo.m_antennas
    ix, iy = upa_index_ramps(geo.nx, geo.ny)
    wh_los, wh_nlos = rician_weights(params.kappa_h)
    wg_los, wg_nlos = rician_weights(params.kappa_g)

    h_nlos = [cscg(rng, n) for _ in range(k_users)]
    g_nlos = cscg(rng, (n, m))

    user_angles = [params.user_angles for _ in range(k_users)]
    user_estimate = [params.user_angles for _ in range(k_users)]
    hap_angles = params.hap_angles
    hap_hist: list[AngleSet] = []

    def walk(a: AngleSet, std: float, with_varpi: bool) -> AngleSet:
        if std == 0.0:
            return a
        phi = _reflect(a.phi + std * rng.standard_normal(), -_ANGLE_LIMIT, _ANGLE_LIMIT)
        theta = _reflect(a.theta + std * rng.standard_normal(), -_ANGLE_LIMIT, _ANGLE_LIMIT)
        varpi = a.varpi
        if with_varpi:
            varpi = _reflect(a.varpi + std * rng.standard_normal(), -_ANGLE_LIMIT, _ANGLE_LIMIT)
        return AngleSet(phi, theta, varpi)

    def channel(user_k: int) -> ChannelRealization:
        ph_h = angles_to_phases(user_angles[user_k])
        ph_g = angles_to_phases(hap_angles)
        h_los = np.exp(1j * (ix * ph_h.u + iy * ph_h.v))
        g_los = np.exp(
            1j * (ix[:, None] * ph_g.u + iy[:, None] * ph_g.v - np.arange(m)[None, :] * ph_g.z)
        )
        return ChannelRealization(
            g_matrix=wg_los * g_los + wg_nlos * g_nlos,
            h_vector=wh_los * h_los + wh_nlos * h_nlos[user_k],
            g_los=g_los, h_los=h_los, g_nlos=g_nlos, h_nlos=h_nlos[user_k],
        )

    records: list[FrameRecord] = []
    for p in range(n_frames):
        k = p % k_users
        user_angles = [walk(a, drift.user_angle_std, False) for a in user_angles]
        hap_angles = walk(hap_angles, drift.hap_angle_std, True)

        stale_idx = p - k_users - 1
        stale_hap = hap_hist[stale_idx] if stale_idx >= 0 else params.hap_angles
        real = channel(k)

        # uplink: fresh user direction, stale HAP-side angles
        fresh_user_ph = angles_to_phases(user_angles[k])
        stale_hap_ph = angles_to_phases(stale_hap)
        theta_ul = riss_phase_design(fresh_user_ph, stale_hap_ph, geo)
        combiner = mrc_combiner(steering_ula(stale_hap_ph.z, m))
        snr = uplink_snr_instant(
            real, theta_ul, combiner,
            params.p_i_watts, params.noise_sigma2_watts, params.cascade_loss,
        )

        # downlink: HAP-side angles fully refreshed within the frame
        dl_user = user_angles[k] if order == "uplink_first" else user_estimate[k]
        fresh_hap_ph = angles_to_phases(hap_angles)
        theta_dl = riss_phase_design(angles_to_phases(dl_user), fresh_hap_ph, geo)
        w = mrt_precoder(fresh_hap_ph.z, m, params.p_e_watts)
        energy = received_energy_instant(real, theta_dl, w, params.cascade_loss)

        records.append(FrameRecord(
            frame=p,
            user=k,
            uplink_snr=snr,
            downlink_energy_watts=energy,
            hap_staleness_rad=abs(hap_angles.varpi - stale_hap.varpi),
            user_staleness_rad=abs(user_angles[k].phi - dl_user.phi),
        ))
        user_estimate[k] = user_angles[k]
        hap_hist.append(hap_angles)
    return records
