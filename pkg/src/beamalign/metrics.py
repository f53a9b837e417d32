"""SNR accounting, post-alignment ergodic rate bounds, and power delay profiles.

The SNR definitions weight each path by the factor (gamma + eta) / (1 + eta);
experiments are parameterized by the SNR before beamforming and
``calibrate_power`` inverts that definition.  The rate bounds
model the data phase with an ideal Nyquist pulse at the symbol rate: a pulse
contributes 1 at its own sampling instant and 0 at every other integer lag,
so paths quantized to distinct delay taps do not overlap at the sampler.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import PathParams, SystemConfig, array_response, dft_matrix, draw_fading
from .estimator import BeamSelection
from .signaling import SignalConfig


@dataclass(frozen=True)
class SnrReport:
    """Link SNRs in dB: before beamforming, per accumulated measurement, per delay tap."""

    snr_bbf_db: float
    snr_q_db: float
    snr_tap_db: dict[int, float]


@dataclass(frozen=True)
class RateBounds:
    """Ergodic rate bracket after alignment, bits/s/Hz."""

    r_ub: float
    r_lb: float
    path_index: int
    symbol_period_s: float


@dataclass(frozen=True)
class PdpProfile:
    """Average energy per delay tap, before or after alignment."""

    taps: np.ndarray
    label: str


def rice_power_sum(paths: Sequence[PathParams]) -> float:
    """Sum of (gamma + eta) / (1 + eta) over paths, as used by the SNR formulas."""
    total = 0.0
    for p in paths:
        total += 1.0 if np.isinf(p.eta) else (p.gamma + p.eta) / (1.0 + p.eta)
    return total


def snr_bbf(p_tot_w: float, paths: Sequence[PathParams], noise_psd: float, bandwidth_hz: float) -> float:
    """SNR before beamforming in dB: single antenna pair over the full bandwidth."""
    if p_tot_w <= 0 or noise_psd <= 0 or bandwidth_hz <= 0:
        raise ValueError("powers and bandwidth must be positive")
    return 10.0 * np.log10(p_tot_w * rice_power_sum(paths) / (noise_psd * bandwidth_hz))


def calibrate_power(
    target_snr_bbf_db: float,
    paths: Sequence[PathParams],
    noise_psd: float,
    bandwidth_hz: float,
) -> float:
    """Total transmit power that realizes the requested SNR before beamforming."""
    if noise_psd <= 0 or bandwidth_hz <= 0:
        raise ValueError("noise_psd and bandwidth_hz must be positive")
    p_tot = 10.0 ** (target_snr_bbf_db / 10.0) * noise_psd * bandwidth_hz / rice_power_sum(paths)
    if p_tot <= 0:
        raise ValueError("calibration produced a non-positive transmit power")
    return p_tot


def snr_q(
    p_tot_w: float,
    paths: Sequence[PathParams],
    system: SystemConfig,
    signal: SignalConfig,
    kappa_u: int,
    kappa_v: int,
    noise_psd: float,
) -> float:
    """SNR of one accumulated energy measurement in dB (long-sequence form)."""
    if p_tot_w <= 0 or noise_psd <= 0:
        raise ValueError("powers must be positive")
    num = (
        p_tot_w
        * signal.chip_duration_s
        * rice_power_sum(paths)
        * system.bs_antennas
        * system.ue_antennas
    )
    den = kappa_u * kappa_v * system.bs_rf_chains * system.ue_rf_chains * noise_psd
    return 10.0 * np.log10(num / den)


def snr_taps(
    p_tot_w: float,
    paths: Sequence[PathParams],
    system: SystemConfig,
    signal: SignalConfig,
    kappa_u: int,
    kappa_v: int,
    noise_psd: float,
) -> dict[int, float]:
    """Per-delay-tap matched-filter output SNR in dB, keyed by tap index."""
    if p_tot_w <= 0 or noise_psd <= 0:
        raise ValueError("powers must be positive")
    base = (
        p_tot_w
        * signal.chip_duration_s
        * signal.n_chips
        * system.bs_antennas
        * system.ue_antennas
        / (kappa_u * kappa_v * system.bs_rf_chains * system.ue_rf_chains * noise_psd)
    )
    per_tap: dict[int, float] = {}
    for p in paths:
        tap = int(round(p.delay_s * signal.bandwidth_hz))
        share = 1.0 if np.isinf(p.eta) else (p.gamma + p.eta) / (1.0 + p.eta)
        per_tap[tap] = per_tap.get(tap, 0.0) + base * share
    return {tap: 10.0 * np.log10(v) for tap, v in sorted(per_tap.items())}


def snr_report(
    p_tot_w: float,
    paths: Sequence[PathParams],
    system: SystemConfig,
    signal: SignalConfig,
    kappa_u: int,
    kappa_v: int,
    noise_psd: float,
) -> SnrReport:
    return SnrReport(
        snr_bbf_db=snr_bbf(p_tot_w, paths, noise_psd, system.bandwidth_hz),
        snr_q_db=snr_q(p_tot_w, paths, system, signal, kappa_u, kappa_v, noise_psd),
        snr_tap_db=snr_taps(p_tot_w, paths, system, signal, kappa_u, kappa_v, noise_psd),
    )


def _beam_couplings(
    paths: Sequence[PathParams], selection: BeamSelection, system: SystemConfig
) -> np.ndarray:
    """Per-path complex coupling through the selected single-index data beams."""
    u = dft_matrix(system.bs_antennas)[:, selection.bs_index]
    v = dft_matrix(system.ue_antennas)[:, selection.ue_index]
    coup = np.empty(len(paths), dtype=complex)
    for l, p in enumerate(paths):
        coup[l] = (v.conj() @ array_response(p.aoa_rad, system.ue_antennas)) * (
            array_response(p.aod_rad, system.bs_antennas).conj() @ u
        )
    return coup


def rate_bounds(
    paths: Sequence[PathParams],
    selection: BeamSelection,
    p_tot_w: float,
    noise_psd: float,
    system: SystemConfig,
    rng: np.random.Generator,
    draws: int = 1000,
) -> RateBounds:
    """Ergodic rate bracket for single-carrier data transmission after alignment.

    The upper bound averages log2(1 + sum_l |C_l phi_l|^2 / N0) over fading
    draws; with the ideal Nyquist pulse only paths sharing the dominant
    path's delay tap contribute.  The lower bound treats everything except
    the mean of the dominant coefficient as Gaussian noise: its own fading
    variance (the Doppler of the dominant path is assumed compensated) plus
    the average energy of same-tap interferers.
    """
    if selection is None:
        raise ValueError("rate_bounds requires a completed beam selection")
    if not paths:
        raise ValueError("need at least one path")
    symbol_period = 1.0 / system.bandwidth_hz
    coup = _beam_couplings(paths, selection, system)
    gammas = np.array([p.gamma for p in paths])
    l_star = int(np.argmax(gammas * np.abs(coup) ** 2))
    taps = np.array([int(round(p.delay_s * system.bandwidth_hz)) for p in paths])
    same_tap = taps == taps[l_star]

    amp = np.sqrt(p_tot_w * symbol_period)
    c = np.empty((draws, len(paths)), dtype=complex)
    for l, p in enumerate(paths):
        c[:, l] = amp * draw_fading(p.gamma, p.eta, rng, size=draws) * coup[l]

    if p_tot_w == 0.0:
        return RateBounds(r_ub=0.0, r_lb=0.0, path_index=l_star, symbol_period_s=symbol_period)
    r_ub, r_lb = bounds_from_draws(c, l_star, same_tap, noise_psd)
    return RateBounds(r_ub=r_ub, r_lb=r_lb, path_index=l_star, symbol_period_s=symbol_period)


def bounds_from_draws(
    c: np.ndarray, l_star: int, same_tap: np.ndarray, noise_psd: float
) -> tuple[float, float]:
    """Rate bracket from a (draws, paths) matrix of per-draw coefficients."""
    sig_power = np.sum(np.abs(c[:, same_tap]) ** 2, axis=1)
    r_ub = float(np.mean(np.log2(1.0 + sig_power / noise_psd)))

    c_star = c[:, l_star]
    mean_c = c_star.mean()
    var_c = float(np.mean(np.abs(c_star - mean_c) ** 2))
    interference = float(
        sum(np.mean(np.abs(c[:, l]) ** 2) for l in range(c.shape[1]) if same_tap[l] and l != l_star)
    )
    r_lb = float(np.log2(1.0 + np.abs(mean_c) ** 2 / (noise_psd + var_c + interference)))
    return r_ub, r_lb


def pdp(
    paths: Sequence[PathParams],
    selection: BeamSelection | None,
    p_tot_w: float,
    system: SystemConfig,
    rng: np.random.Generator,
    draws: int = 1000,
) -> PdpProfile:
    """Average energy per delay tap at the data-phase sampler.

    With ``selection`` the single-index aligned beams are applied (label
    ``after-BA``); without it the profile is taken on a bare antenna pair,
    the isotropic reference (label ``before-BA``).
    """
    symbol_period = 1.0 / system.bandwidth_hz
    taps_idx = np.array([int(round(p.delay_s * system.bandwidth_hz)) for p in paths], dtype=int)
    n_taps = int(taps_idx.max(initial=0)) + 1
    taps = np.zeros(n_taps)
    if p_tot_w == 0.0 or not paths:
        return PdpProfile(taps=taps, label="after-BA" if selection else "before-BA")
    coup = (
        _beam_couplings(paths, selection, system)
        if selection is not None
        else np.ones(len(paths), dtype=complex)
    )
    amp2 = p_tot_w * symbol_period
    for l, p in enumerate(paths):
        fades = draw_fading(p.gamma, p.eta, rng, size=draws)
        taps[taps_idx[l]] += amp2 * float(np.mean(np.abs(fades) ** 2)) * np.abs(coup[l]) ** 2
    return PdpProfile(taps=taps, label="after-BA" if selection else "before-BA")
