"""Matched filtering, energy accumulation, and assembly of the linear system.

The probing receiver correlates each RF-chain record against every PN
sequence, accumulates the squared magnitude over all kept correlation lags,
averages over the sub-slots of a beacon slot, and stacks the per-slot
energies into the non-negative linear system q = B vec(Gamma) + floor + w,
where B is the binary matrix of probed AoA-AoD cells.

Vectorization convention: an N x M angle-domain matrix is flattened
column-major, so row (s, i, j) of B is kron(1_U(s,i), 1_V(s,j)).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .channel import ChannelRealization, SystemConfig, array_response, dft_matrix
from .signaling import (
    BeamCodebook,
    PnSet,
    PowerConfig,
    SignalConfig,
    delay_chips,
    noiseless_subslot,
    path_couplings,
    rotated_chips,
)


@dataclass
class MeasurementBatch:
    """The (q, B) system of one training window plus the known noise floor."""

    q: np.ndarray  # (m_rf * n_rf * slots,) non-negative energies
    b: np.ndarray  # (rows, bs_size * ue_size) binary sensing matrix
    noise_floor: float
    bs_size: int
    ue_size: int
    kappa_u: int
    kappa_v: int


@dataclass
class ProbeResult:
    """Everything a trial extracts from the T probing slots."""

    batch: MeasurementBatch
    peak_samples: np.ndarray  # (slots, m_rf, n_rf) complex, sub-slot averaged
    peak_tap: int
    ideal_streams: bool


def matched_filter(rx: np.ndarray, pn: np.ndarray) -> np.ndarray:
    """Correlate a chip-rate record against one PN sequence.

    Returns ``len(rx) - len(pn) + 1`` full-window lags; pass a record of
    ``corr_taps + n_chips - 1`` samples to obtain the standard corr_taps
    window.
    """
    rx = np.asarray(rx)
    pn = np.asarray(pn, dtype=float)
    if rx.ndim != 1 or pn.ndim != 1:
        raise ValueError("matched_filter operates on 1-D records")
    if rx.size < pn.size:
        raise ValueError(f"record of {rx.size} samples is shorter than the {pn.size}-chip sequence")
    return np.correlate(rx, pn, mode="valid")


def accumulate_energy(mf_out: np.ndarray) -> float:
    """Total energy of one matched-filter output across all lags."""
    mf_out = np.asarray(mf_out)
    return float(np.real(np.vdot(mf_out, mf_out)))


def average_slot(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Arithmetic mean of the per-sub-slot energies of one beacon slot."""
    values = np.asarray(values)
    if values.shape[axis] < 1:
        raise ValueError("need at least one sub-slot")
    return values.mean(axis=axis)


def noise_floor(signal: SignalConfig, power: PowerConfig) -> float:
    """Known accumulated noise energy per measurement: corr_taps * N0 * Rx(0)."""
    return signal.corr_taps * power.noise_psd * signal.n_chips


def sensing_row(bs_support: np.ndarray, ue_support: np.ndarray, bs_size: int, ue_size: int) -> np.ndarray:
    """Binary row marking the probed AoA-AoD cells, column-major over (ue, bs)."""
    ind_u = np.zeros(bs_size)
    ind_u[np.asarray(bs_support, dtype=np.int64)] = 1.0
    ind_v = np.zeros(ue_size)
    ind_v[np.asarray(ue_support, dtype=np.int64)] = 1.0
    return np.kron(ind_u, ind_v)


def sensing_matrix(codebook: BeamCodebook) -> np.ndarray:
    """Stack sensing rows for all (slot, bs chain, ue chain), slot-major."""
    slots = codebook.slot_count
    m_rf = codebook.bs_supports.shape[1]
    n_rf = codebook.ue_supports.shape[1]
    rows = np.empty((slots * m_rf * n_rf, codebook.bs_size * codebook.ue_size))
    r = 0
    for s in range(slots):
        for i in range(m_rf):
            for j in range(n_rf):
                rows[r] = sensing_row(
                    codebook.bs_supports[s, i],
                    codebook.ue_supports[s, j],
                    codebook.bs_size,
                    codebook.ue_size,
                )
                r += 1
    return rows


def assemble_measurements(
    slot_means: np.ndarray, codebook: BeamCodebook, floor: float
) -> MeasurementBatch:
    """Stack the per-slot averaged energies into the (q, B) system.

    ``slot_means`` has shape (slots, m_rf, n_rf); the stacking order is
    slot-major, then BS chain, then UE chain, matching ``sensing_matrix``.
    """
    slot_means = np.asarray(slot_means)
    if slot_means.ndim != 3 or slot_means.shape[0] != codebook.slot_count:
        raise ValueError("slot_means must be (slots, m_rf, n_rf) for the full training window")
    return MeasurementBatch(
        q=slot_means.reshape(-1).copy(),
        b=sensing_matrix(codebook),
        noise_floor=floor,
        bs_size=codebook.bs_size,
        ue_size=codebook.ue_size,
        kappa_u=codebook.kappa_u,
        kappa_v=codebook.kappa_v,
    )


def ground_truth_gamma(
    realization: ChannelRealization,
    power: PowerConfig,
    system: SystemConfig,
    signal: SignalConfig,
    kappa_u: int,
    kappa_v: int,
) -> np.ndarray:
    """Expected angle-domain power matrix, the oracle the estimator should recover.

    Entry (n, m) sums, over paths, gamma_l times the DFT leakage pattern of
    the path's steering vectors, scaled by the per-dimension energy over
    kappa_u * kappa_v and by the squared Doppler-attenuated correlation peak.
    """
    n_ant, m_ant = system.ue_antennas, system.bs_antennas
    f_n = dft_matrix(n_ant)
    f_m = dft_matrix(m_ant)
    t_c = signal.chip_duration_s
    n_seq = np.arange(1, signal.n_chips + 1)
    gamma = np.zeros((n_ant, m_ant))
    for p in realization.paths:
        rx_leak = np.abs(f_n.conj().T @ array_response(p.aoa_rad, n_ant)) ** 2  # (N,)
        tx_leak = np.abs(array_response(p.aod_rad, m_ant).conj() @ f_m) ** 2  # (M,)
        peak = np.abs(np.sum(np.exp(2j * np.pi * p.doppler_hz(system.carrier_hz) * n_seq * t_c)))
        gamma += p.gamma * np.outer(rx_leak, tx_leak) * peak**2
    return gamma * power.p_dim(system, signal) / (kappa_u * kappa_v)


def _mf_all_streams(records: np.ndarray, chips: np.ndarray, corr_taps: int) -> np.ndarray:
    """Correlate (..., record_length) records against every stream.

    Returns (..., corr_taps, m_rf).
    """
    windows = sliding_window_view(records, chips.shape[1], axis=-1)[..., :corr_taps, :]
    return np.tensordot(windows, chips, axes=([-1], [1]))


def _ideal_mf_outputs(
    realization: ChannelRealization,
    codebook: BeamCodebook,
    slot: int,
    power: PowerConfig,
    system: SystemConfig,
    signal: SignalConfig,
    couplings: np.ndarray,
) -> np.ndarray:
    """Matched-filter outputs under ideal stream correlation.

    Streams are treated as exactly orthogonal with a perfect delta
    autocorrelation: each path lands its Doppler-attenuated peak on its own
    delay tap and nothing else.  Returns (n_rf, corr_taps, m_rf).
    """
    d_chips = delay_chips(realization, signal)
    if np.any(d_chips >= signal.corr_taps):
        bad = int(np.flatnonzero(d_chips >= signal.corr_taps)[0])
        raise ValueError(f"path {bad} delay tap outside the {signal.corr_taps}-tap window")
    t_c = signal.chip_duration_s
    n_seq = np.arange(1, signal.n_chips + 1)
    amp = np.sqrt(power.p_dim(system, signal))
    gain = realization.rho[slot] * np.exp(2j * np.pi * realization.phase0[slot])
    n_rf = codebook.ue_supports.shape[1]
    m_rf = codebook.bs_supports.shape[1]
    out = np.zeros((n_rf, signal.corr_taps, m_rf), dtype=complex)
    for l, p in enumerate(realization.paths):
        peak = np.sum(np.exp(2j * np.pi * p.doppler_hz(system.carrier_hz) * n_seq * t_c))
        out[:, d_chips[l], :] += (amp * gain[l] * peak) * couplings[l].T
    return out


def collect_probe(
    realization: ChannelRealization,
    pn: PnSet,
    codebook: BeamCodebook,
    power: PowerConfig,
    system: SystemConfig,
    signal: SignalConfig,
    rng: np.random.Generator,
    ideal_streams: bool = False,
    peak_tap: int | None = None,
) -> ProbeResult:
    """Run the T-slot probing stage and assemble the measurement batch.

    Per beacon slot, the deterministic record is synthesized once, fresh
    noise is drawn for each of the S sub-slots, each RF-chain record is
    matched-filtered against every PN stream, energies are accumulated over
    all correlation lags and averaged over the sub-slots.

    ``ideal_streams`` switches to the idealized-correlation diagnostic mode
    (delta autocorrelation, zero cross-correlation) used by oracle tests.
    ``peak_tap`` selects the lag whose complex sub-slot-averaged samples are
    kept for the instantaneous-coefficient baseline.
    """
    slots = codebook.slot_count
    if realization.slot_count < slots:
        raise ValueError("realization covers fewer slots than the codebook")
    m_rf = codebook.bs_supports.shape[1]
    n_rf = codebook.ue_supports.shape[1]
    s_per_slot = signal.sequences_per_slot
    tap = 0 if peak_tap is None else int(peak_tap)

    rot = None if ideal_streams else rotated_chips(pn, realization, system, signal)
    noise_scale = np.sqrt(power.noise_psd / 2.0)
    mf_noise_scale = np.sqrt(power.noise_psd * signal.n_chips / 2.0)

    slot_means = np.empty((slots, m_rf, n_rf))
    peaks = np.empty((slots, m_rf, n_rf), dtype=complex)
    for s in range(slots):
        couplings = path_couplings(realization, codebook, s, system)
        if ideal_streams:
            mf_sig = _ideal_mf_outputs(realization, codebook, s, power, system, signal, couplings)
            if power.noise_psd > 0:
                shape = (s_per_slot,) + mf_sig.shape
                z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
                mf = mf_sig[None] + mf_noise_scale * z
            else:
                mf = mf_sig[None]
        else:
            sig = noiseless_subslot(
                realization, pn, codebook, s, power, system, signal, couplings, rot
            )
            mf_sig = _mf_all_streams(sig, pn.chips, signal.corr_taps)
            if power.noise_psd > 0:
                shape = (s_per_slot,) + sig.shape
                z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
                mf = mf_sig[None] + _mf_all_streams(noise_scale * z, pn.chips, signal.corr_taps)
            else:
                mf = mf_sig[None]
        # mf: (s_sub or 1, n_rf, corr_taps, m_rf)
        energies = np.sum(np.abs(mf) ** 2, axis=2)  # (s_sub, n_rf, m_rf)
        slot_means[s] = average_slot(energies).T
        peaks[s] = mf[:, :, tap, :].mean(axis=0).T

    batch = assemble_measurements(slot_means, codebook, noise_floor(signal, power))
    return ProbeResult(batch=batch, peak_samples=peaks, peak_tap=tap, ideal_streams=ideal_streams)


def dump_batch(batch: MeasurementBatch, prefix: str | Path) -> list[Path]:
    """Write (q, B) as matrix-market-style text files for offline inspection."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    b_path = prefix.with_name(prefix.name + "_B.mtx")
    q_path = prefix.with_name(prefix.name + "_q.mtx")
    rows, cols = batch.b.shape
    nz = np.argwhere(batch.b != 0)
    with b_path.open("w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"% sensing matrix, noise_floor={batch.noise_floor!r}\n")
        fh.write(f"{rows} {cols} {len(nz)}\n")
        for r, c in nz:
            fh.write(f"{r + 1} {c + 1} {float(batch.b[r, c])!r}\n")
    with q_path.open("w") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write(f"{batch.q.size} 1\n")
        for value in batch.q:
            fh.write(f"{float(value)!r}\n")
    return [b_path, q_path]
