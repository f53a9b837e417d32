"""PN probing sequences, pseudo-random beam codebooks, and beacon-slot synthesis.

The downlink probe is simulated at chip rate.  The pulse shape is an ideal
unit-energy Nyquist chip, so the sequence matched filter reduces to a plain
discrete correlation and path delays are quantized to integer chips (round
to nearest) when a waveform is formed.  Received samples are expressed in
post-chip-filter units: a unit-amplitude chip contributes 1 to its sample
and thermal noise contributes a circular complex Gaussian of variance equal
to the noise PSD.  Consecutive sequences inside a beacon slot are separated
by guard chips covering the delay spread, so inter-sequence interference is
structurally absent and one correlation window per sequence suffices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, SystemConfig, array_response, dft_matrix


@dataclass(frozen=True)
class SignalConfig:
    """Chip-level parameters of the beacon probing waveform.

    ``corr_taps`` is the number of correlation lags the receiver retains per
    sequence; it must cover the sequence itself plus the channel delay spread
    in chips.
    """

    n_chips: int = 64
    bandwidth_hz: float = 1.76e9
    sequences_per_slot: int = 52
    beacon_slots: int = 30
    corr_taps: int = 64

    def __post_init__(self) -> None:
        if self.n_chips < 1:
            raise ValueError("n_chips must be >= 1")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.sequences_per_slot < 1 or self.beacon_slots < 1:
            raise ValueError("sequences_per_slot and beacon_slots must be >= 1")
        if self.corr_taps < self.n_chips:
            raise ValueError("corr_taps must be >= n_chips")

    @property
    def chip_duration_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def sequence_duration_s(self) -> float:
        return self.n_chips * self.chip_duration_s

    @property
    def record_length(self) -> int:
        """Raw chip-rate samples kept per sequence.

        Every one of the ``corr_taps`` correlation lags gets a complete
        n_chips-wide window, so the record extends n_chips - 1 samples past
        the last lag.
        """
        return self.corr_taps + self.n_chips - 1


@dataclass(frozen=True)
class PnSet:
    """Rademacher probing sequences, one per BS RF chain."""

    chips: np.ndarray  # (m_rf, n_chips) with entries +-1
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.chips.ndim != 2:
            raise ValueError("chips must be (m_rf, n_chips)")
        if not np.all(np.abs(self.chips) == 1):
            raise ValueError("chips must be +-1 valued")

    @property
    def stream_count(self) -> int:
        return self.chips.shape[0]

    @property
    def n_chips(self) -> int:
        return self.chips.shape[1]


@dataclass(frozen=True)
class BeamCodebook:
    """Pseudo-random angle supports for both link ends, one row per beacon slot.

    Index sets are 0-based positions into the DFT angle grids of size
    ``bs_size`` / ``ue_size``.
    """

    bs_supports: np.ndarray  # (slots, bs_rf_chains, kappa_u) int
    ue_supports: np.ndarray  # (slots, ue_rf_chains, kappa_v) int
    bs_size: int
    ue_size: int
    seed: int | None = None

    def __post_init__(self) -> None:
        for name, sup, size in (
            ("bs_supports", self.bs_supports, self.bs_size),
            ("ue_supports", self.ue_supports, self.ue_size),
        ):
            if sup.ndim != 3:
                raise ValueError(f"{name} must be (slots, chains, kappa)")
            if sup.min() < 0 or sup.max() >= size:
                raise ValueError(f"{name} indices out of range [0, {size})")

    @property
    def slot_count(self) -> int:
        return self.bs_supports.shape[0]

    @property
    def kappa_u(self) -> int:
        return self.bs_supports.shape[2]

    @property
    def kappa_v(self) -> int:
        return self.ue_supports.shape[2]


@dataclass(frozen=True)
class PowerConfig:
    """Transmit power and receiver noise PSD.

    ``noise_psd`` may be zero for noiseless diagnostic runs.
    """

    p_tot_w: float
    noise_psd: float

    def __post_init__(self) -> None:
        if self.p_tot_w < 0:
            raise ValueError("p_tot_w must be >= 0")
        if self.noise_psd < 0:
            raise ValueError("noise_psd must be >= 0")

    def p_dim(self, system: SystemConfig, signal: SignalConfig) -> float:
        """Per-dimension energy after splitting power over both RF banks."""
        return self.p_tot_w * signal.chip_duration_s / (system.bs_rf_chains * system.ue_rf_chains)


def gen_pn(m_rf: int, n_chips: int, rng: np.random.Generator, seed: int | None = None) -> PnSet:
    """Draw independent +-1 sequences, one per BS RF chain."""
    if m_rf < 1 or n_chips < 1:
        raise ValueError("m_rf and n_chips must be >= 1")
    chips = rng.integers(0, 2, size=(m_rf, n_chips)).astype(float) * 2.0 - 1.0
    return PnSet(chips=chips, seed=seed)


def gen_codebook(
    bs_size: int,
    bs_rf_chains: int,
    ue_size: int,
    ue_rf_chains: int,
    slots: int,
    kappa_u: int,
    kappa_v: int,
    rng: np.random.Generator,
    seed: int | None = None,
) -> BeamCodebook:
    """Draw uniform without-replacement angle supports for every (slot, chain).

    Both sides of the link regenerate the same codebook from the same seed,
    which is how the BS codebook is shared with the UEs.
    """
    if not 1 <= kappa_u <= bs_size:
        raise ValueError(f"kappa_u must be in [1, {bs_size}]")
    if not 1 <= kappa_v <= ue_size:
        raise ValueError(f"kappa_v must be in [1, {ue_size}]")
    bs = np.empty((slots, bs_rf_chains, kappa_u), dtype=np.int64)
    ue = np.empty((slots, ue_rf_chains, kappa_v), dtype=np.int64)
    for s in range(slots):
        for i in range(bs_rf_chains):
            bs[s, i] = np.sort(rng.choice(bs_size, size=kappa_u, replace=False))
        for j in range(ue_rf_chains):
            ue[s, j] = np.sort(rng.choice(ue_size, size=kappa_v, replace=False))
    return BeamCodebook(bs_supports=bs, ue_supports=ue, bs_size=bs_size, ue_size=ue_size, seed=seed)


def beamforming_vector(support: np.ndarray, count: int, kappa: int | None = None) -> np.ndarray:
    """Antenna-domain beam for a finger-shaped angle support: F @ (1_support / sqrt(kappa))."""
    support = np.asarray(support, dtype=np.int64)
    if kappa is None:
        kappa = support.size
    if support.size != kappa or np.unique(support).size != kappa:
        raise ValueError("support must contain exactly kappa distinct indices")
    if support.min() < 0 or support.max() >= count:
        raise ValueError(f"support indices must lie in [0, {count})")
    indicator = np.zeros(count)
    indicator[support] = 1.0 / np.sqrt(kappa)
    return dft_matrix(count) @ indicator


def slot_beams(codebook: BeamCodebook, slot: int) -> tuple[np.ndarray, np.ndarray]:
    """Antenna-domain beamforming matrices (U: bs_size x m_rf, V: ue_size x n_rf) of one slot."""
    u = np.stack(
        [beamforming_vector(sup, codebook.bs_size) for sup in codebook.bs_supports[slot]], axis=1
    )
    v = np.stack(
        [beamforming_vector(sup, codebook.ue_size) for sup in codebook.ue_supports[slot]], axis=1
    )
    return u, v


def delay_chips(realization: ChannelRealization, signal: SignalConfig) -> np.ndarray:
    """Per-path delays rounded to integer chips."""
    delays = np.array([p.delay_s for p in realization.paths])
    return np.rint(delays * signal.bandwidth_hz).astype(np.int64)


def path_couplings(
    realization: ChannelRealization,
    codebook: BeamCodebook,
    slot: int,
    system: SystemConfig,
) -> np.ndarray:
    """Beam-to-beam coupling sqrt(P-less) factors v^H a_R(phi_l) a_T(theta_l)^H u.

    Returns ``(paths, m_rf, n_rf)`` complex couplings excluding the fading
    gain and power scale, which vary per slot draw.
    """
    u, v = slot_beams(codebook, slot)
    a_r = np.stack([array_response(p.aoa_rad, system.ue_antennas) for p in realization.paths])
    a_t = np.stack([array_response(p.aod_rad, system.bs_antennas) for p in realization.paths])
    rx_side = a_r @ v.conj()  # (paths, n_rf): v^H a_R per chain
    tx_side = a_t.conj() @ u  # (paths, m_rf): a_T^H u per chain
    return tx_side[:, :, None] * rx_side[:, None, :]


def rotated_chips(pn: PnSet, realization: ChannelRealization, system: SystemConfig, signal: SignalConfig) -> np.ndarray:
    """Chips rotated by each path's intra-sequence Doppler ramp.

    Entry ``[i, l, n]`` is chip n of stream i rotated by exp(j 2 pi nu_l (n+1) T_c);
    the phase origin is the first chip of the sequence.
    """
    t_c = signal.chip_duration_s
    nu = np.array([p.doppler_hz(system.carrier_hz) for p in realization.paths])
    ramp = np.exp(2j * np.pi * nu[:, None] * (np.arange(1, signal.n_chips + 1)[None, :] * t_c))
    return pn.chips[:, None, :] * ramp[None, :, :]


def _check_delays(d_chips: np.ndarray, signal: SignalConfig) -> None:
    bad = np.flatnonzero(d_chips + signal.n_chips > signal.corr_taps)
    if bad.size:
        raise ValueError(
            f"path {bad[0]} delay of {int(d_chips[bad[0]])} chips exceeds the "
            f"{signal.corr_taps}-tap correlation window for {signal.n_chips} chips"
        )


def noiseless_subslot(
    realization: ChannelRealization,
    pn: PnSet,
    codebook: BeamCodebook,
    slot: int,
    power: PowerConfig,
    system: SystemConfig,
    signal: SignalConfig,
    couplings: np.ndarray | None = None,
    rot: np.ndarray | None = None,
) -> np.ndarray:
    """Noise-free chip-rate record of one sub-slot at the UE RF-chain outputs.

    Within a beacon slot the signal part is identical for all sub-slots (the
    fading gain, phase origin and chip ramp are per-slot quantities), so the
    caller reuses this across the slot and adds fresh noise per sub-slot.
    Returns ``(n_rf, record_length)``.
    """
    if couplings is None:
        couplings = path_couplings(realization, codebook, slot, system)
    if rot is None:
        rot = rotated_chips(pn, realization, system, signal)
    d_chips = delay_chips(realization, signal)
    _check_delays(d_chips, signal)

    amp = np.sqrt(power.p_dim(system, signal))
    gain = realization.rho[slot] * np.exp(2j * np.pi * realization.phase0[slot])  # (paths,)
    n_rf = codebook.ue_supports.shape[1]
    rx = np.zeros((n_rf, signal.record_length), dtype=complex)
    for l in range(realization.path_count):
        start = int(d_chips[l])
        # (n_rf, n_chips) contribution of path l summed over BS streams
        contrib = np.einsum("ij,in->jn", couplings[l] * (amp * gain[l]), rot[:, l, :])
        rx[:, start : start + signal.n_chips] += contrib
    return rx


def simulate_rx_samples(
    realization: ChannelRealization,
    pn: PnSet,
    codebook: BeamCodebook,
    slot: int,
    sub_slot: int,
    power: PowerConfig,
    system: SystemConfig,
    signal: SignalConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Noisy chip-rate RF-chain record for one (slot, sub-slot), pre matched filter.

    ``sub_slot`` only selects a fresh noise draw; the deterministic part of
    the record is common to the whole beacon slot.
    """
    if not 0 <= slot < realization.slot_count:
        raise ValueError(f"slot {slot} out of range")
    if not 0 <= sub_slot < signal.sequences_per_slot:
        raise ValueError(f"sub_slot {sub_slot} out of range")
    rx = noiseless_subslot(realization, pn, codebook, slot, power, system, signal)
    if power.noise_psd > 0:
        shape = rx.shape
        noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(
            power.noise_psd / 2.0
        )
        rx = rx + noise
    return rx
