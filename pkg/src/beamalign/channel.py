"""Multipath mmWave channel synthesis and angle-domain (beamspace) transforms.

Uniform linear arrays with half-wavelength spacing at both ends of the link.
Angles are kept in radians everywhere inside the package; configuration
front-ends convert from degrees once at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8  # m/s, fixed


@dataclass(frozen=True)
class SystemConfig:
    """Array geometry and RF budget of one BS-UE link."""

    bs_antennas: int = 32
    ue_antennas: int = 32
    bs_rf_chains: int = 3
    ue_rf_chains: int = 2
    carrier_hz: float = 70e9
    bandwidth_hz: float = 1.76e9

    def __post_init__(self) -> None:
        counts = (self.bs_antennas, self.ue_antennas, self.bs_rf_chains, self.ue_rf_chains)
        if min(counts) < 1:
            raise ValueError("antenna and RF-chain counts must all be >= 1")
        if self.bs_rf_chains > self.bs_antennas:
            raise ValueError("BS RF chains cannot exceed BS antennas")
        if self.ue_rf_chains > self.ue_antennas:
            raise ValueError("UE RF chains cannot exceed UE antennas")
        if self.carrier_hz <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("carrier_hz and bandwidth_hz must be positive")


@dataclass(frozen=True)
class PathParams:
    """One specular multipath component.

    gamma is the linear path power, eta the Rice factor (0 = pure Rayleigh
    scattering, very large = effectively deterministic line-of-sight).
    """

    gamma: float
    eta: float
    aoa_rad: float
    aod_rad: float
    delay_s: float = 0.0
    rel_speed_mps: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        half_pi = np.pi / 2 + 1e-12
        if abs(self.aoa_rad) > half_pi or abs(self.aod_rad) > half_pi:
            raise ValueError("angles must lie in [-pi/2, pi/2]")
        if self.delay_s < 0:
            raise ValueError("delay_s must be >= 0")

    def doppler_hz(self, carrier_hz: float) -> float:
        """Doppler shift of this path at the given carrier frequency."""
        return self.rel_speed_mps * carrier_hz / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ClusterParams:
    """A scattering cluster: subpaths share the center's delay and split its power."""

    center: PathParams
    angular_spread_rad: float = 0.0
    subpath_count: int = 1

    def __post_init__(self) -> None:
        if self.angular_spread_rad < 0:
            raise ValueError("angular_spread_rad must be >= 0")
        if self.subpath_count < 1:
            raise ValueError("subpath_count must be >= 1")


@dataclass
class ChannelRealization:
    """Fading gains and Doppler phase origins for a block of beacon slots.

    ``rho[s, l]`` is the complex gain of (expanded) path l during beacon slot
    s; gains are constant within a coherence block of ``coherence_slots``
    slots and i.i.d. across blocks.  ``phase0[s, l]`` is the Doppler phase
    origin in cycles, redrawn uniformly on [0, 1) with the same block
    structure: every slot in the fast-varying case (coherence_slots == 1),
    frozen for the whole window in the quasi-static case.
    """

    paths: list[PathParams]
    rho: np.ndarray
    phase0: np.ndarray
    coherence_slots: int

    @property
    def slot_count(self) -> int:
        return self.rho.shape[0]

    @property
    def path_count(self) -> int:
        return len(self.paths)


def array_response(angle_rad: float, count: int) -> np.ndarray:
    """ULA steering vector with entries exp(j*(m-1)*pi*sin(angle)), m=1..count."""
    if count < 1:
        raise ValueError("count must be >= 1")
    m = np.arange(count)
    return np.exp(1j * m * np.pi * np.sin(angle_rad))


def dft_matrix(count: int) -> np.ndarray:
    """Unitary DFT dictionary whose columns are normalized grid steering vectors."""
    if count < 1:
        raise ValueError("count must be >= 1")
    m = np.arange(count)[:, None]
    mp = np.arange(count)[None, :]
    return np.exp(2j * np.pi * m * (mp / count - 0.5)) / np.sqrt(count)


def angle_grid(count: int) -> np.ndarray:
    """Grid angles whose sines are uniform on [-1, 1): arcsin(2(n-1)/count - 1)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return np.arcsin(2.0 * np.arange(count) / count - 1.0)


def nearest_grid_index(angle_rad: float, count: int) -> int:
    """Index of the grid angle closest to ``angle_rad`` in the sine domain."""
    idx = int(round((1.0 + np.sin(angle_rad)) / 2.0 * count))
    return min(max(idx, 0), count - 1)


def draw_fading(gamma: float, eta: float, rng: np.random.Generator, size=None):
    """Draw Rice fading gains with E|rho|^2 = gamma.

    The deterministic component carries sqrt(eta/(1+eta)) of the amplitude,
    the diffuse unit-variance circular Gaussian part the rest.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if eta < 0:
        raise ValueError("eta must be >= 0")
    if np.isinf(eta):  # pure LOS limit: deterministic gain
        rho = np.sqrt(gamma) * np.ones(() if size is None else size, dtype=complex)
        return complex(rho) if size is None else rho
    shape = () if size is None else size
    diffuse = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    rho = np.sqrt(gamma) * (np.sqrt(eta / (1.0 + eta)) + diffuse / np.sqrt(1.0 + eta))
    return complex(rho) if size is None else rho


def expand_clusters(
    entries: list[PathParams | ClusterParams], rng: np.random.Generator
) -> list[PathParams]:
    """Flatten clusters into subpaths with jittered angles and split power.

    Subpath AoA/AoD offsets are uniform on +/- spread/2 around the center
    (independent per side), clipped to the physical angle range; delay, Rice
    factor and relative speed are inherited from the center.
    """
    half_pi = np.pi / 2
    flat: list[PathParams] = []
    for entry in entries:
        if isinstance(entry, PathParams):
            flat.append(entry)
            continue
        c = entry.center
        n_sub = entry.subpath_count
        jitter_aoa = rng.uniform(-entry.angular_spread_rad / 2, entry.angular_spread_rad / 2, n_sub)
        jitter_aod = rng.uniform(-entry.angular_spread_rad / 2, entry.angular_spread_rad / 2, n_sub)
        for k in range(n_sub):
            flat.append(
                PathParams(
                    gamma=c.gamma / n_sub,
                    eta=c.eta,
                    aoa_rad=float(np.clip(c.aoa_rad + jitter_aoa[k], -half_pi, half_pi)),
                    aod_rad=float(np.clip(c.aod_rad + jitter_aod[k], -half_pi, half_pi)),
                    delay_s=c.delay_s,
                    rel_speed_mps=c.rel_speed_mps,
                )
            )
    return flat


def realize_channel(
    entries: list[PathParams | ClusterParams],
    slot_count: int,
    coherence_slots: int,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw a block-fading realization over ``slot_count`` beacon slots.

    Gains (and Doppler phase origins) are redrawn independently at
    coherence-block boundaries; clusters are expanded into subpaths with
    independent fading.
    """
    if slot_count < 1 or coherence_slots < 1:
        raise ValueError("slot_count and coherence_slots must be >= 1")
    paths = expand_clusters(entries, rng)
    n_paths = len(paths)
    n_blocks = -(-slot_count // coherence_slots)

    rho_blocks = np.empty((n_blocks, n_paths), dtype=complex)
    for l, p in enumerate(paths):
        rho_blocks[:, l] = draw_fading(p.gamma, p.eta, rng, size=n_blocks)
    phase_blocks = rng.uniform(0.0, 1.0, size=(n_blocks, n_paths))

    idx = np.arange(slot_count) // coherence_slots
    return ChannelRealization(
        paths=paths,
        rho=rho_blocks[idx],
        phase0=phase_blocks[idx],
        coherence_slots=coherence_slots,
    )


def channel_matrix(realization: ChannelRealization, slot: int, system: SystemConfig) -> np.ndarray:
    """Antenna-domain N x M channel matrix for one beacon slot (chip index 0)."""
    n, m = system.ue_antennas, system.bs_antennas
    h = np.zeros((n, m), dtype=complex)
    for l, p in enumerate(realization.paths):
        coef = realization.rho[slot, l] * np.exp(2j * np.pi * realization.phase0[slot, l])
        h += coef * np.outer(array_response(p.aoa_rad, n), array_response(p.aod_rad, m).conj())
    return h


def beamspace_transform(h: np.ndarray) -> np.ndarray:
    """Project an antenna-domain N x M channel onto the DFT angle dictionary."""
    h = np.asarray(h)
    if h.ndim != 2:
        raise ValueError(f"expected a 2-D channel matrix, got shape {h.shape}")
    n, m = h.shape
    return dft_matrix(n).conj().T @ h @ dft_matrix(m)
