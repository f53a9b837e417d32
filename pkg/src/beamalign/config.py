"""Experiment configuration: JSON-facing pydantic models and their resolution.

All physical quantities carry explicit unit suffixes in the JSON keys
(``f0_hz``, ``delay_s``, ``rel_speed_mps``, ...).  Angles may be given in
degrees or as 0-based indices into the DFT angle grid of the matching array;
they are converted to radians once, at resolution time.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .channel import ClusterParams, PathParams, SystemConfig, angle_grid, nearest_grid_index
from .signaling import SignalConfig

SweepVariable = Literal["snr_bbf_db", "kappa", "n_c", "rel_speed", "scheme"]
Scheme = Literal["nnls", "omp", "both"]
Coherence = Literal["slow", "fast"]


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathSpec(_StrictModel):
    """One specular path; give each angle either in degrees or as a grid index."""

    kind: Literal["path"] = "path"
    gamma: float = Field(gt=0)
    eta: float = Field(ge=0)
    aoa_deg: Optional[float] = None
    aod_deg: Optional[float] = None
    aoa_grid_index: Optional[int] = Field(default=None, ge=0)
    aod_grid_index: Optional[int] = Field(default=None, ge=0)
    delay_s: float = Field(default=0.0, ge=0)
    rel_speed_mps: float = 0.0

    @model_validator(mode="after")
    def _one_angle_form(self) -> "PathSpec":
        for deg, idx, name in (
            (self.aoa_deg, self.aoa_grid_index, "aoa"),
            (self.aod_deg, self.aod_grid_index, "aod"),
        ):
            if (deg is None) == (idx is None):
                raise ValueError(f"give exactly one of {name}_deg or {name}_grid_index")
        return self


class ClusterSpec(_StrictModel):
    """A scattering cluster centered on a path, spread over subpaths."""

    kind: Literal["cluster"] = "cluster"
    gamma: float = Field(gt=0)
    eta: float = Field(ge=0)
    aoa_deg: float
    aod_deg: float
    delay_s: float = Field(default=0.0, ge=0)
    rel_speed_mps: float = 0.0
    angular_spread_deg: float = Field(default=0.0, ge=0)
    subpath_count: int = Field(default=1, ge=1)


PathEntry = Annotated[Union[PathSpec, ClusterSpec], Field(discriminator="kind")]


class SystemSpec(_StrictModel):
    bs_antennas: int = Field(default=32, ge=1)
    ue_antennas: int = Field(default=32, ge=1)
    bs_rf_chains: int = Field(default=3, ge=1)
    ue_rf_chains: int = Field(default=2, ge=1)
    f0_hz: float = Field(default=70e9, gt=0)
    bandwidth_hz: float = Field(default=1.76e9, gt=0)


class SignalSpec(_StrictModel):
    """Probing waveform knobs; omitted values are derived at resolution time."""

    n_chips: int = Field(default=64, ge=1)
    bandwidth_hz: Optional[float] = Field(default=None, gt=0)
    sequences_per_slot: Optional[int] = Field(default=None, ge=1)
    beacon_slots: int = Field(default=30, ge=1)
    corr_taps: Optional[int] = Field(default=None, ge=1)
    beacon_duration_s: float = Field(default=1.891e-6, gt=0)
    pn_seed: Optional[int] = None
    codebook_seed: Optional[int] = None


class SweepSpec(_StrictModel):
    variable: SweepVariable
    values: list[Union[float, int, str]] = Field(min_length=1)


class ExperimentSpec(_StrictModel):
    """Full experiment description, the payload of config files and API calls."""

    system: SystemSpec = SystemSpec()
    signal: SignalSpec = SignalSpec()
    paths: list[PathEntry] = Field(default_factory=lambda: default_paths())
    kappa_u: int = Field(default=8, ge=1)
    kappa_v: int = Field(default=8, ge=1)
    snr_bbf_db: float = -14.0
    p_tot_w: Optional[float] = Field(default=None, ge=0)
    noise_psd_w_per_hz: float = Field(default=4.0e-21, ge=0)
    sweep: Optional[SweepSpec] = None
    trials: int = Field(default=200, ge=1)
    master_seed: int = 0
    coherence: Coherence = "fast"
    scheme: Scheme = "nnls"
    workers: int = Field(default=1, ge=1)
    ideal_streams: bool = False
    rate_draws: int = Field(default=1000, ge=1)
    pdp_draws: int = Field(default=1000, ge=1)
    rate_snr_grid_db: list[float] = Field(
        default_factory=lambda: [-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0]
    )


def default_paths() -> list[PathEntry]:
    """Three-component channel: an on-grid near-LOS path and two off-grid clusters."""
    return [
        PathSpec(
            gamma=1.0,
            eta=100.0,
            aoa_grid_index=20,
            aod_grid_index=24,
            delay_s=0.0,
            rel_speed_mps=5.0,
        ),
        ClusterSpec(
            gamma=0.6,
            eta=10.0,
            aoa_deg=-21.3,
            aod_deg=36.2,
            delay_s=2.273e-9,
            rel_speed_mps=3.0,
            angular_spread_deg=4.0,
            subpath_count=8,
        ),
        ClusterSpec(
            gamma=0.6,
            eta=0.0,
            aoa_deg=47.4,
            aod_deg=-52.1,
            delay_s=5.114e-9,
            rel_speed_mps=8.0,
            angular_spread_deg=4.0,
            subpath_count=8,
        ),
    ]


@dataclass(frozen=True)
class RuntimeSetup:
    """Plain runtime objects resolved from one ExperimentSpec."""

    system: SystemConfig
    signal: SignalConfig
    entries: list[PathParams | ClusterParams]
    kappa_u: int
    kappa_v: int
    noise_psd: float
    coherence_slots: int
    target_ue_index: int
    target_bs_index: int
    target_delay_chips: int
    sparsity: int


def _entry_angles(entry: PathEntry, spec: SystemSpec) -> tuple[float, float]:
    if isinstance(entry, ClusterSpec):
        return math.radians(entry.aoa_deg), math.radians(entry.aod_deg)
    aoa = (
        math.radians(entry.aoa_deg)
        if entry.aoa_deg is not None
        else float(angle_grid(spec.ue_antennas)[entry.aoa_grid_index])
    )
    aod = (
        math.radians(entry.aod_deg)
        if entry.aod_deg is not None
        else float(angle_grid(spec.bs_antennas)[entry.aod_grid_index])
    )
    return aoa, aod


def resolve(cfg: ExperimentSpec) -> RuntimeSetup:
    """Materialize runtime objects and derived quantities from a config.

    Derivations: the probing bandwidth defaults to the system bandwidth, the
    sub-slot count fills the beacon duration with whole sequences, and the
    correlation window covers the sequence plus the channel delay spread.
    """
    sys_spec = cfg.system
    system = SystemConfig(
        bs_antennas=sys_spec.bs_antennas,
        ue_antennas=sys_spec.ue_antennas,
        bs_rf_chains=sys_spec.bs_rf_chains,
        ue_rf_chains=sys_spec.ue_rf_chains,
        carrier_hz=sys_spec.f0_hz,
        bandwidth_hz=sys_spec.bandwidth_hz,
    )
    if cfg.kappa_u > system.bs_antennas or cfg.kappa_v > system.ue_antennas:
        raise ValueError("spreading factors cannot exceed the array sizes")

    bw = cfg.signal.bandwidth_hz or sys_spec.bandwidth_hz
    if bw > sys_spec.bandwidth_hz:
        raise ValueError("signaling bandwidth cannot exceed the system bandwidth")
    t_c = 1.0 / bw
    n_chips = cfg.signal.n_chips
    seqs = cfg.signal.sequences_per_slot
    if seqs is None:
        seqs = max(1, math.ceil(cfg.signal.beacon_duration_s / (n_chips * t_c)))

    entries: list[PathParams | ClusterParams] = []
    max_delay_chips = 0
    for entry in cfg.paths:
        aoa, aod = _entry_angles(entry, sys_spec)
        base = PathParams(
            gamma=entry.gamma,
            eta=entry.eta,
            aoa_rad=aoa,
            aod_rad=aod,
            delay_s=entry.delay_s,
            rel_speed_mps=entry.rel_speed_mps,
        )
        max_delay_chips = max(max_delay_chips, int(round(entry.delay_s * bw)))
        if isinstance(entry, ClusterSpec):
            entries.append(
                ClusterParams(
                    center=base,
                    angular_spread_rad=math.radians(entry.angular_spread_deg),
                    subpath_count=entry.subpath_count,
                )
            )
        else:
            entries.append(base)
    if not entries:
        raise ValueError("need at least one path or cluster")

    corr_taps = cfg.signal.corr_taps
    if corr_taps is None:
        corr_taps = n_chips + max_delay_chips
    elif corr_taps < n_chips + max_delay_chips:
        raise ValueError(
            f"corr_taps={corr_taps} cannot cover {n_chips} chips plus the "
            f"{max_delay_chips}-chip delay spread"
        )
    signal = SignalConfig(
        n_chips=n_chips,
        bandwidth_hz=bw,
        sequences_per_slot=seqs,
        beacon_slots=cfg.signal.beacon_slots,
        corr_taps=corr_taps,
    )

    strongest = max(range(len(cfg.paths)), key=lambda k: cfg.paths[k].gamma)
    t_aoa, t_aod = _entry_angles(cfg.paths[strongest], sys_spec)
    setup = RuntimeSetup(
        system=system,
        signal=signal,
        entries=entries,
        kappa_u=cfg.kappa_u,
        kappa_v=cfg.kappa_v,
        noise_psd=cfg.noise_psd_w_per_hz,
        coherence_slots=1 if cfg.coherence == "fast" else cfg.signal.beacon_slots,
        target_ue_index=nearest_grid_index(t_aoa, sys_spec.ue_antennas),
        target_bs_index=nearest_grid_index(t_aod, sys_spec.bs_antennas),
        target_delay_chips=int(round(cfg.paths[strongest].delay_s * bw)),
        sparsity=len(cfg.paths),
    )
    return setup


def apply_sweep_value(cfg: ExperimentSpec, variable: SweepVariable, value) -> ExperimentSpec:
    """Copy the config with one sweep variable replaced."""
    if variable == "snr_bbf_db":
        return cfg.model_copy(update={"snr_bbf_db": float(value)})
    if variable == "kappa":
        return cfg.model_copy(update={"kappa_u": int(value), "kappa_v": int(value)})
    if variable == "n_c":
        signal = cfg.signal.model_copy(update={"n_chips": int(value)})
        return cfg.model_copy(update={"signal": signal})
    if variable == "rel_speed":
        strongest = max(range(len(cfg.paths)), key=lambda k: cfg.paths[k].gamma)
        paths = list(cfg.paths)
        paths[strongest] = paths[strongest].model_copy(update={"rel_speed_mps": float(value)})
        return cfg.model_copy(update={"paths": paths})
    if variable == "scheme":
        if value not in ("nnls", "omp", "both"):
            raise ValueError(f"unknown scheme {value!r}")
        return cfg.model_copy(update={"scheme": value})
    raise ValueError(f"unknown sweep variable {variable!r}")


def config_hash(cfg: ExperimentSpec) -> str:
    """Stable digest of the experiment definition.

    Excludes execution-only knobs (worker count) so that the same experiment
    hashes identically however it is parallelized.
    """
    dump = cfg.model_dump(mode="json")
    dump.pop("workers", None)
    payload = json.dumps(dump, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def load_config(text: str) -> ExperimentSpec:
    """Parse a JSON config document."""
    return ExperimentSpec.model_validate_json(text)
