"""Pydantic request/response bodies of the experiment service."""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, Field

from ..config import ExperimentSpec


class ExperimentRequest(BaseModel):
    """A full experiment configuration; omitted fields take package defaults."""

    config: ExperimentSpec = Field(default_factory=ExperimentSpec)


class ResultRow(BaseModel):
    sweep: str
    value: Union[float, int, str]
    scheme: str
    trials: int
    successes: int
    p_d: float
    wilson_lo: float
    wilson_hi: float


class RatePoint(BaseModel):
    snr_bbf_db: float
    r_ub: float
    r_lb: float


class PdpRow(BaseModel):
    stage: str
    tap: int
    energy: float


class DetectionResponse(BaseModel):
    rows: list[ResultRow]
    csv: str
    manifest: dict


class RateResponse(BaseModel):
    rows: list[RatePoint]
    csv: str
    manifest: dict


class PdpResponse(BaseModel):
    rows: list[PdpRow]
    csv: str
    manifest: dict


class ConfigEcho(BaseModel):
    config: ExperimentSpec
    config_sha256: str
    derived: dict


class HealthResponse(BaseModel):
    status: str
    version: str
    service: Optional[str] = "beamalign"
