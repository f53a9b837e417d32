"""HTTP face of the simulator: experiments in, rows + CSV + manifest out.

The endpoints wrap the harness one-to-one so remote clients and the bundled
CLI see exactly the files a local run would produce.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import config_hash, resolve
from ..harness import run_detection_sweep, run_pdp_experiment, run_rate_experiment
from .models import (
    ConfigEcho,
    DetectionResponse,
    ExperimentRequest,
    HealthResponse,
    PdpResponse,
    RateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="beamalign",
        version=__version__,
        description="Link-level beam-alignment simulation service",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/config/validate", response_model=ConfigEcho)
    def validate(request: ExperimentRequest) -> ConfigEcho:
        try:
            setup = resolve(request.config)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        derived = {
            "sequences_per_slot": setup.signal.sequences_per_slot,
            "corr_taps": setup.signal.corr_taps,
            "chip_duration_s": setup.signal.chip_duration_s,
            "coherence_slots": setup.coherence_slots,
            "target_cell": [setup.target_ue_index, setup.target_bs_index],
            "target_delay_chips": setup.target_delay_chips,
        }
        return ConfigEcho(
            config=request.config, config_sha256=config_hash(request.config), derived=derived
        )

    @app.post("/experiments/detection", response_model=DetectionResponse)
    def detection(request: ExperimentRequest) -> DetectionResponse:
        result = _run(run_detection_sweep, request)
        return DetectionResponse(rows=result.rows, csv=result.csv_text, manifest=result.manifest)

    @app.post("/experiments/rate", response_model=RateResponse)
    def rate(request: ExperimentRequest) -> RateResponse:
        result = _run(run_rate_experiment, request)
        return RateResponse(rows=result.rows, csv=result.csv_text, manifest=result.manifest)

    @app.post("/experiments/pdp", response_model=PdpResponse)
    def pdp_endpoint(request: ExperimentRequest) -> PdpResponse:
        result = _run(run_pdp_experiment, request)
        return PdpResponse(rows=result.rows, csv=result.csv_text, manifest=result.manifest)

    return app


def _run(runner, request: ExperimentRequest):
    try:
        return runner(request.config)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


app = create_app()
