"""HTTP service exposing the scenario runner, figure recipes and planners.

Endpoints accept/return the pydantic models from `experiments`; schema
violations come back as 422 responses carrying the offending key path.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .experiments import (
    ResultRow,
    ScenarioConfig,
    dbm_to_watts,
    doa_calibrate,
    plan_power,
    reproduce,
    rows_to_csv,
    run_fit_eta,
    run_scenario,
)

app = FastAPI(
    title="risswpcn",
    description="Sensing-then-reflecting surface-assisted WPCN analytics service",
    version=__version__,
)


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ScenarioConfig = Field(default_factory=ScenarioConfig)


class RowsResponse(BaseModel):
    scenario_id: str
    rows: list[ResultRow]
    flags: list[str] = Field(default_factory=list)
    csv: str


def _rows_response(scenario_id: str, rows: list[ResultRow], flags: list[str]) -> RowsResponse:
    return RowsResponse(scenario_id=scenario_id, rows=rows, flags=flags, csv=rows_to_csv(rows))


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/analyze", response_model=RowsResponse)
def analyze(req: RunRequest) -> RowsResponse:
    """Closed forms and bounds only; no Monte Carlo."""
    try:
        rows, flags = run_scenario(req.config, closed_only=True)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return _rows_response(req.config.scenario_id, rows, flags)


@app.post("/simulate", response_model=RowsResponse)
def simulate(req: RunRequest) -> RowsResponse:
    """Closed forms paired with Monte Carlo estimates."""
    try:
        rows, flags = run_scenario(req.config, closed_only=False)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return _rows_response(req.config.scenario_id, rows, flags)


@app.post("/sweep", response_model=RowsResponse)
def sweep(req: RunRequest) -> RowsResponse:
    """Like /simulate but requires a sweep section."""
    if req.config.sweep is None:
        raise HTTPException(status_code=400, detail="config.sweep is required for /sweep")
    return simulate(req)


class ReproduceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    figure: str
    trials: int | None = None
    seed: int = 0


@app.post("/reproduce", response_model=RowsResponse)
def reproduce_figure(req: ReproduceRequest) -> RowsResponse:
    try:
        rows, flags = reproduce(req.figure, trials=req.trials, seed=req.seed)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return _rows_response(req.figure, rows, flags)


class PlanPowerRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ScenarioConfig = Field(default_factory=ScenarioConfig)
    p_out: float
    t_thre_dbm: float | None = None
    t_thre_watts: float | None = None


class PlanPowerResponse(BaseModel):
    power_watts: float
    power_dbm: float
    gamma_alpha: float
    gamma_beta_unit_power: float
    quantile_watts_at_unit_power: float
    t_thre_watts: float
    p_out: float
    assumptions: str
    rows: list[ResultRow]
    csv: str


@app.post("/plan-power", response_model=PlanPowerResponse)
def plan_power_endpoint(req: PlanPowerRequest) -> PlanPowerResponse:
    if (req.t_thre_dbm is None) == (req.t_thre_watts is None):
        raise HTTPException(status_code=400,
                            detail="give exactly one of t_thre_dbm / t_thre_watts")
    t_thre = req.t_thre_watts if req.t_thre_watts is not None else dbm_to_watts(req.t_thre_dbm)
    try:
        report, rows = plan_power(req.config, t_thre, req.p_out)
    except (ValueError, ArithmeticError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return PlanPowerResponse(
        **report.__dict__, rows=rows, csv=rows_to_csv(rows),
    )


class DoaCalibrateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    na_values: list[int] = Field(default_factory=lambda: [7, 19])
    kappa_values: list[float] = Field(default_factory=lambda: [1.0, 10.0])
    snr_db: float = 10.0
    trials: int = 300
    seed: int = 0
    n_snapshots: int = 64
    angle_low: float = -math.pi / 3
    angle_high: float = math.pi / 3


@app.post("/doa-calibrate", response_model=RowsResponse)
def doa_calibrate_endpoint(req: DoaCalibrateRequest) -> RowsResponse:
    try:
        rows = doa_calibrate(
            req.na_values, req.kappa_values, req.snr_db,
            req.trials, req.seed, n_snapshots=req.n_snapshots,
            angle_low=req.angle_low, angle_high=req.angle_high,
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return _rows_response("doa_calibrate", rows, [])


class FitEtaRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    sigmas: list[float] = Field(
        default_factory=lambda: [0.0, 0.013, 0.027, 0.04, 0.053, 0.067, 0.08]
    )
    trials: int = 4000
    seed: int = 0


class FitEtaResponse(BaseModel):
    eta_u: float
    eta_v: float
    eta_z: float
    residual_siso: float
    residual_miso: float
    flagged: bool
    rows: list[ResultRow]
    csv: str


@app.post("/fit-eta", response_model=FitEtaResponse)
def fit_eta_endpoint(req: FitEtaRequest) -> FitEtaResponse:
    try:
        fit, rows = run_fit_eta(req.sigmas, req.trials, req.seed)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return FitEtaResponse(
        eta_u=fit.eta_u, eta_v=fit.eta_v, eta_z=fit.eta_z,
        residual_siso=fit.residual_siso, residual_miso=fit.residual_miso,
        flagged=fit.flagged, rows=rows, csv=rows_to_csv(rows),
    )
