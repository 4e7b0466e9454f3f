"""Pydantic request/response models for the tracking service.

JSON has no NaN, so optional float fields (residuals of flagged frames,
surface heights of non-contacts) travel as null.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class TrackingSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kp_theta: Optional[float] = None
    kd_theta: Optional[float] = None
    kp_r: Optional[float] = None
    kd_r: Optional[float] = None
    beta_tau: Optional[float] = None
    beta_tau_star: Optional[float] = None
    dt: Optional[float] = None
    d_th: Optional[float] = None
    pull_factor: Optional[float] = None
    lsqr_tol: Optional[float] = None
    lsqr_max_iter: Optional[int] = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class ContactSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    beta_lambda: Optional[float] = None
    mu: Optional[float] = None
    e_th: Optional[float] = None
    stationary_threshold: Optional[float] = None
    height_tolerance: Optional[float] = None
    counter_threshold: Optional[int] = None
    pyramid_edges: Optional[int] = None
    pair_distance: Optional[float] = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class PipelineSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    skeleton: str = "humanoid"  # bundled name or inline description text
    gravity: Optional[list[float]] = None
    ground_height: Optional[float] = None
    seed: int = 0
    tracking: TrackingSettings = Field(default_factory=TrackingSettings)
    contact: ContactSettings = Field(default_factory=ContactSettings)


class Frame(BaseModel):
    t: float
    theta_ref: list[float]
    v_par_mag: float
    v_perp: list[float]
    s: list[float]
    g_root: list[float]


class ContactState(BaseModel):
    status: str
    surface_height: Optional[float] = None
    force: list[float]


class Record(BaseModel):
    t: float
    q: list[float]
    qdot: list[float]
    tau_root: list[float]
    e_norm: Optional[float] = None
    flagged: bool
    contacts: list[ContactState]
    solve_ms: float


class Stats(BaseModel):
    frames: int
    mean_ms: float
    max_ms: float
    flagged: int


class TrackRequest(BaseModel):
    config: PipelineSettings = Field(default_factory=PipelineSettings)
    frames: list[Frame]


class TrackResponse(BaseModel):
    records: list[Record]
    stats: Stats
    fps: float
    n_dof: int
    n_endpoints: int


class SessionCreateResponse(BaseModel):
    session_id: str


class SessionFramesRequest(BaseModel):
    frames: list[Frame]


class SessionFramesResponse(BaseModel):
    records: list[Record]


class MotionPayload(BaseModel):
    name: str = "motion"
    fps: float
    root: list[list[float]]
    angles: list[list[float]]
    contacts: Optional[list[list[bool]]] = None


class ImuPayload(BaseModel):
    t: list[float]
    acc: list[list[list[float]]]  # (T, S, 3)
    gyro: list[list[list[float]]]
    rot: list[list[list[float]]]  # (T, S, 9) row-major


class SynthRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: str
    skeleton: str = "humanoid"
    seed: int = 0
    noise_deg: float = 0.0
    s_mode: str = "auto"
    include_imu: bool = False
    # calibration-step options
    yaw_drift_deg: Optional[list[float]] = None
    accel_noise: float = 0.0


class SynthResponse(BaseModel):
    motion: Optional[MotionPayload] = None
    frames: Optional[list[Frame]] = None
    imu: Optional[ImuPayload] = None


class CalibrateRequest(BaseModel):
    log: ImuPayload
    gravity: list[float] = Field(default_factory=lambda: [0.0, -9.8, 0.0])
    tolerance_deg: float = 10.0


class CalibrateResponse(BaseModel):
    r_im: list[list[float]]
    headings: list[list[list[float]]]
    r_sb: list[list[list[float]]]
    step_displacements: list[list[float]]
    residual_velocity: list[float]
    pose_return_deg: list[float]
    pose_return_ok: bool


class EvalRequest(BaseModel):
    pred: MotionPayload
    truth: MotionPayload
    skeleton: str = "humanoid"
    alignment: str = "local"
    drift_reference: float = 7.0


class EvalResponse(BaseModel):
    sip_error_deg: list[float]  # mean, std
    ang_error_deg: list[float]
    pos_error_cm: list[float]
    root_jitter: float
    joint_jitter: float
    drift_percent: Optional[float]
    drift_distance: list[float]
    drift_error: list[float]
    summary: str


class HealthResponse(BaseModel):
    status: str
    version: str
    scenarios: list[str]
