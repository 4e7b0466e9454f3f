"""FastAPI service wrapping the tracking, calibration, and evaluation core.

Batch endpoints (/track, /calibrate, /synth, /eval) are stateless; live
capture uses /sessions, which hold one tracker per capture stream and
accept frames incrementally.
"""

from __future__ import annotations

import math
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..calibration import CalibrationError, ImuLog, run_calibration
from ..io import FileFormatError, resolve_model
from ..metrics import evaluate
from ..pipeline import FrameRecord, NumericalFailure, PipelineConfig, TrackingSession
from ..synth import (
    MotionSequence,
    make_calibration_log,
    make_scenarios,
    synthesize_estimator_frames,
    synthesize_imu,
)
from ..translation import EstimatorFrame
from . import schemas

app = FastAPI(title="physmocap", version=__version__)


class _Session:
    """A tracker plus a lock serializing frame batches for one stream."""

    def __init__(self, tracker: TrackingSession):
        self.tracker = tracker
        self.lock = threading.Lock()


_sessions: dict[str, _Session] = {}
_sessions_lock = threading.Lock()


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=422, detail=str(exc))


def _pipeline_config(settings: schemas.PipelineSettings, total_mass: float) -> PipelineConfig:
    data = {
        "skeleton": settings.skeleton,
        "gravity": settings.gravity,
        "ground_height": settings.ground_height,
        "seed": settings.seed,
        "tracking": settings.tracking.overrides(),
        "contact": settings.contact.overrides(),
    }
    data = {k: v for k, v in data.items() if v is not None}
    return PipelineConfig.from_dict(data, total_mass=total_mass)


def _estimator_frame(f: schemas.Frame) -> EstimatorFrame:
    return EstimatorFrame(
        t=f.t,
        theta_ref=np.array(f.theta_ref),
        v_par_mag=f.v_par_mag,
        v_perp=np.array(f.v_perp),
        s=np.array(f.s),
        g_root=np.array(f.g_root),
    )


def _frame_payload(f: EstimatorFrame) -> schemas.Frame:
    return schemas.Frame(
        t=f.t,
        theta_ref=f.theta_ref.tolist(),
        v_par_mag=f.v_par_mag,
        v_perp=f.v_perp.tolist(),
        s=f.s.tolist(),
        g_root=f.g_root.tolist(),
    )


def _record_payload(r: FrameRecord) -> schemas.Record:
    return schemas.Record(
        t=r.t,
        q=r.q.tolist(),
        qdot=r.qdot.tolist(),
        tau_root=r.tau_root.tolist(),
        e_norm=None if math.isnan(r.e_norm) else r.e_norm,
        flagged=r.flagged,
        contacts=[
            schemas.ContactState(
                status=c.status,
                surface_height=None if math.isnan(c.surface_height) else c.surface_height,
                force=c.force.tolist(),
            )
            for c in r.contacts
        ],
        solve_ms=r.solve_ms,
    )


def _motion_payload(m: MotionSequence) -> schemas.MotionPayload:
    return schemas.MotionPayload(
        name=m.name,
        fps=m.fps,
        root=m.root.tolist(),
        angles=m.angles.tolist(),
        contacts=m.contacts.tolist() if m.contacts is not None else None,
    )


def _motion_from_payload(p: schemas.MotionPayload) -> MotionSequence:
    return MotionSequence(
        name=p.name,
        fps=p.fps,
        root=np.array(p.root),
        angles=np.array(p.angles),
        contacts=np.array(p.contacts, dtype=bool) if p.contacts is not None else None,
    )


def _imu_payload(log: ImuLog) -> schemas.ImuPayload:
    T, S = log.acc.shape[:2]
    return schemas.ImuPayload(
        t=log.t.tolist(),
        acc=log.acc.tolist(),
        gyro=log.gyro.tolist(),
        rot=log.rot.reshape(T, S, 9).tolist(),
    )


def _imu_from_payload(p: schemas.ImuPayload) -> ImuLog:
    acc = np.array(p.acc)
    return ImuLog(
        t=np.array(p.t),
        acc=acc,
        gyro=np.array(p.gyro),
        rot=np.array(p.rot).reshape(len(p.t), acc.shape[1], 3, 3),
    )


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    from ..io import bundled_model

    model, _ = bundled_model("humanoid")
    return schemas.HealthResponse(
        status="ok",
        version=__version__,
        scenarios=sorted(make_scenarios(model)) + ["calib_step"],
    )


@app.post("/track", response_model=schemas.TrackResponse)
def track(req: schemas.TrackRequest) -> schemas.TrackResponse:
    if not req.frames:
        raise _bad_request(ValueError("no frames supplied"))
    try:
        model, dyn = resolve_model(req.config.skeleton, req.config.gravity)
        config = _pipeline_config(req.config, dyn.total_mass)
        session = TrackingSession(model, dyn, config)
        records = [session.process(_estimator_frame(f)) for f in req.frames]
    except (FileFormatError, ValueError) as exc:
        raise _bad_request(exc)
    except NumericalFailure as exc:
        raise HTTPException(status_code=500, detail=f"numerical failure: {exc}")
    stats = session.stats()
    dt = config.tracking.dt
    return schemas.TrackResponse(
        records=[_record_payload(r) for r in records],
        stats=schemas.Stats(
            frames=stats.frames, mean_ms=stats.mean_ms, max_ms=stats.max_ms, flagged=stats.flagged
        ),
        fps=1.0 / dt,
        n_dof=model.n_dof,
        n_endpoints=len(model.tracked_endpoints),
    )


@app.post("/sessions", response_model=schemas.SessionCreateResponse)
def create_session(settings: schemas.PipelineSettings) -> schemas.SessionCreateResponse:
    try:
        model, dyn = resolve_model(settings.skeleton, settings.gravity)
        config = _pipeline_config(settings, dyn.total_mass)
    except (FileFormatError, ValueError) as exc:
        raise _bad_request(exc)
    session_id = uuid.uuid4().hex
    with _sessions_lock:
        _sessions[session_id] = _Session(TrackingSession(model, dyn, config))
    return schemas.SessionCreateResponse(session_id=session_id)


def _get_session(session_id: str) -> _Session:
    with _sessions_lock:
        session = _sessions.get(session_id)
    if session is None:
        raise HTTPException(status_code=404, detail="unknown session")
    return session


@app.post("/sessions/{session_id}/frames", response_model=schemas.SessionFramesResponse)
def session_frames(session_id: str, req: schemas.SessionFramesRequest) -> schemas.SessionFramesResponse:
    session = _get_session(session_id)
    try:
        with session.lock:
            records = [session.tracker.process(_estimator_frame(f)) for f in req.frames]
    except NumericalFailure as exc:
        raise HTTPException(status_code=500, detail=f"numerical failure: {exc}")
    return schemas.SessionFramesResponse(records=[_record_payload(r) for r in records])


@app.get("/sessions/{session_id}/stats", response_model=schemas.Stats)
def session_stats(session_id: str) -> schemas.Stats:
    s = _get_session(session_id).tracker.stats()
    return schemas.Stats(frames=s.frames, mean_ms=s.mean_ms, max_ms=s.max_ms, flagged=s.flagged)


@app.delete("/sessions/{session_id}", status_code=204)
def delete_session(session_id: str) -> None:
    with _sessions_lock:
        _sessions.pop(session_id, None)


@app.post("/synth", response_model=schemas.SynthResponse)
def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    try:
        model, dyn = resolve_model(req.skeleton)
        if req.scenario == "calib_step":
            log, _ = make_calibration_log(
                yaw_drift_deg=req.yaw_drift_deg,
                accel_noise=req.accel_noise,
                seed=req.seed,
            )
            return schemas.SynthResponse(imu=_imu_payload(log))
        scenarios = make_scenarios(model)
        if req.scenario not in scenarios:
            raise ValueError(
                f"unknown scenario {req.scenario!r}; have {sorted(scenarios) + ['calib_step']}"
            )
        motion = scenarios[req.scenario]()
        frames = synthesize_estimator_frames(
            motion, model, angle_noise_deg=req.noise_deg, seed=req.seed, s_mode=req.s_mode
        )
        imu = _imu_payload(synthesize_imu(model, motion)) if req.include_imu else None
        return schemas.SynthResponse(
            motion=_motion_payload(motion),
            frames=[_frame_payload(f) for f in frames],
            imu=imu,
        )
    except (FileFormatError, ValueError) as exc:
        raise _bad_request(exc)


@app.post("/calibrate", response_model=schemas.CalibrateResponse)
def calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
    try:
        log = _imu_from_payload(req.log)
        result = run_calibration(
            log, np.array(req.gravity), pose_return_tolerance_deg=req.tolerance_deg
        )
    except (CalibrationError, ValueError) as exc:
        raise _bad_request(exc)
    return schemas.CalibrateResponse(
        r_im=result.R_IM.tolist(),
        headings=[H.tolist() for H in result.headings],
        r_sb=[R.tolist() for R in result.R_SB],
        step_displacements=result.step_displacements.tolist(),
        residual_velocity=result.residual_velocity.tolist(),
        pose_return_deg=result.pose_return_deg.tolist(),
        pose_return_ok=result.pose_return_ok,
    )


@app.post("/eval", response_model=schemas.EvalResponse)
def eval_motion(req: schemas.EvalRequest) -> schemas.EvalResponse:
    try:
        model, _ = resolve_model(req.skeleton)
        report = evaluate(
            _motion_from_payload(req.pred),
            _motion_from_payload(req.truth),
            model,
            alignment=req.alignment,
            drift_reference=req.drift_reference,
        )
    except (FileFormatError, ValueError) as exc:
        raise _bad_request(exc)
    return schemas.EvalResponse(
        sip_error_deg=list(report.sip_error_deg),
        ang_error_deg=list(report.ang_error_deg),
        pos_error_cm=list(report.pos_error_cm),
        root_jitter=report.root_jitter,
        joint_jitter=report.joint_jitter,
        drift_percent=report.drift_percent,
        drift_distance=report.drift_distance.tolist(),
        drift_error=report.drift_error.tolist(),
        summary=report.summary(),
    )
