"""Command-line client for the tracking service.

Every subcommand builds an HTTP request against the service API; by
default the requests run against an in-process application instance, so
file-based workflows need no running daemon.  Pass ``--server URL`` to
target a remote instance instead, or use ``serve`` to start one.

Exit codes: 0 ok, 1 usage, 2 IO, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io as pio
from .pipeline import ContactSnapshot, FrameRecord
from .translation import EstimatorFrame

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("physmocap")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _check(resp):
    if resp.status_code >= 500:
        detail = resp.json().get("detail", resp.text)
        raise RuntimeError(f"numerical failure: {detail}")
    if resp.status_code >= 400:
        detail = resp.json().get("detail", resp.text)
        raise pio.FileFormatError(str(detail))
    return resp.json()


def _skeleton_spec(value: str) -> str:
    """Inline a skeleton file's text so the service never touches paths."""
    if value in ("humanoid", "chain"):
        return value
    path = Path(value)
    if not path.exists():
        raise pio.FileFormatError(f"skeleton file not found: {value}")
    return path.read_text()


def _frames_payload(frames):
    return [
        {
            "t": f.t,
            "theta_ref": f.theta_ref.tolist(),
            "v_par_mag": f.v_par_mag,
            "v_perp": f.v_perp.tolist(),
            "s": f.s.tolist(),
            "g_root": f.g_root.tolist(),
        }
        for f in frames
    ]


def _frames_from_payload(payload):
    return [
        EstimatorFrame(
            t=f["t"],
            theta_ref=np.array(f["theta_ref"]),
            v_par_mag=f["v_par_mag"],
            v_perp=np.array(f["v_perp"]),
            s=np.array(f["s"]),
            g_root=np.array(f["g_root"]),
        )
        for f in payload
    ]


def _records_from_payload(payload):
    records = []
    for r in payload:
        records.append(
            FrameRecord(
                t=r["t"],
                q=np.array(r["q"]),
                qdot=np.array(r["qdot"]),
                tau_root=np.array(r["tau_root"]),
                e_norm=r["e_norm"] if r["e_norm"] is not None else math.nan,
                flagged=r["flagged"],
                contacts=[
                    ContactSnapshot(
                        status=c["status"],
                        surface_height=(
                            c["surface_height"] if c["surface_height"] is not None else math.nan
                        ),
                        force=np.array(c["force"]),
                    )
                    for c in r["contacts"]
                ],
                solve_ms=r["solve_ms"],
            )
        )
    return records


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("physmocap.service:app", host=args.host, port=args.port)
    return EXIT_OK


def cmd_synth(args) -> int:
    client = make_client(args.server)
    req = {
        "scenario": args.scenario,
        "seed": args.seed,
        "noise_deg": args.noise,
        "s_mode": args.s_mode,
        "include_imu": args.imu is not None and args.scenario != "calib_step",
    }
    if args.drift:
        req["yaw_drift_deg"] = [float(v) for v in args.drift.split(",")]
    if args.accel_noise:
        req["accel_noise"] = args.accel_noise
    data = _check(client.post("/synth", json=req))
    wrote = []
    if data.get("motion") and args.motion:
        m = data["motion"]
        motion = pio.MotionSequence(
            name=m["name"],
            fps=m["fps"],
            root=np.array(m["root"]),
            angles=np.array(m["angles"]),
            contacts=np.array(m["contacts"], dtype=bool) if m.get("contacts") else None,
        )
        pio.save_motion(args.motion, motion)
        wrote.append(args.motion)
    if data.get("frames") and args.frames:
        frames = _frames_from_payload(data["frames"])
        pio.save_frames(args.frames, frames, fps=data["motion"]["fps"])
        wrote.append(args.frames)
    if data.get("imu") and args.imu:
        p = data["imu"]
        acc = np.array(p["acc"])
        logm = pio.ImuLog(
            t=np.array(p["t"]),
            acc=acc,
            gyro=np.array(p["gyro"]),
            rot=np.array(p["rot"]).reshape(len(p["t"]), acc.shape[1], 3, 3),
        )
        pio.save_imu_log(args.imu, logm)
        wrote.append(args.imu)
    if not wrote:
        raise UsageError("nothing to write; pass --motion/--frames/--imu")
    print(f"synth {args.scenario}: wrote {', '.join(wrote)}")
    return EXIT_OK


def cmd_track(args) -> int:
    client = make_client(args.server)
    config: dict = {}
    if args.config:
        raw = pio.load_config(args.config)
        tracking = raw.pop("tracking", {}) or {}
        contact = raw.pop("contact", {}) or {}
        config = {k: v for k, v in raw.items() if v is not None}
        config["tracking"] = tracking
        config["contact"] = contact
    if args.skeleton:
        config["skeleton"] = args.skeleton
    if args.seed is not None:
        config["seed"] = args.seed
    if "skeleton" in config:
        config["skeleton"] = _skeleton_spec(config["skeleton"])
    frames, fps = pio.load_frames(args.input)
    data = _check(
        client.post("/track", json={"config": config, "frames": _frames_payload(frames)})
    )
    records = _records_from_payload(data["records"])
    pio.save_records(args.output, records, data["fps"], data["n_dof"], data["n_endpoints"])
    s = data["stats"]
    budget = 1000.0 / data["fps"] / 2.0  # half the frame interval, as in live use
    print(
        f"tracked {s['frames']} frames -> {args.output}\n"
        f"per-frame wall time: mean {s['mean_ms']:.2f} ms, max {s['max_ms']:.2f} ms "
        f"(target < {budget:.1f} ms), flagged {s['flagged']}"
    )
    return EXIT_OK


def cmd_calibrate(args) -> int:
    client = make_client(args.server)
    logm = pio.load_imu_log(args.input)
    T, S = logm.acc.shape[:2]
    payload = {
        "log": {
            "t": logm.t.tolist(),
            "acc": logm.acc.tolist(),
            "gyro": logm.gyro.tolist(),
            "rot": logm.rot.reshape(T, S, 9).tolist(),
        },
        "gravity": [float(v) for v in args.gravity.split(",")],
        "tolerance_deg": args.tolerance,
    }
    data = _check(client.post("/calibrate", json=payload))
    from .calibration import CalibrationResult

    result = CalibrationResult(
        headings=[np.array(H) for H in data["headings"]],
        R_IM=np.array(data["r_im"]),
        R_SB=[np.array(R) for R in data["r_sb"]],
        step_displacements=np.array(data["step_displacements"]),
        residual_velocity=np.array(data["residual_velocity"]),
        pose_return_deg=np.array(data["pose_return_deg"]),
        pose_return_ok=data["pose_return_ok"],
    )
    if not result.pose_return_ok:
        print(
            "calibration failed pose-return verification "
            f"(angles {np.round(result.pose_return_deg, 1).tolist()} deg); redo the step",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    pio.save_calibration(args.output, result)
    print(f"calibration ok -> {args.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    client = make_client(args.server)

    def load_any_motion(path):
        text = Path(path).read_text()
        if "physmocap-track" in text.splitlines()[0]:
            records, fps = pio.text_to_records(text)
            n_joints = (len(records[0].q) - 3) // 3
            return pio.records_to_motion(records, fps, n_joints)
        return pio.text_to_motion(text)

    try:
        pred = load_any_motion(args.pred)
        truth = load_any_motion(args.truth)
    except OSError as exc:
        raise pio.FileFormatError(str(exc))
    payload = {
        "pred": {
            "name": pred.name,
            "fps": pred.fps,
            "root": pred.root.tolist(),
            "angles": pred.angles.tolist(),
        },
        "truth": {
            "name": truth.name,
            "fps": truth.fps,
            "root": truth.root.tolist(),
            "angles": truth.angles.tolist(),
        },
        "skeleton": args.skeleton,
        "alignment": args.alignment,
        "drift_reference": args.drift_reference,
    }
    data = _check(client.post("/eval", json=payload))
    print(data["summary"])
    if args.report:
        Path(args.report).write_text(data["summary"] + "\n")
    if args.csv:
        from .metrics import drift_curve_csv

        Path(args.csv).write_text(
            drift_curve_csv(np.array(data["drift_distance"]), np.array(data["drift_error"]))
        )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="physmocap", description=__doc__)
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("synth", help="generate synthetic data")
    p.add_argument("--scenario", required=True)
    p.add_argument("--noise", type=float, default=0.0, help="angle noise sigma [deg]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--s-mode", default="auto", choices=["auto", "truth", "displacement"])
    p.add_argument("--motion", help="output motion file")
    p.add_argument("--frames", help="output estimator-frame file")
    p.add_argument("--imu", help="output IMU log file")
    p.add_argument("--drift", help="per-sensor yaw drift degrees, comma separated (calib_step)")
    p.add_argument("--accel-noise", type=float, default=0.0, help="accelerometer noise sigma (calib_step)")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("track", help="run the physics optimizer over estimator frames")
    p.add_argument("--config", help="YAML pipeline configuration")
    p.add_argument("--input", required=True, help="estimator frame stream")
    p.add_argument("--output", required=True, help="state/contact record stream")
    p.add_argument("--skeleton", help="bundled name or skeleton file (overrides config)")
    p.add_argument("--seed", type=int, help="overrides config seed")
    p.set_defaults(fn=cmd_track)

    p = sub.add_parser("calibrate", help="walking calibration from an IMU log")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--gravity", default="0,-9.8,0")
    p.add_argument("--tolerance", type=float, default=10.0, help="pose-return tolerance [deg]")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("eval", help="compare a tracked stream against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--alignment", default="local", choices=["local", "global"])
    p.add_argument("--skeleton", default="humanoid")
    p.add_argument("--drift-reference", type=float, default=7.0)
    p.add_argument("--report", help="write the summary to this file")
    p.add_argument("--csv", help="write the drift curve to this CSV")
    p.set_defaults(fn=cmd_eval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PHYSMOCAP_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except pio.FileFormatError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
