"""Line-delimited text formats and bundled model loading.

Every stream format is human-diffable: `#` starts a comment, the first
line is a `# physmocap-<kind> v1 key=value ...` header, and numbers are
written with full round-trip precision so repeated runs are byte
identical.

Skeleton description files:
    joint <name> <parent-name|-> <ox> <oy> <oz>
    mass <name> <m> <cx> <cy> <cz> <Ixx> <Iyy> <Izz> <Ixy> <Ixz> <Iyz>
    endpoints <name>...          (optional; default: the standard five)

SI units throughout.
"""

from __future__ import annotations

import warnings
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import yaml

from .calibration import CalibrationResult, ImuLog, SENSOR_NAMES
from .dynamics import DEFAULT_GRAVITY, DynamicsModel
from .skeleton import ENDPOINT_NAMES, Joint, SkeletonModel
from .synth import MotionSequence
from .translation import EstimatorFrame


class FileFormatError(ValueError):
    """Malformed or mismatched input file."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _data_lines(text: str):
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield ln, line


def _header(text: str, kind: str) -> dict:
    for raw in text.splitlines():
        s = raw.strip()
        if not s:
            continue
        if not s.startswith("#"):
            break
        body = s.lstrip("# ").split()
        if body and body[0] == f"physmocap-{kind}":
            return dict(kv.split("=", 1) for kv in body[2:] if "=" in kv)
    raise FileFormatError(f"missing 'physmocap-{kind}' header")


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# skeleton description


def parse_skeleton(text: str) -> tuple[SkeletonModel, dict]:
    """Parse a skeleton description; returns (model, body parameters)."""
    joints: list[Joint] = []
    names: dict[str, int] = {}
    mass: dict[str, tuple] = {}
    endpoint_names: Optional[list[str]] = None
    for ln, line in _data_lines(text):
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "joint":
                name, parent = parts[1], parts[2]
                off = np.array([float(v) for v in parts[3:6]])
                if parent == "-":
                    pidx = -1
                elif parent in names:
                    pidx = names[parent]
                else:
                    raise FileFormatError(f"line {ln}: unknown parent {parent!r}")
                names[name] = len(joints)
                joints.append(Joint(name=name, parent=pidx, offset=off))
            elif kind == "mass":
                name = parts[1]
                vals = [float(v) for v in parts[2:12]]
                if len(vals) != 10:
                    raise FileFormatError(f"line {ln}: mass record needs 10 numbers")
                mass[name] = vals
            elif kind == "endpoints":
                endpoint_names = parts[1:]
            else:
                raise FileFormatError(f"line {ln}: unknown record {kind!r}")
        except (IndexError, ValueError) as exc:
            raise FileFormatError(f"line {ln}: {exc}") from exc
    if not joints:
        raise FileFormatError("no joint records")
    if np.any(joints[0].offset != 0.0):
        warnings.warn(
            "root joint has a nonzero rest offset; the root translation will "
            "not coincide with the root joint position",
            stacklevel=2,
        )

    if endpoint_names is None:
        endpoint_names = [n for n in ENDPOINT_NAMES if n in names]
    try:
        endpoints = tuple(names[n] for n in endpoint_names)
    except KeyError as exc:
        raise FileFormatError(f"endpoint joint {exc} not defined") from exc
    model = SkeletonModel(joints=tuple(joints), tracked_endpoints=endpoints)

    k = len(joints)
    masses = np.zeros(k)
    com = np.zeros((k, 3))
    inertia = np.zeros((k, 3, 3))
    for name, idx in names.items():
        if name not in mass:
            raise FileFormatError(f"no mass record for joint {name!r}")
        m, cx, cy, cz, ixx, iyy, izz, ixy, ixz, iyz = mass[name]
        masses[idx] = m
        com[idx] = (cx, cy, cz)
        inertia[idx] = [[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]]
    return model, {"mass": masses, "com": com, "inertia": inertia}


def load_skeleton(path) -> tuple[SkeletonModel, dict]:
    return parse_skeleton(_read(path))


def build_dynamics(model: SkeletonModel, body: dict, gravity=None) -> DynamicsModel:
    return DynamicsModel(
        skeleton=model,
        mass=body["mass"],
        com=body["com"],
        inertia=body["inertia"],
        gravity=np.asarray(gravity, dtype=float) if gravity is not None else DEFAULT_GRAVITY.copy(),
    )


_BUNDLED = {"humanoid": "humanoid24.skel", "chain": "chain4.skel"}


def bundled_skeleton_text(name: str) -> str:
    if name not in _BUNDLED:
        raise FileFormatError(f"unknown bundled model {name!r}; have {sorted(_BUNDLED)}")
    return resources.files("physmocap.data").joinpath(_BUNDLED[name]).read_text()


def bundled_model(name: str = "humanoid", gravity=None) -> tuple[SkeletonModel, DynamicsModel]:
    model, body = parse_skeleton(bundled_skeleton_text(name))
    return model, build_dynamics(model, body, gravity)


def resolve_model(spec: Union[str, None], gravity=None) -> tuple[SkeletonModel, DynamicsModel]:
    """Bundled name, file path, or inline description text -> models."""
    if spec is None:
        spec = "humanoid"
    if spec in _BUNDLED:
        return bundled_model(spec, gravity)
    if "\n" in spec or spec.lstrip().startswith(("joint ", "#")):
        model, body = parse_skeleton(spec)
    else:
        model, body = load_skeleton(spec)
    return model, build_dynamics(model, body, gravity)


# ---------------------------------------------------------------------------
# motion sequences


def motion_to_text(motion: MotionSequence) -> str:
    k = motion.angles.shape[1] // 3
    lines = [f"# physmocap-motion v1 fps={_fmt(motion.fps)} joints={k} name={motion.name}"]
    if motion.contacts is not None:
        lines[0] += f" contacts={motion.contacts.shape[1]}"
    for t in range(motion.n_frames):
        row = [t * motion.dt, *motion.root[t], *motion.angles[t]]
        if motion.contacts is not None:
            row += [1.0 if c else 0.0 for c in motion.contacts[t]]
        lines.append(_fmt_row(row))
    return "\n".join(lines) + "\n"


def text_to_motion(text: str) -> MotionSequence:
    head = _header(text, "motion")
    k = int(head["joints"])
    fps = float(head["fps"])
    n_contact = int(head.get("contacts", 0))
    name = head.get("name", "motion")
    roots, angles, contacts = [], [], []
    for ln, line in _data_lines(text):
        vals = [float(v) for v in line.split()]
        want = 1 + 3 + 3 * k + n_contact
        if len(vals) != want:
            raise FileFormatError(f"line {ln}: expected {want} columns, got {len(vals)}")
        roots.append(vals[1:4])
        angles.append(vals[4 : 4 + 3 * k])
        if n_contact:
            contacts.append([v > 0.5 for v in vals[4 + 3 * k :]])
    return MotionSequence(
        name=name,
        fps=fps,
        root=np.array(roots),
        angles=np.array(angles),
        contacts=np.array(contacts, dtype=bool) if n_contact else None,
    )


def save_motion(path, motion: MotionSequence) -> None:
    Path(path).write_text(motion_to_text(motion))


def load_motion(path) -> MotionSequence:
    return text_to_motion(_read(path))


# ---------------------------------------------------------------------------
# estimator frames


def frames_to_text(frames: Sequence[EstimatorFrame], fps: float) -> str:
    n_rot = len(frames[0].theta_ref)
    n_ep = len(frames[0].s)
    lines = [f"# physmocap-frames v1 fps={_fmt(fps)} rot={n_rot} endpoints={n_ep}"]
    for f in frames:
        lines.append(
            _fmt_row([f.t, *f.theta_ref, f.v_par_mag, *f.v_perp, *f.s, *f.g_root])
        )
    return "\n".join(lines) + "\n"


def text_to_frames(text: str) -> tuple[list[EstimatorFrame], float]:
    head = _header(text, "frames")
    n_rot = int(head["rot"])
    n_ep = int(head["endpoints"])
    fps = float(head["fps"])
    frames = []
    want = 1 + n_rot + 1 + 3 + n_ep + 3
    for ln, line in _data_lines(text):
        vals = [float(v) for v in line.split()]
        if len(vals) != want:
            raise FileFormatError(f"line {ln}: expected {want} columns, got {len(vals)}")
        i = 1 + n_rot
        frames.append(
            EstimatorFrame(
                t=vals[0],
                theta_ref=np.array(vals[1:i]),
                v_par_mag=vals[i],
                v_perp=np.array(vals[i + 1 : i + 4]),
                s=np.array(vals[i + 4 : i + 4 + n_ep]),
                g_root=np.array(vals[i + 4 + n_ep :]),
            )
        )
    return frames, fps


def save_frames(path, frames: Sequence[EstimatorFrame], fps: float) -> None:
    Path(path).write_text(frames_to_text(frames, fps))


def load_frames(path) -> tuple[list[EstimatorFrame], float]:
    return text_to_frames(_read(path))


# ---------------------------------------------------------------------------
# IMU logs


def imu_log_to_text(log: ImuLog) -> str:
    lines = [f"# physmocap-imulog v1 sensors={log.n_sensors}"]
    for t in range(len(log.t)):
        for s in range(log.n_sensors):
            lines.append(
                _fmt_row([log.t[t], s, *log.acc[t, s], *log.gyro[t, s], *log.rot[t, s].reshape(-1)])
            )
    return "\n".join(lines) + "\n"


def text_to_imu_log(text: str) -> ImuLog:
    head = _header(text, "imulog")
    S = int(head["sensors"])
    rows: dict[float, dict[int, tuple]] = {}
    order: list[float] = []
    for ln, line in _data_lines(text):
        vals = [float(v) for v in line.split()]
        if len(vals) != 17:
            raise FileFormatError(f"line {ln}: expected 17 columns, got {len(vals)}")
        t, s = vals[0], int(vals[1])
        if t not in rows:
            rows[t] = {}
            order.append(t)
        rows[t][s] = (vals[2:5], vals[5:8], vals[8:17])
    T = len(order)
    acc = np.zeros((T, S, 3))
    gyro = np.zeros((T, S, 3))
    rot = np.zeros((T, S, 3, 3))
    for ti, t in enumerate(order):
        if len(rows[t]) != S:
            raise FileFormatError(f"timestamp {t}: expected {S} sensor rows")
        for s, (a, w, r) in rows[t].items():
            acc[ti, s] = a
            gyro[ti, s] = w
            rot[ti, s] = np.array(r).reshape(3, 3)
    return ImuLog(t=np.array(order), acc=acc, gyro=gyro, rot=rot)


def save_imu_log(path, log: ImuLog) -> None:
    Path(path).write_text(imu_log_to_text(log))


def load_imu_log(path) -> ImuLog:
    return text_to_imu_log(_read(path))


# ---------------------------------------------------------------------------
# tracking output records


_STATUS_CODE = {"free": 0.0, "potential": 1.0, "contact": 2.0}
_CODE_STATUS = {v: k for k, v in _STATUS_CODE.items()}


def records_to_text(records, fps: float, n_dof: int, n_ep: int) -> str:
    lines = [
        f"# physmocap-track v1 fps={_fmt(fps)} dof={n_dof} endpoints={n_ep}",
        "# columns: t q[dof] qdot[dof] tau_root[6] e_norm flag then per endpoint: status surface fx fy fz",
    ]
    for r in records:
        row = [r.t, *r.q, *r.qdot, *r.tau_root, r.e_norm, 1.0 if r.flagged else 0.0]
        for c in r.contacts:
            row += [_STATUS_CODE[c.status], c.surface_height, *c.force]
        lines.append(_fmt_row(row))
    return "\n".join(lines) + "\n"


def text_to_records(text: str):
    from .pipeline import ContactSnapshot, FrameRecord

    head = _header(text, "track")
    n_dof = int(head["dof"])
    n_ep = int(head["endpoints"])
    fps = float(head["fps"])
    want = 1 + 2 * n_dof + 6 + 1 + 1 + 5 * n_ep
    records = []
    for ln, line in _data_lines(text):
        vals = [float(v) for v in line.split()]
        if len(vals) != want:
            raise FileFormatError(f"line {ln}: expected {want} columns, got {len(vals)}")
        i = 1 + n_dof
        j = i + n_dof
        contacts = []
        base = j + 6 + 2
        for e in range(n_ep):
            c = vals[base + 5 * e : base + 5 * e + 5]
            contacts.append(
                ContactSnapshot(status=_CODE_STATUS[c[0]], surface_height=c[1], force=np.array(c[2:5]))
            )
        records.append(
            FrameRecord(
                t=vals[0],
                q=np.array(vals[1:i]),
                qdot=np.array(vals[i:j]),
                tau_root=np.array(vals[j : j + 6]),
                e_norm=vals[j + 6],
                flagged=vals[j + 7] > 0.5,
                contacts=contacts,
            )
        )
    return records, fps


def save_records(path, records, fps: float, n_dof: int, n_ep: int) -> None:
    Path(path).write_text(records_to_text(records, fps, n_dof, n_ep))


def load_records(path):
    return text_to_records(_read(path))


def records_to_motion(records, fps: float, n_joints: int, name: str = "tracked") -> MotionSequence:
    root = np.array([r.q[0:3] for r in records])
    angles = np.array([r.q[3 : 3 + 3 * n_joints] for r in records])
    return MotionSequence(name=name, fps=fps, root=root, angles=angles)


# ---------------------------------------------------------------------------
# calibration results


def calibration_to_text(result: CalibrationResult) -> str:
    lines = ["# physmocap-calibration v1"]

    def mat(label: str, M: np.ndarray):
        lines.append(label)
        for row in M:
            lines.append("  " + _fmt_row(row))

    mat("R_IM", result.R_IM)
    for i, name in enumerate(SENSOR_NAMES[: len(result.R_SB)]):
        mat(f"heading {name}", result.headings[i])
        mat(f"R_SB {name}", result.R_SB[i])
    lines.append("# diagnostics")
    for i, name in enumerate(SENSOR_NAMES[: len(result.R_SB)]):
        lines.append(
            f"# {name}: step={_fmt_row(result.step_displacements[i])} "
            f"residual_v={_fmt(result.residual_velocity[i])} "
            f"pose_return_deg={_fmt(result.pose_return_deg[i])}"
        )
    lines.append(f"# pose_return_ok={result.pose_return_ok}")
    return "\n".join(lines) + "\n"


def save_calibration(path, result: CalibrationResult) -> None:
    Path(path).write_text(calibration_to_text(result))


# ---------------------------------------------------------------------------
# configuration


def load_config(path) -> dict:
    try:
        data = yaml.safe_load(_read(path))
    except yaml.YAMLError as exc:
        raise FileFormatError(f"bad config: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise FileFormatError("config root must be a mapping")
    return data
