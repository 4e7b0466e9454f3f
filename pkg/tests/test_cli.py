import numpy as np
import pytest

from physmocap.cli import EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from physmocap.io import load_records, load_motion


def run(argv):
    return main(argv)


class TestSynthCommand:
    def test_writes_motion_and_frames(self, tmp_path):
        mot = tmp_path / "walk.mot"
        est = tmp_path / "walk.est"
        code = run(["synth", "--scenario", "walk", "--motion", str(mot), "--frames", str(est)])
        assert code == EXIT_OK
        assert mot.exists() and est.exists()
        motion = load_motion(mot)
        assert motion.name == "walk"

    def test_requires_an_output(self):
        assert run(["synth", "--scenario", "stand"]) == EXIT_USAGE

    def test_unknown_scenario_is_io_error(self, tmp_path):
        code = run(
            ["synth", "--scenario", "moonwalk", "--motion", str(tmp_path / "x.mot")]
        )
        assert code == EXIT_IO

    def test_calib_step_log(self, tmp_path):
        imu = tmp_path / "step.imu"
        code = run(["synth", "--scenario", "calib_step", "--imu", str(imu)])
        assert code == EXIT_OK
        assert imu.exists()


@pytest.fixture(scope="module")
def stand_frames(tmp_path_factory):
    d = tmp_path_factory.mktemp("track")
    est = d / "stand.est"
    assert (
        run(
            [
                "synth", "--scenario", "stand",
                "--motion", str(d / "stand.mot"), "--frames", str(est),
            ]
        )
        == EXIT_OK
    )
    return est


class TestTrackCommand:
    def test_track_and_determinism(self, stand_frames, tmp_path, capsys):
        out1 = tmp_path / "a.trk"
        out2 = tmp_path / "b.trk"
        assert run(["track", "--input", str(stand_frames), "--output", str(out1)]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "per-frame wall time" in printed
        assert run(["track", "--input", str(stand_frames), "--output", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        records, fps = load_records(out1)
        assert fps == 60.0
        assert len(records[0].q) == 75

    def test_missing_input_is_io_error(self, tmp_path):
        code = run(["track", "--input", str(tmp_path / "none.est"), "--output", str(tmp_path / "o")])
        assert code == EXIT_IO

    def test_config_file(self, stand_frames, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("skeleton: humanoid\ncontact:\n  e_th: 400\n")
        out = tmp_path / "c.trk"
        code = run(
            ["track", "--config", str(cfg), "--input", str(stand_frames), "--output", str(out)]
        )
        assert code == EXIT_OK

    def test_usage_error(self):
        assert run(["track", "--input", "x"]) == EXIT_USAGE


class TestCalibrateCommand:
    def test_clean_round_trip_and_determinism(self, tmp_path):
        imu = tmp_path / "step.imu"
        out = tmp_path / "cal.txt"
        out2 = tmp_path / "cal2.txt"
        assert run(["synth", "--scenario", "calib_step", "--imu", str(imu)]) == EXIT_OK
        assert run(["calibrate", "--input", str(imu), "--output", str(out)]) == EXIT_OK
        text = out.read_text()
        assert "R_IM" in text and "R_SB pelvis" in text
        assert run(["calibrate", "--input", str(imu), "--output", str(out2)]) == EXIT_OK
        assert out.read_bytes() == out2.read_bytes()

    def test_truncated_log_is_io_error(self, tmp_path):
        imu = tmp_path / "step.imu"
        assert run(["synth", "--scenario", "calib_step", "--imu", str(imu)]) == EXIT_OK
        lines = imu.read_text().splitlines()
        imu.write_text("\n".join(lines[: len(lines) // 2]) + "\n")
        code = run(["calibrate", "--input", str(imu), "--output", str(tmp_path / "c")])
        assert code == EXIT_IO

    def test_pose_return_failure_is_numerical_exit(self, tmp_path):
        # Subject "ends" the step facing 20 degrees off: pose-return
        # verification must refuse the calibration.
        from physmocap.io import load_imu_log, save_imu_log
        from physmocap.rotations import rotation_about_axis

        imu = tmp_path / "step.imu"
        assert run(["synth", "--scenario", "calib_step", "--imu", str(imu)]) == EXIT_OK
        log = load_imu_log(imu)
        yaw = rotation_about_axis(np.array([0.0, 1.0, 0.0]), np.radians(20.0))
        cut = int(len(log.t) * 0.75)  # inside the second stand
        log.rot[cut:] = np.einsum("ab,tsbc->tsac", yaw, log.rot[cut:])
        save_imu_log(imu, log)
        code = run(["calibrate", "--input", str(imu), "--output", str(tmp_path / "c")])
        assert code == EXIT_NUMERICAL


class TestEvalCommand:
    def test_self_eval_zero(self, tmp_path, capsys):
        mot = tmp_path / "m.mot"
        assert run(["synth", "--scenario", "stand", "--motion", str(mot)]) == EXIT_OK
        report = tmp_path / "report.txt"
        csv = tmp_path / "drift.csv"
        code = run(
            [
                "eval", "--pred", str(mot), "--truth", str(mot),
                "--report", str(report), "--csv", str(csv),
            ]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "Pos error" in out
        assert report.exists() and csv.read_text().startswith("distance_m")

    def test_track_output_accepted_as_pred(self, tmp_path):
        mot = tmp_path / "m.mot"
        est = tmp_path / "m.est"
        trk = tmp_path / "m.trk"
        assert run(["synth", "--scenario", "stand", "--motion", str(mot), "--frames", str(est)]) == EXIT_OK
        assert run(["track", "--input", str(est), "--output", str(trk)]) == EXIT_OK
        assert run(["eval", "--pred", str(trk), "--truth", str(mot)]) == EXIT_OK

    def test_missing_file_io_error(self, tmp_path):
        code = run(["eval", "--pred", str(tmp_path / "a"), "--truth", str(tmp_path / "b")])
        assert code == EXIT_IO
