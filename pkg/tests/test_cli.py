"""CLI contract tests: exit codes, outputs, determinism."""

import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from seqvo import imgio, se3, synth, trajio
from seqvo.cli import main
from seqvo.flowcore import FlowField, save_flo

GENTLE = {"rotation": 0.004, "scale": 1.0, "translation": [0.4, 0.2]}


def write_spec(path, **overrides):
    obj = {
        "width": 64, "height": 48, "frames": 6,
        "motion": GENTLE, "disparity": 3.0, "seed": 7,
        "path": {"kind": "line", "speed": 1.5, "frame_rate": 10.0},
        "flow_direction": "source",
    }
    obj.update(overrides)
    path.write_text(json.dumps(obj))
    return path


def dir_digest(root):
    digest = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        digest.update(str(path.relative_to(root)).encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


@pytest.fixture(scope="module")
def seq_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cliseq")
    spec = write_spec(root / "spec.json")
    assert main(["synth", str(spec), str(root / "seq")]) == 0
    return root / "seq"


class TestConsistencyCommand:
    def test_clean_sequence_near_zero(self, seq_dir, tmp_path, capsys):
        assert main(["consistency", str(seq_dir / "manifest.json"),
                     "--out", str(tmp_path / "rep")]) == 0
        out = capsys.readouterr().out
        assert "e_tmp" in out and "e_st" in out
        obj = json.loads((tmp_path / "rep" / "consistency.json").read_text())
        assert obj["aggregates"]["e_tmp"]["mean"] <= 1e-6
        assert obj["aggregates"]["e_st"]["mean"] <= 1e-6

    def test_byte_identical_across_runs_and_threads(self, seq_dir, tmp_path):
        for name, threads in (("a", "1"), ("b", "1"), ("c", "8")):
            assert main(["consistency", str(seq_dir / "manifest.json"),
                         "--out", str(tmp_path / name), "--threads", threads]) == 0
        ref = (tmp_path / "a" / "consistency.csv").read_bytes()
        assert (tmp_path / "b" / "consistency.csv").read_bytes() == ref
        assert (tmp_path / "c" / "consistency.csv").read_bytes() == ref
        ref_json = (tmp_path / "a" / "consistency.json").read_bytes()
        assert (tmp_path / "c" / "consistency.json").read_bytes() == ref_json

    def test_two_frame_sequence_exits_1(self, seq_dir, tmp_path, capsys):
        man = json.loads((seq_dir / "manifest.json").read_text())
        man["frames"] = man["frames"][:2]
        short = seq_dir / "short.json"
        short.write_text(json.dumps(man))
        code = main(["consistency", str(short), "--out", str(tmp_path / "r"),
                     "--metrics", "tmp"])
        assert code == 1
        assert "too short" in capsys.readouterr().err

    def test_missing_flow_file_exits_2(self, seq_dir, tmp_path, capsys):
        man = json.loads((seq_dir / "manifest.json").read_text())
        man["frames"][0]["flows"]["skip_left"] = "flows/gone.flo"
        broken = seq_dir / "broken.json"
        broken.write_text(json.dumps(man))
        code = main(["consistency", str(broken), "--out", str(tmp_path / "r")])
        assert code == 2
        assert "gone.flo" in capsys.readouterr().err

    def test_malformed_manifest_exits_1(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert main(["consistency", str(bad), "--out", str(tmp_path / "r")]) == 1

    def test_unknown_flag_exits_1(self, seq_dir, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["consistency", str(seq_dir / "manifest.json"),
                  "--out", str(tmp_path / "r"), "--bogus"])
        assert exc.value.code == 1

    def test_format_flag_selects_outputs(self, seq_dir, tmp_path):
        assert main(["consistency", str(seq_dir / "manifest.json"),
                     "--out", str(tmp_path / "csvonly"), "--format", "csv"]) == 0
        assert (tmp_path / "csvonly" / "consistency.csv").exists()
        assert not (tmp_path / "csvonly" / "consistency.json").exists()
        assert main(["consistency", str(seq_dir / "manifest.json"),
                     "--out", str(tmp_path / "jsononly"), "--format", "json"]) == 0
        assert not (tmp_path / "jsononly" / "consistency.csv").exists()
        assert (tmp_path / "jsononly" / "consistency.json").exists()

    def test_aggregate_flag_switches_stdout(self, seq_dir, tmp_path, capsys):
        assert main(["consistency", str(seq_dir / "manifest.json"),
                     "--out", str(tmp_path / "p"), "--aggregate", "pooled"]) == 0
        assert "pooled_mean=" in capsys.readouterr().out

    def test_metric_subset(self, seq_dir, tmp_path):
        assert main(["consistency", str(seq_dir / "manifest.json"),
                     "--out", str(tmp_path / "tmponly"), "--metrics", "tmp"]) == 0
        obj = json.loads((tmp_path / "tmponly" / "consistency.json").read_text())
        assert obj["records"][0]["e_st_mean"] is None
        assert "e_st" not in obj["aggregates"]


class TestVoevalCommand:
    @pytest.fixture()
    def line_files(self, tmp_path):
        times = np.arange(300.0)
        poses = tuple(se3.Pose(np.array([1.0, 0, 0, 0]), np.array([float(k), 0, 0]))
                      for k in range(300))
        gt = se3.Trajectory(times, poses)
        trajio.save_tum(tmp_path / "gt.tum", gt)
        est = synth.perturb_trajectory(gt, scale_drift=0.01)
        trajio.save_tum(tmp_path / "est.tum", est)
        return tmp_path

    def test_self_evaluation_zero_row(self, line_files, capsys):
        out = line_files / "vo"
        code = main(["voeval", str(line_files / "gt.tum"), str(line_files / "gt.tum"),
                     "--out", str(out), "--lengths", "50,100", "--no-align"])
        assert code == 0
        rows = json.loads((out / "metrics.json").read_text())["rows"]
        assert rows[0]["t_rel"] == 0.0
        assert rows[0]["r_rel"] == 0.0
        assert rows[0]["t_abs"] == 0.0

    def test_median_of_five_copies(self, line_files):
        out = line_files / "vo5"
        est = str(line_files / "est.tum")
        code = main(["voeval", str(line_files / "gt.tum")] + [est] * 5
                    + ["--out", str(out), "--lengths", "50", "--no-align"])
        assert code == 0
        rows = json.loads((out / "metrics.json").read_text())["rows"]
        assert rows[-1]["estimate"] == "median"
        assert rows[-1]["t_rel"] == rows[0]["t_rel"]

    def test_drift_matches_closed_form(self, line_files):
        out = line_files / "vod"
        code = main(["voeval", str(line_files / "gt.tum"), str(line_files / "est.tum"),
                     "--out", str(out), "--lengths", "50,100", "--no-align"])
        assert code == 0
        rows = json.loads((out / "metrics.json").read_text())["rows"]
        assert rows[0]["t_rel"] == pytest.approx(1.0, abs=1e-9)
        assert (out / "est000_path.txt").exists()
        assert (out / "est000_trel_curve.txt").exists()

    def test_association_failure_exits_2_naming_file(self, line_files, capsys):
        times = np.arange(300.0) + 1000.0
        poses = tuple(se3.Pose(np.array([1.0, 0, 0, 0]), np.array([float(k), 0, 0]))
                      for k in range(300))
        trajio.save_tum(line_files / "far.tum", se3.Trajectory(times, poses))
        code = main(["voeval", str(line_files / "gt.tum"), str(line_files / "far.tum"),
                     "--out", str(line_files / "vof"), "--lengths", "50"])
        assert code == 2
        assert "far.tum" in capsys.readouterr().err


class TestInterpCommand:
    @pytest.fixture()
    def gps_files(self, tmp_path):
        rows = ["timestamp,northing,easting,down,roll,pitch,yaw"]
        for k in range(10):
            rows.append(f"{1_000_000 * k},{2.0 * k},0.0,0.0,0.0,0.0,{0.1 * k}")
        (tmp_path / "gps.csv").write_text("\n".join(rows) + "\n")
        return tmp_path

    def test_exact_sample_times(self, gps_files):
        (gps_files / "stamps.txt").write_text("2000000\n5000000\n")
        code = main(["interp", str(gps_files / "gps.csv"),
                     str(gps_files / "stamps.txt"), "--out", str(gps_files / "o.tum")])
        assert code == 0
        traj = trajio.load_trajectory(gps_files / "o.tum", "tum")
        assert np.allclose(traj.poses[0].translation, [4.0, 0.0, 0.0], atol=1e-12)
        assert se3.rotation_angle(traj.poses[1]) == pytest.approx(0.5, abs=1e-12)

    def test_midpoints_interpolated(self, gps_files):
        (gps_files / "stamps.txt").write_text("1500000\n")
        assert main(["interp", str(gps_files / "gps.csv"),
                     str(gps_files / "stamps.txt"),
                     "--out", str(gps_files / "m.tum")]) == 0
        traj = trajio.load_trajectory(gps_files / "m.tum", "tum")
        assert np.allclose(traj.poses[0].translation, [3.0, 0.0, 0.0], atol=1e-12)
        assert se3.rotation_angle(traj.poses[0]) == pytest.approx(0.15, abs=1e-12)

    def test_out_of_range_dropped_then_empty_exits_1(self, gps_files, capsys):
        (gps_files / "stamps.txt").write_text("99000000\n")
        code = main(["interp", str(gps_files / "gps.csv"),
                     str(gps_files / "stamps.txt"), "--out", str(gps_files / "x.tum")])
        assert code == 1
        assert "no requested timestamp" in capsys.readouterr().err

    def test_random_times_match_library(self, gps_files, rng):
        stamps = sorted(rng.uniform(0, 9_000_000, 5))
        (gps_files / "stamps.txt").write_text(
            "\n".join(str(int(s)) for s in stamps) + "\n")
        assert main(["interp", str(gps_files / "gps.csv"),
                     str(gps_files / "stamps.txt"),
                     "--out", str(gps_files / "r.tum")]) == 0
        got = trajio.load_trajectory(gps_files / "r.tum", "tum")
        gps = trajio.load_trajectory(gps_files / "gps.csv", "gps_ins")
        for k, s in enumerate(stamps):
            want = se3.interpolate(gps, int(s) * 1e-6)
            assert np.allclose(got.poses[k].translation, want.translation, atol=1e-9)


class TestLossCommand:
    def test_identical_inputs_zero_total(self, tmp_path, rng):
        from seqvo.flowcore import Image

        data = rng.random((20, 24))
        imgio.save_image(tmp_path / "a.png", Image(data))
        save_flo(tmp_path / "zero.flo", FlowField.zeros(20, 24))
        a = str(tmp_path / "a.png")
        code = main(["loss", "--cycle-orig", a, "--cycle-recon", a,
                     "--prev", a, "--curr", a, "--flow-tmp", str(tmp_path / "zero.flo"),
                     "--right", a, "--left", a, "--flow-stereo", str(tmp_path / "zero.flo"),
                     "--out", str(tmp_path / "loss.json")])
        assert code == 0
        obj = json.loads((tmp_path / "loss.json").read_text())
        assert obj["l_cy"] == pytest.approx(0.0, abs=1e-12)
        assert obj["l_tmp"] == pytest.approx(0.0, abs=1e-12)
        assert obj["l_st"] == pytest.approx(0.0, abs=1e-12)
        assert obj["l_adv"] is None
        assert obj["total"] == pytest.approx(0.0, abs=1e-10)
        assert obj["weights"]["lambda_cy"] == 10.0

    def test_score_maps_and_weight_arithmetic(self, tmp_path):
        np.savetxt(tmp_path / "fake.txt", np.full((3, 4), 0.5))
        np.savetxt(tmp_path / "real.txt", np.full((3, 4), 0.75))
        code = main(["loss", "--scores-fake", str(tmp_path / "fake.txt"),
                     "--scores-real", str(tmp_path / "real.txt"),
                     "--out", str(tmp_path / "adv.json")])
        assert code == 0
        obj = json.loads((tmp_path / "adv.json").read_text())
        assert obj["l_gen"] == 0.25
        assert obj["l_disc"] == 0.3125
        assert obj["total"] == obj["l_adv"] * 1.0

    def test_flicker_raises_temporal_loss(self, tmp_path):
        from seqvo.cli import write_sequence

        motion = synth.AffineMotion(translation=(0.3, 0.1))
        base = dict(width=48, height=36, frames=3, motion=motion, seed=4,
                    flow_direction="target")
        clean_dir, flick_dir = tmp_path / "clean", tmp_path / "flick"
        write_sequence(synth.gen_sequence(synth.SynthSpec(**base)), clean_dir)
        write_sequence(synth.gen_sequence(
            synth.SynthSpec(**base, flicker=(1.0, 0.5, 1.0))), flick_dir)

        def tmp_loss(d, out):
            assert main(["loss", "--prev", str(d / "left_0000.png"),
                         "--curr", str(d / "left_0001.png"),
                         "--flow-tmp", str(d / "flows" / "tmp_left_0000.flo"),
                         "--flow-direction", "target", "--out", str(out)]) == 0
            return json.loads(out.read_text())["l_tmp"]

        clean = tmp_loss(clean_dir, tmp_path / "c.json")
        flick = tmp_loss(flick_dir, tmp_path / "f.json")
        assert flick > 5 * clean

    def test_no_computable_term_exits_1(self, capsys):
        assert main(["loss"]) == 1
        assert "no loss term computable" in capsys.readouterr().err

    def test_partial_group_exits_1(self, tmp_path, capsys):
        assert main(["loss", "--prev", "x.png"]) == 1
        assert "temporal loss needs" in capsys.readouterr().err


class TestSynthAndWarp:
    def test_synth_deterministic_checksums(self, tmp_path):
        spec = write_spec(tmp_path / "spec.json")
        assert main(["synth", str(spec), str(tmp_path / "s1")]) == 0
        assert main(["synth", str(spec), str(tmp_path / "s2")]) == 0
        assert dir_digest(tmp_path / "s1") == dir_digest(tmp_path / "s2")

    def test_warp_zero_flow_identity(self, seq_dir, tmp_path):
        save_flo(tmp_path / "zero.flo", FlowField.zeros(48, 64))
        src = seq_dir / "left_0000.png"
        out = tmp_path / "w.png"
        assert main(["warp", str(src), str(tmp_path / "zero.flo"), str(out)]) == 0
        a = imgio.load_image(src)
        b = imgio.load_image(out)
        assert np.array_equal(a.data, b.data)
        mask = imgio.load_image(tmp_path / "w_mask.png")
        assert (mask.data == 1.0).all()

    def test_warp_missing_flow_exits_2(self, seq_dir, tmp_path):
        assert main(["warp", str(seq_dir / "left_0000.png"),
                     str(tmp_path / "none.flo"), str(tmp_path / "o.png")]) == 2

    def test_console_script_entry(self):
        out = subprocess.run([sys.executable, "-m", "seqvo.cli", "--version"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert "seqvo" in out.stdout
