"""
Tests for the planeloc command line: dispatch, stdout payloads and exit codes.
"""
import json

import numpy as np
import pytest

from services.camera import DepthMap
from services.storage import save_depth
from worker.main import EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO, EXIT_OK, run


@pytest.fixture
def spec_file(tmp_path, small_scene_spec):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(small_scene_spec.model_dump(mode="json")), encoding="utf-8")
    return path


@pytest.fixture
def intrinsics_file(tmp_path, intrinsics):
    path = tmp_path / "intrinsics.json"
    path.write_text(json.dumps(intrinsics.to_dict()), encoding="utf-8")
    return path


# =====================
# Success Paths
# =====================

class TestCommands:
    """Tests for each subcommand's success path."""

    def test_synth(self, spec_file, tmp_path, capsys):
        """Test synth writes a scene and prints its manifest."""
        assert run(["synth", str(spec_file), "--out", str(tmp_path / "scene")]) == EXIT_OK
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["queries"] == ["queries/0000", "queries/0001"]
        assert (tmp_path / "scene" / "manifest.json").exists()

    def test_synth_rerun_identical(self, spec_file, tmp_path):
        """Test two synth runs with one seed write byte-identical scenes."""
        run(["synth", str(spec_file), "--out", str(tmp_path / "a")])
        run(["synth", str(spec_file), "--out", str(tmp_path / "b")])
        for name in ("map.json", "manifest.json", "queries/0001/record.json", "queries/0001/depth.dpth"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_override(self, spec_file, tmp_path, capsys):
        """Test --seed replaces the scene spec's rng_seed."""
        run(["synth", str(spec_file), "--seed", "11", "--out", str(tmp_path / "scene")])
        assert json.loads(capsys.readouterr().out)["seed"] == 11

    def test_fit_planes(self, tmp_path, intrinsics, intrinsics_file, capsys):
        """Test fit-planes finds the single wall and writes its raster."""
        depth = save_depth(tmp_path / "wall.dpth", DepthMap(np.full((intrinsics.height, intrinsics.width), 2.0)))
        code = run(["fit-planes", str(depth), str(intrinsics_file), "--out", str(tmp_path / "planes")])
        assert code == EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert len(document["primitives"]) == 1
        assert document["primitives"][0]["offset"] == pytest.approx(2.0)
        assert (tmp_path / "planes" / "primitives.json").exists()
        assert (tmp_path / "planes" / "masks.pgm").exists()

    def test_relocalize_and_evaluate(self, scene_dir, tmp_path, capsys):
        """Test relocalize output evaluates to the same recalls it printed."""
        out = tmp_path / "run"
        assert run(["relocalize", str(scene_dir), "--oracle-labels", "--out", str(out)]) == EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        code = run([
            "evaluate",
            str(out / "estimates.json"),
            str(out / "ground_truth.json"),
            "--matches",
            str(out / "matches.json"),
            "--out",
            str(tmp_path / "eval"),
        ])
        assert code == EXIT_OK
        evaluated = json.loads(capsys.readouterr().out)
        assert evaluated["pose"] == printed["pose"]
        assert evaluated["matching"] == printed["matching"]

    def test_relocalize_rerun_identical(self, scene_dir, tmp_path):
        """Test repeated relocalize runs write byte-identical outputs."""
        for name in ("a", "b"):
            run(["relocalize", str(scene_dir), "--synthetic-embeddings", "--refine", "--out", str(tmp_path / name)])
        for name in ("estimates.json", "matches.json", "metrics.json", "pose_errors.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# =====================
# Exit Codes
# =====================

class TestExitCodes:
    """Tests mapping failures to exit codes."""

    def test_invalid_spec_json(self, tmp_path):
        """Test a malformed spec file is a configuration error."""
        spec = tmp_path / "spec.json"
        spec.write_text("{ not json", encoding="utf-8")
        assert run(["synth", str(spec), "--out", str(tmp_path / "scene")]) == EXIT_CONFIG

    def test_unknown_spec_field(self, tmp_path):
        """Test an unknown SceneSpec field is a configuration error."""
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"rooms": 3}), encoding="utf-8")
        assert run(["synth", str(spec), "--out", str(tmp_path / "scene")]) == EXIT_CONFIG

    def test_missing_matcher_inputs(self, scene_dir, tmp_path):
        """Test relocalize without weights or a matching mode is a configuration error."""
        assert run(["relocalize", str(scene_dir), "--out", str(tmp_path / "run")]) == EXIT_CONFIG

    def test_missing_scene_dir(self, tmp_path):
        """Test a scene directory that does not exist is a configuration error."""
        code = run(["relocalize", str(tmp_path / "nowhere"), "--oracle-labels", "--out", str(tmp_path / "run")])
        assert code == EXIT_CONFIG

    def test_sampling_exhausted(self, small_scene_spec, tmp_path):
        """Test an unsatisfiable scene exits as a degeneracy."""
        spec = tmp_path / "spec.json"
        payload = small_scene_spec.model_dump(mode="json") | {"min_visible": 40, "max_rejections": 5}
        spec.write_text(json.dumps(payload), encoding="utf-8")
        assert run(["synth", str(spec), "--out", str(tmp_path / "scene")]) == EXIT_DEGENERATE

    def test_no_plane_found(self, tmp_path, intrinsics, intrinsics_file):
        """Test fit-planes on an empty depth map exits as a degeneracy."""
        depth = save_depth(tmp_path / "empty.dpth", DepthMap.empty(intrinsics.width, intrinsics.height))
        assert run(["fit-planes", str(depth), str(intrinsics_file), "--out", str(tmp_path / "p")]) == EXIT_DEGENERATE

    def test_depth_size_mismatch(self, tmp_path, intrinsics_file):
        """Test a depth map that disagrees with the intrinsics is an input error."""
        depth = save_depth(tmp_path / "small.dpth", DepthMap(np.ones((4, 4))))
        assert run(["fit-planes", str(depth), str(intrinsics_file), "--out", str(tmp_path / "p")]) == EXIT_IO

    def test_bad_depth_file(self, tmp_path, intrinsics_file):
        """Test a corrupt depth file is an input error."""
        depth = tmp_path / "bad.dpth"
        depth.write_bytes(b"JUNK" + bytes(12))
        assert run(["fit-planes", str(depth), str(intrinsics_file), "--out", str(tmp_path / "p")]) == EXIT_IO

    def test_missing_estimates(self, tmp_path):
        """Test evaluate on missing files is an I/O error."""
        code = run(["evaluate", str(tmp_path / "e.json"), str(tmp_path / "g.json"), "--out", str(tmp_path / "r")])
        assert code == EXIT_IO

    def test_mismatched_files(self, tmp_path):
        """Test evaluate on files covering different queries is an input error."""
        pose = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        (tmp_path / "e.json").write_text(
            json.dumps({"format_version": 1, "estimates": [{"query_index": 0, "pose": pose}]}), encoding="utf-8"
        )
        (tmp_path / "g.json").write_text(json.dumps({"format_version": 1, "poses": []}), encoding="utf-8")
        code = run(["evaluate", str(tmp_path / "e.json"), str(tmp_path / "g.json"), "--out", str(tmp_path / "r")])
        assert code == EXIT_IO

    @pytest.mark.parametrize(
        "entry",
        [
            {"ious": []},
            {"ious": [[0.9]], "predictions": [{"query_idx": 0, "map_idx": 3, "score": 0.8}]},
        ],
        ids=["ious_short", "index_out_of_range"],
    )
    def test_inconsistent_matches(self, tmp_path, entry):
        """Test a matches file disagreeing with its own label counts is an input error."""
        pose = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        (tmp_path / "e.json").write_text(
            json.dumps({"format_version": 1, "estimates": [{"query_index": 0, "pose": pose}]}), encoding="utf-8"
        )
        (tmp_path / "g.json").write_text(
            json.dumps({"format_version": 1, "poses": [{"query_index": 0, "pose": pose}]}), encoding="utf-8"
        )
        labels = {"matches": [[0, 0]], "unmatched_query": [], "unmatched_map": [], "query_count": 1, "map_count": 1}
        query = {"query_index": 0, "labels": labels} | entry
        (tmp_path / "m.json").write_text(json.dumps({"format_version": 1, "queries": [query]}), encoding="utf-8")
        code = run([
            "evaluate",
            str(tmp_path / "e.json"),
            str(tmp_path / "g.json"),
            "--matches",
            str(tmp_path / "m.json"),
            "--out",
            str(tmp_path / "r"),
        ])
        assert code == EXIT_IO

    def test_unknown_command(self):
        """Test argparse rejects an unknown subcommand with status 2."""
        with pytest.raises(SystemExit) as exc_info:
            run(["teleport"])
        assert exc_info.value.code == 2
