import json
import sys

import numpy as np
import pytest
from PIL import Image

from conftest import partition
from oracles import smooth_field
from s2inpaint import sph1
from s2inpaint.cli import main, parse_levels
from s2inpaint.signal import SphericalSignal


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def field(tmp_path):
    path = tmp_path / "field.sph1"
    sph1.write(path, SphericalSignal(4, smooth_field(partition(4).centers)))
    return path


def test_parse_levels():
    assert parse_levels("6..9") == [6, 7, 8, 9]
    assert parse_levels("3,5") == [3, 5]


def test_partition_info(capsys, tmp_path):
    code, out, _ = run(capsys, "partition-info", "--level", 3, "--export", tmp_path / "p.json")
    assert code == 0
    doc = json.loads(out)
    assert doc["patch_counts"] == [6, 24, 96, 384]
    assert doc["max_rel_deviation"] <= 1e-9
    assert doc["schema_version"]
    meta = json.loads((tmp_path / "p.json").read_text())
    assert meta["J"] == 3 and len(meta["splits"]) == 3


def test_ingest_and_render(capsys, tmp_path):
    rgb = np.zeros((32, 64, 3), np.uint8)
    rgb[..., 0] = 200
    rgb[16:, :, 1] = 100
    Image.fromarray(rgb).save(tmp_path / "pano.png")
    code, out, _ = run(
        capsys, "ingest", "--input", tmp_path / "pano.png", "--output", tmp_path / "s.sph1", "--level", 3
    )
    assert code == 0 and json.loads(out)["channels"] == 3
    sig = sph1.read_signal(tmp_path / "s.sph1")
    np.testing.assert_allclose(sig.values[0], 200.0)
    code, _, _ = run(capsys, "render", "--input", tmp_path / "s.sph1", "--output", tmp_path / "r.png")
    assert code == 0
    img = np.asarray(Image.open(tmp_path / "r.png"))
    assert img.shape == (32, 64, 3)
    assert np.all(img[..., 0] == 200)


def test_ingest_single_face_grayscale(capsys, tmp_path):
    Image.fromarray(np.full((8, 8), 50, np.uint8)).save(tmp_path / "sq.png")
    code, _, _ = run(
        capsys, "ingest", "--input", tmp_path / "sq.png", "--output", tmp_path / "s.sph1",
        "--level", 2, "--mode", "single-face", "--face", 4, "--grayscale",
    )
    assert code == 0
    sig = sph1.read_signal(tmp_path / "s.sph1")
    assert sig.channels == 1
    np.testing.assert_allclose(sig.values, 50.0)


def test_render_grayscale_colormap(capsys, field, tmp_path):
    assert run(capsys, "render", "--input", field, "--output", tmp_path / "c.png", "--width", 40)[0] == 0
    img = np.asarray(Image.open(tmp_path / "c.png"))
    assert img.shape == (20, 40, 3)
    assert len({tuple(p) for p in img.reshape(-1, 3)}) > 10
    run(capsys, "render", "--input", field, "--output", tmp_path / "g.png", "--colormap", "none")
    assert np.asarray(Image.open(tmp_path / "g.png")).ndim == 2


def test_transform_roundtrip(capsys, field, tmp_path):
    code, out, _ = run(capsys, "transform", "--input", field, "--output", tmp_path / "p.sph1", "--depth", 2)
    doc = json.loads(out)
    assert code == 0 and doc["roundtrip_ok"] and doc["depth"] == 2
    code, _, _ = run(capsys, "transform", "--inverse", "--input", tmp_path / "p.sph1", "--output", tmp_path / "b.sph1")
    assert code == 0
    a = sph1.read_signal(field).values
    b = sph1.read_signal(tmp_path / "b.sph1").values
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


def test_denoise_and_metrics(capsys, field, tmp_path):
    code, _, _ = run(capsys, "denoise", "--input", field, "--output", tmp_path / "d.sph1", "--sigma", 2.0)
    assert code == 0
    code, out, _ = run(capsys, "metrics", "--truth", field, "--test", tmp_path / "d.sph1")
    doc = json.loads(out)
    assert code == 0 and 20 < doc["psnr_db"] < 200 and 0.9 < doc["ssim"] <= 1
    code, out, _ = run(capsys, "metrics", "--truth", field, "--test", field)
    assert json.loads(out)["psnr_db"] == "inf"


def test_mask_command(capsys, tmp_path):
    code, out, _ = run(capsys, "mask", "--ratio", 0.5, "--seed", 7, "--level", 3, "--output", tmp_path / "m.sph1")
    doc = json.loads(out)
    m = sph1.read_mask(tmp_path / "m.sph1")
    assert code == 0 and doc["observed"] == m.observed_count and doc["seed"] == 7


def test_inpaint_ratio_zero(capsys, field, tmp_path):
    code, out, _ = run(
        capsys, "inpaint", "--input", field, "--output", tmp_path / "o.sph1", "--ratio", 0, "--png", tmp_path / "o.png"
    )
    doc = json.loads(out)
    assert code == 0
    assert doc["metrics"]["psnr_db"] == "inf"
    np.testing.assert_array_equal(sph1.read_signal(tmp_path / "o.sph1").values, sph1.read_signal(field).values)
    assert (tmp_path / "o.png").exists()
    for key in ("seed", "mask", "solver", "input_sha256", "output_sha256", "version", "numpy_version", "argv"):
        assert key in doc


def test_inpaint_with_mask_file_and_truth(capsys, field, tmp_path):
    run(capsys, "mask", "--ratio", 0.5, "--seed", 1, "--level", 4, "--output", tmp_path / "m.sph1")
    code, out, _ = run(
        capsys, "inpaint", "--input", field, "--mask", tmp_path / "m.sph1", "--truth", field,
        "--output", tmp_path / "o.sph1", "--report", tmp_path / "r.json",
    )
    assert code == 0 and out == ""
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["metrics"]["psnr_db"] > doc["metrics"]["mean_fill_psnr_db"]
    assert doc["mask"]["source"] == "file"


def test_inpaint_grid_sweep(capsys, field, tmp_path):
    code, out, _ = run(
        capsys, "inpaint", "--input", field, "--output", tmp_path / "o.sph1", "--ratio", 0.5,
        "--grid", "--workers", 2, "--max-iters", 30, "--denoiser", "identity",
    )
    assert code == 0
    grid = json.loads(out)["grid"]
    assert len(grid["rows"]) == 50
    assert "psnr_db" in grid["best"]


def test_config_precedence(capsys, field, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        f'seed = 5\nratio = 0.3\n[inpaint]\ninput = "{field}"\noutput = "{tmp_path / "o.sph1"}"\n'
        "max-iters = 3\nrel_tol = 0.0\n"
    )
    code, out, _ = run(capsys, "inpaint", "--config", cfg, "--seed", 9)
    doc = json.loads(out)
    assert code == 0
    assert doc["seed"] == 9  # flag beats file
    assert doc["mask"]["ratio"] == 0.3  # file beats default
    assert len(doc["solver"]["iterations"][0]) == 3


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[mask]\nratoi = 0.3\n")
    code, _, err = run(capsys, "mask", "--config", cfg, "--ratio", 0.1, "--level", 1, "--output", tmp_path / "m")
    assert code == 1 and json.loads(err)["error"] == "CLIError"


def test_missing_file_error_json(capsys, tmp_path):
    code, out, err = run(capsys, "render", "--input", tmp_path / "nope.sph1", "--output", tmp_path / "x.png")
    assert code == 1 and out == ""
    doc = json.loads(err)
    assert doc["error"] == "FileNotFoundError"


def test_malformed_file_error_json(capsys, tmp_path):
    (tmp_path / "bad.sph1").write_bytes(b"garbage!!garbage")
    code, _, err = run(capsys, "transform", "--input", tmp_path / "bad.sph1", "--output", tmp_path / "o")
    assert code == 1 and json.loads(err)["error"] == "FormatError"


def test_divergence_error_json(capsys, field, tmp_path):
    code, _, err = run(
        capsys, "inpaint", "--input", field, "--output", tmp_path / "o.sph1", "--beta1", 0.1,
        "--denoiser", "identity", "--max-iters", 100000, "--rel-tol", 0,
    )
    doc = json.loads(err)
    assert code == 1 and doc["error"] == "DivergenceError" and doc["iteration"] > 1


def test_external_denoiser_failure_json(capsys, field, tmp_path):
    script = tmp_path / "fail.py"
    script.write_text("import sys\nsys.stderr.write('boom')\nsys.exit(4)\n")
    code, _, err = run(
        capsys, "denoise", "--input", field, "--output", tmp_path / "o.sph1", "--sigma", 1,
        "--denoiser", "external", "--command", f"{sys.executable} {script} {{input}} {{sigma}} {{output}}",
    )
    doc = json.loads(err)
    assert code == 1 and doc["returncode"] == 4 and doc["stderr"] == "boom"


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--levels", "3..5", "--repeats", 2)
    doc = json.loads(out)
    assert code == 0
    assert [r["level"] for r in doc["rows"]] == [3, 4, 5]
    assert len(doc["ratios"]) == 2
