import json
import os
import subprocess

import numpy as np
import pytest

import vqe


def test_psnr_known_value():
    a = np.zeros((8, 8), np.float32)
    b = np.full((8, 8), 0.1, np.float32)
    assert vqe.psnr(a, b) == pytest.approx(20.0, abs=1e-5)
    assert vqe.psnr(a, a) == float("inf")


def test_ssim_agrees_with_scikit_image():
    metrics = pytest.importorskip("skimage.metrics")
    rng = np.random.default_rng(0)
    x = rng.random((40, 48))
    y = np.clip(x + 0.1 * rng.standard_normal(x.shape), 0, 1)
    x32, y32 = x.astype(np.float32), y.astype(np.float32)
    want = metrics.structural_similarity(
        x32.astype(np.float64), y32.astype(np.float64), data_range=1.0,
        gaussian_weights=True, sigma=1.5, use_sample_covariance=False)
    # scikit-image crops the filter border, which leaves exactly the valid window positions
    assert vqe.ssim(x32, y32) == pytest.approx(want, abs=1e-9)
    assert vqe.ssim(x32, x32) == pytest.approx(1.0, abs=1e-9)


def test_errors_map_to_exception_types():
    with pytest.raises(vqe.ShapeError):
        vqe.psnr(np.zeros((8, 8), np.float32), np.zeros((8, 9), np.float32))
    with pytest.raises(vqe.UnknownQpError):
        vqe.encode_qp(27, [22, 37])
    with pytest.raises(vqe.IoError):
        vqe.read_video("/nonexistent/clip.y4m")
    with pytest.raises(vqe.ConfigError):
        vqe.init_checkpoint("{not json", "/tmp/x.vqe")
    assert issubclass(vqe.ConfigError, vqe.Error)


def test_encode_qp_is_one_hot():
    assert vqe.encode_qp(37, [22, 27, 32, 37]) == [0, 0, 0, 1]


def test_video_round_trip(tmp_path):
    frames = (np.arange(3 * 16 * 16).reshape(3, 16, 16) % 256).astype(np.float32) / 255
    path = tmp_path / "clip.y4m"
    vqe.write_video(path, frames)
    back = vqe.read_video(path)
    assert back.shape == (3, 16, 16)
    np.testing.assert_array_equal(back, frames)
    raw = tmp_path / "clip.y"
    vqe.write_video(raw, frames, "yuv400")
    np.testing.assert_array_equal(vqe.read_video(raw, 16, 16), frames)


def test_enhance_with_fresh_model(tmp_path):
    cfg = json.loads(vqe.tiny_config())
    cfg["qp_vocabulary"] = [22, 37]
    ckpt = tmp_path / "m.vqe"
    vqe.init_checkpoint(json.dumps(cfg), ckpt)
    counts = vqe.count_parameters(ckpt)
    assert counts["generator"] > 0
    rng = np.random.default_rng(1)
    frames = rng.random((3, 40, 36)).astype(np.float32)
    out = vqe.enhance(frames, ckpt, 37)
    assert out.shape == frames.shape
    assert out.min() >= 0 and out.max() <= 1
    with pytest.raises(vqe.UnknownQpError):
        vqe.enhance(frames, ckpt, 27)


def test_cli_rejects_unknown_command():
    cli = os.environ.get("VQE_CLI")
    if not cli:
        pytest.skip("VQE_CLI not set")
    r = subprocess.run([cli, "no-such-command"], capture_output=True)
    assert r.returncode == 2


def test_exported_backbone_weights_load(tmp_path):
    import importlib.util
    import pathlib

    import torch

    script = pathlib.Path(__file__).resolve().parents[2] / "tools" / "export_vgg19.py"
    spec = importlib.util.spec_from_file_location("export_vgg19", script)
    exporter = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(exporter)

    # torchvision layout: convs interleaved with activations and pools
    state, idx, cin = {}, 0, 3
    for n, width in zip(exporter.VGG19_CONVS, (64, 128, 256, 512, 512)):
        for _ in range(n):
            state[f"features.{idx}.weight"] = torch.randn(width, cin, 3, 3) * 0.01
            state[f"features.{idx}.bias"] = torch.zeros(width)
            idx += 2
            cin = width
        idx += 1
    state["classifier.0.weight"] = torch.zeros(4, 4)
    weights = tmp_path / "vgg19.vqe"
    exporter.write_container(weights, exporter.backbone_blocks(state))

    cfg = json.loads(vqe.tiny_config())
    cfg["backbone"]["kind"] = "pretrained"
    cfg["backbone"]["weights_path"] = str(weights)
    cfg["decoder"]["widths"] = []
    vqe.init_checkpoint(json.dumps(cfg), tmp_path / "m.vqe")
    assert vqe.count_parameters(tmp_path / "m.vqe")["backbone (frozen)"] == sum(v.numel() for k, v in state.items()
                                                                              if k.startswith("features."))

    del state["features.0.weight"]
    with pytest.raises(SystemExit):
        exporter.backbone_blocks(state)
