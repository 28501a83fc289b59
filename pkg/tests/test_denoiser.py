import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from s2inpaint.denoiser import SCRATCH_ENV, DenoiserError, DenoiserSpec, denoise
from s2inpaint.framelet import analysis
from s2inpaint.signal import SphericalSignal

SHRINK = DenoiserSpec("framelet-shrink")


def rand_signal(level, channels=1, seed=0):
    rng = np.random.default_rng(seed)
    return SphericalSignal(level, rng.uniform(0, 255, size=(channels, 6 * 4**level)))


@pytest.mark.parametrize("kind", ["identity", "framelet-shrink"])
def test_zero_sigma_is_identity(kind):
    s = rand_signal(3)
    np.testing.assert_array_equal(denoise(DenoiserSpec(kind), s, 0.0).values, s.values)


def test_identity_kind_ignores_sigma():
    s = rand_signal(2)
    np.testing.assert_array_equal(denoise(DenoiserSpec("identity"), s, 50.0).values, s.values)


@pytest.mark.parametrize("sigma", [0.1, 5.0, 1e4])
def test_constant_signal_unchanged(sigma):
    s = SphericalSignal.constant(3, 88.0)
    np.testing.assert_allclose(denoise(SHRINK, s, sigma).values, 88.0, rtol=1e-14)


def test_hand_example():
    v = np.zeros(24)
    v[:4] = [4, 0, 0, 0]
    out = denoise(DenoiserSpec("framelet-shrink", depth=1), SphericalSignal(1, v), 1.0).values[0]
    np.testing.assert_allclose(out[:4], [2.5, 0.5, 0.5, 0.5], atol=1e-15)
    np.testing.assert_array_equal(out[4:], 0.0)


def test_gain_scales_threshold():
    v = np.zeros(24)
    v[:4] = [4, 0, 0, 0]
    s = SphericalSignal(1, v)
    a = denoise(DenoiserSpec("framelet-shrink", depth=1, gain=2.0), s, 0.5).values
    b = denoise(DenoiserSpec("framelet-shrink", depth=1), s, 1.0).values
    np.testing.assert_array_equal(a, b)


@given(st.lists(st.floats(0, 200), min_size=2, max_size=8))
def test_residual_nondecreasing_in_sigma(sigmas):
    s = rand_signal(3, seed=4)
    res = [np.linalg.norm(denoise(SHRINK, s, sg).values - s.values) for sg in sorted(sigmas)]
    assert all(b >= a - 1e-9 for a, b in zip(res, res[1:]))


def test_mean_preserved_at_full_depth():
    s = rand_signal(3, seed=2)
    out = denoise(DenoiserSpec("framelet-shrink", depth=3), s, 30.0)
    assert out.values.mean() == pytest.approx(s.values.mean(), rel=1e-13)
    np.testing.assert_allclose(analysis(out.values, 3)[0, :6], analysis(s.values, 3)[0, :6], rtol=1e-13)


def test_channel_independence():
    s = rand_signal(2, channels=3, seed=5)
    out = denoise(SHRINK, s, 12.0)
    for k in range(3):
        np.testing.assert_array_equal(out.values[k], denoise(SHRINK, s.channel(k), 12.0).values[0])


def test_spec_validation():
    with pytest.raises(ValueError):
        DenoiserSpec("median")
    with pytest.raises(ValueError):
        DenoiserSpec(gain=0.0)
    with pytest.raises(ValueError):
        DenoiserSpec("external", command="tool {input} {output}")
    with pytest.raises(ValueError):
        denoise(SHRINK, rand_signal(1), -1.0)


SCRIPT = textwrap.dedent(
    """
    import sys
    import numpy as np
    from s2inpaint import sph1
    from s2inpaint.signal import SphericalSignal

    src, sigma, dst, mode = sys.argv[1], float(sys.argv[2]), sys.argv[3], sys.argv[4]
    sig = sph1.read_signal(src)
    if mode == "fail":
        sys.stderr.write("model weights missing\\n")
        sys.exit(3)
    if mode == "garbage":
        open(dst, "wb").write(b"not sph1")
    elif mode == "wrong-level":
        sph1.write(dst, SphericalSignal.constant(sig.level + 1, 0.0))
    else:
        sph1.write(dst, SphericalSignal(sig.level, sig.values - sigma))
    """
)


@pytest.fixture
def plugin(tmp_path):
    path = tmp_path / "plugin.py"
    path.write_text(SCRIPT)

    def spec(mode, scratch):
        cmd = f"{sys.executable} {path} {{input}} {{sigma}} {{output}} {mode}"
        return DenoiserSpec("external", command=cmd, scratch_dir=str(scratch))

    return spec


def test_external_success_cleans_scratch(plugin, tmp_path):
    scratch = tmp_path / "scratch"
    scratch.mkdir()
    s = rand_signal(2, channels=2)
    out = denoise(plugin("ok", scratch), s, 0.25)
    np.testing.assert_array_equal(out.values, s.values - 0.25)
    assert list(scratch.iterdir()) == []


def test_external_nonzero_exit(plugin, tmp_path):
    with pytest.raises(DenoiserError) as info:
        denoise(plugin("fail", tmp_path), rand_signal(1), 1.0)
    assert info.value.returncode == 3
    assert "model weights missing" in info.value.stderr


@pytest.mark.parametrize("mode", ["garbage", "wrong-level"])
def test_external_bad_output(plugin, tmp_path, mode):
    with pytest.raises(DenoiserError):
        denoise(plugin(mode, tmp_path), rand_signal(1), 1.0)


def test_external_uses_scratch_env(plugin, tmp_path, monkeypatch):
    scratch = tmp_path / "env-scratch"
    scratch.mkdir()
    monkeypatch.setenv(SCRATCH_ENV, str(scratch))
    spec = plugin("fail", tmp_path)
    spec = DenoiserSpec("external", command=spec.command)
    with pytest.raises(DenoiserError):
        denoise(spec, rand_signal(1), 1.0)
    # failed runs keep their files for inspection
    assert len(list(scratch.iterdir())) == 1
