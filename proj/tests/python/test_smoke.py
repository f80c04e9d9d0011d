import numpy as np
import pytest

import rotordiag


def test_synthesize_is_seeded_and_bounded():
    spec = rotordiag.preset_sample("quadA", "config2", "high", seed=3)
    assert not spec.healthy
    a = rotordiag.synthesize(spec, 0.5)
    b = rotordiag.synthesize(spec, 0.5)
    assert a.shape == (22050,)
    assert np.array_equal(a, b)
    assert np.max(np.abs(a)) <= 0.99 + 1e-12


def test_wav_round_trip(tmp_path):
    x = np.random.default_rng(1).uniform(-1, 1, 5000)
    rotordiag.write_wav(tmp_path / "x.wav", x)
    y, rate = rotordiag.read_wav(tmp_path / "x.wav")
    assert rate == 44100
    assert np.max(np.abs(x - y)) <= 1 / 32768


def test_stft_matches_numpy_rfft():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(3000)
    n, hop = 256, 100
    got = rotordiag.stft(x, n, hop)
    w = 0.5 * (1 - np.cos(2 * np.pi * np.arange(n) / (n - 1)))
    frames = (len(x) - n) // hop + 1
    want = np.abs(np.fft.rfft(np.stack([x[t * hop : t * hop + n] * w for t in range(frames)]), axis=1))
    assert got.shape == want.shape
    assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * want.max())


def test_render_image_and_ppm(tmp_path):
    x = rotordiag.synthesize(rotordiag.preset_sample(), 1.0)
    img = rotordiag.render(x, height=32, width=48)
    assert img.shape == (32, 48, 3) and img.dtype == np.uint8
    rotordiag.write_image(tmp_path / "s.ppm", img)
    assert np.array_equal(rotordiag.read_image(tmp_path / "s.ppm"), img)


def test_model_predict_and_checkpoint(tmp_path):
    m = rotordiag.Model.default(16, 16, seed=4)
    assert m.parameter_count == 608 + 8 * 6 * 6 * 2 + 2
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    p = m.predict(img)
    assert len(p) == 2 and abs(sum(p) - 1) < 1e-6
    m.save(tmp_path / "m.rdg")
    assert rotordiag.Model.load(tmp_path / "m.rdg").predict(img) == p
    r = m.grad_check(np.random.default_rng(0).integers(0, 256, (16, 16, 3), dtype=np.uint8), 1)
    assert r["max_relative_error"] < 1e-2


def test_split_sizes():
    labels = [0] * 80 + [1] * 80
    train, val, test = rotordiag.split(labels, seed=9)
    assert (len(train), len(val), len(test)) == (100, 30, 30)
    assert len(set(train) | set(val) | set(test)) == 160


def test_errors_carry_category(tmp_path):
    with pytest.raises(rotordiag.Error) as e:
        rotordiag.read_wav(tmp_path / "missing.wav")
    assert e.value.code == "file not found"
    with pytest.raises(rotordiag.Error) as e:
        rotordiag.Model.default(16, 16).predict(np.zeros((8, 8, 3), dtype=np.uint8))
    assert e.value.code == "shape mismatch"
