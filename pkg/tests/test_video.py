import numpy as np
import pytest

from dlfr.errors import DimensionError, FormatError, ParameterError
from dlfr.video import (
    Clip,
    concat_segments,
    load_clip,
    make_checker,
    make_mixed_corpus,
    rgb_to_luma,
    save_clip,
    segment_clip,
    synth_sine,
    synth_translate,
)


def test_clip_validation():
    with pytest.raises(ParameterError):
        Clip(fps=0.0, frames=np.zeros((2, 4, 4)))
    with pytest.raises(DimensionError):
        Clip(fps=16.0, frames=np.zeros((4, 4)))
    with pytest.raises(ParameterError):
        Clip(fps=16.0, frames=np.full((2, 4, 4), 300.0))
    with pytest.raises(ParameterError):
        Clip(fps=16.0, frames=np.full((2, 4, 4), np.nan))


def test_clip_is_immutable():
    clip = synth_sine(2.0, 16.0, 4, 8, 8)
    with pytest.raises(ValueError):
        clip.frames[0, 0, 0] = 1.0


class TestSegmentation:
    def test_exact_division(self):
        clip = synth_sine(2.0, 16.0, 64, 8, 8)
        segments = segment_clip(clip, 16)
        assert [s.n_frames for s in segments] == [16] * 4
        assert [s.start_frame for s in segments] == [0, 16, 32, 48]
        assert not any(s.short for s in segments)

    def test_remainder_is_flagged_short(self):
        clip = synth_sine(2.0, 16.0, 70, 8, 8)
        segments = segment_clip(clip, 16)
        assert [s.n_frames for s in segments] == [16, 16, 16, 16, 6]
        assert [s.short for s in segments] == [False] * 4 + [True]

    def test_single_segment_identity(self):
        clip = synth_sine(2.0, 16.0, 16, 8, 8)
        (seg,) = segment_clip(clip, 16)
        assert np.array_equal(seg.frames, clip.frames)

    def test_concat_is_identity(self):
        clip = synth_translate("checker", 1.0, 16.0, 37, 16, 16)
        for n in (2, 5, 16, 37):
            segments = segment_clip(clip, n)
            assert np.array_equal(concat_segments(segments), clip.frames)

    def test_segment_len_below_two_rejected(self):
        clip = synth_sine(2.0, 16.0, 16, 8, 8)
        with pytest.raises(ParameterError):
            segment_clip(clip, 1)


class TestSynthSine:
    def test_zero_frequency_is_constant(self):
        clip = synth_sine(0.0, 16.0, 16, 8, 8, amplitude=10.0, mean=100.0)
        assert np.all(clip.frames == 100.0)
        assert np.all(np.diff(clip.frames, axis=0) == 0.0)

    def test_matches_generating_formula(self):
        clip = synth_sine(2.0, 16.0, 16, 4, 4, amplitude=64.0, mean=128.0)
        n = np.arange(16)
        expected = 128.0 + 64.0 * np.sin(np.pi * n / 4.0)
        assert np.allclose(clip.frames[:, 2, 3], expected, atol=1e-12)

    def test_quarter_rate_tone_has_period_four(self):
        clip = synth_sine(4.0, 16.0, 32, 4, 4)
        assert np.allclose(clip.frames[:-4], clip.frames[4:], atol=1e-9)

    def test_range_violation_rejected(self):
        with pytest.raises(ParameterError):
            synth_sine(2.0, 16.0, 16, 4, 4, amplitude=64.0, mean=240.0)


class TestSynthTranslate:
    def test_zero_velocity_is_static(self):
        clip = synth_translate("checker", 0.0, 16.0, 10, 16, 16)
        assert np.all(np.diff(clip.frames, axis=0) == 0.0)

    def test_full_wrap_repeats_every_frame(self):
        clip = synth_translate("checker", 16.0, 16.0, 8, 16, 16)
        assert all(np.array_equal(clip.frames[0], clip.frames[i]) for i in range(8))

    def test_cell_velocity_shift_arithmetic(self):
        # velocity == cell size: one frame flips parity, two frames wrap
        clip = synth_translate("checker", 8.0, 16.0, 6, 32, 32, cell=8)
        base = make_checker(32, 32, 8)
        assert np.array_equal(clip.frames[1], np.roll(base, 8, axis=1))
        assert np.array_equal(clip.frames[0], clip.frames[2])

    def test_unknown_pattern_rejected(self):
        with pytest.raises(ParameterError):
            synth_translate("noise", 1.0, 16.0, 4, 8, 8)


class TestRawFormat:
    def test_save_load_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        frames = rng.integers(0, 256, size=(9, 12, 17)).astype(np.float64)
        clip = Clip(fps=16.0, frames=frames)
        path = tmp_path / "clip.dlfrraw"
        save_clip(clip, path)
        loaded = load_clip(path)
        assert loaded.fps == 16.0
        assert np.array_equal(loaded.frames, clip.frames)
        # a second save is byte-identical
        again = tmp_path / "again.dlfrraw"
        save_clip(loaded, again)
        assert path.read_bytes() == again.read_bytes()

    def test_header_is_echoed(self, tmp_path):
        clip = synth_sine(2.0, 16.0, 64, 32, 32)
        path = tmp_path / "sine.dlfrraw"
        save_clip(clip, path)
        assert path.read_bytes().startswith(b"DLFRRAW 32 32 64 16\n")
        loaded = load_clip(path)
        assert (loaded.fps, loaded.n_frames) == (16.0, 64)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.dlfrraw"
        path.write_bytes(b"NOTRAW 1 2 3\n")
        with pytest.raises(FormatError):
            load_clip(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "short.dlfrraw"
        path.write_bytes(b"DLFRRAW 4 4 2 16\n" + b"\x00" * 20)
        with pytest.raises(FormatError):
            load_clip(path)


class TestImageDir:
    def test_identical_grayscale_images(self, tmp_path):
        from PIL import Image

        arr = ((np.arange(144).reshape(12, 12) * 7) % 256).astype(np.uint8)
        for i in range(10):
            Image.fromarray(arr, mode="L").save(tmp_path / f"f{i:03d}.png")
        (tmp_path / "fps.txt").write_text("12\n")
        clip = load_clip(tmp_path)
        assert clip.fps == 12.0
        assert clip.n_frames == 10
        assert all(np.array_equal(clip.frames[0], clip.frames[i]) for i in range(10))

    def test_pure_red_maps_to_luma_76(self, tmp_path):
        from PIL import Image

        red = np.zeros((16, 16, 3), dtype=np.uint8)
        red[..., 0] = 255
        Image.fromarray(red, mode="RGB").save(tmp_path / "red.png")
        (tmp_path / "fps.txt").write_text("1\n")
        clip = load_clip(tmp_path)
        assert round(0.299 * 255) == 76
        assert np.all(clip.frames == 76.0)

    def test_missing_sidecar_rejected(self, tmp_path):
        from PIL import Image

        Image.fromarray(np.zeros((8, 8), dtype=np.uint8), mode="L").save(tmp_path / "a.png")
        with pytest.raises(FormatError):
            load_clip(tmp_path)

    def test_inconsistent_sizes_rejected(self, tmp_path):
        from PIL import Image

        Image.fromarray(np.zeros((8, 8), dtype=np.uint8), mode="L").save(tmp_path / "a.png")
        Image.fromarray(np.zeros((9, 8), dtype=np.uint8), mode="L").save(tmp_path / "b.png")
        (tmp_path / "fps.txt").write_text("1\n")
        with pytest.raises(DimensionError):
            load_clip(tmp_path)


def test_rgb_to_luma_weights():
    pixel = np.array([[[100.0, 200.0, 50.0]]])
    expected = round(0.299 * 100 + 0.587 * 200 + 0.114 * 50)
    assert rgb_to_luma(pixel)[0, 0] == expected


def test_mixed_corpus_is_deterministic_and_split():
    a = make_mixed_corpus(seed=3)
    b = make_mixed_corpus(seed=3)
    assert [n for n, _ in a] == [n for n, _ in b]
    for (_, ca), (_, cb) in zip(a, b):
        assert np.array_equal(ca.frames, cb.frames)
    statics = [c for n, c in a if n.startswith("static")]
    motions = [c for n, c in a if n.startswith("motion")]
    assert len(statics) == 10 and len(motions) == 10
    assert all(np.all(np.diff(c.frames, axis=0) == 0) for c in statics)
    assert all(np.any(np.diff(c.frames, axis=0) != 0) for c in motions)
