"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
inline). Tolerances and budgets are asserted exactly as stated; runtime
budgets are wall-clock.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from dlfr.container import deserialize, serialize
from dlfr.cost import calibrate_quad_fraction, estimate_speedup
from dlfr.errors import ChecksumError, ParameterError
from dlfr.evaluate import eval_corpus, frontier_is_monotone, grid_from_axes, threshold_sweep
from dlfr.metrics import clip_quality
from dlfr.pipeline import (
    DOWN_SLOT,
    UP_SLOT,
    LatentSegment,
    LatentStream,
    Pipeline,
    PipelineStage,
    default_pipeline,
    encode,
    evaluate_placement,
    roundtrip,
    search_placement,
)
from dlfr.rope import attention_score, positions_from_durations, rope_table, rotate, theta
from dlfr.scheduler import (
    RateSchedule,
    ScheduleEntry,
    build_classes,
    classify,
    content_complexity,
    make_config,
    schedule,
    single_class_config,
    smooth,
)
from dlfr.spectrum import dft_magnitude, dominant_frequency, effective_frequency, temporal_signal
from dlfr.video import make_mixed_corpus, segment_clip, synth_sine, synth_translate


@contextmanager
def criterion(number, title):
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {number:2d} FAIL  {title}")
        raise
    print(f"[acceptance] criterion {number:2d} PASS  {title}")


def whole_clip_spectrum(clip):
    seg = segment_clip(clip, clip.n_frames)[0]
    return dft_magnitude(temporal_signal(seg, grid_stride=clip.width), clip.fps)


def test_criterion_1_nyquist_roundtrip():
    with criterion(1, "Nyquist roundtrip and aliasing detection on a 2 Hz tone"):
        start = time.perf_counter()
        clip = synth_sine(2.0, 16.0, 64, 32, 32, amplitude=64.0, mean=80.0)
        pipe = default_pipeline(4)  # identity stages, drop down / linear up

        ok = roundtrip(clip, schedule(clip, single_class_config(16.0, 8.0), 16), pipe)
        ssim_ok = clip_quality(clip, ok).ssim
        assert ssim_ok >= 0.95
        assert dominant_frequency(whole_clip_spectrum(ok)) == pytest.approx(2.0)

        # 3.2 Hz would be stride 5: unreachable with factor-2 slots
        with pytest.raises(ParameterError):
            encode(clip, schedule(clip, single_class_config(16.0, 3.2), 16), pipe)

        aliased = roundtrip(clip, schedule(clip, single_class_config(16.0, 2.0), 16), pipe)
        ssim_aliased = clip_quality(clip, aliased).ssim
        dom = dominant_frequency(whole_clip_spectrum(aliased))
        assert dom is None or dom != pytest.approx(2.0)
        assert ssim_ok - ssim_aliased >= 0.10

        assert time.perf_counter() - start < 1.0


def test_criterion_2_effective_frequency_exact_on_tones():
    with criterion(2, "f_eff exact on 20 integer-bin tones with eps = A/2"):
        start = time.perf_counter()
        rng = np.random.default_rng(0)
        cases = [(int(rng.integers(1, 8)), float(rng.integers(4, 61))) for _ in range(20)]
        for freq, amplitude in cases:
            clip = synth_sine(freq, 16.0, 16, 16, 16, amplitude=amplitude, mean=128.0)
            seg = segment_clip(clip, 16)[0]
            report = dft_magnitude(temporal_signal(seg, grid_stride=4), 16.0)
            assert effective_frequency(report, amplitude / 2.0) == float(freq)
        assert time.perf_counter() - start < 1.0


def spearman(xs, ys):
    rank = lambda vs: np.argsort(np.argsort(vs)).astype(float)
    rx, ry = rank(np.asarray(xs)), rank(np.asarray(ys))
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx * ry).sum() / math.sqrt((rx**2).sum() * (ry**2).sum()))


def test_criterion_3_complexity_monotone_in_velocity():
    with criterion(3, "content complexity strictly increasing with velocity"):
        velocities = [0.0, 1.0, 2.0, 4.0, 8.0]
        values = []
        for velocity in velocities:
            clip = synth_translate("checker", velocity, 16.0, 16, 32, 32, cell=8)
            values.append(content_complexity(segment_clip(clip, 16)[0]))
        assert all(a < b for a, b in zip(values, values[1:]))
        assert spearman(velocities, values) == pytest.approx(1.0, abs=1e-12)


def test_criterion_4_dynamic_dominates_matched_static():
    with criterion(4, "dynamic schedule beats matched static on mixed corpus"):
        start = time.perf_counter()
        corpus = make_mixed_corpus(n_static=10, n_motion=10, seed=0)
        cfg = make_config(16.0, (1.0, 2.0, 4.0), (0.05, 0.15))
        _, summary = eval_corpus(corpus, cfg, 16)
        assert summary.dynamic_ssim > summary.static_ssim
        assert summary.dynamic_ssim - summary.static_ssim >= 0.02
        assert time.perf_counter() - start < 30.0


def test_criterion_5_scheduler_algebra():
    with criterion(5, "classifier boundaries, exact rates, smoothing rules"):
        cfg = make_config(16.0, (1.0, 2.0, 4.0), (0.05, 0.15))
        # right-closed boundaries: c == Th_k selects class k
        assert classify(0.05, cfg).k == 1
        assert classify(0.15, cfg).k == 2
        assert classify(0.15 + 1e-12, cfg).k == 3

        # emitted rate equals exactly twice the class frequency
        clip = synth_translate("checker", 1.5, 16.0, 64, 32, 32, cell=16)
        sched = schedule(clip, cfg, 16)
        for entry in sched.entries:
            assert entry.latent_rate == 2.0 * cfg.by_ordinal(entry.class_k).eff_freq

        # smoothing: idempotent, raise-only, one-step neighbors
        rng = np.random.default_rng(1)
        for _ in range(200):
            ordinals = list(rng.integers(1, 4, size=int(rng.integers(1, 10))))
            entries = tuple(
                ScheduleEntry(
                    index=i, n_frames=16, complexity=0.0, class_k=k,
                    latent_rate=cfg.by_ordinal(k).latent_rate,
                    down_ratio=cfg.by_ordinal(k).down_ratio,
                )
                for i, k in enumerate(ordinals)
            )
            raw = RateSchedule(fps=16.0, segment_len=16, classes=cfg.classes, entries=entries)
            once = smooth(raw, cfg)
            ks = [e.class_k for e in once.entries]
            assert ks == [e.class_k for e in smooth(once, cfg).entries]
            assert all(b >= a for a, b in zip(ordinals, ks))
            assert all(abs(a - b) <= 1 for a, b in zip(ks, ks[1:]))

        # class-table arithmetic for the 16 FPS default ladder
        classes = build_classes(16.0, (1.0, 2.0, 4.0))
        assert [c.down_ratio for c in classes] == [16, 8, 4]


def random_stream(rng):
    n_segments = int(rng.integers(0, 5))
    rates = sorted({float(2 ** int(k)) for k in rng.integers(0, 5, size=3)})
    segments = tuple(
        LatentSegment(
            index=i,
            latent_rate=float(rng.choice(rates)),
            data=rng.normal(scale=50.0, size=(
                int(rng.integers(1, 6)), int(rng.integers(1, 4)),
                int(rng.integers(1, 7)), int(rng.integers(1, 7)),
            )).astype(np.float32),
        )
        for i in range(n_segments)
    )
    return LatentStream(
        source_fps=16.0,
        segment_len=int(rng.integers(2, 33)),
        n_frames_total=int(rng.integers(1, 200)),
        pipeline_descriptor="enc=dslot,dslot;dec=uslot,uslot;down=drop;up=linear",
        class_table=tuple((r / 2.0, int(round(16.0 / r))) for r in rates),
        segments=segments,
    )


def payload_spans(stream):
    pos = 4 + 2 + 4 + 12
    pos += 4 + len(stream.pipeline_descriptor.encode("utf-8"))
    pos += 4 + 8 * len(stream.class_table)
    spans = []
    for seg in stream.segments:
        pos += 24
        size = 4 * seg.data.size
        spans.append((pos, pos + size))
        pos += size + 4
    return spans


def test_criterion_6_container_roundtrip_and_crc():
    with criterion(6, "container byte-exact roundtrip and CRC corruption detection"):
        rng = np.random.default_rng(6)
        checked_corruption = 0
        for _ in range(100):
            stream = random_stream(rng)
            blob = serialize(stream)
            restored = deserialize(blob)
            assert restored == stream
            assert serialize(restored) == blob
            for start, end in payload_spans(stream):
                pos = int(rng.integers(start, end))
                corrupt = bytearray(blob)
                corrupt[pos] ^= int(rng.integers(1, 256))
                with pytest.raises(ChecksumError):
                    deserialize(bytes(corrupt))
                checked_corruption += 1
        assert checked_corruption > 100  # corruption actually exercised


def test_criterion_7_rope_suite():
    with criterion(7, "rotary table reduction, shift invariance, isometry"):
        # uniform durations reproduce the standard table
        table = rope_table([1.0] * 24, dim=16)
        thetas = theta(16)
        angles = np.outer(np.arange(24), thetas)
        assert np.max(np.abs(table.cos - np.cos(angles))) < 1e-12
        assert np.max(np.abs(table.sin - np.sin(angles))) < 1e-12

        rng = np.random.default_rng(7)
        for _ in range(1000):
            q, k = rng.normal(size=16), rng.normal(size=16)
            p_m, p_n, shift = rng.uniform(-50, 50, size=3)
            assert abs(
                attention_score(q, k, p_m + shift, p_n + shift)
                - attention_score(q, k, p_m, p_n)
            ) < 1e-9

        for _ in range(200):
            v = rng.normal(size=32)
            p = rng.uniform(-100, 100)
            assert abs(np.linalg.norm(rotate(v, p)) - np.linalg.norm(v)) < 1e-12

        assert positions_from_durations([1, 1, 2, 2]).tolist() == [0, 1, 2, 4]


def test_criterion_8_cost_model_fits_reference_latency():
    with criterion(8, "cost model trivial case and reference-latency calibration"):
        assert estimate_speedup(300, 100, 1.0) == pytest.approx(9.0, rel=1e-12)
        tables = {
            "720p": [(4 / 6, 2.04), (4 / 8, 3.11), (4 / 12, 6.25)],
            "540p": [(4 / 6, 2.15), (4 / 8, 3.23), (4 / 12, 6.16)],
        }
        for rows in tables.values():
            alpha = calibrate_quad_fraction(rows)
            errors = [
                abs(1.0 / (alpha * r * r + (1 - alpha) * r) - s) for r, s in rows
            ]
            assert max(errors) <= 0.2


def test_criterion_9_threshold_sweep_frontier():
    with criterion(9, "threshold sweep yields a monotone frontier of >= 3 points"):
        corpus = make_mixed_corpus(n_static=10, n_motion=10, seed=0)
        grid = grid_from_axes((0.02, 0.1, 0.7), (0.05, 0.3, 0.9))
        points = threshold_sweep(corpus, (1.0, 2.0, 4.0), grid, 16)
        front = {(round(p.cr, 9), round(p.ssim, 9)) for p in points if p.frontier}
        assert len(front) >= 3
        assert frontier_is_monotone(points)


def test_criterion_10_placement_search_self_consistent():
    with criterion(10, "exhaustive placement search matches re-evaluation"):
        template = Pipeline(
            encoder=(DOWN_SLOT, PipelineStage("spatial_mean_pool", factor=2), DOWN_SLOT),
            decoder=(UP_SLOT, PipelineStage("spatial_mean_pool", factor=2), UP_SLOT),
        )
        corpus = [
            synth_translate("checker", 1.0, 16.0, 32, 32, 32, cell=16),
            synth_translate("checker", 1.5, 16.0, 32, 32, 32, cell=16, phase=7),
        ]
        rate = build_classes(16.0, (8.0,))[0]  # 2x: one active pair
        best, table = search_placement(template, corpus, rate, 16)
        assert len(table) == 4  # 2 encoder slots x 2 decoder slots
        re_evaluated = [
            evaluate_placement(template, row.enc_slots, row.dec_slots, corpus, rate, 16)
            for row in table
        ]
        for row, again in zip(table, re_evaluated):
            assert again.mean_ssim == pytest.approx(row.mean_ssim, abs=1e-12)
            assert again.mean_psnr == pytest.approx(row.mean_psnr, abs=1e-9)
        independent_best = min(
            re_evaluated, key=lambda r: (-r.mean_ssim, r.enc_slots, r.dec_slots)
        )
        assert (best.enc_slots, best.dec_slots) == (
            independent_best.enc_slots, independent_best.dec_slots
        )
        assert best.mean_ssim == max(r.mean_ssim for r in table)
