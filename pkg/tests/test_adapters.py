import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_box, random_support
from fixtures import GEMINI_TUBE, GEMINI_TUBE_LATE, GPT_TUBE, PLOT_SEGMENT, QWEN_TUBE
from stgeval.adapters import (
    DIALECTS,
    FrameSamplingPolicy,
    ParseLog,
    extract_json,
    extract_mc_answer,
    parse_char_segments,
    parse_clock,
    parse_gemini_tube,
    parse_gpt_tube,
    parse_qwen_tube,
    parse_time_ranges,
    parse_tube,
    parse_vidi_tube,
    tube_to_dialect,
)
from stgeval.core import Tube
from stgeval.errors import DialectParseError


def as_dict(tube):
    return {t: b.as_list() for t, b in tube.items()}


class TestGemini:
    def test_prompt_example(self):
        assert as_dict(parse_gemini_tube(GEMINI_TUBE)) == {30: [0.1, 0.2, 0.3, 0.4]}

    def test_minutes_and_fences(self):
        assert as_dict(parse_gemini_tube(GEMINI_TUBE_LATE)) == {300: [0.15, 0.25, 0.35, 0.45]}

    def test_empty(self):
        assert parse_gemini_tube("[]").is_empty

    def test_prose_around_json(self):
        tube = parse_gemini_tube("Sure! Here it is:\n" + GEMINI_TUBE + "\nHope this helps.")
        assert tube.support.timestamps == (30,)

    def test_clamp_counted(self):
        plog = ParseLog()
        tube = parse_gemini_tube('[{"timestamp": "00:01", "box_2d": [0, 0, 1001, 500]}]', plog)
        assert tube.box_at(1).as_list() == [0.0, 0.0, 1.0, 0.5]
        assert plog.counts["clamped"] == 1

    def test_swapped_corners_reordered(self):
        plog = ParseLog()
        tube = parse_gemini_tube('[{"timestamp": "00:01", "box_2d": [500, 500, 100, 100]}]', plog)
        assert tube.box_at(1).as_list() == [0.1, 0.1, 0.5, 0.5]
        assert plog.counts["reordered"] == 1

    def test_bad_entry_skipped(self):
        plog = ParseLog()
        tube = parse_gemini_tube('[{"timestamp": "xx", "box_2d": [0,0,1,1]}, {"timestamp": "00:02", "box_2d": [0,0,10,10]}]', plog)
        assert tube.support.timestamps == (2,)
        assert plog.counts["skipped"] == 1

    def test_no_json(self):
        with pytest.raises(DialectParseError):
            parse_gemini_tube("I cannot find the object.")


class TestGpt:
    def test_prompt_example_one_fps(self):
        tube = parse_gpt_tube(GPT_TUBE, FrameSamplingPolicy(100))
        assert as_dict(tube) == {3: [0.051, 0.252, 0.323, 0.954]}

    def test_subsampled_long_video(self):
        tube = parse_gpt_tube('[{"frame": 60, "box": [0,0,1,1]}]', FrameSamplingPolicy(240))
        assert tube.support.timestamps == (120,)

    @pytest.mark.parametrize("duration", [5, 100, 119, 120, 240, 7200])
    def test_frame_zero(self, duration):
        tube = parse_gpt_tube('[{"frame": 0, "box": [0,0,1,1]}]', FrameSamplingPolicy(duration))
        assert tube.support.timestamps == (0,)

    def test_frame_beyond_cap_skipped(self):
        plog = ParseLog()
        tube = parse_gpt_tube('[{"frame": 120, "box": [0,0,1,1]}, {"frame": 119, "box": [0,0,1,1]}]',
                              FrameSamplingPolicy(600), plog)
        assert tube.support.timestamps == (round(119 * 600 / 120),)
        assert plog.counts["skipped"] == 1

    def test_policy_required(self):
        with pytest.raises(DialectParseError):
            parse_gpt_tube(GPT_TUBE, None)

    def test_policy_branches(self):
        assert not FrameSamplingPolicy(119).subsampled
        assert FrameSamplingPolicy(120).subsampled
        assert FrameSamplingPolicy(100).n_frames == 100
        assert FrameSamplingPolicy(3600).frame_time(1) == 30


class TestQwen:
    def test_output_format(self):
        assert as_dict(parse_qwen_tube(QWEN_TUBE)) == {1: [0.0, 0.0, 0.5, 0.5]}

    def test_rounding(self):
        tube = parse_qwen_tube('[{"time": 2.4, "bbox_2d": [0,0,10,10]}, {"time": 2.5, "bbox_2d": [0,0,10,10]}]')
        assert tube.support.timestamps == (2, 3)

    def test_empty(self):
        assert parse_qwen_tube("[]").is_empty


def test_vidi_tube():
    tube = parse_vidi_tube('[{"timestamp": "06:27", "box": [0.1, 0.1, 0.2, 0.2]}, {"timestamp": 5, "box": [0,0,1,1]}]')
    assert tube.support.timestamps == (5, 387)


def test_duplicate_second_keeps_larger_box():
    plog = ParseLog()
    tube = parse_qwen_tube('[{"time": 1.0, "bbox_2d": [0,0,100,100]}, {"time": 1.2, "bbox_2d": [0,0,900,900]}]', plog)
    assert tube.box_at(1).as_list() == [0.0, 0.0, 0.9, 0.9]
    assert plog.counts["duplicate"] == 1


class TestTimeRanges:
    def test_gpt_prompt_example(self):
        assert parse_time_ranges("2-4, 6-8", "gpt").intervals == ((2.0, 4.0), (6.0, 8.0))

    def test_hhmmss(self):
        assert parse_time_ranges("00:06:27-00:07:00", "gemini").intervals == ((387.0, 420.0),)

    def test_mmss_point(self):
        assert parse_clock("06:27") == 387
        assert parse_time_ranges("06:27 - 06:27", "vidi").intervals == ((387.0, 387.0),)

    def test_start_after_end_dropped(self):
        plog = ParseLog()
        out = parse_time_ranges("05:00-04:00, 00:10-00:20", "vidi", plog=plog)
        assert out.intervals == ((10.0, 20.0),)
        assert plog.counts["malformed_range"] == 1

    def test_nothing_parsable(self):
        plog = ParseLog()
        assert parse_time_ranges("no idea", "qwen", plog=plog).intervals == ()
        assert plog.counts["parse_failure"] == 1

    def test_qwen_seconds_and_separators(self):
        out = parse_time_ranges("1.5 to 3.25\n10.0–12.0", "qwen")
        assert out.intervals == ((1.5, 3.25), (10.0, 12.0))

    def test_gpt_bare_index_and_policy(self):
        out = parse_time_ranges("7, 2-4", "gpt", FrameSamplingPolicy(240, frame_cap=120))
        assert out.intervals == ((4.0, 8.0), (14.0, 14.0))

    def test_overlapping_ranges_merged(self):
        assert parse_time_ranges("1-5, 3-7", "gpt").intervals == ((1.0, 7.0),)


class TestCharSegments:
    def test_prompt_example(self):
        (seg,) = parse_char_segments(PLOT_SEGMENT)
        assert (seg.start_s, seg.end_s, seg.text) == (62.4, 65.0, "Hello everyone.")
        assert [t for t, _ in seg.boxes] == [62.4, 63.0]
        assert seg.boxes[0][1].as_list() == [0.4, 0.15, 0.6, 0.35]

    def test_empty_boxes(self):
        (seg,) = parse_char_segments('{"text": "hi", "start": 1, "end": 2, "boxes": []}')
        assert seg.boxes == ()

    def test_array_sorted(self):
        segs = parse_char_segments('[{"text": "b", "start": 9, "end": 10}, {"text": "a", "start": 1, "end": 2}]')
        assert [s.text for s in segs] == ["a", "b"]

    def test_wrapper_object(self):
        segs = parse_char_segments('{"segments": [{"text": "a", "start": 1, "end": 2}]}')
        assert len(segs) == 1

    @pytest.mark.parametrize("payload", [
        '{"text": "a", "start": 5, "end": 2}',
        '{"text": "a", "end": 2}',
        '{"text": 3, "start": 1, "end": 2}',
        '"just a string"',
        '[1, 2]',
    ])
    def test_schema_violations(self, payload):
        with pytest.raises(DialectParseError):
            parse_char_segments(payload)


class TestMcAnswer:
    OPTS = ("The sun is hot", "The moon is red", "Water is dry", "Grass is blue")

    @pytest.mark.parametrize("text,idx", [
        ("B", 1),
        ("b.", 1),
        ("(c) because the moon glows", 2),
        ("Answer: D", 3),
        ("The answer is (A)", 0),
        ("  the moon   is red ", 1),
        ("I am not sure", None),
        ("E", None),
        ("", None),
        (None, None),
    ])
    def test_extraction(self, text, idx):
        assert extract_mc_answer(text, self.OPTS) == idx

    def test_no_options(self):
        with pytest.raises(ValueError):
            extract_mc_answer("A", ())


@settings(max_examples=300)
@given(st.text(max_size=200), st.sampled_from(DIALECTS))
def test_parsers_are_total(payload, dialect):
    policy = FrameSamplingPolicy(300)
    for fn in (
        lambda: parse_tube(payload, dialect, policy),
        lambda: parse_time_ranges(payload, dialect, policy),
        lambda: parse_char_segments(payload),
    ):
        try:
            fn()
        except DialectParseError:
            pass


json_junk = st.recursive(
    st.none() | st.booleans() | st.floats() | st.integers() | st.text(max_size=10),
    lambda ch: st.lists(ch, max_size=4) | st.dictionaries(
        st.sampled_from(["timestamp", "time", "frame", "box", "box_2d", "bbox_2d", "start", "end", "text", "boxes"]),
        ch, max_size=5),
    max_leaves=20,
)


@settings(max_examples=300)
@given(json_junk, st.sampled_from(DIALECTS))
def test_parsers_total_on_json_shaped_junk(value, dialect):
    payload = json.dumps(value)
    for fn in (lambda: parse_tube(payload, dialect, FrameSamplingPolicy(300)), lambda: parse_char_segments(payload)):
        try:
            fn()
        except DialectParseError:
            pass


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(DIALECTS))
def test_round_trip(seed, dialect):
    rng = random.Random(seed)
    # gemini and qwen carry integer coordinates in [0, 1000]
    grid = 1000 if dialect in ("gemini", "qwen") else None
    ts = random_support(rng, 0, 118)
    tube = Tube.from_mapping({t: random_box(rng, grid or 0) if grid else random_box(rng) for t in ts})
    policy = FrameSamplingPolicy(119)
    back = parse_tube(tube_to_dialect(tube, dialect, policy), dialect, policy)
    assert back == tube


def test_extract_json_skips_unparsable_brackets():
    assert extract_json("see [note] then [1, 2]") == [1, 2]
