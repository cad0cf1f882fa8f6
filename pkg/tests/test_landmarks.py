import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fspell.landmarks import (HAND_JOINTS, HandFrame, Landmark, LandmarkSequence,
                              SchemaError, missing_pose_stats, parse_landmark_file,
                              write_landmark_file)


def hand(x0=0.1, y0=0.2, conf=0.9):
    return tuple(Landmark(x0 + 0.01 * j, y0 + 0.005 * j, conf) for j in range(HAND_JOINTS))


def record(video_id="v0", signer_id="s0", label="ab", frames=None):
    if frames is None:
        frames = [{"left": None, "right": [[0.1 + 0.01 * j, 0.2, 0.9] for j in range(21)]}] * 2
    return {"video_id": video_id, "signer_id": signer_id, "label": label, "frames": frames}


def to_bytes(*records):
    return ("\n".join(json.dumps(r) for r in records) + "\n").encode()


class TestParse:
    def test_minimal_valid_file(self):
        seqs = parse_landmark_file(to_bytes(record()))
        assert len(seqs) == 1
        assert seqs[0].n_frames == 2
        assert seqs[0].frames[0].right is not None
        assert seqs[0].frames[0].left is None
        assert seqs[0].label == "ab"

    def test_wrong_landmark_count_rejected(self):
        bad = record(frames=[{"left": None, "right": [[0.1, 0.2, 0.9]] * 20}])
        with pytest.raises(SchemaError, match="exactly 21"):
            parse_landmark_file(to_bytes(bad))

    def test_empty_frames_rejected(self):
        with pytest.raises(SchemaError, match="T must be >= 1"):
            parse_landmark_file(to_bytes(record(frames=[])))

    def test_malformed_json_names_record(self):
        data = to_bytes(record()) + b"{not json\n"
        with pytest.raises(SchemaError, match="record 1"):
            parse_landmark_file(data)

    def test_bad_confidence_rejected(self):
        bad = record(frames=[{"left": None, "right": [[0.1, 0.2, 1.5]] * 21}])
        with pytest.raises(SchemaError, match="confidence"):
            parse_landmark_file(to_bytes(bad))

    def test_non_finite_coordinate_rejected(self):
        bad = record(frames=[{"left": None, "right": [[float("nan"), 0.2, 0.9]] * 21}])
        with pytest.raises(SchemaError, match="non-finite"):
            parse_landmark_file(to_bytes(bad))

    def test_out_of_range_coordinate_accepted_with_warning(self, caplog):
        rec = record(frames=[{"left": None, "right": [[1.02, 0.2, 0.9]] * 21}])
        with caplog.at_level("WARNING"):
            seqs = parse_landmark_file(to_bytes(rec))
        assert len(seqs) == 1
        assert any("outside [0, 1]" in m for m in caplog.messages)

    def test_z_coordinate_parsed_and_discarded(self, caplog):
        rec = record(frames=[{"left": None, "right": [[0.1, 0.2, 0.9, -0.3]] * 21}])
        with caplog.at_level("WARNING"):
            seqs = parse_landmark_file(to_bytes(rec))
        assert seqs[0].frames[0].right[0] == Landmark(0.1, 0.2, 0.9)
        assert any("z coordinate" in m for m in caplog.messages)

    def test_non_vocabulary_label_rejected(self):
        with pytest.raises(SchemaError, match="non-vocabulary"):
            parse_landmark_file(to_bytes(record(label="ab3")))


class TestRoundTrip:
    def test_identity_on_simple_sequence(self):
        seqs = [LandmarkSequence("v1", "s1", (HandFrame(right=hand()),), "cat")]
        assert parse_landmark_file(write_landmark_file(seqs)) == seqs

    def test_missing_left_hand_serialized_as_null(self):
        seqs = [LandmarkSequence("v1", "s1", (HandFrame(right=hand()),), None)]
        line = write_landmark_file(seqs).decode().strip()
        assert json.loads(line)["frames"][0]["left"] is None

    def test_field_order_deterministic(self):
        seqs = [LandmarkSequence("v1", "s1", (HandFrame(right=hand()),), "ab")]
        line = write_landmark_file(seqs).decode()
        assert line.index('"video_id"') < line.index('"signer_id"') \
            < line.index('"label"') < line.index('"frames"')

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_roundtrip_random_sequences(self, data):
        rng_vals = st.floats(min_value=-0.25, max_value=1.25, allow_nan=False,
                             width=64).map(float)
        n_frames = data.draw(st.integers(1, 4))
        frames = []
        for _ in range(n_frames):
            sides = {}
            for side in ("left", "right"):
                if data.draw(st.booleans()):
                    sides[side] = tuple(
                        Landmark(data.draw(rng_vals), data.draw(rng_vals),
                                 data.draw(st.floats(0, 1, allow_nan=False, width=64)))
                        for _ in range(HAND_JOINTS)
                    )
            frames.append(HandFrame(left=sides.get("left"), right=sides.get("right")))
        seq = LandmarkSequence(
            video_id=data.draw(st.text(min_size=1, max_size=8)),
            signer_id=data.draw(st.text(min_size=1, max_size=8)),
            frames=tuple(frames),
            label=data.draw(st.one_of(st.none(), st.text("abcxyz", min_size=1, max_size=5))),
        )
        assert parse_landmark_file(write_landmark_file([seq])) == [seq]

    def test_many_sequences_stream(self, rng):
        seqs = [
            LandmarkSequence(f"v{i}", f"s{i % 7}",
                             (HandFrame(right=hand(x0=float(rng.uniform(0, 0.5)))),),
                             None)
            for i in range(1000)
        ]
        parsed = parse_landmark_file(write_landmark_file(seqs))
        assert parsed == seqs


class TestMissingStats:
    def test_all_frames_detected(self):
        seqs = [LandmarkSequence("v", "s", (HandFrame(right=hand()),) * 3, None)]
        assert missing_pose_stats(seqs) == [1] + [0] * 9

    def test_half_missing_lands_in_50_bucket(self):
        frames = (HandFrame(right=hand()), HandFrame())
        stats = missing_pose_stats([LandmarkSequence("v", "s", frames, None)])
        assert stats[5] == 1 and sum(stats) == 1

    def test_bucket_counts_sum_to_corpus_size(self, rng):
        seqs = []
        for i in range(50):
            frames = tuple(
                HandFrame(right=hand()) if rng.random() < 0.6 else HandFrame()
                for _ in range(int(rng.integers(1, 12)))
            )
            seqs.append(LandmarkSequence(f"v{i}", "s", frames, None))
        assert sum(missing_pose_stats(seqs)) == 50

    def test_fully_missing_sequence_in_last_bucket(self):
        seqs = [LandmarkSequence("v", "s", (HandFrame(),), None)]
        assert missing_pose_stats(seqs)[9] == 1
