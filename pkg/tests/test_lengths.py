import math

import numpy as np
import pytest

from fspell.lengths import MAX_WORD_LEN, continuous_length, decode_length, encode_length


def test_midpoint_encodes_to_angle_zero():
    assert np.allclose(encode_length(15), [0.0, 1.0])


def test_longest_word_encodes_to_angle_pi():
    v = encode_length(30)
    assert v[0] == pytest.approx(0.0, abs=1e-12)
    assert v[1] == pytest.approx(-1.0)


def test_length_six():
    # angle 2*pi*(6/30 - 0.5) = -0.6*pi, in the third quadrant: both
    # components come out negative
    angle = -0.6 * math.pi
    v = encode_length(6)
    assert v[0] == pytest.approx(math.sin(angle), abs=1e-12)
    assert v[1] == pytest.approx(math.cos(angle), abs=1e-12)
    assert v[0] == pytest.approx(-0.95106, abs=5e-6)
    assert v[1] == pytest.approx(-0.30902, abs=5e-6)


def test_unit_norm_everywhere():
    for length in range(1, MAX_WORD_LEN + 1):
        assert np.linalg.norm(encode_length(length)) == pytest.approx(1.0, abs=1e-12)


def test_out_of_range_clamps_to_longest(caplog):
    with caplog.at_level("WARNING"):
        v = encode_length(45)
    assert np.allclose(v, encode_length(30))
    assert any("clamping" in m for m in caplog.messages)
    assert np.allclose(encode_length(0), encode_length(30))


def test_roundtrip_every_length():
    for length in range(1, MAX_WORD_LEN + 1):
        assert decode_length(encode_length(length)) == length


def test_decode_is_nearest_on_circle():
    assert decode_length([0.0, 1.0]) == 15
    assert decode_length([0.0, -1.0]) == 30
    assert decode_length([0.05, 0.999]) == 15


def test_decode_ignores_vector_magnitude():
    assert decode_length(3.7 * encode_length(9)) == 9


def test_zero_vector_rejected():
    with pytest.raises(ValueError, match="undefined angle"):
        decode_length([0.0, 0.0])
    with pytest.raises(ValueError, match="undefined angle"):
        continuous_length(np.zeros(2))


def test_continuous_length_exact_at_integers():
    for length in (1, 7, 15, 29):
        assert continuous_length(encode_length(length)) == pytest.approx(length, abs=1e-9)


def test_continuous_length_between_integers():
    a = encode_length(10)
    b = encode_length(11)
    mid = (a + b) / 2.0
    assert 10.0 < continuous_length(mid) < 11.0
