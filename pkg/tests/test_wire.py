import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from adtnsim import wire
from conftest import make_key


class TestRoundTrip:
    def test_basic(self, rng):
        key = make_key("A")
        frame = wire.encode_frame(b"hi", key, rng)
        assert len(frame) == 1024
        assert wire.try_decrypt(frame, key) == b"hi"

    def test_max_payload_boundary(self, rng):
        key = make_key("A")
        payload = bytes(wire.max_payload())
        frame = wire.encode_frame(payload, key, rng)
        assert len(frame) == 1024
        assert wire.try_decrypt(frame, key) == payload

    def test_oversize_rejected_before_encryption(self, rng):
        key = make_key("A")
        with pytest.raises(wire.PayloadTooLarge):
            wire.encode_frame(bytes(wire.max_payload() + 1), key, rng)

    def test_small_frame_size(self, rng):
        key = make_key("A")
        frame = wire.encode_frame(b"x", key, rng, frame_size=64)
        assert len(frame) == 64
        assert wire.try_decrypt(frame, key, frame_size=64) == b"x"

    @settings(max_examples=50, deadline=None)
    @given(payload=st.binary(min_size=0, max_size=wire.max_payload(256)),
           seed=st.integers(0, 2**32))
    def test_round_trip_property(self, payload, seed):
        key = make_key("P")
        frame = wire.encode_frame(payload, key, random.Random(seed), frame_size=256)
        assert len(frame) == 256
        assert wire.try_decrypt(frame, key, frame_size=256) == payload


class TestFreshness:
    def test_same_inputs_distinct_frames(self, rng):
        key = make_key("A")
        assert wire.encode_frame(b"m", key, rng) != wire.encode_frame(b"m", key, rng)

    def test_cover_frames_distinct(self, rng):
        assert wire.make_cover_frame(rng) != wire.make_cover_frame(rng)


class TestFailures:
    def test_wrong_key_fails(self, rng):
        frame = wire.encode_frame(b"secret", make_key("A"), rng)
        assert wire.try_decrypt(frame, make_key("B")) is None

    def test_cover_fails_with_any_key(self, rng):
        frame = wire.make_cover_frame(rng)
        for label in "ABCDE":
            assert wire.try_decrypt(frame, make_key(label)) is None

    def test_wrong_key_mass_trial(self, rng):
        # 10^3 here; the acceptance suite runs the full 10^5
        k1, k2 = make_key("A"), make_key("B")
        for _ in range(1000):
            assert wire.try_decrypt(wire.encode_frame(b"m", k1, rng, 256), k2, 256) is None

    def test_malformed_length_is_hard_error(self, rng):
        with pytest.raises(wire.FrameSizeError):
            wire.try_decrypt(b"\x00" * 100, make_key("A"))


class TestMessageId:
    def test_deterministic(self):
        assert wire.message_id(b"hi") == wire.message_id(b"hi")

    def test_distinct_inputs(self):
        assert wire.message_id(b"hi") != wire.message_id(b"ho")

    def test_length(self):
        assert len(wire.message_id(b"x")) == 32


class TestUniformity:
    def test_cover_byte_histogram_chi_square(self):
        # independent statistical oracle: pooled byte histogram over
        # 10^4 cover frames must look uniform
        rng = random.Random(99)
        data = b"".join(wire.make_cover_frame(rng, 256) for _ in range(10_000))
        counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
        _, p = stats.chisquare(counts)
        assert p > 0.01

    def test_ciphertext_byte_histogram_chi_square(self):
        rng = random.Random(98)
        key = make_key("A")
        data = b"".join(
            wire.encode_frame(b"same payload every time", key, rng, 256)
            for _ in range(10_000)
        )
        counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
        _, p = stats.chisquare(counts)
        assert p > 0.01


class TestHexTrace:
    def test_round_trip(self, rng):
        frame = wire.make_cover_frame(rng)
        line = wire.frame_to_hex(frame)
        assert line == line.lower()
        assert wire.frame_from_hex(line) == frame
