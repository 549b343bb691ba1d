"""Fixed-size frame format, encryption contract, and trial decryption.

Every frame on the air is exactly ``frame_size`` octets and, without a
matching group key, indistinguishable from uniform random bytes:

    frame     = nonce (16) || ChaCha20(key, nonce, plaintext)
    plaintext = payload_len (2, big-endian) || payload
                || fingerprint (8) || random padding

The fingerprint is a truncated SHA-256 of (payload_len || payload) and is
the only success signal a trial decryption has: a decryption is accepted
iff the parsed length is in range and the recomputed fingerprint matches.
There is no authentication tag and no plaintext structure beyond this.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

NONCE_LEN = 16
LEN_FIELD = 2
FP_LEN = 8
HEADER_OVERHEAD = NONCE_LEN + LEN_FIELD + FP_LEN  # 26
DEFAULT_FRAME_SIZE = 1024
MIN_FRAME_SIZE = 64


class FrameSizeError(ValueError):
    """Frame is not exactly frame_size octets (a hard usage error)."""


class PayloadTooLarge(ValueError):
    """Payload exceeds max_payload for the configured frame size."""


def max_payload(frame_size: int = DEFAULT_FRAME_SIZE) -> int:
    return frame_size - HEADER_OVERHEAD


@dataclass(frozen=True)
class GroupKey:
    """Symmetric key of one trust group.

    group_id is a simulator-side label only; it is never serialized into
    a frame.
    """

    group_id: str
    key: bytes

    def __post_init__(self):
        if len(self.key) != 32:
            raise ValueError("group key must be 32 octets")


def _keystream_xor(key: bytes, nonce: bytes, data: bytes) -> bytes:
    cipher = Cipher(algorithms.ChaCha20(key, nonce), mode=None)
    return cipher.encryptor().update(data)


def fingerprint(payload: bytes) -> bytes:
    length = len(payload).to_bytes(LEN_FIELD, "big")
    return hashlib.sha256(length + payload).digest()[:FP_LEN]


def message_id(payload: bytes) -> bytes:
    """Stable, key-independent identity of a payload (32-octet digest).

    Identical payloads map to the same id at every node, hop, and group;
    the id exists only inside nodes that decrypted the message and never
    appears on the wire.
    """
    length = len(payload).to_bytes(LEN_FIELD, "big")
    return hashlib.sha256(b"msgid:" + length + payload).digest()


def encode_frame(
    payload: bytes,
    key: GroupKey,
    rng: random.Random,
    frame_size: int = DEFAULT_FRAME_SIZE,
) -> bytes:
    """Encrypt payload into a fresh fixed-size frame.

    A new random nonce and new random padding are drawn per call, so the
    same (payload, key) never produces the same bytes twice.
    """
    if len(payload) > max_payload(frame_size):
        raise PayloadTooLarge(
            f"payload of {len(payload)} octets exceeds max_payload "
            f"{max_payload(frame_size)} for frame_size {frame_size}"
        )
    nonce = rng.randbytes(NONCE_LEN)
    pad_len = frame_size - NONCE_LEN - LEN_FIELD - len(payload) - FP_LEN
    plain = (
        len(payload).to_bytes(LEN_FIELD, "big")
        + payload
        + fingerprint(payload)
        + rng.randbytes(pad_len)
    )
    return nonce + _keystream_xor(key.key, nonce, plain)


def make_cover_frame(rng: random.Random, frame_size: int = DEFAULT_FRAME_SIZE) -> bytes:
    """Pure random cover frame; involves no key at all."""
    return rng.randbytes(frame_size)


def try_decrypt(
    frame: bytes, key: GroupKey, frame_size: int = DEFAULT_FRAME_SIZE
) -> bytes | None:
    """Attempt to read a frame with one key.

    Returns the payload on success, None on failure. Failure is the
    normal outcome for cover frames and other groups' traffic; only a
    wrong-sized frame raises.
    """
    if len(frame) != frame_size:
        raise FrameSizeError(
            f"frame is {len(frame)} octets, expected {frame_size}"
        )
    nonce, body = frame[:NONCE_LEN], frame[NONCE_LEN:]
    plain = _keystream_xor(key.key, nonce, body)
    payload_len = int.from_bytes(plain[:LEN_FIELD], "big")
    if payload_len > len(frame) - HEADER_OVERHEAD:
        return None
    payload = plain[LEN_FIELD : LEN_FIELD + payload_len]
    claimed = plain[LEN_FIELD + payload_len : LEN_FIELD + payload_len + FP_LEN]
    if claimed != fingerprint(payload):
        return None
    return payload


def frame_to_hex(frame: bytes) -> str:
    """Lowercase hex, one frame per trace line."""
    return frame.hex()


def frame_from_hex(line: str) -> bytes:
    return bytes.fromhex(line.strip())
