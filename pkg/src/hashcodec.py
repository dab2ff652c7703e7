# Copyright 2024 The CompChall Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Canonical encoding of multi-field hash inputs.

Every hash computed by either party goes through `hash_tuple`, so the client, the server and the
simulators agree bit-exactly. Layout of an encoded tuple:

    tag (1 byte) | len(f1) (4 bytes, big-endian) | f1 | len(f2) | f2 | ...

The tag separates the protocol's hash contexts (puzzle, MAC, proof, chain) from each other.
"""

import hashlib
import hmac
import struct
from enum import Enum
from typing import Sequence

from .config import HashConfig, MAX_K_BITS
from .errors import EncodingError, DomainError, ConfigurationError

MAX_FIELD_LEN = 2 ** 32 - 1
MAX_COUNTER = 2 ** 64 - 1

_LENGTH = struct.Struct('>I')
_COUNTER = struct.Struct('>Q')


class FieldTag(Enum):
    CHAL = 0x01
    MAC = 0x02
    PROOF = 0x03
    CHAIN = 0x04


DEFAULT_HASH = HashConfig('sha256')


def field_bytes(fields: Sequence[bytes]) -> bytes:
    """Length-prefixed concatenation of the fields, without the tag byte."""
    parts = []
    for field in fields:
        if len(field) > MAX_FIELD_LEN:
            raise EncodingError(f"field of {len(field)} bytes exceeds the 4-byte length prefix")
        parts.append(_LENGTH.pack(len(field)))
        parts.append(bytes(field))
    return b''.join(parts)


def encode_fields(tag: FieldTag, fields: Sequence[bytes]) -> bytes:
    return bytes([tag.value]) + field_bytes(fields)


def new_hasher(cfg: HashConfig = DEFAULT_HASH):
    try:
        return hashlib.new(cfg.algorithm)
    except ValueError:
        raise ConfigurationError(f"hash algorithm {cfg.algorithm!r} is not available in this interpreter")


def digest(data: bytes, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    hasher = new_hasher(cfg)
    hasher.update(data)
    return hasher.digest()


def hash_tuple(tag: FieldTag, fields: Sequence[bytes], cfg: HashConfig = DEFAULT_HASH) -> bytes:
    return digest(encode_fields(tag, fields), cfg)


def encode_r(r: int, k: int) -> bytes:
    # Fixed 4-byte width for every k, so changing the difficulty never changes the layout.
    if not 0 <= k <= MAX_K_BITS:
        raise DomainError(f"bit width k={k} outside 0..{MAX_K_BITS}")
    if not 0 <= r < (1 << k):
        raise DomainError(f"r={r} outside [0, 2^{k})")
    return _LENGTH.pack(r)


def encode_counter(n: int) -> bytes:
    if not 0 <= n <= MAX_COUNTER:
        raise DomainError(f"failure counter {n} does not fit in 64 bits")
    return _COUNTER.pack(n)


def hash_chain(seed: bytes, m: int, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    """H^m(seed), with H^0(seed) = seed and H^i = hash_tuple(CHAIN, [H^(i-1)])."""
    if m < 0:
        raise DomainError(f"chain length must be non-negative, got {m}")
    value = bytes(seed)
    for _ in range(m):
        value = hash_tuple(FieldTag.CHAIN, [value], cfg)
    return value


def constant_time_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(a, b)
