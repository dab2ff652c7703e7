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
Line-based wire format. One CRLF-terminated ASCII line per message, space-separated fields,
binary values as lowercase hex, user ids percent-encoded.

    LOGIN <user>
    CHALLENGE <puzzle_hex> <salt_hex> <mac_hex> <k> [<chain_index>]
    RESPOND <user> base|offline <h_rp_hex> <mac_hex>
    RESPOND <user> lamport <r> <prev_chain_hex> <mac_hex>
    RESULT OK|FAIL
    ERR <code>

The optional chain index is only sent for Lamport records; the client needs it to compute H^(i-1)(P).
"""

import collections
import re
from typing import Union
from urllib.parse import quote, unquote

from .config import SALT_LEN, MAX_K_BITS, Variant, HashAlgorithm
from .data import Challenge, ResponsePayload
from .errors import ProtocolError

MAX_LINE = 8 * 1024
CRLF = b'\r\n'

_HEX = re.compile(r'(?:[0-9a-f]{2})+')
_DECIMAL = re.compile(r'0|[1-9][0-9]{0,19}')
_CODE = re.compile(r'[a-z][a-z-]{0,31}')
_USER = re.compile(r'[!-~]+')
_DIGEST_LENGTHS = frozenset(algorithm.value[1] for algorithm in HashAlgorithm)

Login = collections.namedtuple('Login', ['user_id'])
ChallengeMessage = collections.namedtuple('ChallengeMessage', ['challenge'])
Respond = collections.namedtuple('Respond', ['payload'])
Result = collections.namedtuple('Result', ['ok'])
Error = collections.namedtuple('Error', ['code'])

WireMessage = Union[Login, ChallengeMessage, Respond, Result, Error]


def _encode_user(user_id: str) -> str:
    if not user_id:
        raise ProtocolError('bad-user', "empty user id")
    return quote(user_id, safe='')


def _decode_user(field: str) -> str:
    if not _USER.fullmatch(field):
        raise ProtocolError('bad-user')
    try:
        user_id = unquote(field, errors='strict')
    except UnicodeDecodeError:
        raise ProtocolError('bad-user', "percent-encoding is not valid UTF-8")
    if not user_id:
        raise ProtocolError('bad-user')
    return user_id


def _hex(field: str, length: int = None) -> bytes:
    if not _HEX.fullmatch(field):
        raise ProtocolError('bad-hex', field[:16])
    value = bytes.fromhex(field)
    if length is not None and len(value) != length:
        raise ProtocolError('bad-hex', f"expected {length} bytes, got {len(value)}")
    return value


def _digest(field: str) -> bytes:
    value = _hex(field)
    if len(value) not in _DIGEST_LENGTHS:
        raise ProtocolError('bad-hex', f"{len(value)} bytes is not a digest length")
    return value


def _number(field: str, low: int, high: int) -> int:
    if not _DECIMAL.fullmatch(field):
        raise ProtocolError('bad-number', field[:16])
    value = int(field)
    if not low <= value <= high:
        raise ProtocolError('bad-number', f"{value} outside {low}..{high}")
    return value


def _variant(field: str) -> Variant:
    try:
        return Variant(field)
    except ValueError:
        raise ProtocolError('bad-variant', field[:16])


def encode_message(msg: WireMessage) -> bytes:
    if isinstance(msg, Login):
        fields = ['LOGIN', _encode_user(msg.user_id)]
    elif isinstance(msg, ChallengeMessage):
        c = msg.challenge
        fields = ['CHALLENGE', c.puzzle_digest.hex(), c.salt.hex(), c.mac.hex(), str(c.k_bits)]
        if c.chain_index is not None:
            fields.append(str(c.chain_index))
    elif isinstance(msg, Respond):
        p = msg.payload
        fields = ['RESPOND', _encode_user(p.user_id), p.variant.value]
        if p.variant is Variant.Lamport:
            fields += [str(p.r), p.prev_chain.hex()]
        else:
            fields.append(p.h_rp.hex())
        fields.append(p.mac.hex())
    elif isinstance(msg, Result):
        fields = ['RESULT', 'OK' if msg.ok else 'FAIL']
    elif isinstance(msg, Error):
        fields = ['ERR', msg.code]
    else:
        raise TypeError(f"not a wire message: {msg!r}")
    line = ' '.join(fields).encode('ascii') + CRLF
    if len(line) > MAX_LINE:
        raise ProtocolError('too-long')
    return line


def decode_message(line: bytes) -> WireMessage:
    if len(line) > MAX_LINE:
        raise ProtocolError('too-long')
    if line.endswith(CRLF):
        line = line[:-2]
    elif line.endswith(b'\n'):
        line = line[:-1]
    try:
        text = line.decode('ascii')
    except UnicodeDecodeError:
        raise ProtocolError('not-ascii')
    fields = text.split(' ')
    if any(not field for field in fields) or any(not field.isprintable() for field in fields):
        raise ProtocolError('bad-fields')
    verb, args = fields[0], fields[1:]

    if verb == 'LOGIN':
        if len(args) != 1:
            raise ProtocolError('bad-fields', verb)
        return Login(_decode_user(args[0]))
    if verb == 'CHALLENGE':
        if len(args) not in (4, 5):
            raise ProtocolError('bad-fields', verb)
        chain_index = _number(args[4], 1, 2 ** 63 - 1) if len(args) == 5 else None
        return ChallengeMessage(Challenge(puzzle_digest=_digest(args[0]),
                                          salt=_hex(args[1], SALT_LEN),
                                          mac=_digest(args[2]),
                                          k_bits=_number(args[3], 1, MAX_K_BITS),
                                          chain_index=chain_index))
    if verb == 'RESPOND':
        if len(args) < 2:
            raise ProtocolError('bad-fields', verb)
        user_id, variant = _decode_user(args[0]), _variant(args[1])
        if variant is Variant.Lamport:
            if len(args) != 5:
                raise ProtocolError('bad-fields', verb)
            return Respond(ResponsePayload(user_id=user_id, variant=variant, mac=_digest(args[4]),
                                           r=_number(args[2], 0, 2 ** 32 - 1), prev_chain=_hex(args[3])))
        if len(args) != 4:
            raise ProtocolError('bad-fields', verb)
        return Respond(ResponsePayload(user_id=user_id, variant=variant, mac=_digest(args[3]), h_rp=_digest(args[2])))
    if verb == 'RESULT':
        if args == ['OK']:
            return Result(True)
        if args == ['FAIL']:
            return Result(False)
        raise ProtocolError('bad-fields', verb)
    if verb == 'ERR':
        if len(args) != 1 or not _CODE.fullmatch(args[0]):
            raise ProtocolError('bad-fields', verb)
        return Error(args[0])
    raise ProtocolError('bad-verb', verb[:16])
