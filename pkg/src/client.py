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

import collections
import json
import logging
import socket
import time
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from .config import HashConfig, Variant
from .data import Challenge, ResponsePayload
from .errors import ProtocolError
from .hashcodec import DEFAULT_HASH, FieldTag, hash_tuple
from .protocol import lamport_prev_chain, make_response, solve_puzzle
from .wire import MAX_LINE, ChallengeMessage, Error, Login, Respond, Result, decode_message, encode_message

logger = logging.getLogger(__name__)

CachedComputation = collections.namedtuple('CachedComputation', ['r', 'mac', 'fingerprint'])

LoginStats = collections.namedtuple(
    'LoginStats', ['ok', 'evaluations', 'solve_seconds', 'solves', 'attempts', 'cache_hit', 'performed'],
    defaults=(0,)
)


def hashes_per_second(stats: LoginStats) -> Optional[float]:
    if stats.solves == 0 or stats.solve_seconds <= 0:
        return None
    # work actually done, not the canonical count
    return stats.performed / stats.solve_seconds


def password_fingerprint(password: bytes, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    return hash_tuple(FieldTag.PROOF, [password], cfg)


class ResponseCache:
    """Last successful computation per user, kept on the client only."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self._entries: Dict[str, CachedComputation] = {}
        if self.path is not None and self.path.exists():
            with self.path.open('r', encoding='utf-8') as f:
                for user_id, entry in json.load(f).items():
                    self._entries[user_id] = CachedComputation(int(entry['r']),
                                                               bytes.fromhex(entry['mac']),
                                                               bytes.fromhex(entry['fingerprint']))

    def __contains__(self, user_id: str) -> bool:
        return user_id in self._entries

    def get(self, user_id: str) -> Optional[CachedComputation]:
        return self._entries.get(user_id)

    def put(self, user_id: str, entry: CachedComputation):
        self._entries[user_id] = entry
        self._flush()

    def drop(self, user_id: str):
        if self._entries.pop(user_id, None) is not None:
            self._flush()

    def _flush(self):
        if self.path is None:
            return
        with self.path.open('w', encoding='utf-8') as f:
            json.dump({user_id: {'r': entry.r, 'mac': entry.mac.hex(), 'fingerprint': entry.fingerprint.hex()}
                       for user_id, entry in self._entries.items()}, f, indent=4)


class TcpTransport:
    """Each call opens its own connection: the server never links message 2 to message 3."""

    def __init__(self, address: Tuple[str, int], timeout: float = 10.0, wrap_socket=None):
        self.address = address
        self.timeout = timeout
        self.wrap_socket = wrap_socket

    def _exchange(self, message) -> object:
        with socket.create_connection(self.address, timeout=self.timeout) as sock:
            if self.wrap_socket is not None:
                sock = self.wrap_socket(sock)
            sock.sendall(encode_message(message))
            with sock.makefile('rb') as stream:
                line = stream.readline(MAX_LINE + 1)
        if not line:
            raise ProtocolError('unexpected', "connection closed without a reply")
        reply = decode_message(line)
        if isinstance(reply, Error):
            raise ProtocolError(reply.code, "reported by server")
        return reply

    def request_challenge(self, user_id: str) -> Challenge:
        reply = self._exchange(Login(user_id))
        if not isinstance(reply, ChallengeMessage):
            raise ProtocolError('unexpected', f"expected CHALLENGE, got {type(reply).__name__}")
        return reply.challenge

    def submit(self, payload: ResponsePayload) -> bool:
        reply = self._exchange(Respond(payload))
        if not isinstance(reply, Result):
            raise ProtocolError('unexpected', f"expected RESULT, got {type(reply).__name__}")
        return reply.ok


class LocalTransport:
    """Drives a ServerEngine in-process; used by the simulators."""

    def __init__(self, engine):
        self.engine = engine

    def request_challenge(self, user_id: str) -> Challenge:
        return self.engine.issue_challenge(user_id)

    def submit(self, payload: ResponsePayload) -> bool:
        return self.engine.check_response(payload)


class LoginClient:
    """
    Reference client. After a success the solved r and the MAC are cached (Base and offline-resistant
    only) and the next login tries them first. A failed cached attempt with an unchanged password means
    the account's counter moved on, so the client solves afresh; with a different password the failure
    is the password's and no fresh solve is spent.
    """

    def __init__(self,
                 transport,
                 cache: Optional[ResponseCache] = None,
                 cfg: HashConfig = DEFAULT_HASH,
                 workers: int = 1):
        self.transport = transport
        self.cache = cache if cache is not None else ResponseCache()
        self.cfg = cfg
        self.workers = workers

    def login(self, user_id: str, password: Union[str, bytes], variant: Variant = Variant.Base) -> LoginStats:
        password = password.encode('utf-8') if isinstance(password, str) else bytes(password)
        fingerprint = password_fingerprint(password, self.cfg)
        attempts = 0

        cached = self.cache.get(user_id) if variant is not Variant.Lamport else None
        if cached is not None:
            attempts += 1
            payload = make_response(variant, user_id, cached.r, password, cached.mac, self.cfg)
            if self.transport.submit(payload):
                logger.info("Reused the last computation for %s", user_id)
                return LoginStats(True, 0, 0.0, 0, attempts, True)
            self.cache.drop(user_id)
            if cached.fingerprint != fingerprint:
                return LoginStats(False, 0, 0.0, 0, attempts, False)
            logger.info("Cached computation for %s is stale, solving afresh", user_id)

        challenge = self.transport.request_challenge(user_id)
        if variant is Variant.Lamport and challenge.chain_index is None:
            raise ProtocolError('bad-fields', "challenge for a Lamport login carries no chain index")
        start = time.perf_counter()
        solved = solve_puzzle(challenge.puzzle_digest, challenge.salt, challenge.k_bits, variant,
                              password if variant is Variant.OfflineResistant else None, self.cfg,
                              workers=self.workers)
        elapsed = time.perf_counter() - start
        logger.info("Solved a %d-bit puzzle in %d evaluations (%.3f s)", challenge.k_bits, solved.evaluations, elapsed)

        if variant is Variant.Lamport:
            secret_for_client = lamport_prev_chain(password, challenge.chain_index, self.cfg)
        else:
            secret_for_client = password
        attempts += 1
        ok = self.transport.submit(make_response(variant, user_id, solved.r, secret_for_client, challenge.mac,
                                                 self.cfg))
        if ok and variant is not Variant.Lamport:
            self.cache.put(user_id, CachedComputation(solved.r, challenge.mac, fingerprint))
        return LoginStats(ok, solved.evaluations, elapsed, 1, attempts, False, solved.performed)


def client_login(address: Tuple[str, int],
                 user_id: str,
                 password: Union[str, bytes],
                 variant: Variant = Variant.Base,
                 cache: Optional[ResponseCache] = None,
                 timeout: float = 10.0,
                 workers: int = 1,
                 cfg: HashConfig = DEFAULT_HASH) -> LoginStats:
    return LoginClient(TcpTransport(address, timeout), cache, cfg, workers).login(user_id, password, variant)
