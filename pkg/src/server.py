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

import logging
import socket
import socketserver
import threading
import time
from typing import Callable, Optional

from .config import PuzzleParams, ServerConfig
from .data import Challenge, ResponsePayload
from .errors import ChainExhaustedError, ProtocolError, StartupError, UnknownUserError
from .logging import initialize_log_dict
from .protocol import gen_challenge, phantom_record, verify_response
from .userstore import UserStore
from .wire import MAX_LINE, ChallengeMessage, Error, Login, Respond, Result, decode_message, encode_message

logger = logging.getLogger(__name__)


class ServerEngine:
    """
    Transport-independent server side of the protocol. Holds no per-challenge state: a challenge is
    built from the stored record and forgotten, and a response is checked against the stored record only.
    """

    def __init__(self,
                 config: ServerConfig,
                 store: UserStore,
                 randomness=None,
                 puzzle_params: Optional[PuzzleParams] = None):
        self.config = config
        self.store = store
        self.randomness = randomness
        # Simulations override the configured difficulty, including the k = 0 control.
        self.puzzle_params = puzzle_params or config.puzzle_params

    def _challenge_for(self, record) -> Challenge:
        return gen_challenge(record.secret, record.user_id, record.n, self.puzzle_params, record.variant,
                             self.config.key, self.randomness, self.config.hash_config)

    def issue_challenge(self, user_id: str) -> Challenge:
        try:
            return self.store.with_record(user_id, lambda record: (self._challenge_for(record), None))
        except UnknownUserError:
            logger.debug("Decoy challenge for unknown user %r", user_id)
            return self._challenge_for(phantom_record(user_id, self.config.key, self.config.default_variant,
                                                      self.config.chain_length, self.config.hash_config))

    def check_response(self, payload: ResponsePayload) -> bool:
        def transaction(record):
            outcome = verify_response(record, payload, self.config.key, self.config.hash_config)
            return outcome.ok, outcome

        try:
            ok = self.store.with_record(payload.user_id, transaction)
        except UnknownUserError:
            logger.info("Response for unknown user %r rejected", payload.user_id)
            return False
        logger.info("Login %s for %s", "succeeded" if ok else "failed", payload.user_id)
        return ok

    def handle_line(self, line: bytes) -> bytes:
        try:
            message = decode_message(line)
            if isinstance(message, Login):
                return encode_message(ChallengeMessage(self.issue_challenge(message.user_id)))
            if isinstance(message, Respond):
                return encode_message(Result(self.check_response(message.payload)))
            raise ProtocolError('unexpected', type(message).__name__)
        except ProtocolError as e:
            logger.debug("Protocol error: %s", e)
            return encode_message(Error(e.code))
        except ChainExhaustedError as e:
            logger.warning("%s", e)
            return encode_message(Error('chain-exhausted'))


class CompChallRequestHandler(socketserver.StreamRequestHandler):
    # One request line, one reply line, then the connection closes.

    def setup(self):
        self.timeout_secs = self.server.engine.config.read_timeout_secs
        self.request.settimeout(self.timeout_secs)
        super(CompChallRequestHandler, self).setup()

    def read_line(self) -> bytes:
        """Reads up to MAX_LINE + 1 bytes or the first newline, whichever comes first, within one deadline."""
        deadline = time.monotonic() + self.timeout_secs
        buffer = bytearray()
        while b'\n' not in buffer and len(buffer) <= MAX_LINE:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise socket.timeout("connection deadline passed")
            self.request.settimeout(remaining)
            chunk = self.request.recv(MAX_LINE + 1 - len(buffer))
            if not chunk:
                break
            buffer += chunk
        self.request.settimeout(self.timeout_secs)
        end = buffer.find(b'\n')
        return bytes(buffer[:end + 1] if end >= 0 else buffer)

    def handle(self):
        try:
            line = self.read_line()
            if not line:
                return
            if len(line) > MAX_LINE:
                reply = encode_message(Error('too-long'))
            else:
                reply = self.server.engine.handle_line(line)
            self.wfile.write(reply)
        except socket.timeout:
            logger.debug("Read timeout from %s", self.client_address)
        except OSError as e:
            logger.debug("Connection error from %s: %s", self.client_address, e)
        except Exception:
            logger.exception("Unexpected error while serving %s", self.client_address)
            try:
                self.wfile.write(encode_message(Error('internal')))
            except OSError:
                pass


class CompChallServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self,
                 address,
                 engine: ServerEngine,
                 wrap_socket: Optional[Callable[[socket.socket], socket.socket]] = None):
        self.engine = engine
        self.wrap_socket = wrap_socket
        super(CompChallServer, self).__init__(address, CompChallRequestHandler)

    def get_request(self):
        connection, address = super(CompChallServer, self).get_request()
        if self.wrap_socket is not None:
            # e.g. functools.partial(ssl_context.wrap_socket, server_side=True)
            connection = self.wrap_socket(connection)
        return connection, address

    @property
    def address(self):
        return self.server_address[0], self.server_address[1]


def serve(config: ServerConfig,
          store: UserStore,
          background: bool = False,
          wrap_socket: Optional[Callable[[socket.socket], socket.socket]] = None,
          randomness=None) -> CompChallServer:
    engine = ServerEngine(config, store, randomness)
    try:
        server = CompChallServer(config.listen, engine, wrap_socket)
    except OSError as e:
        raise StartupError(f"cannot bind {config.listen[0]}:{config.listen[1]}: {e}")

    logger.info("***** Serving CompChall *****")
    for name, value in initialize_log_dict(server_config=config).items():
        logger.info("  %s = %s", name, value)
    logger.info("  Bound to = %s:%d", *server.address)
    logger.info("  Users = %d", len(store))

    if background:
        thread = threading.Thread(target=server.serve_forever, name="compchall-server", daemon=True)
        thread.start()
    else:
        try:
            server.serve_forever()
        finally:
            server.server_close()
    return server
