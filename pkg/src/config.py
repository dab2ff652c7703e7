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

import json
import logging
import os
import secrets
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

SALT_LEN = 16
KEY_LEN = 32
MAX_K_BITS = 32
DEFAULT_K_BITS = 20
DEFAULT_CHAIN_LENGTH = 1000
DEFAULT_READ_TIMEOUT_SECS = 10.0
DEFAULT_LISTEN = ('127.0.0.1', 7878)
KEY_ENV_VARIABLE = 'COMPCHALL_KEY'


class Variant(Enum):
    Base = 'base'
    Lamport = 'lamport'
    OfflineResistant = 'offline'

    @classmethod
    def from_name(cls, name: str) -> 'Variant':
        try:
            return cls(name)
        except ValueError:
            raise ConfigurationError(f"unknown variant {name!r}, expected one of "
                                     f"{', '.join(v.value for v in cls)}")


class HashAlgorithm(Enum):
    # (hashlib name, digest length in bytes)
    SHA256 = ('sha256', 32)
    SHA384 = ('sha384', 48)
    SHA512 = ('sha512', 64)
    SHA3_256 = ('sha3_256', 32)
    SHA3_512 = ('sha3_512', 64)
    BLAKE2b = ('blake2b', 64)
    BLAKE2s = ('blake2s', 32)


hash_algorithm_mapping = {algorithm.value[0]: algorithm for algorithm in HashAlgorithm}


class HashConfig:
    def __init__(self, algorithm: str = 'sha256'):
        if algorithm not in hash_algorithm_mapping:
            raise ConfigurationError(f"unsupported hash algorithm {algorithm!r}; "
                                     f"supported: {', '.join(sorted(hash_algorithm_mapping))}")
        self.algorithm = algorithm
        self.digest_len = hash_algorithm_mapping[algorithm].value[1]

    def __eq__(self, other):
        return isinstance(other, HashConfig) and other.algorithm == self.algorithm

    def __hash__(self):
        return hash(self.algorithm)

    def __repr__(self):
        return f"HashConfig({self.algorithm!r})"


class PuzzleParams:
    def __init__(self,
                 k_bits: int = DEFAULT_K_BITS,
                 salt_len: int = SALT_LEN):
        if not 1 <= k_bits <= MAX_K_BITS:
            raise ConfigurationError(f"k_bits must lie in 1..{MAX_K_BITS}, got {k_bits}")
        if salt_len != SALT_LEN:
            raise ConfigurationError(f"salt length is fixed at {SALT_LEN} bytes")
        self.k_bits = k_bits
        self.salt_len = salt_len

    @classmethod
    def disabled(cls) -> 'PuzzleParams':
        """Control setting for simulations: a single candidate (r = 0), i.e. no puzzle work."""
        params = cls.__new__(cls)
        params.k_bits = 0
        params.salt_len = SALT_LEN
        return params

    @property
    def search_space(self) -> int:
        return 1 << self.k_bits

    def __repr__(self):
        return f"PuzzleParams(k_bits={self.k_bits})"


def parse_address(address: str) -> Tuple[str, int]:
    host, separator, port = address.rpartition(':')
    if not separator or not port.isdigit():
        raise ConfigurationError(f"address must be host:port, got {address!r}")
    return host or '0.0.0.0', int(port)


class ServerConfig:
    def __init__(self,
                 key: bytes,
                 k_bits: int = DEFAULT_K_BITS,
                 hash_name: str = 'sha256',
                 default_variant: Variant = Variant.Base,
                 read_timeout_secs: float = DEFAULT_READ_TIMEOUT_SECS,
                 chain_length: int = DEFAULT_CHAIN_LENGTH,
                 listen: Tuple[str, int] = DEFAULT_LISTEN):
        if len(key) != KEY_LEN:
            raise ConfigurationError(f"server key must be {KEY_LEN} bytes, got {len(key)}")
        if read_timeout_secs <= 0:
            raise ConfigurationError("read_timeout_secs must be positive")
        if chain_length < 1:
            raise ConfigurationError("chain_length must be at least 1")
        self.key = key
        self.puzzle_params = PuzzleParams(k_bits=k_bits)
        self.hash_config = HashConfig(hash_name)
        self.default_variant = default_variant
        self.read_timeout_secs = read_timeout_secs
        self.chain_length = chain_length
        self.listen = listen

    @property
    def k_bits(self) -> int:
        return self.puzzle_params.k_bits

    @staticmethod
    def generate_key() -> bytes:
        return secrets.token_bytes(KEY_LEN)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'ServerConfig':
        path = Path(path)
        try:
            with path.open('r', encoding='utf-8') as f:
                values = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read config file {path}: {e}")
        key_hex = os.environ.get(KEY_ENV_VARIABLE, values.get('key_hex'))
        if os.environ.get(KEY_ENV_VARIABLE):
            logger.info("Server key taken from %s", KEY_ENV_VARIABLE)
        if not key_hex:
            raise ConfigurationError(f"no server key: set key_hex in {path} or {KEY_ENV_VARIABLE}")
        try:
            key = bytes.fromhex(key_hex)
        except (TypeError, ValueError):
            raise ConfigurationError("key_hex is not valid hex")
        listen = values.get('listen')
        try:
            k_bits = int(values.get('k_bits', DEFAULT_K_BITS))
            read_timeout_secs = float(values.get('read_timeout_secs', DEFAULT_READ_TIMEOUT_SECS))
            chain_length = int(values.get('chain_length', DEFAULT_CHAIN_LENGTH))
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"invalid number in config file {path}: {e}")
        return cls(key=key,
                   k_bits=k_bits,
                   hash_name=values.get('hash', 'sha256'),
                   default_variant=Variant.from_name(values.get('default_variant', Variant.Base.value)),
                   read_timeout_secs=read_timeout_secs,
                   chain_length=chain_length,
                   listen=parse_address(listen) if listen else DEFAULT_LISTEN)

    def to_file(self, path: Union[str, Path]):
        path = Path(path)
        values = {'key_hex': self.key.hex(),
                  'k_bits': self.k_bits,
                  'hash': self.hash_config.algorithm,
                  'default_variant': self.default_variant.value,
                  'read_timeout_secs': self.read_timeout_secs,
                  'chain_length': self.chain_length,
                  'listen': f"{self.listen[0]}:{self.listen[1]}"}
        # The key must never be readable by other users.
        fd = os.open(str(path), os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            json.dump(values, f, indent=4)
        os.chmod(path, 0o600)


def output_path(default: Optional[Path] = None) -> Path:
    return Path(os.environ.get('COMPCHALL_OUTPUT_PATH', default or Path.cwd() / 'output'))
