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

from typing import Dict, Optional

from src.config import PuzzleParams, ServerConfig, Variant
from src.hashcodec import digest


def key_fingerprint(key: bytes) -> str:
    return digest(key)[:8].hex()


def initialize_log_dict(server_config: Optional[ServerConfig] = None,
                        puzzle_params: Optional[PuzzleParams] = None,
                        variant: Optional[Variant] = None,
                        t_per_hash: Optional[float] = None,
                        seed: Optional[int] = None) -> Dict:
    log_dict = {}
    if server_config is not None:
        log_dict.update({'KEY_FINGERPRINT': key_fingerprint(server_config.key),
                         'HASH': server_config.hash_config.algorithm,
                         'K_BITS': server_config.k_bits,
                         'DEFAULT_VARIANT': server_config.default_variant.value,
                         'READ_TIMEOUT_SECS': server_config.read_timeout_secs,
                         'CHAIN_LENGTH': server_config.chain_length,
                         'LISTEN': f"{server_config.listen[0]}:{server_config.listen[1]}"})
    if puzzle_params is not None:
        log_dict['K_BITS'] = puzzle_params.k_bits
        log_dict['SALT_LEN'] = puzzle_params.salt_len
    if variant is not None:
        log_dict['VARIANT'] = variant.value
    if t_per_hash is not None:
        log_dict['T_PER_HASH'] = t_per_hash
    if seed is not None:
        log_dict['SEED'] = seed
    return log_dict
