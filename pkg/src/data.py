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
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from .config import Variant


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


class SecretMaterial(collections.namedtuple('SecretMaterial', ['password', 'chain_head', 'chain_index'])):
    """Plaintext password (Base / OfflineResistant) or Lamport chain head H^i(P) with its index i."""

    @classmethod
    def for_password(cls, password: bytes) -> 'SecretMaterial':
        return cls(password=bytes(password), chain_head=None, chain_index=None)

    @classmethod
    def for_chain(cls, chain_head: bytes, chain_index: int) -> 'SecretMaterial':
        assert chain_index >= 0
        return cls(password=None, chain_head=bytes(chain_head), chain_index=chain_index)

    @property
    def is_chain(self) -> bool:
        return self.chain_head is not None

    def matches(self, variant: Variant) -> bool:
        return self.is_chain == (variant is Variant.Lamport)


Challenge = collections.namedtuple(
    'Challenge', ['puzzle_digest', 'salt', 'mac', 'k_bits', 'chain_index'], defaults=(None,)
)

ResponsePayload = collections.namedtuple(
    'ResponsePayload', ['user_id', 'variant', 'mac', 'h_rp', 'r', 'prev_chain'], defaults=(None, None, None)
)

SolveResult = collections.namedtuple('SolveResult', ['r', 'evaluations', 'performed'])


class VerifyResult(Enum):
    Success = 'OK'
    Fail = 'FAIL'


class StateDelta(Enum):
    Unchanged = 'none'
    IncrementN = 'increment_n'
    AdvanceChain = 'advance_chain'


class VerifyOutcome(collections.namedtuple('VerifyOutcome', ['result', 'delta', 'new_head', 'new_index'])):

    @classmethod
    def success(cls) -> 'VerifyOutcome':
        return cls(VerifyResult.Success, StateDelta.Unchanged, None, None)

    @classmethod
    def fail(cls) -> 'VerifyOutcome':
        return cls(VerifyResult.Fail, StateDelta.IncrementN, None, None)

    @classmethod
    def advance(cls, new_head: bytes, new_index: int) -> 'VerifyOutcome':
        return cls(VerifyResult.Success, StateDelta.AdvanceChain, bytes(new_head), new_index)

    @property
    def ok(self) -> bool:
        return self.result is VerifyResult.Success


class UserRecord:

    def __init__(self,
                 user_id: str,
                 variant: Variant,
                 secret: SecretMaterial,
                 n: int = 0,
                 created_at: Optional[str] = None,
                 updated_at: Optional[str] = None):
        assert secret.matches(variant), f"secret material does not match variant {variant.value}"
        self.user_id = user_id
        self.variant = variant
        self.secret = secret
        self.n = n
        self.created_at = created_at or utc_now()
        self.updated_at = updated_at or self.created_at

    def copy(self) -> 'UserRecord':
        return UserRecord(self.user_id, self.variant, self.secret, self.n, self.created_at, self.updated_at)

    def _key(self):
        return self.user_id, self.variant, self.secret, self.n, self.created_at, self.updated_at

    def __eq__(self, other):
        return isinstance(other, UserRecord) and self._key() == other._key()

    def __repr__(self):
        if self.secret.is_chain:
            secret = f"chain_index={self.secret.chain_index}"
        else:
            secret = "password=<hidden>"
        return f"UserRecord({self.user_id!r}, {self.variant.value}, {secret}, n={self.n})"
