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
Per-user records: the only mutable state of the protocol.

Store file (line-delimited JSON, binary values as lowercase hex):
    line 1:  {"format_version": 1, "hash": "sha256", "k_bits": 20, "note": ...}
    line 2+: one record per line

Base and offline-resistant records keep the password in plaintext, because the server has to compute
H(r, P) for the MAC. Only Lamport records avoid this. Protect the file accordingly.
"""

import json
import logging
import os
import tempfile
import threading
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, TypeVar, Union

from .config import HashConfig, Variant, DEFAULT_CHAIN_LENGTH, DEFAULT_K_BITS
from .data import SecretMaterial, UserRecord, VerifyOutcome
from .errors import ConfigurationError, EnrollmentError, IncompatibleStoreError, StoreError, StoreParseError, \
    UnknownUserError
from .hashcodec import DEFAULT_HASH, hash_chain
from .protocol import apply_outcome

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
PLAINTEXT_NOTE = "base/offline records hold plaintext passwords; restrict access to this file"

T = TypeVar('T')
Transaction = Callable[[UserRecord], Tuple[T, Optional[VerifyOutcome]]]


def record_to_dict(record: UserRecord) -> Dict:
    entry = {'user_id': record.user_id, 'variant': record.variant.value, 'n': record.n}
    if record.secret.is_chain:
        entry['chain_head'] = record.secret.chain_head.hex()
        entry['chain_index'] = record.secret.chain_index
    else:
        entry['password'] = record.secret.password.hex()
    entry['created_at'] = record.created_at
    entry['updated_at'] = record.updated_at
    return entry


def record_from_dict(entry: Dict) -> UserRecord:
    variant = Variant(entry['variant'])
    if variant is Variant.Lamport:
        if int(entry['chain_index']) < 0:
            raise ValueError("negative chain index")
        secret = SecretMaterial.for_chain(bytes.fromhex(entry['chain_head']), int(entry['chain_index']))
    else:
        secret = SecretMaterial.for_password(bytes.fromhex(entry['password']))
    n = int(entry['n'])
    if n < 0:
        raise ValueError("negative failure counter")
    return UserRecord(user_id=str(entry['user_id']),
                      variant=variant,
                      secret=secret,
                      n=n,
                      created_at=entry['created_at'],
                      updated_at=entry['updated_at'])


def _as_bytes(password: Union[str, bytes]) -> bytes:
    return password.encode('utf-8') if isinstance(password, str) else bytes(password)


class UserStore:

    def __init__(self,
                 path: Optional[Union[str, Path]] = None,
                 hash_config: HashConfig = DEFAULT_HASH,
                 k_bits: int = DEFAULT_K_BITS):
        self.path = Path(path) if path is not None else None
        self.hash_config = hash_config
        self.k_bits = k_bits
        self.fault_hook: Optional[Callable[[str], None]] = None
        self._records: Dict[str, UserRecord] = {}
        self._locks: Dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._write_lock = threading.Lock()

    def __len__(self):
        return len(self._records)

    def __contains__(self, user_id: str) -> bool:
        return user_id in self._records

    def users(self) -> List[str]:
        return sorted(self._records)

    def get(self, user_id: str) -> Optional[UserRecord]:
        record = self._records.get(user_id)
        return record.copy() if record is not None else None

    def _lock_for(self, user_id: str, create: bool = False) -> threading.Lock:
        # Locks exist only for enrolled ids, so unknown-user traffic leaves no trace.
        with self._registry_lock:
            lock = self._locks.get(user_id)
            if lock is None:
                if not create and user_id not in self._records:
                    raise UnknownUserError(user_id)
                lock = self._locks[user_id] = threading.Lock()
            return lock

    def _fault(self, stage: str):
        if self.fault_hook is not None:
            self.fault_hook(stage)

    def _commit(self, record: UserRecord):
        with self._write_lock:
            if self.path is not None:
                snapshot = dict(self._records)
                snapshot[record.user_id] = record
                self._write(self.path, snapshot)
            self._records[record.user_id] = record

    def enroll(self,
               user_id: str,
               password: Union[str, bytes],
               variant: Variant,
               m: int = DEFAULT_CHAIN_LENGTH) -> UserRecord:
        if not user_id:
            raise EnrollmentError("user id must not be empty")
        password = _as_bytes(password)
        if not password:
            raise EnrollmentError("password must not be empty")
        if variant is Variant.Lamport:
            if m < 1:
                raise EnrollmentError(f"chain length must be at least 1, got {m}")
            secret = SecretMaterial.for_chain(hash_chain(password, m, self.hash_config), m)
        else:
            secret = SecretMaterial.for_password(password)
        with self._lock_for(user_id, create=True):
            if user_id in self._records:
                raise EnrollmentError(f"user {user_id!r} is already enrolled")
            record = UserRecord(user_id, variant, secret, n=0)
            self._commit(record)
        logger.info("Enrolled %s (%s)", user_id, variant.value)
        return record.copy()

    def with_record(self, user_id: str, transaction: Transaction) -> T:
        """
        Runs `transaction` on a copy of the user's record under the user's lock. A returned outcome is
        applied and persisted before the lock is released; if anything fails before the commit the
        stored record is left as it was.
        """
        with self._lock_for(user_id):
            record = self._records.get(user_id)
            if record is None:
                raise UnknownUserError(user_id)
            result, outcome = transaction(record.copy())
            if outcome is None:
                return result
            updated = apply_outcome(record, outcome)
            self._fault('apply')
            if updated is not record:
                self._commit(updated)
            return result

    def save(self, path: Optional[Union[str, Path]] = None):
        path = Path(path) if path is not None else self.path
        if path is None:
            raise StoreError("no path to save the store to")
        with self._write_lock:
            self._write(path, dict(self._records))

    def _header(self) -> Dict:
        return {'format_version': FORMAT_VERSION,
                'hash': self.hash_config.algorithm,
                'k_bits': self.k_bits,
                'note': PLAINTEXT_NOTE}

    def _write(self, path: Path, records: Dict[str, UserRecord]):
        lines = [json.dumps(self._header())]
        lines.extend(json.dumps(record_to_dict(records[user_id])) for user_id in sorted(records))
        directory = path.parent if str(path.parent) else Path('.')
        try:
            fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=directory)
            try:
                with os.fdopen(fd, 'w', encoding='utf-8') as f:
                    f.write('\n'.join(lines) + '\n')
                    f.flush()
                    os.fsync(f.fileno())
                self._fault('replace')
                os.replace(tmp_name, path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as e:
            raise StoreError(f"cannot write store file {path}: {e}")

    @classmethod
    def load(cls,
             path: Union[str, Path],
             hash_config: Optional[HashConfig] = None,
             bind: bool = True) -> 'UserStore':
        """
        Reads a store file. With `hash_config` the file's algorithm must match it. With `bind` the
        returned store persists later mutations back to the same file.
        """
        path = Path(path)
        try:
            with path.open('r', encoding='utf-8') as f:
                lines = f.read().splitlines()
        except OSError as e:
            raise StoreError(f"cannot read store file {path}: {e}")
        if not lines:
            raise StoreParseError(1, "missing header")
        try:
            header = json.loads(lines[0])
            version = header['format_version']
            algorithm = header['hash']
            k_bits = int(header['k_bits'])
        except (ValueError, KeyError, TypeError) as e:
            raise StoreParseError(1, f"malformed header: {e}")
        if version != FORMAT_VERSION:
            raise IncompatibleStoreError(f"store format version {version}, expected {FORMAT_VERSION}")
        if hash_config is not None and algorithm != hash_config.algorithm:
            raise IncompatibleStoreError(f"store uses {algorithm}, configuration expects {hash_config.algorithm}")
        try:
            file_hash = HashConfig(algorithm)
        except ConfigurationError as e:
            raise IncompatibleStoreError(str(e))

        store = cls(path=None, hash_config=file_hash, k_bits=k_bits)
        for line_number, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                record = record_from_dict(json.loads(line))
            except (ValueError, KeyError, TypeError, AssertionError) as e:
                raise StoreParseError(line_number, f"malformed record: {e}")
            if record.user_id in store._records:
                raise StoreParseError(line_number, f"duplicate user {record.user_id!r}")
            store._records[record.user_id] = record
        if bind:
            store.path = path
        logger.info("Loaded %d user records from %s", len(store), path)
        return store
