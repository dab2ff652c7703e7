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
Challenge generation, puzzle solving, response construction and stateless verification.

Base:              puzzle = H(CHAL | r, R)      MAC = H(MAC | H(PROOF | r, P), user, K, n)
OfflineResistant:  puzzle = H(CHAL | r, P, R)   MAC as Base
Lamport:           puzzle = H(CHAL | r, R)      MAC = H(MAC | r, H^i(P), user, K, n)

The server keeps nothing between issuing a challenge and checking the response: r and R are
dropped as soon as the challenge is built, and the MAC carries everything verification needs.
"""

import logging
import multiprocessing
import random
import struct
from typing import List, Optional, Tuple

from tqdm import tqdm

from .config import HashConfig, PuzzleParams, Variant, MAX_K_BITS, DEFAULT_CHAIN_LENGTH
from .data import Challenge, ResponsePayload, SecretMaterial, SolveResult, StateDelta, UserRecord, VerifyOutcome, \
    utc_now
from .errors import ChallengeError, ChainExhaustedError, DomainError, PuzzleNotFound, UnknownUserError
from .hashcodec import DEFAULT_HASH, FieldTag, constant_time_equal, encode_counter, encode_r, field_bytes, \
    hash_chain, hash_tuple, new_hasher

logger = logging.getLogger(__name__)

_R = struct.Struct('>I')
_R_PREFIX = bytes([FieldTag.CHAL.value]) + struct.pack('>I', _R.size)
_PHANTOM_TIMESTAMP = '1970-01-01T00:00:00+00:00'


class FixedEntropy:
    """Entropy source replaying a fixed r and salt; used for golden transcripts."""

    def __init__(self, r: int, salt: bytes):
        self.r = r
        self.salt = bytes(salt)

    def getrandbits(self, k: int) -> int:
        assert self.r < (1 << k), f"fixed r={self.r} does not fit in {k} bits"
        return self.r

    def randbytes(self, n: int) -> bytes:
        assert len(self.salt) == n
        return self.salt


_system_entropy = random.SystemRandom()


def _draw(randomness, params: PuzzleParams) -> Tuple[int, bytes]:
    try:
        r = randomness.getrandbits(params.k_bits) if params.k_bits > 0 else 0
        salt = randomness.randbytes(params.salt_len)
    except (OSError, NotImplementedError, AttributeError) as e:
        raise ChallengeError(f"entropy source failed: {e}")
    if len(salt) != params.salt_len:
        raise ChallengeError("entropy source returned a short salt")
    return r, bytes(salt)


def _puzzle_tail(variant: Variant, salt: bytes, password: Optional[bytes]) -> List[bytes]:
    if variant is Variant.OfflineResistant:
        return [password, salt]
    return [salt]


def proof_digest(r: int, password: bytes, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    """H(r, P): the Base/OfflineResistant proof, also the first MAC field."""
    return hash_tuple(FieldTag.PROOF, [encode_r(r, MAX_K_BITS), password], cfg)


def compute_mac(variant: Variant,
                r: int,
                secret: SecretMaterial,
                user_id: str,
                key: bytes,
                n: int,
                cfg: HashConfig = DEFAULT_HASH) -> bytes:
    user = user_id.encode('utf-8')
    if variant is Variant.Lamport:
        return hash_tuple(FieldTag.MAC, [encode_r(r, MAX_K_BITS), secret.chain_head, user, key, encode_counter(n)], cfg)
    return _mac_from_proof(proof_digest(r, secret.password, cfg), user, key, n, cfg)


def _mac_from_proof(h_rp: bytes, user: bytes, key: bytes, n: int, cfg: HashConfig) -> bytes:
    return hash_tuple(FieldTag.MAC, [h_rp, user, key, encode_counter(n)], cfg)


def gen_challenge(secret: SecretMaterial,
                  user_id: str,
                  n: int,
                  params: PuzzleParams,
                  variant: Variant,
                  key: bytes,
                  randomness=None,
                  cfg: HashConfig = DEFAULT_HASH) -> Challenge:
    assert secret.matches(variant), "secret material does not match the variant"
    if variant is Variant.Lamport and secret.chain_index < 1:
        raise ChainExhaustedError(f"hash chain of {user_id!r} is exhausted; re-enrollment required")
    r, salt = _draw(randomness or _system_entropy, params)
    r_enc = encode_r(r, params.k_bits)
    puzzle = hash_tuple(FieldTag.CHAL, [r_enc] + _puzzle_tail(variant, salt, secret.password), cfg)
    mac = compute_mac(variant, r, secret, user_id, key, n, cfg)
    chain_index = secret.chain_index if variant is Variant.Lamport else None
    # r and salt go out of scope here: the challenge is all that survives.
    return Challenge(puzzle_digest=puzzle, salt=salt, mac=mac, k_bits=params.k_bits, chain_index=chain_index)


def _scan(hasher_prefix, target: bytes, tail: bytes, start: int, stop: int) -> Tuple[Optional[int], int]:
    evaluations = 0
    for r in range(start, stop):
        h = hasher_prefix.copy()
        h.update(_R.pack(r) + tail)
        evaluations += 1
        if h.digest() == target:
            return r, evaluations
    return None, evaluations


def solve_puzzle_init(algorithm: str, target: bytes, tail: bytes):
    global solver_state
    hasher = new_hasher(HashConfig(algorithm))
    hasher.update(_R_PREFIX)
    solver_state = (hasher, target, tail)


def solve_puzzle_chunk(task: Tuple[int, Tuple[int, int]]) -> Tuple[int, Optional[int], int]:
    index, (start, end) = task
    hasher, target, tail = solver_state
    r, evaluations = _scan(hasher, target, tail, start, end)
    return index, r, evaluations


def solve_puzzle(puzzle_digest: bytes,
                 salt: bytes,
                 k_bits: int,
                 variant: Variant,
                 password: Optional[bytes] = None,
                 cfg: HashConfig = DEFAULT_HASH,
                 workers: int = 1,
                 chunk_size: int = 1 << 14,
                 progress: bool = False) -> SolveResult:
    """
    Finds the smallest r in [0, 2^k) whose candidate digest equals the puzzle digest, scanning upwards.
    `evaluations` is the count an ascending scan needs to reach it (r + 1). `performed` is the work
    actually done: with several workers it adds every chunk finished before the pool was stopped.
    Raises PuzzleNotFound after 2^k evaluations if no candidate matches.
    """
    assert (password is not None) == (variant is Variant.OfflineResistant), \
        "the password is needed exactly for the offline-resistant variant"
    if not 0 <= k_bits <= MAX_K_BITS:
        raise DomainError(f"k_bits={k_bits} outside 0..{MAX_K_BITS}")
    space = 1 << k_bits
    tail = field_bytes(_puzzle_tail(variant, salt, password))

    if workers <= 1 or space <= chunk_size:
        prefix = new_hasher(cfg)
        prefix.update(_R_PREFIX)
        r, evaluations = _scan(prefix, puzzle_digest, tail, 0, space)
        if r is None:
            raise PuzzleNotFound(evaluations)
        return SolveResult(r=r, evaluations=evaluations, performed=evaluations)

    bounds = [(start, min(start + chunk_size, space)) for start in range(0, space, chunk_size)]
    logger.debug("Splitting a 2^%d search space into %d chunks over %d workers", k_bits, len(bounds), workers)
    finished = {}
    next_index = 0
    evaluations = 0
    performed = 0
    with multiprocessing.Pool(workers,
                              initializer=solve_puzzle_init,
                              initargs=(cfg.algorithm, puzzle_digest, tail)) as p:
        for index, r, chunk_evaluations in tqdm(p.imap_unordered(solve_puzzle_chunk, enumerate(bounds)),
                                                total=len(bounds),
                                                desc="Solving puzzle",
                                                position=0,
                                                leave=True,
                                                disable=not progress):
            performed += chunk_evaluations
            finished[index] = (r, chunk_evaluations)
            # Chunks are settled in ascending order, so the first match settled is the smallest r.
            while next_index in finished:
                r, chunk_evaluations = finished.pop(next_index)
                evaluations += chunk_evaluations
                next_index += 1
                if r is not None:
                    p.terminate()
                    return SolveResult(r=r, evaluations=evaluations, performed=performed)
    raise PuzzleNotFound(evaluations)


def lamport_prev_chain(password: bytes, chain_index: int, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    """H^(i-1)(P), the value a client presents when the server holds H^i(P)."""
    if chain_index < 1:
        raise ChainExhaustedError("hash chain is exhausted")
    return hash_chain(password, chain_index - 1, cfg)


def make_response(variant: Variant,
                  user_id: str,
                  r: int,
                  secret_for_client: bytes,
                  mac: bytes,
                  cfg: HashConfig = DEFAULT_HASH) -> ResponsePayload:
    """secret_for_client is P for Base/OfflineResistant and H^(i-1)(P) for Lamport."""
    if variant is Variant.Lamport:
        encode_r(r, MAX_K_BITS)
        return ResponsePayload(user_id=user_id, variant=variant, mac=mac, r=r, prev_chain=bytes(secret_for_client))
    return ResponsePayload(user_id=user_id, variant=variant, mac=mac, h_rp=proof_digest(r, secret_for_client, cfg))


def verify_response(record: Optional[UserRecord],
                    resp: ResponsePayload,
                    key: bytes,
                    cfg: HashConfig = DEFAULT_HASH) -> VerifyOutcome:
    """
    Recomputes the MAC from the stored record and the response only; no per-challenge state exists.
    The stored identity is used in the MAC, so a response bound to another user never matches.
    """
    if record is None:
        raise UnknownUserError(resp.user_id)
    user = record.user_id.encode('utf-8')
    if record.variant is Variant.Lamport:
        if record.secret.chain_index < 1:
            raise ChainExhaustedError(f"hash chain of {record.user_id!r} is exhausted")
        if resp.variant is not Variant.Lamport or resp.r is None or resp.prev_chain is None \
                or not 0 <= resp.r <= 0xFFFFFFFF:
            return VerifyOutcome.fail()
        expected = hash_tuple(FieldTag.MAC, [encode_r(resp.r, MAX_K_BITS), record.secret.chain_head, user, key,
                                             encode_counter(record.n)], cfg)
        mac_ok = constant_time_equal(expected, resp.mac)
        chain_ok = constant_time_equal(hash_tuple(FieldTag.CHAIN, [resp.prev_chain], cfg), record.secret.chain_head)
        if mac_ok and chain_ok:
            return VerifyOutcome.advance(resp.prev_chain, record.secret.chain_index - 1)
        return VerifyOutcome.fail()

    if resp.variant is not record.variant or resp.h_rp is None:
        return VerifyOutcome.fail()
    expected = _mac_from_proof(resp.h_rp, user, key, record.n, cfg)
    if constant_time_equal(expected, resp.mac):
        return VerifyOutcome.success()
    return VerifyOutcome.fail()


def apply_outcome(record: UserRecord, outcome: VerifyOutcome) -> UserRecord:
    if outcome.delta is StateDelta.Unchanged:
        return record
    updated = record.copy()
    if outcome.delta is StateDelta.IncrementN:
        updated.n = record.n + 1
    else:
        if record.secret.chain_index is None or record.secret.chain_index < 1 or outcome.new_index < 0:
            raise ChainExhaustedError(f"hash chain of {record.user_id!r} cannot advance further")
        updated.secret = SecretMaterial.for_chain(outcome.new_head, outcome.new_index)
    updated.updated_at = utc_now()
    return updated


def phantom_record(user_id: str,
                   key: bytes,
                   variant: Variant = Variant.Base,
                   chain_length: int = DEFAULT_CHAIN_LENGTH,
                   cfg: HashConfig = DEFAULT_HASH) -> UserRecord:
    """Decoy record for an unknown user, derived from the server key so it is stable across requests."""
    seed = hash_tuple(FieldTag.MAC, [b'phantom', key, user_id.encode('utf-8')], cfg)
    if variant is Variant.Lamport:
        secret = SecretMaterial.for_chain(seed, chain_length)
    else:
        secret = SecretMaterial.for_password(seed)
    return UserRecord(user_id, variant, secret, n=0, created_at=_PHANTOM_TIMESTAMP)


def honest_login(record: UserRecord,
                 password: bytes,
                 params: PuzzleParams,
                 key: bytes,
                 randomness=None,
                 cfg: HashConfig = DEFAULT_HASH) -> Tuple[ResponsePayload, SolveResult]:
    """One full challenge, solve and respond round for a client holding the right password."""
    challenge = gen_challenge(record.secret, record.user_id, record.n, params, record.variant, key, randomness, cfg)
    solved = solve_puzzle(challenge.puzzle_digest, challenge.salt, challenge.k_bits, record.variant,
                          password if record.variant is Variant.OfflineResistant else None, cfg)
    if record.variant is Variant.Lamport:
        secret_for_client = lamport_prev_chain(password, challenge.chain_index, cfg)
    else:
        secret_for_client = password
    return make_response(record.variant, record.user_id, solved.r, secret_for_client, challenge.mac, cfg), solved


