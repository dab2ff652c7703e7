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
Online dictionary attack and legitimate-user simulations on a virtual clock.

Both drive the real server engine in-process. Time is charged as puzzle evaluations times seconds
per hash, so results are deterministic for a given seed and independent of the machine.
"""

import collections
import json
import logging
import random
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from .client import LocalTransport, LoginClient
from .config import PuzzleParams, ServerConfig, Variant
from .errors import PuzzleNotFound, ReportError
from .hashcodec import DEFAULT_HASH
from .logging import initialize_log_dict
from .protocol import lamport_prev_chain, make_response, solve_puzzle, verify_response
from .server import ServerEngine
from .userstore import UserStore

logger = logging.getLogger(__name__)

AttemptRecord = collections.namedtuple('AttemptRecord', ['attempt', 'solve_evals', 'result', 'cum_virtual_secs'])
REPORT_COLUMNS = list(AttemptRecord._fields)

RESULT_OK = 'OK'
RESULT_FAIL = 'FAIL'
# The offline-resistant puzzle has no solution under a wrong password; the guess dies locally.
RESULT_UNSOLVED = 'UNSOLVED'

DEFAULT_T_PER_HASH = 5e-6


class ReportFormat(Enum):
    CSV = 'csv'
    JSON = 'json'

    @classmethod
    def for_path(cls, path: Union[str, Path]) -> 'ReportFormat':
        return cls.JSON if Path(path).suffix.lower() == '.json' else cls.CSV


class VirtualClock:
    """Counts hash evaluations; elapsed time is always evaluations * t_per_hash."""

    def __init__(self, t_per_hash: float = DEFAULT_T_PER_HASH):
        assert t_per_hash > 0
        self.t_per_hash = t_per_hash
        self.evaluations = 0

    def charge(self, evaluations: int) -> float:
        assert evaluations >= 0
        self.evaluations += evaluations
        return self.now()

    def now(self) -> float:
        return self.evaluations * self.t_per_hash


class AttackReport:

    def __init__(self,
                 t_per_hash: float = DEFAULT_T_PER_HASH,
                 records: Optional[List[AttemptRecord]] = None,
                 solves: int = 0,
                 reused: int = 0,
                 succeeded: bool = False,
                 config: Optional[Dict] = None):
        self.t_per_hash = t_per_hash
        self.records = list(records or [])
        self.solves = solves
        self.reused = reused
        self.succeeded = succeeded
        self.config = dict(config or {})

    def add(self, solve_evals: int, result: str, clock: VirtualClock):
        self.records.append(AttemptRecord(len(self.records) + 1, solve_evals, result, clock.charge(solve_evals)))
        if result == RESULT_OK:
            self.succeeded = True

    @property
    def attempts(self) -> int:
        return len(self.records)

    @property
    def solve_evals(self) -> np.ndarray:
        return np.array([record.solve_evals for record in self.records], dtype=np.int64)

    @property
    def total_hash_evals(self) -> int:
        return int(self.solve_evals.sum())

    @property
    def virtual_elapsed(self) -> float:
        return self.total_hash_evals * self.t_per_hash

    @property
    def guesses_per_second(self) -> Optional[float]:
        if self.virtual_elapsed == 0:
            return None
        return self.attempts / self.virtual_elapsed

    @property
    def mean_solve_evals(self) -> float:
        solved = self.solve_evals[self.solve_evals > 0]
        return float(np.mean(solved)) if len(solved) else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=REPORT_COLUMNS)

    def to_dict(self) -> Dict:
        return {'attempts': self.attempts,
                'total_hash_evals': self.total_hash_evals,
                'virtual_elapsed': self.virtual_elapsed,
                'guesses_per_second': self.guesses_per_second,
                'solves': self.solves,
                'reused': self.reused,
                'succeeded': self.succeeded,
                't_per_hash': self.t_per_hash,
                'config': self.config,
                'records': [record._asdict() for record in self.records]}

    @classmethod
    def from_dict(cls, values: Dict) -> 'AttackReport':
        records = [AttemptRecord(**{column: record[column] for column in REPORT_COLUMNS})
                   for record in values['records']]
        return cls(t_per_hash=values['t_per_hash'],
                   records=records,
                   solves=values['solves'],
                   reused=values['reused'],
                   succeeded=values['succeeded'],
                   config=values.get('config'))

    def __eq__(self, other):
        return isinstance(other, AttackReport) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return (f"AttackReport(attempts={self.attempts}, solves={self.solves}, "
                f"total_hash_evals={self.total_hash_evals}, succeeded={self.succeeded})")


def _engine(store: UserStore, key: bytes, params: PuzzleParams, randomness, cfg) -> ServerEngine:
    config = ServerConfig(key=key, hash_name=cfg.algorithm)
    return ServerEngine(config, store, randomness, puzzle_params=params)


def _log_run(title: str, user_id: str, params: PuzzleParams, variant: Variant, t_per_hash: float,
             seed: Optional[int], events: int):
    logger.info("***** Running %s *****", title)
    logger.info("  User = %s", user_id)
    for name, value in initialize_log_dict(puzzle_params=params, variant=variant, t_per_hash=t_per_hash,
                                           seed=seed).items():
        logger.info("  %s = %s", name, value)
    logger.info("  Num events = %d", events)


def simulate_online_attack(dictionary: Sequence[Union[str, bytes]],
                           store: UserStore,
                           user_id: str,
                           key: bytes,
                           params: PuzzleParams,
                           t_per_hash: float = DEFAULT_T_PER_HASH,
                           seed: Optional[int] = None,
                           cfg=DEFAULT_HASH,
                           progress: bool = False) -> AttackReport:
    """
    Optimal attacker within the protocol: before spending a solve on a new guess it checks (against the
    live record, without committing anything) whether its previous computation would still be accepted,
    and reuses it if so. Otherwise it requests a challenge, solves it and submits the guess.
    Stops at the first success or when the dictionary runs out.
    """
    assert len(dictionary) > 0, "dictionary must not be empty"
    target = store.get(user_id)
    assert target is not None, f"{user_id!r} is not enrolled"
    variant = target.variant
    engine = _engine(store, key, params, random.Random(seed) if seed is not None else None, cfg)
    clock = VirtualClock(t_per_hash)
    report = AttackReport(t_per_hash, config=initialize_log_dict(puzzle_params=params, variant=variant,
                                                                 t_per_hash=t_per_hash, seed=seed))
    _log_run("online attack simulation", user_id, params, variant, t_per_hash, seed, len(dictionary))

    def response_for(guess: bytes, r: int, challenge):
        if variant is Variant.Lamport:
            return make_response(variant, user_id, r, lamport_prev_chain(guess, challenge.chain_index, cfg),
                                 challenge.mac, cfg)
        return make_response(variant, user_id, r, guess, challenge.mac, cfg)

    challenge = None
    last = None  # (challenge, r) of the most recent submitted computation
    failed_mac = None
    for guess in tqdm(dictionary, desc="Guessing", position=0, leave=True, disable=not progress):
        guess = guess.encode('utf-8') if isinstance(guess, str) else bytes(guess)

        if last is not None:
            payload = response_for(guess, last[1], last[0])
            if verify_response(store.get(user_id), payload, key, cfg).ok:
                report.reused += 1
                ok = engine.check_response(payload)
                report.add(0, RESULT_OK if ok else RESULT_FAIL, clock)
                if ok:
                    break
                continue

        if challenge is None:
            challenge = engine.issue_challenge(user_id)
            if failed_mac is not None:
                assert challenge.mac != failed_mac, "a failed attempt left the next challenge unchanged"
        report.solves += 1
        try:
            solved = solve_puzzle(challenge.puzzle_digest, challenge.salt, challenge.k_bits, variant,
                                  guess if variant is Variant.OfflineResistant else None, cfg)
        except PuzzleNotFound as e:
            # Nothing was sent; the same challenge serves the next guess.
            report.add(e.evaluations, RESULT_UNSOLVED, clock)
            continue

        ok = engine.check_response(response_for(guess, solved.r, challenge))
        report.add(solved.evaluations, RESULT_OK if ok else RESULT_FAIL, clock)
        if ok:
            break
        last, failed_mac, challenge = (challenge, solved.r), challenge.mac, None

    logger.info("Attack finished: %d attempts, %d solves, %d evaluations, success = %s",
                report.attempts, report.solves, report.total_hash_evals, report.succeeded)
    return report


def simulate_legit_user(pattern: Iterable[bool],
                        store: UserStore,
                        user_id: str,
                        password: Union[str, bytes],
                        key: bytes,
                        params: PuzzleParams,
                        t_per_hash: float = DEFAULT_T_PER_HASH,
                        seed: Optional[int] = None,
                        cfg=DEFAULT_HASH,
                        progress: bool = False) -> AttackReport:
    """
    Replays a login pattern through the reference client (True = correct password, False = a typo).
    The report's `solves` against `attempts` shows how often the cached computation was enough.
    """
    pattern = list(pattern)
    password = password.encode('utf-8') if isinstance(password, str) else bytes(password)
    record = store.get(user_id)
    assert record is not None, f"{user_id!r} is not enrolled"
    engine = _engine(store, key, params, random.Random(seed) if seed is not None else None, cfg)
    client = LoginClient(LocalTransport(engine), cfg=cfg)
    clock = VirtualClock(t_per_hash)
    report = AttackReport(t_per_hash, config=initialize_log_dict(puzzle_params=params, variant=record.variant,
                                                                 t_per_hash=t_per_hash, seed=seed))
    _log_run("legitimate user simulation", user_id, params, record.variant, t_per_hash, seed, len(pattern))

    for correct in tqdm(pattern, desc="Logging in", position=0, leave=True, disable=not progress):
        attempt_password = password if correct else password + b'-typo'
        try:
            stats = client.login(user_id, attempt_password, record.variant)
        except PuzzleNotFound as e:
            report.solves += 1
            report.add(e.evaluations, RESULT_UNSOLVED, clock)
            continue
        report.solves += stats.solves
        report.reused += int(stats.cache_hit)
        report.add(stats.evaluations, RESULT_OK if stats.ok else RESULT_FAIL, clock)

    logger.info("%d logins, %d puzzle solves", report.attempts, report.solves)
    return report


def emit_report(report: AttackReport,
                path: Union[str, Path],
                report_format: Optional[ReportFormat] = None) -> Path:
    path = Path(path)
    report_format = report_format or ReportFormat.for_path(path)
    try:
        if report_format is ReportFormat.CSV:
            report.to_frame().to_csv(path, index=False)
        else:
            with path.open('w', encoding='utf-8') as f:
                json.dump(report.to_dict(), f, indent=4)
    except OSError as e:
        raise ReportError(f"cannot write report {path}: {e}")
    logger.info("Writing report to: %s", path)
    return path


def load_report(path: Union[str, Path]) -> AttackReport:
    try:
        with Path(path).open('r', encoding='utf-8') as f:
            return AttackReport.from_dict(json.load(f))
    except (OSError, ValueError, KeyError) as e:
        raise ReportError(f"cannot read report {path}: {e}")
