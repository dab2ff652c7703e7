#!/usr/bin/env python
# coding=utf-8
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
""" vectors.py - Conformance checker for pinned golden files

    usage: python -m src.conformance.vectors [-h] {check-vectors,check-transcripts} ...

Usage 1: hash encoding vectors

    usage: vectors.py check-vectors [-h] [vectors_file]

    One JSON object per line: {"tag", "fields" (hex list), "algorithm", "expected_digest"}.
    Each line is re-hashed through hash_tuple and compared with the pinned digest.

Usage 2: protocol transcripts

    usage: vectors.py check-transcripts [-h] [transcripts_file]

    One JSON object per line describing an enrollment plus a challenge drawn from fixed entropy
    (r, salt). The checker rebuilds the challenge, solves it, builds the response and verifies it,
    comparing every intermediate value and both wire lines with the pinned ones.

Both commands exit with status 0 when every line matches and 1 otherwise.
"""
import argparse
import json
import logging
from collections import namedtuple
from pathlib import Path
from typing import Dict, List, Tuple

from src.config import PuzzleParams, Variant, DEFAULT_CHAIN_LENGTH, HashConfig
from src.hashcodec import FieldTag, hash_tuple
from src.protocol import FixedEntropy, gen_challenge, lamport_prev_chain, make_response, solve_puzzle, \
    verify_response
from src.userstore import UserStore
from src.wire import ChallengeMessage, Respond, decode_message, encode_message

DATA_DIR = Path(__file__).resolve().parents[2] / 'data'
VECTORS_FILE = DATA_DIR / 'hashcodec_vectors.jsonl'
TRANSCRIPTS_FILE = DATA_DIR / 'transcripts.jsonl'

Mismatch = namedtuple('Mismatch', ['line_number', 'field', 'expected', 'actual'])

TRANSCRIPT_FIELDS = ['puzzle_hex', 'mac_hex', 'proof_hex', 'challenge_line', 'response_line']


def read_jsonl(path) -> List[Tuple[int, Dict]]:
    with open(path, 'r', encoding='utf-8') as fp:
        return [(number, json.loads(line)) for number, line in enumerate(fp, start=1) if line.strip()]


def check_vectors(path=VECTORS_FILE) -> Tuple[int, List[Mismatch]]:
    entries = read_jsonl(path)
    mismatches = []
    for number, entry in entries:
        actual = hash_tuple(FieldTag[entry['tag']],
                            [bytes.fromhex(field) for field in entry['fields']],
                            HashConfig(entry['algorithm'])).hex()
        if actual != entry['expected_digest']:
            mismatches.append(Mismatch(number, 'expected_digest', entry['expected_digest'], actual))
    return len(entries), mismatches


def _line(message) -> str:
    return encode_message(message).decode('ascii').rstrip('\r\n')


def replay_transcript(entry: Dict) -> Dict:
    """Runs one honest login from fixed entropy and returns the values a transcript pins."""
    variant = Variant(entry['variant'])
    user_id = entry['user_id']
    password = entry['password'].encode('utf-8')
    key = bytes.fromhex(entry['key_hex'])

    store = UserStore()
    record = store.enroll(user_id, password, variant, entry['chain_length'] or DEFAULT_CHAIN_LENGTH)
    assert record.n == entry['n'], "transcripts start from a fresh enrollment"

    challenge = gen_challenge(record.secret, user_id, record.n, PuzzleParams(entry['k_bits']), variant, key,
                              FixedEntropy(entry['r'], bytes.fromhex(entry['salt_hex'])))
    challenge_line = _line(ChallengeMessage(challenge))

    # The client only sees the decoded line.
    received = decode_message(challenge_line.encode('ascii')).challenge
    solved = solve_puzzle(received.puzzle_digest, received.salt, received.k_bits, variant,
                          password if variant is Variant.OfflineResistant else None)
    if variant is Variant.Lamport:
        payload = make_response(variant, user_id, solved.r, lamport_prev_chain(password, received.chain_index),
                                received.mac)
        proof = payload.prev_chain
    else:
        payload = make_response(variant, user_id, solved.r, password, received.mac)
        proof = payload.h_rp
    response_line = _line(Respond(payload))

    outcome = verify_response(store.get(user_id), decode_message(response_line.encode('ascii')).payload, key)
    return {'puzzle_hex': challenge.puzzle_digest.hex(),
            'mac_hex': challenge.mac.hex(),
            'proof_hex': proof.hex(),
            'challenge_line': challenge_line,
            'response_line': response_line,
            'r': solved.r,
            'verified': outcome.ok}


def check_transcripts(path=TRANSCRIPTS_FILE) -> Tuple[int, List[Mismatch]]:
    entries = read_jsonl(path)
    mismatches = []
    for number, entry in entries:
        logging.info('* Replaying %s transcript', entry['variant'])
        actual = replay_transcript(entry)
        for field in TRANSCRIPT_FIELDS + ['r']:
            if actual[field] != entry[field]:
                mismatches.append(Mismatch(number, field, entry[field], actual[field]))
        if not actual['verified']:
            mismatches.append(Mismatch(number, 'verified', True, False))
    return len(entries), mismatches


def _report(kind: str, checked: int, mismatches: List[Mismatch]) -> int:
    for mismatch in mismatches:
        logging.error('line %d: %s expected %s, got %s', *mismatch)
    print(f"{kind}: {checked - len({m.line_number for m in mismatches})}/{checked} lines match")
    return 0 if not mismatches else 1


def from_vectors(args):
    return _report('hash vectors', *check_vectors(args.vectors_file))


def from_transcripts(args):
    return _report('transcripts', *check_transcripts(args.transcripts_file))


def main():
    parser = argparse.ArgumentParser()
    subparsers = parser.add_subparsers(help='Use check-vectors for the hash encoding or check-transcripts for the '
                                            'protocol variants')

    command1_parser = subparsers.add_parser('check-vectors', description='Re-hash the pinned encoding vectors')
    command1_parser.set_defaults(func=from_vectors)
    command1_parser.add_argument('vectors_file', nargs='?', default=VECTORS_FILE, help='JSONL vectors file')

    command2_parser = subparsers.add_parser('check-transcripts', description='Replay the pinned login transcripts')
    command2_parser.set_defaults(func=from_transcripts)
    command2_parser.add_argument('transcripts_file', nargs='?', default=TRANSCRIPTS_FILE,
                                 help='JSONL transcripts file')

    logging.basicConfig(level=logging.INFO,
                        filename=None,
                        format='%(levelname)-7s| %(message)s')

    args = parser.parse_args()
    if 'func' in args:
        exit(args.func(args))
    else:
        parser.print_usage()
        exit(1)


if __name__ == '__main__':
    main()
