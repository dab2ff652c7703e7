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


import argparse
import json
import logging
import sys
from pathlib import Path

from src.client import ResponseCache, client_login, hashes_per_second
from src.config import HashConfig, PuzzleParams, ServerConfig, Variant, parse_address, output_path, \
    DEFAULT_CHAIN_LENGTH, DEFAULT_K_BITS
from src.cost_model import CostInputs, cost_table, format_cost_table
from src.errors import CompChallError, ProtocolError, PuzzleNotFound
from src.hashcodec import DEFAULT_HASH
from src.server import serve
from src.simulation import emit_report, simulate_legit_user, simulate_online_attack
from src.userstore import UserStore

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def open_store(path: Path, config: ServerConfig = None, bind: bool = True) -> UserStore:
    if path.exists():
        return UserStore.load(path, hash_config=config.hash_config if config else None, bind=bind)
    logger.info("No store at %s, starting an empty one", path)
    store = UserStore(path=path if bind else None,
                      hash_config=config.hash_config if config else DEFAULT_HASH,
                      k_bits=config.k_bits if config else DEFAULT_K_BITS)
    if bind:
        store.save()
    return store


def read_dictionary(path: Path):
    with path.open('r', encoding='utf-8') as f:
        return [line.rstrip('\r\n') for line in f if line.rstrip('\r\n')]


def command_serve(args):
    config = ServerConfig.from_file(args.config)
    if args.listen:
        config.listen = parse_address(args.listen)
    serve(config, open_store(Path(args.store), config))


def command_login(args):
    cache = ResponseCache(args.cache) if args.cache else None
    try:
        stats = client_login(parse_address(args.server), args.user, args.password, Variant.from_name(args.variant),
                             cache=cache, timeout=args.timeout, workers=args.workers,
                             cfg=HashConfig(args.hash))
    except PuzzleNotFound as e:
        print(f"puzzle not solvable with this password ({e.evaluations} evaluations)")
        return 3
    except ProtocolError as e:
        print(f"protocol error: {e}")
        return 4
    except OSError as e:
        print(f"network error: {e}")
        return 5
    print("RESULT", "OK" if stats.ok else "FAIL")
    print("  Hash evaluations =", stats.evaluations)
    print("  Hashes computed =", stats.performed)
    print("  Solve seconds = %.3f" % stats.solve_seconds)
    rate = hashes_per_second(stats)
    print("  Hashes per second =", "%.0f" % rate if rate is not None else "n/a (cached computation)")
    return 0 if stats.ok else 1


def command_useradd(args):
    config = ServerConfig.from_file(args.config) if args.config else None
    store = open_store(Path(args.store), config)
    store.enroll(args.user, args.password, Variant.from_name(args.variant), args.chain_length)
    return 0


def command_attack(args):
    config = ServerConfig.from_file(args.config) if args.config else None
    key = config.key if config else ServerConfig.generate_key()
    # The simulation mutates records; never write them back to the operator's store.
    store = open_store(Path(args.store), config, bind=False)
    params = PuzzleParams(args.k) if args.k > 0 else PuzzleParams.disabled()
    if args.pattern:
        pattern = [event == 'ok' for event in args.pattern.split(',')]
        report = simulate_legit_user(pattern, store, args.user, args.password, key, params,
                                     t_per_hash=args.t_ms / 1000.0, seed=args.seed, progress=True)
    else:
        report = simulate_online_attack(read_dictionary(Path(args.dict)), store, args.user, key, params,
                                        t_per_hash=args.t_ms / 1000.0, seed=args.seed, progress=True)
    out = Path(args.out) if args.out else output_path() / 'attack_report.csv'
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_report(report, out)
    print(json.dumps({name: value for name, value in report.to_dict().items() if name != 'records'}, indent=4))
    return 0


def command_cost(args):
    inputs = CostInputs.from_milliseconds(args.k, args.t_ms, args.guesses)
    variant = Variant.from_name(args.variant) if args.variant else None
    print(format_cost_table(cost_table(inputs, variant)))
    return 0


def command_keygen(args):
    config = ServerConfig(key=ServerConfig.generate_key(),
                          k_bits=args.k,
                          hash_name=args.hash,
                          default_variant=Variant.from_name(args.default_variant),
                          chain_length=args.chain_length,
                          listen=parse_address(args.listen))
    config.to_file(args.config)
    logger.info("Wrote a new server configuration to %s", args.config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='compchall')
    subparsers = parser.add_subparsers(help='Server, client, enrollment and simulation commands')
    variants = [variant.value for variant in Variant]

    serve_parser = subparsers.add_parser('serve', description='Run the TCP authentication server')
    serve_parser.set_defaults(func=command_serve)
    serve_parser.add_argument('--config', required=True, help='server configuration file (JSON)')
    serve_parser.add_argument('--store', required=True, help='user store file (JSONL)')
    serve_parser.add_argument('--listen', default=None, help='host:port, overrides the configuration')

    login_parser = subparsers.add_parser('login', description='Log in against a running server')
    login_parser.set_defaults(func=command_login)
    login_parser.add_argument('--server', required=True, help='host:port')
    login_parser.add_argument('--user', required=True)
    login_parser.add_argument('--password', required=True)
    login_parser.add_argument('--variant', default=Variant.Base.value, choices=variants)
    login_parser.add_argument('--cache', default=None, help='file keeping the last successful computation')
    login_parser.add_argument('--workers', type=int, default=1, help='processes used to solve the puzzle')
    login_parser.add_argument('--timeout', type=float, default=10.0, help='socket timeout in seconds')
    login_parser.add_argument('--hash', default='sha256', help='hash algorithm the server is configured with')

    useradd_parser = subparsers.add_parser('useradd', description='Enroll a user in a store file')
    useradd_parser.set_defaults(func=command_useradd)
    useradd_parser.add_argument('--store', required=True)
    useradd_parser.add_argument('--user', required=True)
    useradd_parser.add_argument('--password', required=True)
    useradd_parser.add_argument('--variant', required=True, choices=variants)
    useradd_parser.add_argument('--chain-length', type=int, default=DEFAULT_CHAIN_LENGTH)
    useradd_parser.add_argument('--config', default=None, help='server configuration, for the hash algorithm')

    attack_parser = subparsers.add_parser('attack', description='Simulate an online dictionary attack, or a '
                                                                'legitimate user with --pattern')
    attack_parser.set_defaults(func=command_attack)
    attack_parser.add_argument('--store', required=True)
    attack_parser.add_argument('--user', required=True)
    attack_parser.add_argument('--dict', default=None, help='dictionary file, one password per line')
    attack_parser.add_argument('--k', type=int, default=DEFAULT_K_BITS, help='puzzle bits, 0 disables the puzzle')
    attack_parser.add_argument('--seed', type=int, default=None)
    attack_parser.add_argument('--t-ms', type=float, default=0.005, help='milliseconds per hash evaluation')
    attack_parser.add_argument('--out', default=None, help='report path, .csv or .json')
    attack_parser.add_argument('--config', default=None, help='server configuration, for K_Bob and the hash')
    attack_parser.add_argument('--pattern', default=None, help='comma-separated ok/typo events')
    attack_parser.add_argument('--password', default=None, help='true password, with --pattern')

    cost_parser = subparsers.add_parser('cost', description='Print the analytic attack cost table')
    cost_parser.set_defaults(func=command_cost)
    cost_parser.add_argument('--k', type=int, default=20)
    cost_parser.add_argument('--t-ms', type=float, default=0.005)
    cost_parser.add_argument('--guesses', type=int, default=10 ** 7)
    cost_parser.add_argument('--variant', default=None, choices=[Variant.Base.value, Variant.OfflineResistant.value])

    keygen_parser = subparsers.add_parser('keygen', description='Write a server configuration with a fresh key')
    keygen_parser.set_defaults(func=command_keygen)
    keygen_parser.add_argument('--config', required=True, help='configuration file to write')
    keygen_parser.add_argument('--k', type=int, default=DEFAULT_K_BITS)
    keygen_parser.add_argument('--hash', default='sha256')
    keygen_parser.add_argument('--default-variant', default=Variant.Base.value, choices=variants)
    keygen_parser.add_argument('--chain-length', type=int, default=DEFAULT_CHAIN_LENGTH)
    keygen_parser.add_argument('--listen', default='127.0.0.1:7878')
    return parser


if __name__ == '__main__':

    parser = build_parser()
    args = parser.parse_args()
    if 'func' not in args:
        parser.print_usage()
        sys.exit(1)
    if args.func is command_attack:
        assert args.dict or (args.pattern and args.password), \
            "attack needs --dict, or --pattern together with --password"
    try:
        sys.exit(args.func(args))
    except CompChallError as e:
        logger.error("%s: %s", type(e).__name__, e)
        sys.exit(2)
