import json
import os
import stat
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from src.config import KEY_ENV_VARIABLE, PuzzleParams, ServerConfig, Variant, parse_address
from src.errors import ConfigurationError
from src.logging import initialize_log_dict, key_fingerprint

KEY = bytes(range(32))


class ServerConfigTest(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / 'server.json'

    def tearDown(self):
        self.directory.cleanup()

    def test_file_round_trip(self):
        config = ServerConfig(KEY, k_bits=12, hash_name='sha3_256', default_variant=Variant.Lamport,
                              read_timeout_secs=2.5, chain_length=77, listen=('0.0.0.0', 9000))
        config.to_file(self.path)
        self.assertEqual(stat.S_IMODE(os.stat(self.path).st_mode), 0o600)
        with mock.patch.dict(os.environ, {}, clear=True):
            loaded = ServerConfig.from_file(self.path)
        self.assertEqual(loaded.key, KEY)
        self.assertEqual(loaded.k_bits, 12)
        self.assertEqual(loaded.hash_config.algorithm, 'sha3_256')
        self.assertIs(loaded.default_variant, Variant.Lamport)
        self.assertEqual(loaded.read_timeout_secs, 2.5)
        self.assertEqual(loaded.chain_length, 77)
        self.assertEqual(loaded.listen, ('0.0.0.0', 9000))

    def test_environment_overrides_key(self):
        ServerConfig(KEY).to_file(self.path)
        other = b'\x07' * 32
        with mock.patch.dict(os.environ, {KEY_ENV_VARIABLE: other.hex()}):
            self.assertEqual(ServerConfig.from_file(self.path).key, other)

    def test_defaults(self):
        self.path.write_text(json.dumps({'key_hex': KEY.hex()}))
        with mock.patch.dict(os.environ, {}, clear=True):
            config = ServerConfig.from_file(self.path)
        self.assertEqual(config.k_bits, 20)
        self.assertEqual(config.read_timeout_secs, 10.0)
        self.assertIs(config.default_variant, Variant.Base)

    def test_rejections(self):
        cases = [{'key_hex': 'abcd'},
                 {'key_hex': 'zz' * 32},
                 {},
                 {'key_hex': KEY.hex(), 'k_bits': 33},
                 {'key_hex': KEY.hex(), 'hash': 'md5'},
                 {'key_hex': KEY.hex(), 'default_variant': 'fast'},
                 {'key_hex': KEY.hex(), 'read_timeout_secs': 0},
                 {'key_hex': 42},
                 {'key_hex': KEY.hex(), 'k_bits': 'twenty'},
                 {'key_hex': KEY.hex(), 'read_timeout_secs': 'soon'},
                 {'key_hex': KEY.hex(), 'chain_length': None}]
        for values in cases:
            with self.subTest(values=values):
                self.path.write_text(json.dumps(values))
                with mock.patch.dict(os.environ, {}, clear=True):
                    with self.assertRaises(ConfigurationError):
                        ServerConfig.from_file(self.path)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            ServerConfig.from_file(self.path)

    def test_generated_keys(self):
        self.assertEqual(len(ServerConfig.generate_key()), 32)
        self.assertNotEqual(ServerConfig.generate_key(), ServerConfig.generate_key())


class ParamsTest(unittest.TestCase):

    def test_puzzle_params(self):
        self.assertEqual(PuzzleParams(12).search_space, 4096)
        self.assertEqual(PuzzleParams.disabled().search_space, 1)
        for k_bits in (0, 33):
            with self.subTest(k_bits=k_bits):
                with self.assertRaises(ConfigurationError):
                    PuzzleParams(k_bits)

    def test_parse_address(self):
        self.assertEqual(parse_address('127.0.0.1:7878'), ('127.0.0.1', 7878))
        self.assertEqual(parse_address(':80'), ('0.0.0.0', 80))
        with self.assertRaises(ConfigurationError):
            parse_address('localhost')


class LogDictTest(unittest.TestCase):

    def test_key_never_logged(self):
        log_dict = initialize_log_dict(server_config=ServerConfig(KEY), puzzle_params=PuzzleParams(8),
                                       variant=Variant.Base, t_per_hash=5e-6, seed=3)
        self.assertEqual(log_dict['KEY_FINGERPRINT'], key_fingerprint(KEY))
        self.assertEqual(log_dict['K_BITS'], 8)
        self.assertEqual(log_dict['SEED'], 3)
        self.assertNotIn(KEY.hex(), json.dumps(log_dict))
        self.assertTrue(all(name.isupper() for name in log_dict))


if __name__ == '__main__':
    unittest.main()
