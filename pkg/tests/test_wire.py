import random
import unittest

from src.config import Variant
from src.data import Challenge, ResponsePayload
from src.errors import ProtocolError
from src.wire import MAX_LINE, ChallengeMessage, Error, Login, Respond, Result, decode_message, encode_message


def random_challenge(rng: random.Random) -> Challenge:
    return Challenge(puzzle_digest=rng.randbytes(32),
                     salt=rng.randbytes(16),
                     mac=rng.randbytes(rng.choice([32, 64])),
                     k_bits=rng.randint(1, 32),
                     chain_index=rng.choice([None, rng.randint(1, 10 ** 6)]))


def random_payload(rng: random.Random) -> ResponsePayload:
    user_id = ''.join(rng.choice('abc XYZ%é_-') for _ in range(rng.randint(1, 12)))
    variant = rng.choice(list(Variant))
    if variant is Variant.Lamport:
        return ResponsePayload(user_id, variant, rng.randbytes(32), r=rng.randrange(2 ** 32),
                               prev_chain=rng.randbytes(32))
    return ResponsePayload(user_id, variant, rng.randbytes(32), h_rp=rng.randbytes(32))


class WireTest(unittest.TestCase):

    def _process_test_error(self, line: bytes, code: str):
        with self.assertRaises(ProtocolError) as context:
            decode_message(line)
        self.assertEqual(context.exception.code, code)

    def test_grammar(self):
        self.assertEqual(encode_message(Login('alice')), b'LOGIN alice\r\n')
        self.assertEqual(encode_message(Login('alice smith')), b'LOGIN alice%20smith\r\n')
        self.assertEqual(encode_message(Result(True)), b'RESULT OK\r\n')
        self.assertEqual(encode_message(Result(False)), b'RESULT FAIL\r\n')
        self.assertEqual(encode_message(Error('bad-hex')), b'ERR bad-hex\r\n')
        challenge = Challenge(b'\x01' * 32, b'\x00' * 16, b'\x02' * 32, 20)
        self.assertEqual(encode_message(ChallengeMessage(challenge)),
                         b'CHALLENGE ' + b'01' * 32 + b' ' + b'00' * 16 + b' ' + b'02' * 32 + b' 20\r\n')
        payload = ResponsePayload('bob', Variant.Lamport, b'\x03' * 32, r=7, prev_chain=b'\x04' * 32)
        self.assertEqual(encode_message(Respond(payload)),
                         b'RESPOND bob lamport 7 ' + b'04' * 32 + b' ' + b'03' * 32 + b'\r\n')

    def test_round_trip(self):
        rng = random.Random(11)
        for _ in range(300):
            for message in (Login(random_payload(rng).user_id),
                            ChallengeMessage(random_challenge(rng)),
                            Respond(random_payload(rng)),
                            Result(rng.random() < 0.5),
                            Error(rng.choice(['too-long', 'bad-verb', 'chain-exhausted']))):
                with self.subTest(message=message):
                    self.assertEqual(decode_message(encode_message(message)), message)

    def test_bare_lf_is_accepted(self):
        self.assertEqual(decode_message(b'LOGIN alice\n'), Login('alice'))
        self.assertEqual(decode_message(b'RESULT OK'), Result(True))

    def test_rejections(self):
        digest = '00' * 32
        cases = [(b'HELLO alice', 'bad-verb'),
                 (b'login alice', 'bad-verb'),
                 (b'LOGIN', 'bad-fields'),
                 (b'LOGIN a b', 'bad-fields'),
                 (b'LOGIN  alice', 'bad-fields'),
                 (b'LOGIN alice\x00', 'bad-fields'),
                 (b'LOGIN al\xffice', 'not-ascii'),
                 (b'LOGIN %ff', 'bad-user'),
                 (b'RESULT MAYBE', 'bad-fields'),
                 (b'ERR Bad', 'bad-fields'),
                 (f'CHALLENGE {digest} {"00" * 16} {digest} 0'.encode(), 'bad-number'),
                 (f'CHALLENGE {digest} {"00" * 16} {digest} 33'.encode(), 'bad-number'),
                 (f'CHALLENGE {digest} {"00" * 16} {digest} 020'.encode(), 'bad-number'),
                 (f'CHALLENGE {digest} {"00" * 15} {digest} 20'.encode(), 'bad-hex'),
                 (f'CHALLENGE {digest.upper()} {"00" * 16} {digest} 20'.encode(), 'bad-hex'),
                 (f'CHALLENGE {"00" * 31} {"00" * 16} {digest} 20'.encode(), 'bad-hex'),
                 (f'CHALLENGE {digest} {"00" * 16} {digest} 20 0'.encode(), 'bad-number'),
                 (f'RESPOND alice md5 {digest} {digest}'.encode(), 'bad-variant'),
                 (f'RESPOND alice base {digest}'.encode(), 'bad-fields'),
                 (f'RESPOND alice lamport 4294967296 {digest} {digest}'.encode(), 'bad-number'),
                 (f'RESPOND alice lamport 1 zz {digest}'.encode(), 'bad-hex'),
                 (b'LOGIN ' + b'a' * MAX_LINE, 'too-long')]
        for line, code in cases:
            with self.subTest(line=line[:40], code=code):
                self._process_test_error(line, code)

    def test_fuzz_never_crashes_or_accepts(self):
        rng = random.Random(5)
        alphabet = b'LOGINCHALESPDRTUFK0123456789abcdef %\r\n\x00\xff'
        for i in range(10 ** 5):
            length = rng.randint(0, 120)
            if i % 2:
                line = bytes(rng.choice(alphabet) for _ in range(length))
            else:
                line = rng.randbytes(length)
            try:
                message = decode_message(line)
            except ProtocolError:
                continue
            # Anything accepted must be a canonical encoding of itself.
            self.assertEqual(encode_message(message).rstrip(b'\r\n'), line.rstrip(b'\r\n').rstrip(b'\n'))


if __name__ == '__main__':
    unittest.main()
