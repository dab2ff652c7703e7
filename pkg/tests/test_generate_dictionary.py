import unittest

from utils.generate_dictionary import generate_dictionary


class GenerateDictionaryTest(unittest.TestCase):

    def test_seeded_and_distinct(self):
        words = generate_dictionary(200, seed=3)
        self.assertEqual(words, generate_dictionary(200, seed=3))
        self.assertEqual(len(set(words)), 200)
        self.assertNotEqual(words, generate_dictionary(200, seed=4))

    def test_planted_password(self):
        words = generate_dictionary(50, seed=1, true_password='secret', position=1)
        self.assertEqual(words[0], 'secret')
        self.assertEqual(len(words), 51)
        self.assertEqual(words.count('secret'), 1)
        self.assertEqual(generate_dictionary(50, seed=1, true_password='secret', position=51)[-1], 'secret')


if __name__ == '__main__':
    unittest.main()
