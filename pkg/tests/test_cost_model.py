import unittest

from src.config import Variant
from src.cost_model import CostInputs, cost_table, format_cost_table, max_solve_time, offline_attack_time_base, \
    offline_attack_time_variant, seconds_to_years
from src.errors import DomainError

T = 0.005 / 1000


class CostModelTest(unittest.TestCase):

    def assertRelativelyEqual(self, actual, expected, tolerance=1e-9):
        self.assertLessEqual(abs(actual - expected), tolerance * abs(expected), f"{actual} != {expected}")

    def test_max_solve_time(self):
        self.assertRelativelyEqual(max_solve_time(20, T), 5.24288)
        self.assertEqual(max_solve_time(0, 0.25), 0.25)
        self.assertRelativelyEqual(max_solve_time(10, 1e-3), 1.024)
        with self.assertRaises(DomainError):
            max_solve_time(33, T)

    def test_offline_attack_base(self):
        self.assertRelativelyEqual(offline_attack_time_base(20, T, 10 ** 7), 55.24288)
        self.assertEqual(offline_attack_time_base(20, T, 0), max_solve_time(20, T))
        self.assertRelativelyEqual(offline_attack_time_base(20, T, 1), 5.242885)

    def test_offline_attack_variant(self):
        seconds = offline_attack_time_variant(20, T, 10 ** 7)
        self.assertRelativelyEqual(seconds, 52428800)
        self.assertEqual(round(seconds_to_years(seconds), 4), 1.6625)
        self.assertEqual(offline_attack_time_variant(20, T, 1), max_solve_time(20, T))

    def test_inputs(self):
        inputs = CostInputs()
        self.assertEqual((inputs.k_bits, inputs.t_per_hash, inputs.n_guesses), (20, 5e-6, 10 ** 7))
        self.assertRelativelyEqual(CostInputs.from_milliseconds(20, 0.005, 1).t_per_hash, 5e-6)
        for kwargs in ({'k_bits': 33}, {'t_per_hash': 0}, {'n_guesses': -1}):
            with self.subTest(**kwargs):
                with self.assertRaises(DomainError):
                    CostInputs(**kwargs)

    def test_table(self):
        table = cost_table(CostInputs())
        self.assertEqual(list(table.columns), ['quantity', 'seconds', 'years'])
        self.assertEqual(len(table), 3)
        self.assertRelativelyEqual(table['seconds'].iloc[2], 52428800)
        text = format_cost_table(table)
        for printed in ('5.24288', '55.24288', '52,428,800', '1.6625'):
            with self.subTest(printed=printed):
                self.assertIn(printed, text)

    def test_table_for_one_variant(self):
        self.assertEqual(list(cost_table(CostInputs(), Variant.Base)['quantity']),
                         ['max solve time', 'offline attack (base)'])
        self.assertEqual(list(cost_table(CostInputs(), Variant.OfflineResistant)['quantity']),
                         ['max solve time', 'offline attack (offline-resistant)'])


if __name__ == '__main__':
    unittest.main()
