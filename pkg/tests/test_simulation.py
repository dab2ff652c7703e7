import csv
import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.config import PuzzleParams, Variant
from src.simulation import REPORT_COLUMNS, RESULT_FAIL, RESULT_OK, RESULT_UNSOLVED, AttackReport, ReportFormat, \
    VirtualClock, emit_report, load_report, simulate_legit_user, simulate_online_attack
from src.userstore import UserStore

KEY = b'\x42' * 32
T = 5e-6


def wrong_guesses(count: int, offset: int = 0):
    return [f"guess-{offset + i}" for i in range(count)]


class OnlineAttackTest(unittest.TestCase):

    def _attack(self, dictionary, params, variant=Variant.Base, seed=0):
        store = UserStore()
        store.enroll('alice', 'secret', variant, m=50)
        return simulate_online_attack(dictionary, store, 'alice', KEY, params, t_per_hash=T, seed=seed), store

    def test_true_password_first(self):
        for variant in Variant:
            with self.subTest(variant=variant.value):
                report, _ = self._attack(['secret'] + wrong_guesses(5), PuzzleParams(8), variant)
                self.assertEqual(report.attempts, 1)
                self.assertTrue(report.succeeded)
                self.assertEqual(report.records[0].result, RESULT_OK)
                self.assertLessEqual(report.total_hash_evals, 2 ** 8)

    def test_every_guess_needs_a_fresh_solve(self):
        report, store = self._attack(wrong_guesses(100), PuzzleParams(12), seed=1)
        self.assertEqual(report.attempts, 100)
        self.assertEqual(report.solves, 100)
        self.assertEqual(report.reused, 0)
        self.assertFalse(report.succeeded)
        self.assertEqual(store.get('alice').n, 100)
        self.assertTrue(all(record.result == RESULT_FAIL for record in report.records))
        self.assertGreaterEqual(report.total_hash_evals, report.attempts)

    def test_lamport_attack(self):
        report, store = self._attack(wrong_guesses(10) + ['secret'], PuzzleParams(6), Variant.Lamport, seed=2)
        self.assertEqual(report.attempts, 11)
        self.assertTrue(report.succeeded)
        self.assertEqual(store.get('alice').n, 10)
        self.assertEqual(store.get('alice').secret.chain_index, 49)

    def test_offline_resistant_guesses_die_locally(self):
        report, store = self._attack(wrong_guesses(5) + ['secret'], PuzzleParams(6), Variant.OfflineResistant, seed=3)
        self.assertEqual([record.result for record in report.records], [RESULT_UNSOLVED] * 5 + [RESULT_OK])
        self.assertEqual([record.solve_evals for record in report.records[:5]], [2 ** 6] * 5)
        self.assertEqual(store.get('alice').n, 0)

    def test_mean_work_per_guess(self):
        reports = [self._attack(wrong_guesses(100, 100 * run), PuzzleParams(12), seed=run)[0] for run in range(20)]
        means = [report.mean_solve_evals for report in reports]
        self.assertAlmostEqual(float(np.mean(means)), 2 ** 11, delta=0.15 * 2 ** 11)
        self.assertGreaterEqual(np.mean([report.virtual_elapsed for report in reports]), 100 * 2 ** 11 * T * 0.85)
        self.assertTrue(all(report.solves == report.attempts == 100 for report in reports))

    def test_disabled_puzzle_control(self):
        throttled = [self._attack(wrong_guesses(100), PuzzleParams(12), seed=seed)[0] for seed in range(40, 45)]
        control = [self._attack(wrong_guesses(100), PuzzleParams.disabled(), seed=seed)[0] for seed in range(40, 45)]
        self.assertTrue(all(report.total_hash_evals == 100 for report in control))
        ratio = sum(r.virtual_elapsed for r in throttled) / sum(r.virtual_elapsed for r in control)
        self.assertAlmostEqual(ratio, 2 ** 11, delta=0.15 * 2 ** 11)

    def test_virtual_clock_consistency(self):
        report, _ = self._attack(wrong_guesses(20), PuzzleParams(8), seed=5)
        self.assertEqual(report.virtual_elapsed, report.total_hash_evals * T)
        self.assertEqual(report.records[-1].cum_virtual_secs, report.virtual_elapsed)
        self.assertEqual(report.guesses_per_second, report.attempts / report.virtual_elapsed)

    def test_seed_makes_runs_repeatable(self):
        first, _ = self._attack(wrong_guesses(10), PuzzleParams(8), seed=9)
        second, _ = self._attack(wrong_guesses(10), PuzzleParams(8), seed=9)
        self.assertEqual(first, second)


class LegitUserTest(unittest.TestCase):

    def _replay(self, pattern, variant=Variant.Base):
        store = UserStore()
        store.enroll('alice', 'secret', variant, m=50)
        return simulate_legit_user(pattern, store, 'alice', 'secret', KEY, PuzzleParams(8), t_per_hash=T, seed=1)

    def test_consecutive_logins_solve_once(self):
        report = self._replay([True] * 10)
        self.assertEqual(report.attempts, 10)
        self.assertEqual(report.solves, 1)
        self.assertEqual(report.reused, 9)
        self.assertEqual(report.to_dict()['reused'], 9)
        self.assertTrue(all(record.result == RESULT_OK for record in report.records))
        # the clock only moves forward and reuses cost nothing
        elapsed = [record.cum_virtual_secs for record in report.records]
        self.assertEqual(elapsed, sorted(elapsed))
        self.assertEqual(len(set(elapsed)), 1)

    def test_typo_invalidates_the_cache(self):
        report = self._replay([True, False, True])
        self.assertEqual(report.solves, 2)
        self.assertEqual([record.result for record in report.records], [RESULT_OK, RESULT_FAIL, RESULT_OK])

    def test_offline_resistant_reuses_too(self):
        self.assertEqual(self._replay([True] * 10, Variant.OfflineResistant).solves, 1)

    def test_lamport_solves_every_time(self):
        report = self._replay([True] * 10, Variant.Lamport)
        self.assertEqual(report.solves, 10)
        self.assertEqual(report.reused, 0)


class ReportTest(unittest.TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.dir = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def _report(self, attempts: int) -> AttackReport:
        clock = VirtualClock(T)
        report = AttackReport(T, config={'K_BITS': 8})
        for i in range(attempts):
            report.add(100 + i, RESULT_FAIL, clock)
        report.solves = attempts
        return report

    def _rows(self, path):
        with open(path, newline='', encoding='utf-8') as f:
            return list(csv.reader(f))

    def test_empty_report_is_header_only(self):
        path = emit_report(self._report(0), self.dir / 'empty.csv')
        self.assertEqual(self._rows(path), [REPORT_COLUMNS])

    def test_csv_rows(self):
        path = emit_report(self._report(3), self.dir / 'three.csv')
        rows = self._rows(path)
        self.assertEqual(rows[0], ['attempt', 'solve_evals', 'result', 'cum_virtual_secs'])
        self.assertEqual(len(rows), 4)
        self.assertEqual(rows[1][:3], ['1', '100', 'FAIL'])
        self.assertEqual(float(rows[3][3]), 303 * T)

    def test_json_round_trip(self):
        report = self._report(3)
        path = emit_report(report, self.dir / 'three.json')
        self.assertEqual(load_report(path), report)
        with path.open(encoding='utf-8') as f:
            self.assertEqual(json.load(f)['total_hash_evals'], 303)

    def test_format_from_suffix(self):
        self.assertIs(ReportFormat.for_path('a.json'), ReportFormat.JSON)
        self.assertIs(ReportFormat.for_path('a.csv'), ReportFormat.CSV)

    def test_empty_report_rates(self):
        report = self._report(0)
        self.assertEqual(report.total_hash_evals, 0)
        self.assertIsNone(report.guesses_per_second)


if __name__ == '__main__':
    unittest.main()
