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
Analytic attack costs, in units of hash evaluations times seconds per hash.

    max solve time             2^k * t
    offline attack, base       2^k * t + n * t
    offline attack, variant    2^k * n * t
"""

from typing import Optional

import pandas as pd

from .config import MAX_K_BITS, Variant
from .errors import DomainError

SECONDS_PER_YEAR = 365 * 24 * 60 * 60


class CostInputs:
    def __init__(self,
                 k_bits: int = 20,
                 t_per_hash: float = 5e-6,
                 n_guesses: int = 10 ** 7):
        if not 0 <= k_bits <= MAX_K_BITS:
            raise DomainError(f"k_bits must lie in 0..{MAX_K_BITS}, got {k_bits}")
        if t_per_hash <= 0:
            raise DomainError(f"t_per_hash must be positive, got {t_per_hash}")
        if n_guesses < 0:
            raise DomainError(f"n_guesses must not be negative, got {n_guesses}")
        self.k_bits = k_bits
        self.t_per_hash = t_per_hash
        self.n_guesses = n_guesses

    @classmethod
    def from_milliseconds(cls, k_bits: int, t_ms: float, n_guesses: int) -> 'CostInputs':
        return cls(k_bits, t_ms / 1000.0, n_guesses)

    def __repr__(self):
        return f"CostInputs(k_bits={self.k_bits}, t_per_hash={self.t_per_hash}, n_guesses={self.n_guesses})"


def max_solve_time(k_bits: int, t_per_hash: float) -> float:
    if k_bits > MAX_K_BITS:
        raise DomainError(f"k_bits must not exceed {MAX_K_BITS}")
    return (1 << k_bits) * t_per_hash


def offline_attack_time_base(k_bits: int, t_per_hash: float, n_guesses: int) -> float:
    # One puzzle solve recovers r; each guess after that costs a single hash.
    return max_solve_time(k_bits, t_per_hash) + n_guesses * t_per_hash


def offline_attack_time_variant(k_bits: int, t_per_hash: float, n_guesses: int) -> float:
    # The puzzle involves P, so every guess needs its own full scan.
    return (1 << k_bits) * n_guesses * t_per_hash


def seconds_to_years(seconds: float) -> float:
    return seconds / SECONDS_PER_YEAR


def cost_table(inputs: CostInputs, variant: Optional[Variant] = None) -> pd.DataFrame:
    """Rows printed by `compchall cost`. Without `variant` both offline rows are included."""
    rows = [('max solve time', max_solve_time(inputs.k_bits, inputs.t_per_hash))]
    if variant is not Variant.OfflineResistant:
        rows.append(('offline attack (base)',
                     offline_attack_time_base(inputs.k_bits, inputs.t_per_hash, inputs.n_guesses)))
    if variant is None or variant is Variant.OfflineResistant:
        rows.append(('offline attack (offline-resistant)',
                     offline_attack_time_variant(inputs.k_bits, inputs.t_per_hash, inputs.n_guesses)))
    table = pd.DataFrame(rows, columns=['quantity', 'seconds'])
    table['years'] = table['seconds'].map(seconds_to_years)
    return table


def format_cost_table(table: pd.DataFrame) -> str:
    return table.to_string(index=False,
                           formatters={'seconds': lambda s: f"{s:,.6f}".rstrip('0').rstrip('.'),
                                       'years': lambda y: f"{y:.4f}"})
