import argparse
import os
import random
import sys
from pathlib import Path


def generate_dictionary(size: int, seed: int = 42, true_password: str = None, position: int = None,
                        min_len: int = 6, max_len: int = 12):
    """Seeded list of distinct lowercase-alphanumeric guesses, optionally with the real password planted."""
    rng = random.Random(seed)
    alphabet = 'abcdefghijklmnopqrstuvwxyz0123456789'
    words, seen = [], {true_password}
    while len(words) < size:
        word = ''.join(rng.choice(alphabet) for _ in range(rng.randint(min_len, max_len)))
        if word not in seen:
            seen.add(word)
            words.append(word)
    if true_password is not None:
        # position is 1-based
        index = position - 1 if position is not None else rng.randrange(size + 1)
        words.insert(min(max(index, 0), len(words)), true_password)
    return words


if __name__ == '__main__':

    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=100, help="number of wrong guesses")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--password", default=None, help="true password to plant in the dictionary")
    parser.add_argument("--position", type=int, default=None, help="1-based position of the true password")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    compchall_data_path = Path(os.environ.get('COMPCHALL_DATA_PATH',
                                              os.path.dirname(os.path.realpath(sys.argv[0])) + '/../data'))
    output_file = Path(args.out) if args.out else compchall_data_path / "dictionary.txt"

    words = generate_dictionary(args.size, args.seed, args.password, args.position)
    with output_file.open('w', encoding='utf-8') as f:
        f.write('\n'.join(words) + '\n')
    print(f"wrote {len(words)} guesses to {output_file}")
