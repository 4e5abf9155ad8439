"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs the two hot paths on realistic workloads: trigram-hashing a batch of
definition-sized texts, and the bounded edit-distance neighbor scan over a
vocabulary. Results from both backends are checked for equality before
timing, so the benchmark doubles as a parity smoke test.

Usage: python benchmarks/bench_kernels.py [--texts N] [--vocab N]
"""

import argparse
import random
import time

import numpy as np

from lexiforge import _kernels
from lexiforge.embedding import _utf8_offsets, normalize_text

SYLLABLES = [
    "ca", "sa", "li", "mi", "ta", "do", "re", "ñu", "que", "bra",
    "tro", "ción", "men", "te", "par", "co", "des", "ver", "al", "gu",
]


def random_word(rng: random.Random) -> str:
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 5)))


def random_definition(rng: random.Random) -> str:
    return " ".join(random_word(rng) for _ in range(rng.randint(4, 12)))


def time_call(func, repeats: int = 3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = func()
        best = min(best, time.perf_counter() - start)
    return result, best


def bench_trigrams(texts: list[str], dimension: int = 512):
    prepared = [_utf8_offsets(f"#{normalize_text(t)}#") for t in texts]

    def run(kernel):
        return [kernel(data, offsets, dimension) for data, offsets in prepared]

    jit_counts, jit_time = time_call(lambda: run(_kernels.trigram_counts_jit))
    np_counts, np_time = time_call(lambda: run(_kernels.trigram_counts_numpy))
    assert all(np.array_equal(a, b) for a, b in zip(jit_counts, np_counts))
    return jit_time, np_time


def bench_levenshtein(vocab: list[str], probes: list[str]):
    codes = [_kernels.codepoints(w) for w in vocab]
    probe_codes = [_kernels.codepoints(w) for w in probes]

    def run(kernel):
        return [[kernel(p, c) for c in codes] for p in probe_codes]

    jit_dist, jit_time = time_call(lambda: run(_kernels.levenshtein_jit))
    np_dist, np_time = time_call(lambda: run(_kernels.levenshtein_numpy))
    assert jit_dist == np_dist
    return jit_time, np_time


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--texts", type=int, default=2000, help="definitions to hash")
    parser.add_argument("--vocab", type=int, default=2000, help="vocabulary size for the distance scan")
    parser.add_argument("--probes", type=int, default=20, help="probe lemmas scanned against the vocabulary")
    args = parser.parse_args()

    if _kernels.trigram_counts_jit is None:
        raise SystemExit("numba backend unavailable (LEXIFORGE_DISABLE_NUMBA set or numba missing)")

    rng = random.Random(7)
    texts = [random_definition(rng) for _ in range(args.texts)]
    vocab = list({random_word(rng) for _ in range(args.vocab)})
    probes = [random_word(rng) for _ in range(args.probes)]

    # trigger JIT compilation outside the timed region
    data, offsets = _utf8_offsets("#warmup#")
    _kernels.trigram_counts_jit(data, offsets, 64)
    _kernels.levenshtein_jit(_kernels.codepoints("ab"), _kernels.codepoints("ba"))

    print(f"{'workload':<28}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    jit, fallback = bench_trigrams(texts)
    print(f"{'trigram hash x' + str(len(texts)):<28}{jit:>9.3f}s{fallback:>9.3f}s{fallback / jit:>8.1f}x")
    jit, fallback = bench_levenshtein(vocab, probes)
    label = f"edit distance {len(probes)}x{len(vocab)}"
    print(f"{label:<28}{jit:>9.3f}s{fallback:>9.3f}s{fallback / jit:>8.1f}x")


if __name__ == "__main__":
    main()
