"""Compare the numba and numpy kernel backends, and report decode throughput.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The forward/backward kernels are timed at a realistic shape (F=500 frames
against labels of 30 and 240 tokens), then a full joint-decoder rescoring
pass and a beam-100 search at a production-sized syllable vocabulary
(V=2302) are measured end to end.  Set HANJOINT_NUMBA=0 before launching to
force the whole package onto the numpy path.
"""

import time

import numpy as np

from hanjoint import _kernels, hangul
from hanjoint.beam import BeamConfig, prefix_beam_search
from hanjoint.ctc import ctc_log_prob, extended_states
from hanjoint.lattice_io import Vocabulary
from hanjoint.synth import random_lattice


def time_fn(fn, *args, repeats=20):
    fn(*args)  # warm (JIT compile on the numba side)
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def bench_kernels():
    rng = np.random.default_rng(0)
    print(f"active backend: {_kernels.backend()}")
    print()
    print(f"{'kernel':28s} {'shape':>14s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for frames, label_len in ((500, 30), (500, 240), (2000, 120)):
        lattice = random_lattice(rng, frames, 64)
        label = rng.integers(1, 64, size=label_len).tolist()
        ext, skip = extended_states(label)
        lp_ext = lattice.scores[:, ext]
        for name, np_fn, nb_fn in (
            ("ctc forward (alpha)", _kernels.ctc_alpha_numpy, _kernels.ctc_alpha_numba),
            ("ctc backward (beta)", _kernels.ctc_beta_numpy, _kernels.ctc_beta_numba),
        ):
            t_np = time_fn(np_fn, lp_ext, skip)
            if nb_fn is None:
                print(f"{name:28s} {f'{frames}x{2 * label_len + 1}':>14s} {t_np * 1e3:9.2f}ms {'n/a':>10s}")
                continue
            t_nb = time_fn(nb_fn, lp_ext, skip)
            print(
                f"{name:28s} {f'{frames}x{2 * label_len + 1}':>14s} "
                f"{t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.1f}x"
            )
    print()


def bench_rescoring():
    # joint-decoder shape: many candidate rescorings against one lattice
    rng = np.random.default_rng(1)
    lattice = random_lattice(rng, 500, 64)
    candidates = [rng.integers(1, 64, size=int(rng.integers(20, 60))).tolist() for _ in range(100)]
    start = time.perf_counter()
    for label in candidates:
        ctc_log_prob(lattice, label)
    elapsed = time.perf_counter() - start
    print(f"rescoring 100 candidates (F=500): {elapsed:.2f}s "
          f"({1000 * elapsed / len(candidates):.1f}ms each, backend={_kernels.backend()})")


def bench_beam():
    frames, vocab_size = 500, 2302
    units = [chr(hangul.SYLLABLE_BASE + i) for i in range(vocab_size - 2)]
    vocab = Vocabulary.from_units(units)
    rng = np.random.default_rng(2)
    lattice = random_lattice(rng, frames, vocab_size, scale=2.0)
    start = time.perf_counter()
    prefix_beam_search(lattice, vocab, BeamConfig(beam_width=100))
    elapsed = time.perf_counter() - start
    print(f"beam-100 search (F={frames}, V={vocab_size}): {elapsed:.2f}s "
          f"({frames / elapsed:.0f} frames/s)")


if __name__ == "__main__":
    bench_kernels()
    bench_rescoring()
    bench_beam()
