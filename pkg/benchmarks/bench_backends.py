"""Time the compiled kernels against the NumPy fallback.

Run with ``python3 benchmarks/bench_backends.py``. Each case is timed under
both backends with :func:`timeit.repeat` and the best time is reported.
"""

import argparse
import timeit

import numpy as np

from deepicmgp import backend
from deepicmgp.acquisition import sample_sums
from deepicmgp.benchfns import evaluate, spec
from deepicmgp.data import Dataset
from deepicmgp.doe import maximin_lhd, rescale
from deepicmgp.icm import layer_log_marginal
from deepicmgp.linalg import kernel_matrix
from deepicmgp.sampler import SamplerConfig, run_chain


def cases(rng):
    A = rng.random((60, 4))
    M = rng.standard_normal((60, 4))
    W, Wr, Wc = rng.random((40, 3)), rng.random((400, 3)), rng.random((400, 3))
    s = spec("forrester")
    x = rescale(maximin_lhd(9, 1, seed=1), s.lower, s.upper)
    data = Dataset.from_arrays(x, evaluate("forrester", x), bounds=s.bounds)
    short = SamplerConfig(iterations=300, burn_in=100, thinning=2)
    return {
        "kernel_matrix n=60": (lambda: kernel_matrix(A, 0.5, 1e-8), 200),
        "layer_log_marginal n=60": (lambda: layer_log_marginal(A, M, 0.5, 1e-8), 200),
        "alc sums 400x400 n=40": (lambda: sample_sums(W, 0.5, 1e-8, Wr, Wc, 3), 20),
        "maximin_lhd n=60 d=4": (lambda: maximin_lhd(60, 4, seed=0), 3),
        "run_chain forrester 300 iters": (lambda: run_chain(data, short), 1),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    names = backend.available()
    table = {}
    for name in names:
        with backend.using(name):
            for label, (fn, number) in cases(np.random.default_rng(0)).items():
                best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
                table.setdefault(label, {})[name] = best
    print(f"{'case':34s}" + "".join(f"{n:>14s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for label, row in table.items():
        line = f"{label:34s}" + "".join(f"{row[n] * 1e3:12.3f}ms" for n in names)
        if len(names) > 1:
            line += f"   {row['python'] / row['compiled']:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
