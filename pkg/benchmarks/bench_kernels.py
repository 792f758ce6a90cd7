"""Time the numba kernels against their numpy / pure-Python twins.

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R]

Every kernel is run on the same seeded input through both backends; outputs
are compared before any timing is reported. The first jit call (compilation
or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from constrained_er import kernels
from constrained_er._accel import HAVE_NUMBA


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def csr(rng, n_tokens, n_entities, per_token):
    counts = rng.integers(1, per_token + 1, size=n_tokens)
    ptr = np.zeros(n_tokens + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    idx = np.concatenate([np.sort(rng.choice(n_entities, size=c, replace=False)) for c in counts])
    return ptr, idx.astype(np.int64)


def random_edges(rng, n_left, n_right, degree):
    m = n_left * degree
    codes = np.unique(rng.integers(0, n_left, m) * n_right + rng.integers(0, n_right, m))
    left, right = codes // n_right, codes % n_right
    # quantised scores produce plenty of ties for the tie-break paths
    score = np.round(rng.uniform(0.01, 1.0, left.size), 2)
    return left, right, score


def cases(size, rng):
    n_tok = size // 2
    l_ptr, l_idx = csr(rng, n_tok, size, 6)
    r_ptr, r_idx = csr(rng, n_tok, size, 6)
    tok = np.arange(n_tok, dtype=np.int64)
    yield "expand_pairs", (l_ptr, l_idx, r_ptr, r_idx, tok, tok, size)

    left, right, score = random_edges(rng, size, size, 8)
    yield "first_choice", (left, right, score, size)

    order = np.lexsort((right, left, -score))
    yield "greedy", (left, right, order, size, size)
    yield "components", (size, size, left, right)

    n = max(size // 20, 10)
    left, right, score = random_edges(rng, n, n, 4)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(left, minlength=n), out=ptr[1:])
    yield "max_weight", (n, n, ptr, right, score, 1e-12)

    mate_k = kernels.max_weight(n, n, ptr, right, score, 1e-12)
    in_m = np.zeros(left.size, dtype=np.bool_)
    in_m[mate_k[mate_k >= 0]] = True
    yield "duals", (n, n, left, right, score, in_m, 1e-13)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20000, help="entities per side")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<14}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, call_args in cases(args.size, rng):
        jit_fn = getattr(kernels, f"{name}_jit")
        py_fn = getattr(kernels, f"{name}_py")
        jit_fn(*call_args)  # compile or load from cache
        t_jit, out_jit = best_of(jit_fn, call_args, args.repeat)
        t_py, out_py = best_of(py_fn, call_args, args.repeat)
        same = (all(np.array_equal(a, b) for a, b in zip(out_jit, out_py))
                if isinstance(out_jit, tuple) else np.array_equal(out_jit, out_py))
        if not same:
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<14}{t_jit:>12.5f}{t_py:>12.5f}{t_py / max(t_jit, 1e-9):>9.1f}x")


if __name__ == "__main__":
    main()
