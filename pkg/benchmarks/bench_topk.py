"""Compare the compiled top-k kernel against the numpy fallback.

Runs the same query batches through both implementations over growing
corpus sizes, checks they agree, and prints a throughput table.

    python3 benchmarks/bench_topk.py [--full]

The default sizes finish in seconds; --full adds a 1M-row pass sized
like the headline throughput target.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from n2o import _topk_py
from n2o.kernels import HAVE_COMPILED, dense_topk_batch


def make_data(n_rows: int, dim: int, n_queries: int, seed: int):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n_rows, dim), dtype=np.float32)
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    qids = rng.choice(n_rows, size=n_queries, replace=False).astype(np.int64)
    return rows, qids


def run_one(impl, rows, qids, k, threads):
    skip = np.zeros(rows.shape[0], dtype=np.uint8)
    queries = np.ascontiguousarray(rows[qids])
    t0 = time.perf_counter()
    ids, scores = impl(rows, queries, qids, skip, k, threads)
    return ids, scores, time.perf_counter() - t0


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--full", action="store_true",
                        help="include the 1M-row pass")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    sizes = [(10_000, 64, 100, 50), (100_000, 128, 100, 50)]
    if args.full:
        sizes.append((1_000_000, 128, 100, 50))

    print(f"compiled kernel available: {HAVE_COMPILED}")
    print(f"{'rows':>10} {'dim':>5} {'queries':>8} {'k':>4} "
          f"{'compiled_s':>11} {'fallback_s':>11} {'speedup':>8}")
    for n_rows, dim, n_queries, k in sizes:
        rows, qids = make_data(n_rows, dim, n_queries, seed=12)
        c_ids, c_scores, c_time = run_one(dense_topk_batch, rows, qids, k,
                                          args.threads)
        f_ids, f_scores, f_time = run_one(_topk_py.dense_topk_batch, rows,
                                          qids, k, args.threads)
        if not np.array_equal(c_ids, f_ids):
            raise SystemExit("kernel disagreement: ids differ")
        if not np.allclose(c_scores, f_scores, atol=1e-9):
            raise SystemExit("kernel disagreement: scores differ")
        speedup = f_time / c_time if c_time > 0 else float("inf")
        print(f"{n_rows:>10} {dim:>5} {n_queries:>8} {k:>4} "
              f"{c_time:>11.3f} {f_time:>11.3f} {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
