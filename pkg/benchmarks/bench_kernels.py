"""Compare the compiled and pure-Python Google-matrix kernels.

Times the damped-operator apply and a full PageRank run on a synthetic
tensor sized like the real-world case (168 countries x 10 products by
default) and reports the speedup. Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --countries 300 --repeats 20
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wtnrank import build_google
from wtnrank._kernels import available_backends
from wtnrank.testkit import SyntheticSpec, synthetic_money


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _power(G, backend: str, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    # same loop as ranks.pagerank, with the backend pinned
    x = np.full(G.size, 1.0 / G.size)
    for _ in range(max_iter):
        nxt = G.apply(x, backend=backend)
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    return x


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--countries", type=int, default=168)
    parser.add_argument("--products", type=int, default=10)
    parser.add_argument("--density", type=float, default=0.4)
    parser.add_argument("--repeats", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = SyntheticSpec(args.seed, args.countries, args.products, args.density)
    money = synthetic_money(spec)
    G = build_google(money)
    n = G.size
    nnz = G.S.matrix.nnz
    print(f"N = {n} nodes ({args.countries} countries x {args.products} products), nnz = {nnz}")
    print(f"backends: {', '.join(available_backends())}")

    rng = np.random.default_rng(args.seed)
    x = rng.random(n)
    x /= x.sum()

    results = {}
    for backend in available_backends():
        t_apply = _time(lambda: G.apply(x, backend=backend), args.repeats)
        t_rank = _time(lambda: _power(G, backend), max(args.repeats // 10, 3))
        results[backend] = (t_apply, t_rank)
        print(f"{backend:>8}:  apply {t_apply * 1e6:9.1f} us   pagerank {t_rank * 1e3:8.2f} ms")

    if "cython" in results and "numpy" in results:
        a = results["numpy"][0] / results["cython"][0]
        r = results["numpy"][1] / results["cython"][1]
        print(f"speedup (numpy / cython):  apply {a:.2f}x   pagerank {r:.2f}x")
        diff = np.abs(
            G.apply(x, backend="cython") - G.apply(x, backend="numpy")
        ).max()
        print(f"max |cython - numpy| on one apply: {diff:.3e}")


if __name__ == "__main__":
    main()
