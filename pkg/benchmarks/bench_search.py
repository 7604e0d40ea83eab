"""Node-rate comparison of the two search engines on fixed problems.

Both engines walk identical trees, so the node counts must agree exactly
and the interesting number is the rate.  The pure engine is the reference
implementation; the compiled one is what makes the k=4 runs practical.
"""

import argparse
import time

from cmlab import _searchpy, search
from cmlab.observables import build_pm_square
from cmlab.search import SearchProblem

CASES = (
    ("k2-rc-repeat", SearchProblem(k=2, families=("rc", "repeat"))),
    ("k3-context-first", SearchProblem(k=3, families=("context'",))),
    ("k3-both-primes", SearchProblem(k=3, families=("context'", "compat'"))),
)


def drive(engine, problem):
    cfg = search._config(problem, build_pm_square(), 0.0)
    t0 = time.perf_counter()
    unfinished, leaves, nodes, _ = engine.run_search(cfg)
    assert not unfinished
    return nodes, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true",
                    help="drop the largest case (pure engine takes ~1 min)")
    ap.add_argument("--repeat", type=int, default=1,
                    help="timing repetitions, best of N (default 1)")
    args = ap.parse_args()

    engines = [("pure", _searchpy)]
    try:
        from cmlab import _searchcore
        engines.append(("compiled", _searchcore))
    except ImportError:
        print("note: compiled engine not built, benchmarking pure only")

    cases = CASES[:-1] if args.quick else CASES
    print(f"{'case':18s} {'engine':9s} {'nodes':>9s} {'seconds':>8s} {'knodes/s':>9s}")
    for name, problem in cases:
        counts = {}
        for ename, engine in engines:
            best = None
            for _ in range(args.repeat):
                nodes, dt = drive(engine, problem)
                best = dt if best is None else min(best, dt)
            counts[ename] = nodes
            rate = nodes / best / 1e3 if best else float("inf")
            print(f"{name:18s} {ename:9s} {nodes:9d} {best:8.3f} {rate:9.1f}")
        if len(set(counts.values())) != 1:
            raise SystemExit(f"engine disagreement on {name}: {counts}")


if __name__ == "__main__":
    main()
