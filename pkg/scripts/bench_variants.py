"""Cost and effectiveness as the number of fused variants grows, on synthetic data.

    python scripts/bench_variants.py --seed 0 --reps 3 --variants 1,2,5,10
"""

import argparse
import csv
import sys

from varfuse import build_index
from varfuse.experiments import bench_methods, bench_variants
from varfuse.synthetic import SyntheticConfig, generate_collection


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--variants", default="1,2,5,10")
    p.add_argument("--topics", type=int, default=5, help="how many synthetic topics to sweep")
    p.add_argument("--strategies", default="maxscore,wand,bmw")
    args = p.parse_args()

    col = generate_collection(SyntheticConfig(held_in=20), seed=args.seed)
    index = build_index(col.corpus)
    clusters = dict(list(col.held_in.items())[: args.topics])
    sizes = [int(x) for x in args.variants.split(",")]
    strategies = args.strategies.split(",")
    rows, eff = bench_variants(index, clusters, sizes, args.seed, args.reps, strategies=strategies, qrels=col.qrels)

    # average over topics: one line per (method, variants)
    methods = bench_methods(strategies)
    out = csv.writer(sys.stdout)
    out.writerow(["method", "variants", "postings", "cpu_ms"])
    for meth in methods:
        for m in sizes:
            sel = [r for r in rows if r.method == meth and r.variants == m]
            out.writerow([meth, m, f"{sum(r.postings for r in sel) / len(sel):.1f}",
                          f"{sum(r.cpu_ns for r in sel) / len(sel) / 1e6:.3f}"])
    print("\nvariants,ndcg@10,rbp,rbp_residual")
    for m, nd, r, res in eff:
        print(f"{m},{nd:.4f},{r:.4f},{res:.4f}")


if __name__ == "__main__":
    main()
