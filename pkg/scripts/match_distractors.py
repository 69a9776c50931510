"""Cluster-matching success rate as look-alike distractor clusters are added.

    python scripts/match_distractors.py --seed 0
"""

import argparse

from varfuse.experiments import match_queries
from varfuse.synthetic import generate_distractors, generate_match_clusters


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=50)
    p.add_argument("--settings", default="0:0,50:0.2,100:0.4,200:0.6,400:0.8,800:0.9",
                   help="comma-separated distractors:overlap pairs")
    args = p.parse_args()

    clusters, held_out = generate_match_clusters(args.clusters, seed=args.seed)
    vocabs = [sorted({t for v in vs.variations for t in v}) for vs in clusters.values()]
    print("distractors,overlap,success_rate")
    for item in args.settings.split(","):
        n, overlap = item.split(":")
        pool = list(clusters.values()) + generate_distractors(int(n), float(overlap), vocabs, args.seed)
        _, rate = match_queries(held_out, pool)
        print(f"{n},{overlap},{rate:.4f}")


if __name__ == "__main__":
    main()
