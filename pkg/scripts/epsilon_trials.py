"""Boosting effectiveness under simulated cluster misassignment.

    python scripts/epsilon_trials.py --seed 7 --trials 10
"""

import argparse

from varfuse import build_index
from varfuse.centroid import BOOSTERS, build_centroid
from varfuse.evaluation import ndcg_at_k
from varfuse.experiments import epsilon_effectiveness
from varfuse.synthetic import SyntheticConfig, generate_collection
from varfuse.traversal import WeightedQuery, retrieve


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--epsilons", default="0,0.05,0.1,0.2,0.5,1")
    args = p.parse_args()

    col = generate_collection(SyntheticConfig(), seed=args.seed)
    index = build_index(col.corpus)
    centroids = {t: build_centroid(index, vs) for t, vs in col.held_in.items()}
    runs = {q: retrieve(index, WeightedQuery.from_terms(text.split()), 1000, "maxscore")[0]
            for q, (_, text) in col.held_out.items()}
    truth = {q: t for q, (t, _) in col.held_out.items()}
    base = [ndcg_at_k([index.docid(d) for d in runs[q].docs], col.qrels, truth[q]).value for q in runs]
    print(f"unboosted NDCG@10 = {sum(base) / len(base):.4f}")
    print("epsilon," + ",".join(BOOSTERS))
    for eps in (float(x) for x in args.epsilons.split(",")):
        eff = epsilon_effectiveness(index, centroids, runs, truth, col.qrels, eps, args.seed, args.trials)
        print(f"{eps}," + ",".join(f"{eff[m]:.4f}" for m in BOOSTERS))


if __name__ == "__main__":
    main()
