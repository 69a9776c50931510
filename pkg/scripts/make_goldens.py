"""Regenerate the CLI golden files in tests/golden from data/tutorial.

Run from the repository root after an intentional output change:

    python scripts/make_goldens.py
"""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

from varfuse.cli import main

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data" / "tutorial"
GOLDEN = ROOT / "tests" / "golden"

# (output name, argv); "{tmp}" is the scratch directory, "{data}" the tutorial data
PIPELINE = [
    (None, ["index-build", "{data}/corpus.tsv", "{tmp}/index"]),
    ("query.run", ["query-run", "{tmp}/index", "{data}/queries.tsv", "--k", "10", "--no-timing",
                   "--stats", "{out}/query.stats.csv", "--out", "{out}/query.run"]),
    ("fused.run", ["fuse", "{tmp}/index", "{data}/clusters.tsv", "--k", "10", "--out", "{out}/fused.run"]),
    ("eval.txt", ["eval", "{out}/fused.run", "{out}/query.run", "{data}/qrels.txt", "--out", "{out}/eval.txt"]),
    ("eval-rbp.txt", ["eval", "{out}/fused.run", "{out}/query.run", "{data}/qrels.txt", "--metric", "rbp",
                      "--out", "{out}/eval-rbp.txt"]),
    (None, ["centroid-build", "{tmp}/index", "{data}/clusters.tsv", "{tmp}/centroids.bin"]),
    ("rcc.run", ["boost", "{tmp}/index", "{tmp}/centroids.bin", "{data}/queries.tsv", "--method", "rcc",
                 "--k", "10", "--out", "{out}/rcc.run"]),
    ("ref-reorder.run", ["boost", "{tmp}/index", "{tmp}/centroids.bin", "{data}/queries.tsv",
                         "--method", "ref-reorder", "--k", "10", "--out", "{out}/ref-reorder.run"]),
]


def run_pipeline(out: Path, tmp: Path) -> list[str]:
    """Run the tutorial pipeline writing outputs into ``out``; return their names."""
    produced = []
    for name, argv in PIPELINE:
        args = [a.format(data=DATA, tmp=tmp, out=out) for a in argv]
        code = main(args)
        if code != 0:
            raise SystemExit(f"{' '.join(args)} exited with {code}")
        if name:
            produced.append(name)
    return produced + ["query.stats.csv"]


if __name__ == "__main__":
    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        for name in run_pipeline(GOLDEN, Path(tmp)):
            print(f"wrote {GOLDEN / name}")
    shutil.rmtree(GOLDEN / "__pycache__", ignore_errors=True)
