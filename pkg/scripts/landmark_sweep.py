"""Accuracy and Spearman against the number of alignment landmarks.

Runs on a synthetic shift corpus by default; pass ``--corpus1/--corpus2/--gold``
to sweep a real corpus pair instead.

    python3 scripts/landmark_sweep.py --out runs/sweep
    python3 scripts/landmark_sweep.py --corpus1 c1.txt.gz --corpus2 c2.txt.gz \\
        --gold truth/binary.txt --gold-graded truth/graded.txt --lo 300
"""
import argparse
from pathlib import Path

import numpy as np

from semshift.corpus import CorpusStream, SentenceList
from semshift.harness import (
    GoldLabels, default_grid, generate_base_corpus, generate_synthetic_shift, landmark_sweep, pick_targets,
)
from semshift.pipeline import train_pair
from semshift.sgns import SgnsConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--corpus1", type=Path)
    ap.add_argument("--corpus2", type=Path)
    ap.add_argument("--gold", type=Path)
    ap.add_argument("--gold-graded", type=Path)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--n-tokens", type=int, default=1_000_000)
    ap.add_argument("--lo", type=int, default=10, help="smallest landmark count")
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--threshold", type=float, default=0.75)
    ap.add_argument("--features", default="cos,map,freq")
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--window", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--min-count", type=int, default=10)
    ap.add_argument("--out", type=Path, default=Path("runs/landmark_sweep"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    cfg = SgnsConfig(dim=args.dim, window=args.window, epochs=args.epochs, min_count=args.min_count, seed=args.seed)

    if args.corpus1:
        c1, c2 = CorpusStream(args.corpus1), CorpusStream(args.corpus2)
        gold = GoldLabels.read(args.gold, args.gold_graded)
    else:
        base = generate_base_corpus(n_tokens=args.n_tokens, seed=args.seed)
        syn = generate_synthetic_shift(base, pick_targets(base, 5, args.seed), 0.9, args.seed)
        c1, c2 = SentenceList(syn.corpus1), SentenceList(syn.corpus2)
        gold = GoldLabels(binary=syn.gold, graded={w: float(v) for w, v in syn.gold.items()})

    pair = train_pair(c1, c2, cfg)
    grid = default_grid(pair.shared_size, lo=args.lo, points=args.points)
    sweep = landmark_sweep(pair, gold, grid, threshold=args.threshold, features=args.features.split(","))
    sweep.write_csv(args.out / "sweep.csv")
    for r in sweep.rows:
        acc = "" if r.accuracy is None else f"{r.accuracy:.3f}"
        rho = "" if r.spearman is None else f"{r.spearman:+.3f}"
        bar = "#" * int(round(40 * (r.accuracy or 0)))
        print(f"n={r.n:6d}  acc {acc}  rho {rho}  {bar}")
    accs = [r.accuracy for r in sweep.rows if r.accuracy is not None]
    if accs:
        print(f"accuracy range {min(accs):.3f}..{max(accs):.3f}, std {np.std(accs):.3f}")


if __name__ == "__main__":
    main()
