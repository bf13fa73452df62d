"""Feature ablation per language on the SemEval-2020 Task 1 release.

Expects ``<root>/<lang>/corpus{1,2}/**/*.txt[.gz]``, ``<root>/<lang>/truth/{binary,graded}.txt``.
Prints accuracy and Spearman per feature set with the decay column.

    python3 scripts/feature_ablation.py /data/semeval2020_ulscd --out runs/ablation
"""
import argparse
import csv
from pathlib import Path

from semshift.corpus import CorpusStream, SentenceList
from semshift.harness import FEATURE_SETS, GoldLabels, decay, feature_ablation, majority_class_baseline
from semshift.pipeline import train_pair
from semshift.sgns import SgnsConfig

LANGS = ("english", "german", "latin", "swedish")


def load_corpus(d: Path) -> SentenceList:
    files = sorted(p for p in d.rglob("*") if p.suffix in (".txt", ".gz"))
    return SentenceList(s for f in files for s in CorpusStream(f))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("root", type=Path)
    ap.add_argument("--langs", nargs="+", default=list(LANGS))
    ap.add_argument("--threshold", type=float, default=0.75)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/ablation"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    cfg = SgnsConfig(seed=args.seed, threads=args.threads)

    acc = {}
    rho = {}
    for lang in args.langs:
        root = args.root / lang
        gold = GoldLabels.read(root / "truth" / "binary.txt", root / "truth" / "graded.txt")
        pair = train_pair(load_corpus(root / "corpus1"), load_corpus(root / "corpus2"), cfg)
        label, _, base = majority_class_baseline(gold.binary)
        print(f"{lang}: majority class {label} accuracy {base:.3f}")
        for row in feature_ablation(pair, gold, threshold=args.threshold):
            name = "+".join(row.features)
            acc.setdefault(name, {})[lang] = row.accuracy
            rho.setdefault(name, {})[lang] = row.spearman
            print(f"  {name:14s} acc {row.accuracy:.3f}  rho {row.spearman:+.3f}")

    with open(args.out / "ablation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "features", *args.langs, "decay"])
        for metric, table in (("accuracy", acc), ("spearman", rho)):
            best = {l: max(table[f][l] for f in table) for l in args.langs}
            for feats in FEATURE_SETS:
                name = "+".join(feats)
                d = decay(table[name], best)
                w.writerow([metric, name, *(f"{table[name][l]:.3f}" for l in args.langs), f"{d:.2f}"])
                print(f"{metric:8s} {name:14s} decay {d:.2f}")


if __name__ == "__main__":
    main()
