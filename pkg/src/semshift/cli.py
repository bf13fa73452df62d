"""Command-line pipeline: ``semshift {train,score,eval,sweep,synth}``.

Settings come from an optional flat ``key = value`` config file (``--config``)
and are overridden by flags. The fully resolved configuration is written to
``<out>/config.resolved`` on every run.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import vectors
from .align import LandmarkSelection
from .corpus import CorpusStream, Vocabulary, build_vocabulary
from .ensemble import MISSING_POLICIES, predict_targets, read_targets, write_answers
from .features import DEFAULT_MAP_K, parse_features
from .harness import (
    GoldLabels,
    accuracy,
    default_grid,
    generate_base_corpus,
    generate_synthetic_shift,
    landmark_sweep,
    majority_class_baseline,
    pick_targets,
    read_gold,
    spearman,
)
from .pipeline import CorpusPair, run
from .sgns import SgnsConfig, train

logger = logging.getLogger("semshift")


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # every stage failure is reported with its tag
        raise StageError(name, exc) from exc


@dataclass
class RunConfig:
    corpus1: str | None = None
    corpus2: str | None = None
    targets: str | None = None
    gold: str | None = None
    gold_graded: str | None = None
    emb1: str | None = None
    emb2: str | None = None
    out: str = "out"
    features: str = "cos,map,freq"
    threshold: float = 0.75
    landmarks: str = "all"
    map_k: int = DEFAULT_MAP_K
    freq_sign: str = "prose"
    missing_word_policy: str = "change"
    seed: int = 1
    threads: int = 1
    dim: int = 300
    window: int = 10
    negatives: int = 5
    min_count: int = 10
    epochs: int = 5
    initial_lr: float = 0.025
    subsample_threshold: float = 1e-3
    unigram_power: float = 0.75
    grid: str = ""
    answer_name: str = "answer"
    # synth
    base: str | None = None
    n_tokens: int = 1_000_000
    n_targets: int = 5
    shift_rate: float = 0.9

    def validate(self, required=()):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.freq_sign not in ("paper", "prose"):
            raise ValueError("freq-sign must be 'paper' or 'prose'")
        if self.missing_word_policy not in MISSING_POLICIES:
            raise ValueError(f"missing-word-policy must be one of {MISSING_POLICIES}")
        parse_features(self.features)
        LandmarkSelection.parse(self.landmarks)
        for name in required:
            if getattr(self, name) is None:
                raise ValueError(f"--{name.replace('_', '-')} is required")
        for name in ("corpus1", "corpus2", "targets", "gold", "gold_graded", "emb1", "emb2", "base"):
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise FileNotFoundError(f"{name}: {value} does not exist")

    @property
    def sgns(self) -> SgnsConfig:
        return SgnsConfig(
            dim=self.dim, window=self.window, negatives=self.negatives, min_count=self.min_count,
            epochs=self.epochs, initial_lr=self.initial_lr, subsample_threshold=self.subsample_threshold,
            seed=self.seed, unigram_power=self.unigram_power, threads=self.threads,
        )

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def write_resolved(self) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / "config.resolved"
        with open(path, "w", encoding="utf-8") as fh:
            for k, v in asdict(self).items():
                fh.write(f"{k} = {'' if v is None else v}\n")
        return path


def read_config_file(path) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    types = {f.name: f.type for f in fields(RunConfig)}
    raw = read_config_file(args.config) if args.config else {}
    unknown = set(raw) - set(types)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for name in types:
        flag = getattr(args, name, None)
        if flag is not None:
            raw[name] = flag
    kwargs = {}
    for name, value in raw.items():
        t = types[name]
        if value in ("", None) and "None" in str(t):
            kwargs[name] = None
        elif "int" in str(t) and "str" not in str(t):
            kwargs[name] = int(value)
        elif "float" in str(t):
            kwargs[name] = float(value)
        else:
            kwargs[name] = str(value)
    return RunConfig(**kwargs)


# -- commands ---------------------------------------------------------------

def _embedding_paths(cfg: RunConfig):
    d = cfg.out_dir / "embeddings"
    return d / "corpus1.vec", d / "corpus2.vec", d / "vocab1.tsv", d / "vocab2.tsv"


def cmd_train(cfg: RunConfig) -> CorpusPair:
    with stage("config"):
        cfg.validate(required=("corpus1", "corpus2"))
    sgns = cfg.sgns
    e1, e2, v1p, v2p = _embedding_paths(cfg)
    e1.parent.mkdir(parents=True, exist_ok=True)
    out = []
    for corpus, emb_path, vocab_path in ((cfg.corpus1, e1, v1p), (cfg.corpus2, e2, v2p)):
        stream = CorpusStream(corpus)
        with stage("vocabulary"):
            vocab = build_vocabulary(stream, sgns.min_count)
        with stage("train"):
            emb = train(stream, vocab, sgns)
        with stage("save"):
            vectors.save(emb, emb_path)
            vocab.save(vocab_path)
        print(f"{corpus}: {len(vocab)} words, {vocab.total_tokens} tokens -> {emb_path}")
        out.append((vocab, emb))
    cfg.write_resolved()
    return CorpusPair(out[0][0], out[1][0], out[0][1], out[1][1])


def load_pair(cfg: RunConfig) -> CorpusPair:
    """Embeddings from --emb1/--emb2, else from a previous ``train`` run, else trained now."""
    e1, e2, v1p, v2p = _embedding_paths(cfg)
    if cfg.emb1 and cfg.emb2:
        with stage("config"):
            cfg.validate(required=("corpus1", "corpus2"))
        with stage("load"):
            emb1, emb2 = vectors.load(cfg.emb1), vectors.load(cfg.emb2)
        with stage("vocabulary"):
            vocab1 = build_vocabulary(CorpusStream(cfg.corpus1), cfg.min_count)
            vocab2 = build_vocabulary(CorpusStream(cfg.corpus2), cfg.min_count)
        return CorpusPair(vocab1, vocab2, emb1, emb2)
    if all(p.exists() for p in (e1, e2, v1p, v2p)):
        with stage("load"):
            vocab1 = Vocabulary.load(v1p, cfg.min_count)
            vocab2 = Vocabulary.load(v2p, cfg.min_count)
            emb1, emb2 = vectors.load(e1), vectors.load(e2)
        logger.info("loaded embeddings from %s", e1.parent)
        return CorpusPair(vocab1, vocab2, emb1, emb2)
    return cmd_train(cfg)


def cmd_score(cfg: RunConfig):
    with stage("config"):
        cfg.validate()
    pair = load_pair(cfg)
    with stage("score"):
        result = run(
            pair, LandmarkSelection.parse(cfg.landmarks), parse_features(cfg.features),
            cfg.map_k, cfg.freq_sign, cfg.threshold,
        )
    out = cfg.out_dir
    with stage("write"):
        out.mkdir(parents=True, exist_ok=True)
        result.features.write_csv(out / "features.csv")
        result.scores.write_csv(out / "scores.csv")
        result.alignment.write_diagnostics(out / "alignment.csv")
    if cfg.targets:
        with stage("targets"):
            preds = predict_targets(result.scores, read_targets(cfg.targets), cfg.missing_word_policy)
            write_answers(preds, out / "answer", cfg.answer_name)
    cfg.write_resolved()
    print(f"vocabulary sizes: {len(pair.vocab1)} / {len(pair.vocab2)}")
    print(f"intersection: {len(result.features)} words")
    print(f"landmarks: {len(result.alignment.landmarks)} ({cfg.landmarks}), residual {result.alignment.residual:.6g}")
    print(f"features: {','.join(result.features.features)}; threshold {cfg.threshold}; "
          f"{int(result.scores.label.sum())} words labeled changed")
    return result


def cmd_eval(cfg: RunConfig) -> dict:
    with stage("config"):
        cfg.validate()
    if not cfg.gold and not cfg.gold_graded:
        raise StageError("eval", ValueError("--gold and/or --gold-graded is required"))
    answers = cfg.out_dir / "answer"
    lines = []
    report = {}
    with stage("eval"):
        if cfg.gold:
            gold = {w: int(v) for w, v in read_gold(cfg.gold).items()}
            pred = {w: int(v) for w, v in read_gold(answers / "task1" / f"{cfg.answer_name}.txt").items()}
            report["accuracy"] = accuracy(pred, gold)
            label, _, base = majority_class_baseline(gold)
            report["majority_class"] = label
            report["majority_accuracy"] = base
            lines.append(f"accuracy\t{report['accuracy']:.3f}")
            lines.append(f"majority_baseline\t({label}){base:.3f}")
        if cfg.gold_graded:
            gold_g = read_gold(cfg.gold_graded)
            pred_g = read_gold(answers / "task2" / f"{cfg.answer_name}.txt")
            report["spearman"] = spearman(pred_g, gold_g)
            lines.append(f"spearman\t{report['spearman']:.3f}")
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / "eval.txt").write_text("".join(l + "\n" for l in lines), encoding="utf-8")
        with open(cfg.out_dir / "eval.csv", "w", encoding="utf-8") as fh:
            fh.write("metric,value\n")
            for k, v in report.items():
                fh.write(f"{k},{v:.6g}\n")
    cfg.write_resolved()
    print("\n".join(lines))
    return report


def cmd_sweep(cfg: RunConfig):
    with stage("config"):
        cfg.validate()
    if not cfg.gold and not cfg.gold_graded:
        raise StageError("sweep", ValueError("--gold and/or --gold-graded is required"))
    pair = load_pair(cfg)
    gold = GoldLabels.read(cfg.gold, cfg.gold_graded)
    grid = [int(x) for x in cfg.grid.split(",")] if cfg.grid else default_grid(pair.shared_size)
    with stage("sweep"):
        result = landmark_sweep(
            pair, gold, grid, cfg.threshold, parse_features(cfg.features),
            cfg.map_k, cfg.freq_sign, cfg.missing_word_policy,
        )
        result.write_csv(cfg.out_dir / "sweep.csv")
    cfg.write_resolved()
    for r in result.rows:
        print(f"n={r.n}\taccuracy={r.accuracy}\tspearman={r.spearman}")
    return result


def cmd_synth(cfg: RunConfig):
    with stage("config"):
        cfg.validate()
    with stage("synth"):
        if cfg.base:
            base = list(CorpusStream(cfg.base))
        else:
            base = generate_base_corpus(n_tokens=cfg.n_tokens, seed=cfg.seed)
        if cfg.targets:
            targets = read_targets(cfg.targets)
        else:
            targets = pick_targets(base, cfg.n_targets, cfg.seed)
        syn = generate_synthetic_shift(base, targets, cfg.shift_rate, cfg.seed)
        paths = syn.write(cfg.out_dir)
    cfg.write_resolved()
    for name, p in paths.items():
        print(f"{name}: {p}")
    return syn


COMMANDS = {
    "train": cmd_train,
    "score": cmd_score,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--corpus1", help="earlier corpus (one sentence per line)")
    common.add_argument("--corpus2", help="later corpus")
    common.add_argument("--targets", help="target word list")
    common.add_argument("--gold", help="binary gold labels, word<TAB>0|1")
    common.add_argument("--gold-graded", dest="gold_graded", help="graded gold scores, word<TAB>score")
    common.add_argument("--emb1", help="pre-trained word2vec text vectors for corpus1")
    common.add_argument("--emb2", help="pre-trained word2vec text vectors for corpus2")
    common.add_argument("--out", help="output directory")
    common.add_argument("--features", help="comma list of cos,map,freq")
    common.add_argument("--threshold", type=float)
    common.add_argument("--landmarks", help="all | top:<n> | file:<path>")
    common.add_argument("--map-k", dest="map_k", type=int)
    common.add_argument("--freq-sign", dest="freq_sign", choices=("paper", "prose"))
    common.add_argument("--missing-word-policy", dest="missing_word_policy", choices=MISSING_POLICIES)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    for name, typ in (("dim", int), ("window", int), ("negatives", int), ("min-count", int),
                      ("epochs", int), ("initial-lr", float), ("subsample-threshold", float)):
        common.add_argument(f"--{name}", dest=name.replace("-", "_"), type=typ)
    common.add_argument("--grid", help="comma list of landmark counts for sweep")
    common.add_argument("--answer-name", dest="answer_name", help="answer file stem, e.g. english")
    common.add_argument("--base", help="base corpus for synth (generated when absent)")
    common.add_argument("--n-tokens", dest="n_tokens", type=int)
    common.add_argument("--n-targets", dest="n_targets", type=int)
    common.add_argument("--shift-rate", dest="shift_rate", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="semshift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__name__.replace("cmd_", ""))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        with stage("config"):
            cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except StageError as exc:
        print(f"semshift {args.command}: error {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
