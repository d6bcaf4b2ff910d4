"""Batch command-line front end.

Subcommands run individual pipeline stages against a run directory;
``pipeline`` sequences them all.  Every stage derives its seed from the
master seed and the stage name, writes its artifacts under the run
directory, and drops a ``.stage_<name>.done`` marker so runs resume
cleanly.  Exit codes: 0 success, 1 stage failure, 2 config/input error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, embed, features, ingest, reglab, report, stats, topics
from .encode import (
    EncodedDataset,
    SplitSpec,
    Vocabulary,
    build_vocabulary,
    encode_corpus,
    sample_and_split,
)
from .errors import ConfigError, DataError, TrollscopeError
from .netclf import (
    ClassifierModel,
    TrainConfig,
    build_blstm,
    build_feedforward,
    evaluate,
    train,
)

STAGES = [
    "preprocess",
    "sample",
    "embed",
    "train",
    "evaluate",
    "features",
    "regress",
    "topics",
    "disperse",
    "report",
]

MODEL_NAMES = ("feedforward", "blstm", "blstm_pretrained")


def stage_seed(master_seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass
class DatasetSpec:
    name: str
    path: str
    kind: str = "csv"
    text_field: str = "text"
    label_field: str | None = None
    label: int | None = None

    def as_format(self) -> ingest.DatasetFormat:
        default = self.label if self.label is not None else ingest.UNLABELED
        return ingest.DatasetFormat(
            kind=self.kind,
            text_field=self.text_field,
            label_field=self.label_field,
            default_label=default,
        )


@dataclass
class RunConfig:
    datasets: list[DatasetSpec] = field(default_factory=list)
    out_dir: str = "run"
    master_seed: int = 1234

    stopword_path: str | None = None
    exception_path: str | None = None
    language_letter_weight: float = 0.5
    language_stopword_weight: float = 0.5
    language_threshold: float = 0.5

    sample_size: int = 30000
    test_fraction: float = 0.2
    validation_fraction: float = 0.3

    embed_dim: int = 100
    embed_window: int = 3
    embed_epochs: int = 5
    embed_min_count: int = 5
    embed_negatives: int = 5
    embed_learning_rate: float = 0.025
    embed_max_tweets: int = 0  # 0 trains on the whole corpus

    clf_epochs: int = 10
    clf_batch_size: int = 128
    clf_learning_rate: float = 1e-3
    clf_hidden: int = 100
    clf_dtype: str = "float64"
    eval_model: str = "blstm_pretrained"

    features_per_class: int = 4000
    holdout_per_class: int = 1350

    regress_mode: str = "zscore"
    regress_drop_influential: bool = False

    topics_k_list: tuple[int, ...] = (1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25)
    topics_iterations: int = 1000
    topics_burn_in: int = 200
    topics_top_n: int = 10
    topics_window: int = 110
    topics_gap_k: int = 17
    topics_max_docs: int = 0  # 0 = use every tweet in the group

    disperse_min_count: int = 1
    disperse_sample_n: int = 2000

    svg: bool = False
    source_text: str = ""

    def resolved(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k not in ("datasets", "source_text")}
        d["topics_k_list"] = list(self.topics_k_list)
        d["datasets"] = [ds.__dict__ for ds in self.datasets]
        d["version"] = __version__
        return d


_INT_KEYS = {
    "master_seed", "sample_size", "embed_dim", "embed_window", "embed_epochs",
    "embed_min_count", "embed_negatives", "embed_max_tweets", "clf_epochs",
    "clf_batch_size", "clf_hidden", "features_per_class", "holdout_per_class",
    "topics_iterations", "topics_burn_in", "topics_top_n", "topics_window",
    "topics_gap_k", "topics_max_docs", "disperse_min_count", "disperse_sample_n",
}
_FLOAT_KEYS = {
    "language_letter_weight", "language_stopword_weight", "language_threshold",
    "test_fraction", "validation_fraction", "embed_learning_rate",
    "clf_learning_rate",
}
_BOOL_KEYS = {"svg", "regress_drop_influential"}


def parse_config(path: str | Path) -> RunConfig:
    """Parse a flat key=value config file (''#'' comments allowed)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    pairs: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key = value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()

    cfg = RunConfig(source_text=text)
    dataset_names = [n.strip() for n in pairs.pop("datasets", "").split(",") if n.strip()]
    for name in dataset_names:
        prefix = f"dataset.{name}."
        spec = DatasetSpec(
            name=name,
            path=pairs.pop(prefix + "path", ""),
            kind=pairs.pop(prefix + "kind", "csv"),
            text_field=pairs.pop(prefix + "text_field", "text"),
            label_field=pairs.pop(prefix + "label_field", None),
            label=(int(v) if (v := pairs.pop(prefix + "label", None)) is not None else None),
        )
        if not spec.path:
            raise ConfigError(f"dataset {name!r} has no path")
        cfg.datasets.append(spec)

    for key, value in pairs.items():
        attr = key.replace(".", "_")
        if attr == "topics_k_list":
            cfg.topics_k_list = tuple(int(x) for x in value.split(",") if x.strip())
            continue
        if not hasattr(cfg, attr):
            raise ConfigError(f"unknown config key {key!r}")
        if attr in _INT_KEYS:
            setattr(cfg, attr, int(value))
        elif attr in _FLOAT_KEYS:
            setattr(cfg, attr, float(value))
        elif attr in _BOOL_KEYS:
            setattr(cfg, attr, value.lower() in ("1", "true", "yes", "on"))
        else:
            setattr(cfg, attr, value)
    return cfg


# ---------------------------------------------------------------------------
# run directory helpers
# ---------------------------------------------------------------------------

class Run:
    def __init__(self, cfg: RunConfig, run_dir: str | Path | None = None):
        self.cfg = cfg
        self.dir = Path(run_dir or cfg.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "config.source.ini").write_text(cfg.source_text, encoding="utf-8")
        report.write_json(self.dir / "config.resolved.json", cfg.resolved())

    def path(self, *parts: str) -> Path:
        p = self.dir.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def marker(self, stage: str) -> Path:
        return self.dir / f".stage_{stage}.done"

    def is_done(self, stage: str) -> bool:
        return self.marker(stage).exists()

    def mark_done(self, stage: str) -> None:
        self.marker(stage).write_text("done\n", encoding="utf-8")

    def clear_from(self, stage: str) -> None:
        for s in STAGES[STAGES.index(stage):]:
            self.marker(s).unlink(missing_ok=True)


def _load_corpus(run: Run) -> list[ingest.CleanTweet]:
    return ingest.read_corpus(run.path("corpus", "corpus.tsv"))


def _load_sample(run: Run) -> dict[str, list[ingest.CleanTweet]]:
    return {
        name: ingest.read_corpus(run.path("sample", f"{name}.tsv"))
        for name in ("sample", "train", "validation", "test")
    }


def _clf_dtype(cfg: RunConfig):
    return np.float32 if cfg.clf_dtype == "float32" else np.float64


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def stage_preprocess(run: Run) -> None:
    cfg = run.cfg
    if not cfg.datasets:
        raise ConfigError("no datasets configured")
    pre = ingest.Preprocessor(ingest.PreprocessConfig(
        stopword_path=cfg.stopword_path,
        exception_path=cfg.exception_path,
        language=ingest.LanguageFilterConfig(
            letter_weight=cfg.language_letter_weight,
            stopword_weight=cfg.language_stopword_weight,
            threshold=cfg.language_threshold,
        ),
    ))
    all_stats = {}
    merged: list[ingest.CleanTweet] = []
    for spec in cfg.datasets:
        records, skipped = ingest.load_dataset(spec.path, spec.as_format())
        corpus, pstats = pre.run(records)
        pstats.skipped_rows = skipped
        all_stats[spec.name] = pstats.as_dict()
        merged.extend(corpus)
    # cross-dataset duplicates are removed once more after the merge
    before = len(merged)
    merged = ingest.dedupe_and_prune(merged)
    ingest.write_corpus(run.path("corpus", "corpus.tsv"), merged)
    report.write_json(run.path("corpus", "preprocess_stats.json"), {
        "datasets": all_stats,
        "merged_total": len(merged),
        "merged_cross_duplicates": before - len(merged),
        "stopword_hash": pre.stopword_hash,
    })


def stage_sample(run: Run) -> None:
    cfg = run.cfg
    corpus = _load_corpus(run)
    spec = SplitSpec(
        sample_size=cfg.sample_size,
        test_fraction=cfg.test_fraction,
        validation_fraction=cfg.validation_fraction,
        rng_seed=stage_seed(cfg.master_seed, "sample"),
    )
    split = sample_and_split(corpus, spec)
    sample_all = split.train + split.validation + split.test
    vocab = build_vocabulary(sample_all)
    vocab.save(run.path("sample", "vocab.csv"))
    pad_len = max(len(t.lemmas) for t in sample_all)

    ingest.write_corpus(run.path("sample", "sample.tsv"), sample_all)
    for name, subset in (("train", split.train), ("validation", split.validation),
                         ("test", split.test)):
        ingest.write_corpus(run.path("sample", f"{name}.tsv"), subset)
        encoded = encode_corpus(subset, vocab, pad_len)
        encoded.seed = spec.rng_seed
        encoded.save(run.path("sample", f"encoded_{name}.npz"))
    report.write_json(run.path("sample", "split_meta.json"), {
        "pad_len": pad_len,
        "seed": spec.rng_seed,
        "sizes": {"train": len(split.train), "validation": len(split.validation),
                  "test": len(split.test)},
        "per_class": {k: {str(c): n for c, n in v.items()}
                      for k, v in split.per_class.items()},
        "vocab_size": vocab.size,
        "vocab_hash": vocab.content_hash(),
        "mean_tweet_length": features.mean_tweet_length(sample_all),
    })


def stage_embed(run: Run) -> None:
    cfg = run.cfg
    corpus = _load_corpus(run)
    if cfg.embed_max_tweets and len(corpus) > cfg.embed_max_tweets:
        rng = np.random.default_rng(stage_seed(cfg.master_seed, "embed:subsample"))
        picked = rng.choice(len(corpus), size=cfg.embed_max_tweets, replace=False)
        corpus = [corpus[i] for i in picked]
    model = embed.train_word2vec(corpus, embed.Word2VecConfig(
        dim=cfg.embed_dim,
        window=cfg.embed_window,
        epochs=cfg.embed_epochs,
        min_count=cfg.embed_min_count,
        negatives=cfg.embed_negatives,
        learning_rate=cfg.embed_learning_rate,
        seed=stage_seed(cfg.master_seed, "embed"),
    ))
    model.save_npz(run.path("embed", "embeddings.npz"))
    report.write_json(run.path("embed", "meta.json"), {
        "words": len(model), "dim": model.dim,
        "epoch_losses": model.epoch_losses,
        "vocab_hash": model.vocab_hash(),
    })


def stage_train(run: Run) -> None:
    cfg = run.cfg
    meta = report.read_json(run.path("sample", "split_meta.json"))
    vocab = Vocabulary.load(run.path("sample", "vocab.csv"))
    train_set = EncodedDataset.load(run.path("sample", "encoded_train.npz"))
    val_set = EncodedDataset.load(run.path("sample", "encoded_validation.npz"))
    w2v = embed.EmbeddingModel.load_npz(run.path("embed", "embeddings.npz"))
    matrix = embed.embedding_matrix(vocab, w2v)
    dtype = _clf_dtype(cfg)
    pad_len = meta["pad_len"]

    builders = {
        "feedforward": lambda seed: build_feedforward(
            vocab.size, pad_len, cfg.embed_dim, cfg.clf_hidden, seed=seed, dtype=dtype),
        "blstm": lambda seed: build_blstm(
            vocab.size, pad_len, cfg.embed_dim, cfg.clf_hidden, seed=seed, dtype=dtype),
        "blstm_pretrained": lambda seed: build_blstm(
            vocab.size, pad_len, cfg.embed_dim, cfg.clf_hidden, seed=seed,
            embedding_weights=matrix.astype(dtype), dtype=dtype),
    }
    train_cfg = TrainConfig(
        epochs=cfg.clf_epochs,
        batch_size=cfg.clf_batch_size,
        seed=stage_seed(cfg.master_seed, "train"),
        learning_rate=cfg.clf_learning_rate,
    )
    for name, builder in builders.items():
        model = builder(stage_seed(cfg.master_seed, f"init:{name}"))
        model.vocab_hash = vocab.content_hash()
        history = train(
            model, train_set, val_set, train_cfg,
            log=lambda row, n=name: print(
                f"[{n}] epoch {row['epoch']}: train {row['train_loss']:.4f}/"
                f"{row['train_acc']:.4f} val {row['val_loss']:.4f}/{row['val_acc']:.4f}",
                file=sys.stderr,
            ),
        )
        model.save(run.path("models", f"{name}.npz"))
        history.save_csv(run.path("models", f"history_{name}.csv"))


def stage_evaluate(run: Run) -> None:
    cfg = run.cfg
    if cfg.eval_model not in MODEL_NAMES:
        raise ConfigError(f"eval_model must be one of {MODEL_NAMES}")
    test_set = EncodedDataset.load(run.path("sample", "encoded_test.npz"))
    results = {}
    for name in MODEL_NAMES:
        model = ClassifierModel.load(run.path("models", f"{name}.npz"))
        outcome = evaluate(model, test_set)
        results[name] = {k: outcome[k] for k in ("loss", "accuracy", "per_class")}
        if name == cfg.eval_model:
            results["partition_model"] = name
            results["right_ids"] = outcome["right_ids"]
            results["wrong_ids"] = outcome["wrong_ids"]
    report.write_json(run.path("eval", "evaluation.json"), results)


def stage_features(run: Run) -> None:
    cfg = run.cfg
    evaluation = report.read_json(run.path("eval", "evaluation.json"))
    test = ingest.read_corpus(run.path("sample", "test.tsv"))
    meta = report.read_json(run.path("sample", "split_meta.json"))
    vocab = Vocabulary.load(run.path("sample", "vocab.csv"))
    w2v = embed.EmbeddingModel.load_npz(run.path("embed", "embeddings.npz"))

    right = [test[i] for i in evaluation["right_ids"]]
    wrong = [test[i] for i in evaluation["wrong_ids"]]
    diag = {
        "ttr_right": features.ttr(right),
        "ttr_wrong": features.ttr(wrong),
        "ttr_all": features.ttr(test),
        "overlap": features.lemma_overlap(right, wrong),
    }
    report.write_json(run.path("features", "diagnostics.json"), diag)

    train_fm, holdout_fm = features.build_disjoint_feature_matrices(
        right, wrong, vocab, w2v,
        n_train=cfg.features_per_class,
        n_holdout=cfg.holdout_per_class,
        seed=stage_seed(cfg.master_seed, "features"),
        corpus_mean_len=meta["mean_tweet_length"],
    )
    train_fm.save_csv(run.path("features", "features_train.csv"))
    holdout_fm.save_csv(run.path("features", "features_holdout.csv"))


def stage_regress(run: Run) -> None:
    cfg = run.cfg
    train_fm = features.FeatureMatrix.load_csv(run.path("features", "features_train.csv"))
    holdout_fm = features.FeatureMatrix.load_csv(run.path("features", "features_holdout.csv"))
    X, y = train_fm.design()
    cols = features.FEATURE_COLUMNS
    Xs, transform = reglab.standardize(X, cfg.regress_mode, cols)

    def fit(formula):
        return reglab.fit_logistic(Xs, y, formula, cols, transform)

    # staged protocol: full main-effects model, single-term deletions,
    # influence report, interaction model, collinearity pruning, backward
    # AIC, final reduced model
    m1 = fit(reglab.ModelFormula(mains=cols))
    m1_drop1 = reglab.drop1(m1)
    m1_influence = reglab.influence(m1)
    if cfg.regress_drop_influential and m1_influence["flagged"]:
        idx = [f["index"] for f in m1_influence["flagged"]]
        keep = np.ones(len(y), bool)
        keep[idx] = False
        Xs, y = Xs[keep], y[keep]

        def fit(formula):  # noqa: F811 - deliberate rebind after row removal
            return reglab.fit_logistic(Xs, y, formula, cols, transform)

    core = ("mf", "rl", "uwr", "ctwr")
    all_pairs = tuple(
        (a, b) for i, a in enumerate(core) for b in core[i + 1:]
    )
    m2 = fit(reglab.ModelFormula(mains=core, interactions=all_pairs))
    m2_vif = reglab.vif(m2)
    m3_pairs = tuple(p for p in all_pairs if "ctwr" not in p)
    m3 = fit(reglab.ModelFormula(mains=core, interactions=m3_pairs))
    m3_step, m3_trace = reglab.step_backward_aic(m3)
    m4 = fit(reglab.ModelFormula(
        mains=core, interactions=tuple(p for p in m3_pairs if set(p) != {"mf", "uwr"})
    ))
    m5 = fit(reglab.ModelFormula(mains=core, interactions=(("rl", "uwr"),)))

    Xh, yh = holdout_fm.design()
    holdout = reglab.predict_classify(m5, Xh, yh)

    payload = {
        "model1": reglab.fit_report(m1),
        "model1_drop1": m1_drop1,
        "model1_influence_flagged": m1_influence["flagged"],
        "model2": reglab.fit_report(m2),
        "model2_vif": m2_vif,
        "model3": reglab.fit_report(m3),
        "model3_step_trace": m3_trace,
        "model3_step_result_terms": list(m3_step.formula.terms),
        "model4": reglab.fit_report(m4),
        "model5": reglab.fit_report(m5),
        "holdout_accuracy": holdout["accuracy"],
        "holdout_n": len(yh),
        "standardize_mode": cfg.regress_mode,
    }
    report.write_json(run.path("regress", "regression.json"), payload)


def _topic_groups(run: Run) -> dict[str, list[ingest.CleanTweet]]:
    sample = ingest.read_corpus(run.path("sample", "sample.tsv"))
    groups = {
        "troll": [t for t in sample if t.label == 0],
        "genuine": [t for t in sample if t.label == 1],
    }
    max_docs = run.cfg.topics_max_docs
    if max_docs:
        rng = np.random.default_rng(stage_seed(run.cfg.master_seed, "topics:subsample"))
        for name, tweets in groups.items():
            if len(tweets) > max_docs:
                picked = rng.choice(len(tweets), size=max_docs, replace=False)
                groups[name] = [tweets[i] for i in picked]
    return groups


def stage_topics(run: Run) -> None:
    cfg = run.cfg
    groups = _topic_groups(run)
    lda_cfg = topics.LdaConfig(
        iterations=cfg.topics_iterations,
        burn_in=cfg.topics_burn_in,
        seed=stage_seed(cfg.master_seed, "topics"),
    )
    coh_cfg = topics.CoherenceConfig(window=cfg.topics_window, top_n=cfg.topics_top_n)
    sweep = {}
    for name, corpus in groups.items():
        rows = topics.coherence_sweep(corpus, cfg.topics_k_list, lda_cfg, coh_cfg)
        sweep[name] = rows
        report.write_csv(
            run.path("topics", f"sweep_{name}.csv"),
            ["k", "mean_cv"],
            [(r["k"], r["mean_cv"]) for r in rows],
        )

    single = {}
    gaps = {}
    for name, corpus in groups.items():
        one = topics.fit_lda(corpus, 1, lda_cfg)
        single[name] = {
            "coherence": topics.cv_coherence(
                [w for w, _ in topics.top_words(one, 0, cfg.topics_top_n)], corpus, coh_cfg
            ),
            "top_words": topics.top_words(one, 0, cfg.topics_top_n),
            "topword_gap": topics.topword_gap(one)["per_topic"][0]["gap"],
        }
        k_gap = min(cfg.topics_gap_k, max(cfg.topics_k_list))
        model = topics.fit_lda(corpus, k_gap, lda_cfg)
        gaps[name] = {
            "k": k_gap,
            **topics.topword_gap(model),
            "top_words": [
                topics.top_words(model, k, cfg.topics_top_n)
                for k in range(model.n_topics)
            ],
        }

    report.write_json(run.path("topics", "topics.json"), {
        "sweep": sweep, "single_topic": single, "topword_gaps": gaps,
    })
    if cfg.svg:
        ks = list(cfg.topics_k_list)
        report.svg_lines(
            run.path("topics", "sweep.svg"),
            "mean C_V coherence by topic count",
            ks,
            {name: [r["mean_cv"] for r in rows] for name, rows in sweep.items()},
        )


def stage_disperse(run: Run) -> None:
    cfg = run.cfg
    sample = ingest.read_corpus(run.path("sample", "sample.tsv"))
    troll = [t for t in sample if t.label == 0]
    genuine = [t for t in sample if t.label == 1]
    w2v = embed.train_word2vec(sample, embed.Word2VecConfig(
        dim=cfg.embed_dim,
        window=cfg.embed_window,
        epochs=cfg.embed_epochs,
        min_count=cfg.disperse_min_count,
        negatives=cfg.embed_negatives,
        learning_rate=cfg.embed_learning_rate,
        seed=stage_seed(cfg.master_seed, "disperse:embed"),
    ))
    result = stats.cosine_dispersion_report(
        troll, genuine, w2v,
        sample_n=cfg.disperse_sample_n,
        seed=stage_seed(cfg.master_seed, "disperse"),
    )
    values = result.pop("values")
    report.write_json(run.path("disperse", "dispersion.json"), result)
    for key, vals in values.items():
        report.write_csv(run.path("disperse", f"values_{key}.csv"), [key],
                         [(v,) for v in vals])
    if cfg.svg:
        for side in ("max_cosine", "min_cosine"):
            block = result[side]
            report.svg_histogram(
                run.path("disperse", f"{side}.svg"),
                f"{side.replace('_', ' ')} distribution",
                block["hist_a"]["edges"],
                {"troll": block["hist_a"]["counts"],
                 "genuine": block["hist_b"]["counts"]},
            )


def stage_report(run: Run) -> None:
    evaluation = report.read_json(run.path("eval", "evaluation.json"))
    regression = report.read_json(run.path("regress", "regression.json"))
    topics_out = report.read_json(run.path("topics", "topics.json"))
    dispersion = report.read_json(run.path("disperse", "dispersion.json"))

    summary = {
        "classification": {
            name: {"loss": evaluation[name]["loss"],
                   "accuracy": evaluation[name]["accuracy"]}
            for name in MODEL_NAMES
        },
        "regression_model5": {
            "coefficients": regression["model5"]["coefficients"],
            "pseudo_r2": regression["model5"]["pseudo_r2"],
            "lr_test": regression["model5"]["lr_test_vs_null"],
            "holdout_accuracy": regression["holdout_accuracy"],
        },
        "coherence_sweep": {
            name: {str(r["k"]): r["mean_cv"] for r in rows}
            for name, rows in topics_out["sweep"].items()
        },
        "single_topic_coherence": {
            name: block["coherence"]
            for name, block in topics_out["single_topic"].items()
        },
        "dispersion": {
            side: {
                "troll_sd": dispersion[side]["a"]["sd"],
                "genuine_sd": dispersion[side]["b"]["sd"],
                "troll_mean": dispersion[side]["a"]["mean"],
                "genuine_mean": dispersion[side]["b"]["mean"],
                "welch": dispersion[side][test_key],
            }
            for side, test_key in (("max_cosine", "welch_b_greater"),
                                   ("min_cosine", "welch_b_less"))
        },
    }
    report.write_json(run.path("summary.json"), summary)

    lines = [f"# trollscope run summary\n"]
    lines.append("## Classification accuracy (test set)\n")
    lines.append("| model | loss | accuracy |")
    lines.append("| --- | --- | --- |")
    for name in MODEL_NAMES:
        row = summary["classification"][name]
        lines.append(f"| {name} | {row['loss']:.4f} | {row['accuracy']:.4f} |")
    lines.append("\n## Final regression model\n")
    lines.append("| term | coef (SE) | odds ratio | 95% CI | p |")
    lines.append("| --- | --- | --- | --- | --- |")
    for c in summary["regression_model5"]["coefficients"]:
        lines.append(
            f"| {c['term']} | {c['coef']:.2f} ({c['se']:.2f}) | {c['odds_ratio']:.2f} "
            f"| [{c['ci_lower']:.2f}, {c['ci_upper']:.2f}] | {c['p']:.2g} |"
        )
    pr2 = summary["regression_model5"]["pseudo_r2"]
    lines.append(
        f"\nPseudo-R2: {pr2['mcfadden']:.2f} (McFadden), {pr2['cox_snell']:.2f} "
        f"(Cox-Snell), {pr2['nagelkerke']:.2f} (Nagelkerke). "
        f"Holdout accuracy: {summary['regression_model5']['holdout_accuracy']:.4f}\n"
    )
    lines.append("## Mean C_V coherence by topic count\n")
    ks = sorted({int(k) for rows in summary["coherence_sweep"].values() for k in rows})
    lines.append("| K | " + " | ".join(summary["coherence_sweep"]) + " |")
    lines.append("| --- | " + " | ".join("---" for _ in summary["coherence_sweep"]) + " |")
    for k in ks:
        cells = " | ".join(
            f"{summary['coherence_sweep'][name].get(str(k), float('nan')):.4f}"
            for name in summary["coherence_sweep"]
        )
        lines.append(f"| {k} | {cells} |")
    lines.append("\n## Cosine dispersion\n")
    for side in ("max_cosine", "min_cosine"):
        d = summary["dispersion"][side]
        w = d["welch"]
        lines.append(
            f"- {side}: SD troll {d['troll_sd']:.3f} vs genuine {d['genuine_sd']:.3f}; "
            f"means {d['troll_mean']:.3f} vs {d['genuine_mean']:.3f}; "
            f"t({w['df']:.1f}) = {w['statistic']:.3f}, p = {w['p']:.3g}"
        )
    run.path("summary.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    report.write_manifest(run.dir)


STAGE_FUNCS = {
    "preprocess": stage_preprocess,
    "sample": stage_sample,
    "embed": stage_embed,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "features": stage_features,
    "regress": stage_regress,
    "topics": stage_topics,
    "disperse": stage_disperse,
    "report": stage_report,
}


def run_pipeline(cfg: RunConfig, run_dir: str | Path | None = None,
                 from_stage: str | None = None) -> Run:
    run = Run(cfg, run_dir)
    if from_stage:
        if from_stage not in STAGES:
            raise ConfigError(f"unknown stage {from_stage!r}")
        run.clear_from(from_stage)
    failed_marker = run.dir / "FAILED"
    failed_marker.unlink(missing_ok=True)
    for stage in STAGES:
        if run.is_done(stage):
            print(f"[pipeline] {stage}: already done, skipping", file=sys.stderr)
            continue
        print(f"[pipeline] {stage}: running", file=sys.stderr)
        try:
            STAGE_FUNCS[stage](run)
        except Exception as exc:
            failed_marker.write_text(f"{stage}: {exc}\n", encoding="utf-8")
            raise
        run.mark_done(stage)
    return run


# ---------------------------------------------------------------------------
# classify: apply a saved model to new raw text
# ---------------------------------------------------------------------------

def classify_file(model_path: str | Path, vocab_path: str | Path,
                  input_path: str | Path, output_path: str | Path | None = None,
                  kind: str = "txt", text_field: str = "text") -> dict:
    """Preprocess raw tweets exactly like training data and label them."""
    model = ClassifierModel.load(model_path)
    vocab = Vocabulary.load(vocab_path)
    if model.vocab_hash and model.vocab_hash != vocab.content_hash():
        print(
            "warning: vocabulary hash differs from the one the model was "
            "trained with; out-of-vocabulary handling engages",
            file=sys.stderr,
        )
    if kind == "txt":
        records = [
            ingest.RawRecord(text=line.strip(), label=ingest.UNLABELED)
            for line in Path(input_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        fmt = ingest.DatasetFormat(kind=kind, text_field=text_field)
        records, _ = ingest.load_dataset(input_path, fmt)

    pre = ingest.Preprocessor()
    rows = []
    ids = np.zeros((len(records), model.pad_len), dtype=np.int32)
    keep = []
    for i, rec in enumerate(records):
        clean = pre.clean_record(rec)
        if len(clean.lemmas) < 2:
            rows.append({"index": i, "label": None, "text": rec.text})
            continue
        enc = [vocab.index(l) for l in clean.lemmas][: model.pad_len]
        ids[i, : len(enc)] = enc
        keep.append(i)
        rows.append({"index": i, "label": -1, "text": rec.text})
    if keep:
        labels = model.predict(ids[keep])
        for j, i in enumerate(keep):
            rows[i]["label"] = int(labels[j])
    n_troll = sum(1 for r in rows if r["label"] == 0)
    n_genuine = sum(1 for r in rows if r["label"] == 1)
    n_skipped = sum(1 for r in rows if r["label"] is None)
    classified = n_troll + n_genuine
    result = {
        "total": len(rows),
        "troll_like": n_troll,
        "genuine_like": n_genuine,
        "skipped_too_short": n_skipped,
        "troll_like_percent": 100.0 * n_troll / classified if classified else 0.0,
    }
    if output_path is not None:
        report.write_csv(
            output_path,
            ["index", "label", "text"],
            [(r["index"], "" if r["label"] is None else r["label"], r["text"])
             for r in rows],
        )
        report.write_json(Path(output_path).with_suffix(".summary.json"), result)
    return result


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trollscope",
        description="Troll-tweet corpus analysis pipeline",
    )
    parser.add_argument("--version", action="version", version=f"trollscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_stage_cmd(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="key=value run config file")
        p.add_argument("--run-dir", default=None, help="run directory (default: out_dir)")
        return p

    for stage in STAGES:
        add_stage_cmd(stage, f"run the {stage} stage")

    p = add_stage_cmd("pipeline", "run every stage in order")
    p.add_argument("--from", dest="from_stage", default=None,
                   help="clear markers from this stage onward and rerun")
    p.add_argument("--deterministic", action="store_true",
                   help="accepted for compatibility; all paths are deterministic")

    p = sub.add_parser("classify", help="label raw tweets with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--kind", choices=("txt", "csv", "jsonl"), default="txt")
    p.add_argument("--text-field", default="text")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "classify":
            result = classify_file(args.model, args.vocab, args.input,
                                   args.output, args.kind, args.text_field)
            print(
                f"classified {result['total']} tweets: {result['troll_like']} troll-like, "
                f"{result['genuine_like']} genuine-like "
                f"({result['troll_like_percent']:.1f}% troll-like), "
                f"{result['skipped_too_short']} too short to classify"
            )
            return 0
        cfg = parse_config(args.config)
        if args.command == "pipeline":
            run_pipeline(cfg, args.run_dir, args.from_stage)
            print(f"pipeline complete: {Path(args.run_dir or cfg.out_dir)}")
            return 0
        run = Run(cfg, args.run_dir)
        STAGE_FUNCS[args.command](run)
        run.mark_done(args.command)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (TrollscopeError, DataError) as exc:
        print(f"stage failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        print(f"stage failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
