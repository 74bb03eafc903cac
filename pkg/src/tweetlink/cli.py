"""Experiment harness: config-driven pipeline, calibration, sweeps, reports.

All commands read one JSON config document (nested sections, overridable by
a few global flags) and write deterministic artifacts into an output
directory: identical config + seed always reproduces identical bytes.

Exit codes: 0 success, 1 degenerate evaluation (e.g. no positive labels),
2 config or I/O problems.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cascade as cascade_mod
from . import contrast, corpus, evalx, linker, textprep, vectorize
from .errors import (
    ConfigInvalidError,
    DegenerateEvaluationError,
    DuplicateIdError,
    EmptyGridError,
    MalformedLineError,
    MissingFieldError,
    TweetLinkError,
    UnknownIdError,
)
from .matrices import (
    GroundTruthMatrix,
    SimilarityMatrix,
    read_similarity_csv,
    write_matrix_csv,
)

MODELS = ("tfidf", "lda", "dual")
FEATURES = ("tfidf", "lda", "external")


@dataclass(frozen=True)
class LdaParams:
    n_topics: int = 10
    alpha: float | None = None
    beta: float = 0.01
    iters: int = 100
    infer_iters: int = 50


@dataclass(frozen=True)
class RunConfig:
    documents: str
    pairs: str
    model: str = "tfidf"
    features: str = "tfidf"
    strategy: str = "truncate"
    aggregation: str = "mean"
    seed: int = 0
    threshold: float | None = None
    out_dir: str = "out"
    train_pairs: str | None = None
    annotations: str | None = None
    embeddings: str | None = None
    lemmas: str | None = None
    keywords: str | None = None
    summary_articles: bool | None = None  # None: summaries for tfidf, full text otherwise
    max_summary_chars: int = 600
    cleaning: textprep.CleaningConfig = field(default_factory=textprep.CleaningConfig)
    chunking: textprep.ChunkingConfig = field(
        default_factory=lambda: textprep.ChunkingConfig(content_len=510)
    )
    lda: LdaParams = field(default_factory=LdaParams)
    train: contrast.TrainConfig = field(default_factory=contrast.TrainConfig)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigInvalidError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.features not in FEATURES:
            raise ConfigInvalidError(f"features must be one of {FEATURES}, got {self.features!r}")
        if self.strategy not in contrast.STRATEGIES:
            raise ConfigInvalidError(
                f"strategy must be one of {contrast.STRATEGIES}, got {self.strategy!r}"
            )
        if self.aggregation not in cascade_mod.AGGREGATIONS:
            raise ConfigInvalidError(
                f"aggregation must be one of {cascade_mod.AGGREGATIONS}, got {self.aggregation!r}"
            )
        if self.features == "external":
            if not self.embeddings:
                raise ConfigInvalidError("features=external requires an embeddings path")
            if self.strategy != "truncate":
                raise ConfigInvalidError(
                    "external embeddings carry no token structure; use strategy=truncate"
                )

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        data = copy.deepcopy(raw)
        sections = {
            "cleaning": textprep.CleaningConfig,
            "chunking": textprep.ChunkingConfig,
            "lda": LdaParams,
            "train": contrast.TrainConfig,
        }
        kwargs = {}
        try:
            for name, section_cls in sections.items():
                if name in data:
                    kwargs[name] = section_cls(**data.pop(name))
            known = set(cls.__dataclass_fields__)
            unknown = set(data) - known
            if unknown:
                raise ConfigInvalidError(f"unknown config keys: {sorted(unknown)}")
            if "documents" not in data or "pairs" not in data:
                raise ConfigInvalidError("config must set 'documents' and 'pairs' paths")
            return cls(**data, **kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalidError(f"invalid config: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigInvalidError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigInvalidError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigInvalidError(f"config {path} must hold a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if hasattr(value, "__dataclass_fields__"):
                out[name] = {k: getattr(value, k) for k in value.__dataclass_fields__}
            else:
                out[name] = value
        return out

    def with_overrides(self, dotted: dict) -> "RunConfig":
        """Apply {'train.lr': 0.5, 'lda.n_topics': 4, ...} onto a copy."""
        data = self.to_dict()
        for key, value in dotted.items():
            target = data
            parts = key.split(".")
            for part in parts[:-1]:
                if part not in target or not isinstance(target[part], dict):
                    raise ConfigInvalidError(f"unknown config section in override {key!r}")
                target = target[part]
            if parts[-1] not in target:
                raise ConfigInvalidError(f"unknown config key in override {key!r}")
            target[parts[-1]] = value
        return RunConfig.from_dict(data)


@dataclass(frozen=True)
class SweepRow:
    n: int
    ap: float
    n_cascades: int


# --- corpus loading and preparation ----------------------------------------


def _load_corpus(cfg: RunConfig):
    try:
        docs = corpus.load_documents(cfg.documents)
        pairs = corpus.load_pairs(cfg.pairs)
    except OSError as exc:
        raise ConfigInvalidError(str(exc)) from exc
    if cfg.keywords:
        kws = corpus.load_keywords(cfg.keywords)
        docs = corpus.keyword_filter(docs, kws)
        ids = {d.id for d in docs}
        pairs = [p for p in pairs if p.tweet_id in ids and p.article_id in ids]
    tweets = [d for d in docs if d.kind == corpus.KIND_TWEET]
    articles = [d for d in docs if d.kind == corpus.KIND_ARTICLE]
    if not tweets or not articles:
        raise ConfigInvalidError("the corpus needs at least one tweet and one article")
    return tweets, articles, pairs


def _prepare_tokens(cfg: RunConfig, tweets, articles) -> dict[str, list[str]]:
    lemmas = textprep.load_lemmas(cfg.lemmas) if cfg.lemmas else {}
    use_summary = cfg.summary_articles
    if use_summary is None:
        use_summary = cfg.model == "tfidf"
    tokens: dict[str, list[str]] = {}
    for doc in tweets:
        tokens[doc.id] = textprep.tokenize_lemmatize(textprep.clean(doc.text, cfg.cleaning), lemmas)
    for doc in articles:
        text = corpus.extract_summary(doc, cfg.max_summary_chars) if use_summary else doc.text
        tokens[doc.id] = textprep.tokenize_lemmatize(textprep.clean(text, cfg.cleaning), lemmas)
    return tokens


def _article_pieces(cfg: RunConfig, tokens: list[str]) -> list[list[str]]:
    """Token pieces per long-text strategy; an emptied-out article yields one empty piece."""
    if not tokens:
        return [[]]
    if cfg.strategy == "mean_chunks":
        return textprep.chunk(tokens, cfg.chunking)
    if cfg.strategy == "augment":
        header, parts = textprep.augment_split(tokens, cfg.chunking)
        return [header, *parts]
    return [textprep.truncate(tokens, cfg.chunking.truncate_limit)]


def _match_pairs(pairs) -> list[tuple[str, str]]:
    return [(p.tweet_id, p.article_id) for p in pairs if p.label == "match"]


def build_vectors(
    cfg: RunConfig,
    tokens: dict[str, list[str]],
    fit_tweet_ids,
    fit_article_ids,
    out_tweet_ids,
    out_article_ids,
    train_positives=None,
):
    """Vector maps for every requested document, fitted on the fit-side only.

    For model=dual this trains the encoder on `train_positives` over the
    selected feature space and returns it; otherwise the raw tfidf/lda
    vectors are the final representation and the encoder slot is None.
    """
    trunc = cfg.chunking.truncate_limit
    fit_docs = [textprep.truncate(tokens[i], trunc) for i in fit_tweet_ids]
    fit_docs += [tokens[i] for i in fit_article_ids]

    if cfg.model in ("tfidf", "lda"):
        if cfg.model == "tfidf":
            model = vectorize.tfidf_fit(fit_docs)
            vec = lambda toks: vectorize.tfidf_transform(model, toks)
        else:
            model = vectorize.lda_fit(
                fit_docs,
                n_topics=cfg.lda.n_topics,
                alpha=cfg.lda.alpha,
                beta=cfg.lda.beta,
                iters=cfg.lda.iters,
                seed=cfg.seed,
            )
            vec = lambda toks: vectorize.lda_infer(
                model, toks, iters=cfg.lda.infer_iters, seed=cfg.seed
            )
        tweet_vecs = {i: vec(textprep.truncate(tokens[i], trunc)) for i in out_tweet_ids}
        article_vecs = {i: vec(tokens[i]) for i in out_article_ids}
        return tweet_vecs, article_vecs, None

    # model == "dual": build base features, train, then encode.
    if cfg.features == "external":
        table = vectorize.load_embeddings(cfg.embeddings)
        featurize = lambda doc_id, toks: table.lookup(doc_id)
    elif cfg.features == "lda":
        base = vectorize.lda_fit(
            fit_docs, n_topics=cfg.lda.n_topics, alpha=cfg.lda.alpha,
            beta=cfg.lda.beta, iters=cfg.lda.iters, seed=cfg.seed,
        )
        featurize = lambda doc_id, toks: vectorize.lda_infer(
            base, toks, iters=cfg.lda.infer_iters, seed=cfg.seed
        )
    else:
        base = vectorize.tfidf_fit(fit_docs)
        featurize = lambda doc_id, toks: vectorize.tfidf_transform(base, toks)

    def doc_tokens(doc_id):
        if doc_id not in tokens:
            raise UnknownIdError(doc_id)
        return tokens[doc_id]

    def tweet_feature(doc_id):
        return featurize(doc_id, textprep.truncate(doc_tokens(doc_id), trunc))

    def article_features_for(doc_ids):
        feats = {}
        for doc_id in doc_ids:
            if cfg.features == "external":
                feats[doc_id] = featurize(doc_id, None)
            else:
                feats[doc_id] = [
                    featurize(doc_id, piece)
                    for piece in _article_pieces(cfg, doc_tokens(doc_id))
                ]
        return feats

    if not train_positives:
        raise ConfigInvalidError("model=dual needs match-labeled training pairs")
    train_tweet_ids = sorted({t for t, _ in train_positives})
    train_article_ids = list(fit_article_ids)
    tweet_feats = {i: tweet_feature(i) for i in train_tweet_ids}
    article_feats = article_features_for(train_article_ids)
    encoder, _trace = contrast.train(train_positives, tweet_feats, article_feats, cfg.train, cfg.strategy)

    eval_article_feats = article_features_for(out_article_ids)
    tweet_vecs = {
        i: contrast.encode(encoder, "tweet", tweet_feature(i), cfg.strategy)
        for i in out_tweet_ids
    }
    article_vecs = {}
    for doc_id in out_article_ids:
        pieces = eval_article_feats[doc_id]
        if cfg.features == "external":
            article_vecs[doc_id] = contrast.encode(encoder, "article", pieces, cfg.strategy)
        elif cfg.strategy == "mean_chunks":
            article_vecs[doc_id] = contrast.encode(encoder, "article", pieces, cfg.strategy)
        else:
            # truncate: the single piece; augment: the header piece.
            article_vecs[doc_id] = contrast.encode(encoder, "article", pieces[0], cfg.strategy)
    return tweet_vecs, article_vecs, encoder


# --- pipeline operations ------------------------------------------------------


def run_pipeline(cfg: RunConfig) -> tuple[SimilarityMatrix, evalx.MetricsReport]:
    """prep -> vectorize/train -> score -> (calibrate) -> classify -> masked metrics.

    Writes similarity.csv and report.json (plus encoder.json for the dual
    model) into cfg.out_dir.
    """
    tweets, articles, pairs = _load_corpus(cfg)
    tokens = _prepare_tokens(cfg, tweets, articles)
    tweet_ids = [d.id for d in tweets]
    article_ids = [d.id for d in articles]

    if cfg.train_pairs:
        train_positives = _match_pairs(corpus.load_pairs(cfg.train_pairs))
    else:
        train_positives = _match_pairs(pairs)

    tweet_vecs, article_vecs, encoder = build_vectors(
        cfg, tokens, tweet_ids, article_ids, tweet_ids, article_ids, train_positives
    )
    sim = linker.score_matrix(tweet_vecs, article_vecs, tweet_ids, article_ids)
    gt = corpus.build_ground_truth(pairs, tweet_ids, article_ids)

    calibrated = cfg.threshold is None
    if calibrated:
        threshold, _ = linker.calibrate_threshold(sim, gt)
    else:
        threshold = cfg.threshold
    cls = linker.classify(sim, threshold)
    report = evalx.evaluate_masked(sim.values, cls.values, gt)

    out = _out_dir(cfg)
    write_matrix_csv(sim, out / "similarity.csv")
    if encoder is not None:
        contrast.save_encoder(encoder, out / "encoder.json", cfg.train)
    _write_json(
        out / "report.json",
        {
            "model": cfg.model,
            "threshold": threshold,
            "calibrated": calibrated,
            "metrics": report.to_dict(),
            "n_tweets": len(tweet_ids),
            "n_articles": len(article_ids),
        },
    )
    return sim, report


def split_by_article(article_ids, match_pairs, seed: int, val_fraction: float = 0.5):
    """Disjoint train/val split: articles split at random, tweets follow a
    randomly chosen home article among their matches."""
    rng = np.random.default_rng(seed)
    articles = sorted(article_ids)
    order = rng.permutation(len(articles))
    n_val = max(1, int(round(len(articles) * val_fraction)))
    val_articles = {articles[i] for i in order[:n_val]}
    train_articles = [a for a in articles if a not in val_articles]
    if not train_articles:
        raise ConfigInvalidError("split leaves no training articles")

    matches_by_tweet: dict[str, list[str]] = {}
    for t, a in match_pairs:
        matches_by_tweet.setdefault(t, []).append(a)
    train_tweets, val_tweets = [], []
    for t in sorted(matches_by_tweet):
        home = matches_by_tweet[t][int(rng.integers(0, len(matches_by_tweet[t])))]
        (train_tweets if home in train_articles else val_tweets).append(t)
    return {
        "train_articles": list(train_articles),
        "val_articles": sorted(val_articles),
        "train_tweets": train_tweets,
        "val_tweets": val_tweets,
    }


def sweep_hyperparams(cfg: RunConfig, grid, split, budget: int | None = None):
    """Evaluate each grid point on the validation side; return the AP argmax.

    The split must keep articles and tweets disjoint between sides; training
    only ever sees train-side match pairs, evaluation only val-side cells.
    Ties go to the earliest grid point. With a budget, a seeded random
    subset of the grid is visited instead (order preserved).
    """
    grid = list(grid)
    if not grid:
        raise EmptyGridError("hyperparameter grid is empty")
    train_a = list(split["train_articles"])
    val_a = list(split["val_articles"])
    train_t = list(split["train_tweets"])
    val_t = list(split["val_tweets"])
    if set(train_a) & set(val_a) or set(train_t) & set(val_t):
        raise ConfigInvalidError("train/val split is not disjoint")
    if not val_t or not val_a:
        raise ConfigInvalidError("validation side is empty")

    if budget is not None and budget < len(grid):
        rng = np.random.default_rng(cfg.seed)
        keep = sorted(rng.choice(len(grid), size=budget, replace=False))
        grid = [grid[i] for i in keep]

    tweets, articles, pairs = _load_corpus(cfg)
    tokens = _prepare_tokens(cfg, tweets, articles)
    train_a_set, train_t_set = set(train_a), set(train_t)
    train_positives = [
        (t, a) for t, a in _match_pairs(pairs) if t in train_t_set and a in train_a_set
    ]
    gt = corpus.build_ground_truth(
        [p for p in pairs if p.tweet_id in set(val_t) and p.article_id in set(val_a)],
        val_t,
        val_a,
    )
    # Leakage guard: no evaluated cell may appear among the training pairs.
    eval_cells = {(t, a) for t in val_t for a in val_a}
    if eval_cells & set(train_positives):
        raise ConfigInvalidError("split leaks training pairs into the validation cells")

    rows = []
    best = None
    for point in grid:
        derived = cfg.with_overrides(point)
        tweet_vecs, article_vecs, _enc = build_vectors(
            derived, tokens, train_t, train_a, val_t, val_a, train_positives
        )
        sim = linker.score_matrix(tweet_vecs, article_vecs, val_t, val_a)
        scores, labels = evalx.masked_pairs(sim.values, gt)
        ap = evalx.average_precision(scores, labels)
        rows.append({"params": point, "val_ap": ap})
        if best is None or ap > best[1]:
            best = (point, ap)
    return best[0], best[1], rows


def sweep_size(cfg: RunConfig, sizes, cascades, gt: GroundTruthMatrix) -> list[SweepRow]:
    """Masked AP of cascade-level scores as a function of the cut size.

    Scores each tweet once, then for each n aggregates the rows of the n
    oldest members per cascade with cfg.aggregation.
    """
    sizes = list(sizes)
    if not sizes or any(n < 1 for n in sizes) or sizes != sorted(set(sizes)):
        raise ConfigInvalidError("sizes must be strictly increasing integers >= 1")
    tweets, articles, pairs = _load_corpus(cfg)
    tokens = _prepare_tokens(cfg, tweets, articles)
    tweet_ids = [d.id for d in tweets]
    article_ids = list(gt.article_ids)
    tweet_vecs, article_vecs, _enc = build_vectors(
        cfg, tokens, tweet_ids, [d.id for d in articles], tweet_ids, article_ids,
        _match_pairs(pairs),
    )
    sim = linker.score_matrix(tweet_vecs, article_vecs, tweet_ids, article_ids)
    row_of = {tid: sim.values[i] for i, tid in enumerate(sim.tweet_ids)}

    n_evaluated = int((np.abs(gt.values).sum(axis=1) > 0).sum())
    rows = []
    for n in sizes:
        agg_rows = []
        for c in cascades:
            members = cascade_mod.cut(c, n).member_ids
            agg_rows.append(cascade_mod.aggregate([row_of[t] for t in members], cfg.aggregation))
        values = np.clip(np.asarray(agg_rows), -1.0, 1.0)
        scores, labels = evalx.masked_pairs(values, gt)
        ap = evalx.average_precision(scores, labels)
        rows.append(SweepRow(n=n, ap=ap, n_cascades=n_evaluated))
    return rows


def emit_report(results, fmt: str, path) -> None:
    """Write results as JSON or CSV with stable ordering and 6-decimal floats."""
    if results is None or (hasattr(results, "__len__") and len(results) == 0):
        raise ConfigInvalidError("refusing to emit an empty report")
    if fmt == "json":
        _write_json(path, results)
    elif fmt == "csv":
        rows = results if isinstance(results, list) else [results]
        if not all(isinstance(r, dict) for r in rows):
            raise ConfigInvalidError("csv reports need a list of flat objects")
        for row in rows:
            for value in row.values():
                if value is not None and not isinstance(value, (str, int, float, bool)):
                    raise ConfigInvalidError("csv reports need flat scalar values; use json")
        keys = list(rows[0].keys())
        lines = [",".join(keys)]
        for row in rows:
            lines.append(",".join(_csv_cell(row.get(k)) for k in keys))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ConfigInvalidError(f"unknown report format {fmt!r}")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return "" if value is None else str(value)


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_round_floats(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- command handlers -----------------------------------------------------------


def _cmd_ingest(cfg: RunConfig, args) -> int:
    tweets, articles, pairs = _load_corpus(cfg)
    summary = {
        "n_tweets": len(tweets),
        "n_articles": len(articles),
        "n_pairs": len(pairs),
        "pair_labels": {
            label: sum(1 for p in pairs if p.label == label) for label in corpus.PAIR_LABELS
        },
    }
    if cfg.annotations:
        summary["n_annotations"] = len(corpus.load_annotations(cfg.annotations))
    _write_json(_out_dir(cfg) / "ingest.json", summary)
    return 0


def _cmd_prep(cfg: RunConfig, args) -> int:
    tweets, articles, pairs = _load_corpus(cfg)
    tokens = _prepare_tokens(cfg, tweets, articles)
    out = _out_dir(cfg) / "prepared.jsonl"
    with open(out, "w", encoding="utf-8") as fh:
        for doc in [*tweets, *articles]:
            fh.write(json.dumps({"id": doc.id, "kind": doc.kind, "tokens": tokens[doc.id]}) + "\n")
    return 0


def _cmd_fit(cfg: RunConfig, args) -> int:
    model_kind = args.model or cfg.model
    if model_kind not in ("tfidf", "lda"):
        raise ConfigInvalidError("fit supports model tfidf or lda")
    tweets, articles, pairs = _load_corpus(cfg)
    tokens = _prepare_tokens(cfg, tweets, articles)
    trunc = cfg.chunking.truncate_limit
    docs = [textprep.truncate(tokens[d.id], trunc) for d in tweets]
    docs += [tokens[d.id] for d in articles]
    out = _out_dir(cfg)
    if model_kind == "tfidf":
        vectorize.save_tfidf(vectorize.tfidf_fit(docs), out / "model_tfidf.json")
    else:
        model = vectorize.lda_fit(
            docs, n_topics=cfg.lda.n_topics, alpha=cfg.lda.alpha, beta=cfg.lda.beta,
            iters=cfg.lda.iters, seed=cfg.seed,
        )
        vectorize.save_lda(model, out / "model_lda.json")
    return 0


def _cmd_train(cfg: RunConfig, args) -> int:
    if cfg.model != "dual":
        raise ConfigInvalidError("train requires model=dual")
    tweets, articles, pairs = _load_corpus(cfg)
    tokens = _prepare_tokens(cfg, tweets, articles)
    tweet_ids = [d.id for d in tweets]
    article_ids = [d.id for d in articles]
    train_positives = _match_pairs(
        corpus.load_pairs(cfg.train_pairs) if cfg.train_pairs else pairs
    )
    _tv, _av, encoder = build_vectors(
        cfg, tokens, tweet_ids, article_ids, [], [], train_positives
    )
    contrast.save_encoder(encoder, _out_dir(cfg) / "encoder.json", cfg.train)
    return 0


def _cmd_score(cfg: RunConfig, args) -> int:
    tweets, articles, pairs = _load_corpus(cfg)
    tokens = _prepare_tokens(cfg, tweets, articles)
    tweet_ids = [d.id for d in tweets]
    article_ids = [d.id for d in articles]
    tweet_vecs, article_vecs, _enc = build_vectors(
        cfg, tokens, tweet_ids, article_ids, tweet_ids, article_ids, _match_pairs(pairs)
    )
    sim = linker.score_matrix(tweet_vecs, article_vecs, tweet_ids, article_ids)
    write_matrix_csv(sim, _out_dir(cfg) / "similarity.csv")
    return 0


def _cmd_calibrate(cfg: RunConfig, args) -> int:
    tweets, articles, pairs = _load_corpus(cfg)
    tweet_ids = [d.id for d in tweets]
    article_ids = [d.id for d in articles]
    if args.matrix:
        sim = read_similarity_csv(args.matrix)
        tweet_ids, article_ids = list(sim.tweet_ids), list(sim.article_ids)
    else:
        tokens = _prepare_tokens(cfg, tweets, articles)
        tweet_vecs, article_vecs, _enc = build_vectors(
            cfg, tokens, tweet_ids, article_ids, tweet_ids, article_ids, _match_pairs(pairs)
        )
        sim = linker.score_matrix(tweet_vecs, article_vecs, tweet_ids, article_ids)
    gt = corpus.build_ground_truth(pairs, tweet_ids, article_ids)
    threshold, f1 = linker.calibrate_threshold(sim, gt)
    _write_json(_out_dir(cfg) / "threshold.json", {"threshold": threshold, "f1": f1})
    return 0


def _cmd_eval(cfg: RunConfig, args) -> int:
    run_pipeline(cfg)
    return 0


def _cmd_cascades(cfg: RunConfig, args) -> int:
    tweets, _articles, _pairs = _load_corpus(cfg)
    cascades = cascade_mod.build_cascades(tweets)
    cascade_mod.write_cascades_jsonl(cascades, _out_dir(cfg) / "cascades.jsonl")
    return 0


def _cmd_sweep_size(cfg: RunConfig, args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    tweets, articles, pairs = _load_corpus(cfg)
    cascades = cascade_mod.build_cascades(tweets)
    root_ids = [c.root_id for c in cascades]
    article_ids = [d.id for d in articles]
    root_set = set(root_ids)
    gt = corpus.build_ground_truth(
        [p for p in pairs if p.tweet_id in root_set], root_ids, article_ids
    )
    rows = sweep_size(cfg, sizes, cascades, gt)
    emit_report(
        [{"n": r.n, "ap": r.ap, "n_cascades": r.n_cascades} for r in rows],
        "csv",
        _out_dir(cfg) / "sweep_size.csv",
    )
    return 0


def _cmd_sweep_hp(cfg: RunConfig, args) -> int:
    try:
        with open(args.grid, encoding="utf-8") as fh:
            grid = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalidError(f"cannot read grid {args.grid}: {exc}") from exc
    if not isinstance(grid, list) or not all(isinstance(p, dict) for p in grid):
        raise ConfigInvalidError("grid file must hold a JSON list of override objects")
    tweets, articles, pairs = _load_corpus(cfg)
    split = split_by_article(
        [d.id for d in articles], _match_pairs(pairs), cfg.seed, args.val_fraction
    )
    best, best_ap, rows = sweep_hyperparams(cfg, grid, split, budget=args.budget)
    _write_json(
        _out_dir(cfg) / "sweep_hp.json",
        {"best_params": best, "best_val_ap": best_ap, "rows": rows, "split": split},
    )
    return 0


def _cmd_report(cfg: RunConfig | None, args) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            results = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalidError(f"cannot read results {args.input}: {exc}") from exc
    out_dir = Path(cfg.out_dir) if cfg else Path(args.out_dir or "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_report(results, args.format, out_dir / f"report.{args.format}")
    return 0


# --- entry point -------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweetlink", description="Link tweets to news articles and evaluate the matches."
    )
    parser.add_argument("--config", help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out-dir", help="override the config output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="validate input files and write corpus counts")
    sub.add_parser("prep", help="write cleaned+lemmatized tokens per document")
    fit = sub.add_parser("fit", help="fit and save a tfidf or lda model")
    fit.add_argument("--model", choices=("tfidf", "lda"))
    sub.add_parser("train", help="train and save the dual encoder")
    sub.add_parser("score", help="write the tweets-by-articles similarity CSV")
    cal = sub.add_parser("calibrate", help="pick the F1-maximizing threshold")
    cal.add_argument("--matrix", help="reuse a similarity CSV instead of rescoring")
    sub.add_parser("eval", help="full pipeline: score, threshold, masked metrics")
    sub.add_parser("cascades", help="build reply/quote cascades and export them")
    sweep_n = sub.add_parser("sweep-size", help="cascade-size sweep of masked AP")
    sweep_n.add_argument("--sizes", required=True, help="comma-separated cut sizes, ascending")
    sweep_h = sub.add_parser("sweep-hp", help="grid search maximizing validation AP")
    sweep_h.add_argument("--grid", required=True, help="JSON list of dotted config overrides")
    sweep_h.add_argument("--budget", type=int, help="random-search budget over the grid")
    sweep_h.add_argument("--val-fraction", type=float, default=0.5)
    rep = sub.add_parser("report", help="re-emit a results JSON as json or csv")
    rep.add_argument("--input", required=True)
    rep.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


_HANDLERS = {
    "ingest": _cmd_ingest,
    "prep": _cmd_prep,
    "fit": _cmd_fit,
    "train": _cmd_train,
    "score": _cmd_score,
    "calibrate": _cmd_calibrate,
    "eval": _cmd_eval,
    "cascades": _cmd_cascades,
    "sweep-size": _cmd_sweep_size,
    "sweep-hp": _cmd_sweep_hp,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = None
        if args.command != "report" or args.config:
            if not args.config:
                raise ConfigInvalidError(f"{args.command} requires --config")
            cfg = RunConfig.from_file(args.config)
            overrides = {}
            if args.seed is not None:
                overrides["seed"] = args.seed
                overrides["train.seed"] = args.seed
            if args.out_dir is not None:
                overrides["out_dir"] = args.out_dir
            if overrides:
                cfg = cfg.with_overrides(overrides)
        return _HANDLERS[args.command](cfg, args)
    except (ConfigInvalidError, OSError, MalformedLineError, MissingFieldError, DuplicateIdError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateEvaluationError as exc:
        print(f"degenerate evaluation: {exc}", file=sys.stderr)
        return 1
    except TweetLinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
