import json

import numpy as np
import pytest

from tweetlink import cli, corpus
from tweetlink.cli import RunConfig
from tweetlink.errors import ConfigInvalidError, EmptyGridError


class TestRunConfig:
    def test_missing_required_paths(self):
        with pytest.raises(ConfigInvalidError):
            RunConfig.from_dict({"documents": "d.jsonl"})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigInvalidError):
            RunConfig.from_dict({"documents": "d", "pairs": "p", "modle": "tfidf"})

    def test_bad_enum(self):
        with pytest.raises(ConfigInvalidError):
            RunConfig.from_dict({"documents": "d", "pairs": "p", "model": "bert"})

    def test_nested_sections(self):
        cfg = RunConfig.from_dict({
            "documents": "d", "pairs": "p",
            "train": {"lr": 0.5, "epochs": 3},
            "lda": {"n_topics": 4},
            "cleaning": {"min_word_len": 2},
        })
        assert cfg.train.lr == 0.5
        assert cfg.lda.n_topics == 4
        assert cfg.cleaning.min_word_len == 2

    def test_dotted_overrides(self):
        cfg = RunConfig.from_dict({"documents": "d", "pairs": "p"})
        out = cfg.with_overrides({"train.lr": 0.9, "seed": 3})
        assert out.train.lr == 0.9
        assert out.seed == 3
        with pytest.raises(ConfigInvalidError):
            cfg.with_overrides({"train.learning_rate": 1.0})

    def test_external_needs_embeddings(self):
        with pytest.raises(ConfigInvalidError):
            RunConfig.from_dict({"documents": "d", "pairs": "p", "model": "dual",
                                 "features": "external"})
        with pytest.raises(ConfigInvalidError):
            RunConfig.from_dict({"documents": "d", "pairs": "p", "model": "dual",
                                 "features": "external", "embeddings": "e.jsonl",
                                 "strategy": "mean_chunks"})


class TestExitCodes:
    def test_eval_success(self, small_corpus, make_config, capsys):
        cfg_path = make_config()
        assert cli.main(["--config", str(cfg_path), "eval"]) == 0

    def test_missing_documents_path(self, tmp_path, capsys):
        cfg = {"documents": str(tmp_path / "nope.jsonl"), "pairs": str(tmp_path / "p.jsonl"),
               "out_dir": str(tmp_path / "out")}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["--config", str(path), "eval"]) == 2

    def test_missing_config_flag(self, capsys):
        assert cli.main(["eval"]) == 2

    def test_degenerate_labels_exit_1(self, tmp_path, capsys):
        docs, pairs = corpus.synth_fixture(seed=1, n_topics=1, n_articles=2,
                                           tweets_per_article=2, vocab_per_topic=10)
        unknown = [corpus.LinkedPair(p.tweet_id, p.article_id, "unknown") for p in pairs]
        corpus.write_documents(docs, tmp_path / "documents.jsonl")
        corpus.write_pairs(unknown, tmp_path / "pairs.jsonl")
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "documents": str(tmp_path / "documents.jsonl"),
            "pairs": str(tmp_path / "pairs.jsonl"),
            "out_dir": str(tmp_path / "out"),
        }))
        assert cli.main(["--config", str(cfg), "eval"]) == 1


class TestRunPipeline:
    def test_report_schema_and_artifacts(self, small_corpus, make_config, tmp_path):
        cli.main(["--config", str(make_config()), "eval"])
        out = tmp_path / "out"
        assert (out / "similarity.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert set(report["metrics"]) == {"ap", "accuracy", "precision", "recall", "f1", "n"}
        assert report["calibrated"] is True

    def test_supplied_threshold_echoed(self, small_corpus, make_config, tmp_path):
        cfg_path = make_config({"threshold": 0.25}, name="thr.json")
        cli.main(["--config", str(cfg_path), "eval"])
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["threshold"] == 0.25
        assert report["calibrated"] is False

    def test_byte_identical_reruns(self, small_corpus, make_config, tmp_path):
        cfg_path = make_config()
        cli.main(["--config", str(cfg_path), "--out-dir", str(tmp_path / "r1"), "eval"])
        cli.main(["--config", str(cfg_path), "--out-dir", str(tmp_path / "r2"), "eval"])
        for name in ("similarity.csv", "report.json"):
            assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


class TestSubcommands:
    def test_ingest(self, small_corpus, make_config, tmp_path):
        assert cli.main(["--config", str(make_config()), "ingest"]) == 0
        summary = json.loads((tmp_path / "out" / "ingest.json").read_text())
        assert summary["n_tweets"] == 24
        assert summary["n_articles"] == 8
        assert summary["pair_labels"]["match"] + summary["pair_labels"]["no_match"] == 192

    def test_prep(self, small_corpus, make_config, tmp_path):
        assert cli.main(["--config", str(make_config()), "prep"]) == 0
        lines = (tmp_path / "out" / "prepared.jsonl").read_text().splitlines()
        assert len(lines) == 32
        row = json.loads(lines[0])
        assert set(row) == {"id", "kind", "tokens"}

    def test_fit_tfidf_and_lda(self, small_corpus, make_config, tmp_path):
        cfg_path = make_config({"lda": {"n_topics": 2, "iters": 5}})
        assert cli.main(["--config", str(cfg_path), "fit", "--model", "tfidf"]) == 0
        assert cli.main(["--config", str(cfg_path), "fit", "--model", "lda"]) == 0
        assert (tmp_path / "out" / "model_tfidf.json").exists()
        assert (tmp_path / "out" / "model_lda.json").exists()

    def test_train_writes_encoder(self, small_corpus, make_config, tmp_path):
        cfg_path = make_config({
            "model": "dual",
            "train": {"epochs": 3, "joint_dim": 8, "seed": 7},
        }, name="dual.json")
        assert cli.main(["--config", str(cfg_path), "train"]) == 0
        assert (tmp_path / "out" / "encoder.json").exists()

    def test_score_and_calibrate(self, small_corpus, make_config, tmp_path):
        cfg_path = make_config()
        assert cli.main(["--config", str(cfg_path), "score"]) == 0
        matrix = tmp_path / "out" / "similarity.csv"
        assert matrix.exists()
        assert cli.main(["--config", str(cfg_path), "calibrate",
                         "--matrix", str(matrix)]) == 0
        thr = json.loads((tmp_path / "out" / "threshold.json").read_text())
        assert 0.0 <= thr["f1"] <= 1.0

    def test_cascades(self, small_corpus, make_config, tmp_path):
        assert cli.main(["--config", str(make_config()), "cascades"]) == 0
        lines = (tmp_path / "out" / "cascades.jsonl").read_text().splitlines()
        assert len(lines) == 8  # one cascade per article group
        members = [m for line in lines for m in json.loads(line)["member_ids"]]
        assert len(members) == 24

    def test_report_roundtrip(self, tmp_path):
        data = [{"n": 1, "ap": 0.5, "n_cascades": 3}]
        src = tmp_path / "in.json"
        src.write_text(json.dumps(data))
        assert cli.main(["--out-dir", str(tmp_path), "report", "--input", str(src),
                         "--format", "csv"]) == 0
        assert (tmp_path / "report.csv").read_text() == "n,ap,n_cascades\n1,0.500000,3\n"

    def test_report_empty_is_error(self, tmp_path):
        src = tmp_path / "in.json"
        src.write_text("[]")
        assert cli.main(["--out-dir", str(tmp_path), "report", "--input", str(src)]) == 2


class TestSweepSize:
    def test_rows_and_limits(self, small_corpus, make_config, tmp_path):
        cfg_path = make_config()
        assert cli.main(["--config", str(cfg_path), "sweep-size", "--sizes", "1,2,3,99"]) == 0
        lines = (tmp_path / "out" / "sweep_size.csv").read_text().splitlines()
        assert lines[0] == "n,ap,n_cascades"
        assert len(lines) == 5
        full = lines[3].split(",")[1]
        beyond = lines[4].split(",")[1]
        assert full == beyond  # n >= max cascade size equals full-cascade evaluation

    def test_n1_equals_root_only_evaluation(self, small_corpus, make_config, tmp_path):
        cfg = RunConfig.from_file(make_config())
        tweets, articles, pairs = cli._load_corpus(cfg)
        cascades = cli.cascade_mod.build_cascades(tweets)
        root_ids = [c.root_id for c in cascades]
        article_ids = [d.id for d in articles]
        gt = corpus.build_ground_truth(
            [p for p in pairs if p.tweet_id in set(root_ids)], root_ids, article_ids
        )
        rows = cli.sweep_size(cfg, [1], cascades, gt)

        # Independent root-only evaluation: score roots directly.
        from tweetlink import evalx, linker, textprep, vectorize

        tokens = cli._prepare_tokens(cfg, tweets, articles)
        tv, av, _ = cli.build_vectors(
            cfg, tokens, [d.id for d in tweets], article_ids, root_ids, article_ids,
            cli._match_pairs(pairs),
        )
        sim = linker.score_matrix(tv, av, root_ids, article_ids)
        scores, labels = evalx.masked_pairs(sim.values, gt)
        assert rows[0].ap == pytest.approx(evalx.average_precision(scores, labels), abs=1e-12)

    def test_unsorted_sizes_rejected(self, small_corpus, make_config):
        cfg = RunConfig.from_file(make_config())
        with pytest.raises(ConfigInvalidError):
            cli.sweep_size(cfg, [3, 1], [], None)


class TestSweepHyperparams:
    @pytest.fixture
    def bigger_corpus(self, tmp_path):
        docs, pairs = corpus.synth_fixture(
            seed=2, n_topics=2, n_articles=20, tweets_per_article=3, vocab_per_topic=30
        )
        corpus.write_documents(docs, tmp_path / "documents.jsonl")
        corpus.write_pairs(pairs, tmp_path / "pairs.jsonl")
        return tmp_path

    def _config(self, tmp_path):
        return RunConfig.from_dict({
            "documents": str(tmp_path / "documents.jsonl"),
            "pairs": str(tmp_path / "pairs.jsonl"),
            "model": "dual",
            "seed": 3,
            "out_dir": str(tmp_path / "out"),
            "train": {"joint_dim": 16, "batch_size": 256, "seed": 3},
        })

    def test_separating_config_wins(self, bigger_corpus):
        cfg = self._config(bigger_corpus)
        tweets, articles, pairs = cli._load_corpus(cfg)
        split = cli.split_by_article([d.id for d in articles], cli._match_pairs(pairs), 3)
        grid = [
            {"train.lr": 1e-4, "train.epochs": 1},
            {"train.lr": 0.5, "train.epochs": 60},
        ]
        best, best_ap, rows = cli.sweep_hyperparams(cfg, grid, split)
        assert best == grid[1]
        assert best_ap == max(r["val_ap"] for r in rows)
        assert rows[1]["val_ap"] > rows[0]["val_ap"]

    def test_tie_takes_first(self, bigger_corpus):
        cfg = self._config(bigger_corpus)
        tweets, articles, pairs = cli._load_corpus(cfg)
        split = cli.split_by_article([d.id for d in articles], cli._match_pairs(pairs), 3)
        point = {"train.lr": 0.5, "train.epochs": 5}
        best, _, rows = cli.sweep_hyperparams(cfg, [dict(point), dict(point)], split)
        assert best == point
        assert rows[0]["val_ap"] == rows[1]["val_ap"]

    def test_empty_grid(self, bigger_corpus):
        cfg = self._config(bigger_corpus)
        with pytest.raises(EmptyGridError):
            cli.sweep_hyperparams(cfg, [], {"train_articles": ["a"], "val_articles": ["b"],
                                            "train_tweets": ["t"], "val_tweets": ["u"]})

    def test_overlapping_split_rejected(self, bigger_corpus):
        cfg = self._config(bigger_corpus)
        split = {"train_articles": ["a"], "val_articles": ["a"],
                 "train_tweets": ["t"], "val_tweets": ["u"]}
        with pytest.raises(ConfigInvalidError):
            cli.sweep_hyperparams(cfg, [{}], split)

    def test_budget_subsamples_deterministically(self, bigger_corpus):
        cfg = self._config(bigger_corpus)
        tweets, articles, pairs = cli._load_corpus(cfg)
        split = cli.split_by_article([d.id for d in articles], cli._match_pairs(pairs), 3)
        grid = [{"train.epochs": e, "train.lr": 0.5} for e in (1, 2, 3, 40)]
        best1, ap1, rows1 = cli.sweep_hyperparams(cfg, grid, split, budget=2)
        best2, ap2, rows2 = cli.sweep_hyperparams(cfg, grid, split, budget=2)
        assert rows1 == rows2 and best1 == best2
        assert len(rows1) == 2


class TestEmitReport:
    def test_deterministic_bytes(self, tmp_path):
        data = {"b": 0.123456789, "a": [1, 2.0]}
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        cli.emit_report(data, "json", p1)
        cli.emit_report(data, "json", p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert json.loads(p1.read_text())["b"] == 0.123457  # 6-decimal fixing

    def test_csv_schema(self, tmp_path):
        rows = [{"n": 1, "ap": 1.0, "n_cascades": 2}, {"n": 5, "ap": 0.25, "n_cascades": 2}]
        path = tmp_path / "sweep.csv"
        cli.emit_report(rows, "csv", path)
        lines = path.read_text().splitlines()
        assert lines[0] == "n,ap,n_cascades"
        assert lines[1] == "1,1.000000,2"

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ConfigInvalidError):
            cli.emit_report([], "json", tmp_path / "r.json")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ConfigInvalidError):
            cli.emit_report({"a": 1}, "xml", tmp_path / "r.xml")
