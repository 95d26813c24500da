import json
from pathlib import Path

import numpy as np
import pytest

from emboot import io
from emboot.bootstrap import BootstrapConfig, run
from emboot.cli import main
from emboot.corpus import generate_patterns
from emboot.embed import TrainConfig

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

SPEC = {
    "categories": 3,
    "entities_per_category": 25,
    "patterns_per_category": 6,
    "mentions_per_entity": 4.0,
    "noise_rate": 0.05,
    "rng_seed": 5,
}

RUN_FLAGS = [
    "--epochs", "3",
    "--inner-epochs", "15",
    "--dim", "8",
    "--promote-entities", "5",
    "--promote-patterns", "4",
    "--rng-seed", "7",
]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(SPEC))
    status = main(
        [
            "synth",
            "--spec", str(spec_path),
            "--out", str(root / "corpus.conll"),
            "--seeds-out", str(root / "seeds.json"),
            "--seeds-per-category", "4",
            "--truth-out", str(root / "truth.json"),
            "--pretrained-out", str(root / "pretrained.tsv"),
            "--pretrained-dim", "10",
        ]
    )
    assert status == 0
    return root


@pytest.fixture(scope="module")
def train_dir(workspace):
    out = workspace / "run_emboot"
    status = main(
        [
            "train",
            "--corpus", str(workspace / "corpus.conll"),
            "--seeds", str(workspace / "seeds.json"),
            "--pretrained", str(workspace / "pretrained.tsv"),
            "--out", str(out),
            *RUN_FLAGS,
        ]
    )
    assert status == 0
    return out


class TestSynthCommand:
    def test_outputs_exist(self, workspace):
        assert (workspace / "corpus.conll").stat().st_size > 0
        seeds = io.load_seeds(workspace / "seeds.json")
        assert set(seeds) == {"CAT1", "CAT2", "CAT3"}
        assert all(len(v) == 4 for v in seeds.values())
        truth = json.loads((workspace / "truth.json").read_text())
        assert all(c.startswith("CAT") for c in truth.values())

    def test_corpus_round_trips(self, workspace):
        corpus = io.load_corpus(workspace / "corpus.conll")
        assert corpus.mentions
        labels = {m.label for m in corpus.mentions}
        assert labels == {"CAT1", "CAT2", "CAT3"}

    def test_pretrained_round_trips(self, workspace):
        pretrained = io.load_pretrained(workspace / "pretrained.tsv")
        assert pretrained.dim == 10


class TestTrainCommand:
    def test_run_directory_contents(self, train_dir):
        for name in (
            "trace.jsonl",
            "metrics.csv",
            "embeddings.tsv",
            "decision_list.tsv",
            "precision_throughput.png",
        ):
            assert (train_dir / name).stat().st_size > 0, name
        assert (train_dir / "precision_throughput.png").read_bytes()[:8] == PNG_MAGIC

    def test_metrics_parse_and_align_with_trace(self, train_dir):
        rows = io.read_metrics_csv(train_dir / "metrics.csv")
        trace = io.read_trace(train_dir / "trace.jsonl")
        assert len(rows) == len(trace.records) == 4
        assert all(r["system"] == "emboot" for r in rows)
        throughputs = [r["throughput"] for r in rows]
        assert throughputs == sorted(throughputs)
        assert all(0.0 <= r["precision"] <= 1.0 for r in rows)

    def test_missing_required_flag_is_usage_error(self, workspace):
        status = main(["train", "--corpus", str(workspace / "corpus.conll")])
        assert status != 0

    def test_unknown_subcommand_rejected(self):
        assert main(["frobnicate"]) != 0

    def test_unknown_flag_rejected(self, workspace):
        assert main(["train", "--no-such-flag"]) != 0

    def test_missing_file_reports_error(self, workspace, tmp_path):
        status = main(
            [
                "train",
                "--corpus", str(workspace / "does_not_exist.conll"),
                "--seeds", str(workspace / "seeds.json"),
                "--out", str(tmp_path / "x"),
            ]
        )
        assert status == 1

    def test_byte_identical_reruns(self, workspace, train_dir, tmp_path):
        again = tmp_path / "again"
        status = main(
            [
                "train",
                "--corpus", str(workspace / "corpus.conll"),
                "--seeds", str(workspace / "seeds.json"),
                "--pretrained", str(workspace / "pretrained.tsv"),
                "--out", str(again),
                *RUN_FLAGS,
            ]
        )
        assert status == 0
        for name in ("metrics.csv", "decision_list.tsv", "trace.jsonl", "embeddings.tsv"):
            assert (again / name).read_bytes() == (train_dir / name).read_bytes(), name


class TestBaselineCommand:
    def test_epb_with_pretrained(self, workspace):
        out = workspace / "run_epb"
        status = main(
            [
                "baseline", "--system", "epb",
                "--corpus", str(workspace / "corpus.conll"),
                "--seeds", str(workspace / "seeds.json"),
                "--pretrained", str(workspace / "pretrained.tsv"),
                "--out", str(out),
                *RUN_FLAGS,
            ]
        )
        assert status == 0
        assert (out / "trace.jsonl").exists()
        assert (out / "decision_list.tsv").exists()
        assert not (out / "embeddings.tsv").exists()
        assert io.read_trace(out / "trace.jsonl").system == "epb"

    def test_lp(self, workspace):
        out = workspace / "run_lp"
        status = main(
            [
                "baseline", "--system", "lp", "--quiet",
                "--corpus", str(workspace / "corpus.conll"),
                "--seeds", str(workspace / "seeds.json"),
                "--out", str(out),
                *RUN_FLAGS,
            ]
        )
        assert status == 0
        assert io.read_trace(out / "trace.jsonl").system == "lp"
        assert not (out / "decision_list.tsv").exists()


class TestExportAndClassify:
    def test_export_interp_matches_run_decision_list(self, workspace, train_dir):
        out = workspace / "dl_reexport.tsv"
        status = main(
            [
                "export-interp",
                "--corpus", str(workspace / "corpus.conll"),
                "--trace", str(train_dir / "trace.jsonl"),
                "--embeddings", str(train_dir / "embeddings.tsv"),
                "--out", str(out),
            ]
        )
        assert status == 0
        cats1, rows1 = io.read_decision_list_tsv(train_dir / "decision_list.tsv")
        cats2, rows2 = io.read_decision_list_tsv(out)
        assert cats1 == cats2
        assert {r for r, _ in rows1} == {r for r, _ in rows2}
        probs1 = dict(rows1)
        for rendered, probs in rows2:
            # embeddings round-trip through 6-decimal TSV, so tiny drift
            np.testing.assert_allclose(probs, probs1[rendered], atol=1e-4)

    def test_export_interp_pretrained_space(self, workspace, train_dir):
        out = workspace / "dl_pretrained.tsv"
        status = main(
            [
                "export-interp",
                "--corpus", str(workspace / "corpus.conll"),
                "--trace", str(train_dir / "trace.jsonl"),
                "--pretrained", str(workspace / "pretrained.tsv"),
                "--out", str(out),
            ]
        )
        assert status == 0
        _, rows = io.read_decision_list_tsv(out)
        for _, probs in rows:
            assert probs.sum() == pytest.approx(1.0, abs=1e-5)

    def test_classify_writes_predictions(self, workspace, train_dir):
        out = workspace / "predictions.tsv"
        status = main(
            [
                "classify",
                "--corpus", str(workspace / "corpus.conll"),
                "--trace", str(train_dir / "trace.jsonl"),
                "--decision-list", str(train_dir / "decision_list.tsv"),
                "--out", str(out),
            ]
        )
        assert status == 0
        lines = out.read_text().splitlines()
        corpus = io.load_corpus(workspace / "corpus.conll")
        vocab, _ = generate_patterns(corpus)
        assert len(lines) == vocab.n_entities + 1
        assert lines[0].split("\t")[:3] == ["entity", "label", "matching_patterns"]
        labels = {line.split("\t")[1] for line in lines[1:]}
        assert labels <= {"CAT1", "CAT2", "CAT3", "ABSTAIN"}


class TestEvalCommand:
    def test_multi_trace_metrics_and_histogram(self, workspace, train_dir):
        out_dir = workspace / "evaluation"
        status = main(
            [
                "eval",
                "--corpus", str(workspace / "corpus.conll"),
                "--trace", str(train_dir / "trace.jsonl"),
                "--trace", str(workspace / "run_lp" / "trace.jsonl"),
                "--decision-list", str(train_dir / "decision_list.tsv"),
                "--out-dir", str(out_dir),
            ]
        )
        assert status == 0
        rows = io.read_metrics_csv(out_dir / "metrics.csv")
        assert {r["system"] for r in rows} == {"emboot", "lp"}
        evaluation = json.loads((out_dir / "dl_evaluation.json").read_text())
        assert 0.0 <= evaluation["abstain_rate"] <= 1.0
        assert (out_dir / "pattern_histogram.png").read_bytes()[:8] == PNG_MAGIC


class TestIoRoundTrips:
    def test_trace_round_trip(self, tmp_path):
        from test_bootstrap import planted_corpus, seed_surfaces

        corpus = planted_corpus()
        config = BootstrapConfig(
            epochs=2, k_entities=2, k_patterns=2, dim=4,
            train=TrainConfig(inner_epochs=3), rng_seed=1,
        )
        result = run(config, corpus, seed_surfaces(corpus))
        path = tmp_path / "trace.jsonl"
        io.write_trace_jsonl(result.trace, path)
        loaded = io.read_trace(path)
        assert loaded.system == "emboot"
        assert loaded.categories == result.trace.categories
        assert len(loaded.records) == len(result.trace.records)
        for got, want in zip(loaded.records, result.trace.records):
            assert got.epoch == want.epoch
            for cat in result.trace.categories:
                assert [s for s, _ in got.entity_promotions[cat]] == [
                    s for s, _ in want.entity_promotions[cat]
                ]

        vocab, _ = generate_patterns(corpus.unlabeled(), config.window)
        pools, final_epoch = io.pools_from_trace(loaded, vocab)
        assert final_epoch == 2
        for cat in result.pools.categories:
            assert pools.entity_ids(cat) == result.pools.entity_ids(cat)
            assert pools.pattern_ids(cat) == result.pools.pattern_ids(cat)

    def test_seeds_round_trip(self, tmp_path):
        seeds = {"A": ["x y", "z w"], "B": ["q r"]}
        path = tmp_path / "seeds.json"
        io.write_seeds(seeds, path)
        assert io.load_seeds(path) == seeds

    def test_embeddings_round_trip(self, tmp_path):
        from emboot.embed import init_table
        from test_bootstrap import _fake_vocab

        vocab = _fake_vocab(3, 2)
        table = init_table(3, 2, 4, rng_seed=2)
        path = tmp_path / "emb.tsv"
        io.write_embeddings_tsv(table, vocab, path)
        loaded = io.load_embeddings_tsv(path, vocab)
        np.testing.assert_allclose(loaded.vectors, table.vectors, atol=1e-6)

    def test_malformed_seeds_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('["not", "a", "mapping"]')
        with pytest.raises(ValueError):
            io.load_seeds(path)

    def test_synth_spec_unknown_field_rejected(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text('{"categories": 2, "bogus": 1}')
        with pytest.raises(ValueError, match="bogus"):
            io.load_synth_spec(path)
