import numpy as np
import pytest

from emboot.baselines import (
    entropy,
    epb_int_build,
    epb_run,
    label_propagation,
    lp_bootstrap_run,
)
from emboot.bootstrap import BootstrapConfig, derived_seeds, run
from emboot.corpus import LEFT, RIGHT, Pattern
from emboot.embed import PretrainedEmbeddings, TrainConfig, init_table

from oracles import label_propagation_ref
from test_bootstrap import _fake_vocab, planted_corpus, seed_surfaces


def _config(epochs=2):
    return BootstrapConfig(
        epochs=epochs,
        k_entities=2,
        k_patterns=2,
        dim=5,
        train=TrainConfig(inner_epochs=5),
        rng_seed=3,
    )


class TestEpbRun:
    def test_deterministic(self):
        corpus = planted_corpus()
        seeds = seed_surfaces(corpus)
        r1 = epb_run(_config(), corpus, seeds)
        r2 = epb_run(_config(), corpus, seeds)
        for a, b in zip(r1.trace.records, r2.trace.records):
            assert a.entity_promotions == b.entity_promotions

    def test_system_tag(self):
        corpus = planted_corpus()
        result = epb_run(_config(0), corpus, seed_surfaces(corpus))
        assert result.trace.system == "epb"

    def test_seed_snapshot_matches_full_system(self):
        corpus = planted_corpus()
        seeds = seed_surfaces(corpus)
        epb = epb_run(_config(0), corpus, seeds)
        emboot = run(_config(0), corpus, seeds)
        assert (
            epb.trace.records[0].entity_promotions
            == emboot.trace.records[0].entity_promotions
        )

    def test_embeddings_left_untrained(self):
        corpus = planted_corpus()
        config = _config(2)
        result = epb_run(config, corpus, seed_surfaces(corpus))
        expected = init_table(
            result.vocab.n_entities,
            result.vocab.n_patterns,
            config.dim,
            derived_seeds(config.rng_seed, 1)[0],
        )
        assert np.array_equal(result.table.vectors, expected.vectors)

    def test_shares_pool_invariants(self):
        corpus = planted_corpus()
        result = epb_run(_config(3), corpus, seed_surfaces(corpus))
        previous: set = set()
        for record in result.trace.records:
            record.pools.validate()
            entities = record.pools.pooled_entities()
            assert previous <= entities
            previous = entities


def _pretrained_for(vocab):
    rng = np.random.default_rng(0)
    words = sorted({t for s in vocab.entity_surfaces for t in s.split()})
    words += sorted({t for p in vocab.patterns for t in p.tokens})
    return PretrainedEmbeddings(words, rng.normal(size=(len(words), 8)))


class TestEpbIntBuild:
    def test_all_oov_pattern_gets_uniform_entry(self):
        from emboot.bootstrap import PoolState

        vocab = _fake_vocab(2, 2)
        pools = PoolState(
            ("A", "B"),
            {"A": [(0, 0)], "B": [(1, 0)]},
            {"A": [(0, 1)], "B": [(1, 1)]},
        )
        known = [t for s in vocab.entity_surfaces for t in s.split()]
        rng = np.random.default_rng(1)
        pretrained = PretrainedEmbeddings(known, rng.normal(size=(len(known), 4)))
        dl = epb_int_build(pools, vocab, pretrained)
        for entry in dl.entries:  # every pattern token is out of vocabulary
            np.testing.assert_allclose(entry.probabilities, 0.5)

    def test_entries_normalized(self):
        from emboot.bootstrap import PoolState

        vocab = _fake_vocab(4, 3)
        pools = PoolState(
            ("A", "B"),
            {"A": [(0, 0), (1, 0)], "B": [(2, 0), (3, 0)]},
            {"A": [(0, 1), (2, 1)], "B": [(1, 1)]},
        )
        dl = epb_int_build(pools, vocab, _pretrained_for(vocab))
        dl.validate()
        assert sorted(e.pattern_id for e in dl.entries) == [0, 1, 2]


class TestLabelPropagation:
    def test_disconnected_components_converge_to_their_seed(self):
        features = np.array([[0.0], [0.0], [0.0], [100.0], [100.0], [100.0]])
        F = label_propagation(features, {0: 0, 3: 1}, 2, gamma=1.0)
        np.testing.assert_allclose(F[:3, 0], 1.0, atol=1e-5)
        np.testing.assert_allclose(F[3:, 1], 1.0, atol=1e-5)

    def test_seed_rows_stay_clamped(self):
        rng = np.random.default_rng(2)
        features = rng.normal(size=(8, 3))
        F = label_propagation(features, {1: 0, 4: 1, 6: 2}, 3, gamma=0.7)
        np.testing.assert_array_equal(F[1], [1.0, 0.0, 0.0])
        np.testing.assert_array_equal(F[4], [0.0, 1.0, 0.0])
        np.testing.assert_array_equal(F[6], [0.0, 0.0, 1.0])

    def test_chain_matches_dense_fixed_point_oracle(self):
        features = np.arange(6, dtype=np.float64)[:, None]
        F = label_propagation(features, {0: 0, 5: 1}, 2, gamma=0.5)
        expected = label_propagation_ref(features, {0: 0, 5: 1}, 2, gamma=0.5)
        np.testing.assert_allclose(F, expected, atol=1e-5)

    def test_zero_iterations_return_clamped_initial_state(self):
        features = np.arange(4, dtype=np.float64)[:, None]
        F = label_propagation(features, {0: 1}, 2, gamma=1.0, max_iter=0)
        np.testing.assert_array_equal(F[0], [0.0, 1.0])
        np.testing.assert_allclose(F[1:], 0.5)

    def test_rows_are_distributions_at_every_iteration(self):
        features = np.arange(5, dtype=np.float64)[:, None]
        for iterations in (0, 1, 2, 3, 10, 100):
            F = label_propagation(features, {0: 0, 4: 1}, 2, gamma=0.3, max_iter=iterations)
            assert np.all(F >= 0)
            np.testing.assert_allclose(F.sum(axis=1), 1.0, atol=1e-9)

    def test_invalid_gamma_rejected(self):
        with pytest.raises(ValueError):
            label_propagation(np.zeros((2, 1)), {0: 0}, 2, gamma=0.0)

    def test_seed_outside_matrix_rejected(self):
        with pytest.raises(ValueError):
            label_propagation(np.zeros((2, 1)), {5: 0}, 2, gamma=1.0)


class TestEntropy:
    def test_one_hot_is_zero(self):
        assert entropy(np.array([[1.0, 0.0, 0.0]]))[0] == 0.0

    def test_uniform_is_maximal(self):
        H = entropy(np.array([[0.25, 0.25, 0.25, 0.25], [0.7, 0.1, 0.1, 0.1]]))
        assert H[0] == pytest.approx(np.log(4))
        assert H[0] > H[1]


class TestLpBootstrapRun:
    def test_deterministic_and_tagged(self):
        corpus = planted_corpus()
        seeds = seed_surfaces(corpus)
        r1 = lp_bootstrap_run(_config(2), corpus, seeds)
        r2 = lp_bootstrap_run(_config(2), corpus, seeds)
        assert r1.trace.system == "lp"
        for a, b in zip(r1.trace.records, r2.trace.records):
            assert a.entity_promotions == b.entity_promotions

    def test_budget_respected_and_pools_grow(self):
        corpus = planted_corpus()
        config = _config(3)
        result = lp_bootstrap_run(config, corpus, seed_surfaces(corpus))
        for record in result.trace.records[1:]:
            for cat in result.pools.categories:
                assert len(record.entity_promotions[cat]) <= config.k_entities
        result.pools.validate()

    def test_no_patterns_promoted(self):
        corpus = planted_corpus()
        result = lp_bootstrap_run(_config(2), corpus, seed_surfaces(corpus))
        for record in result.trace.records:
            assert all(not v for v in record.pattern_promotions.values())
