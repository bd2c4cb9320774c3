import numpy as np
import pytest

import rim

from helpers import coverage_value, labeled_from, pair, path3, random_graph


def two_components():
    """Two disjoint edges 0-1 and 2-3; fully symmetric."""
    return rim.build_graph(4, [(0, 1), (2, 3)], [0, 1, 0, 1],
                           splits={"train": [0, 1, 2, 3]})


def star5():
    """Center node 3 with leaves 0, 1, 2, 4."""
    return rim.build_graph(5, [(3, 0), (3, 1), (3, 2), (3, 4)],
                           [0, 0, 1, 1, 0], splits={"train": list(range(5))})


class ScriptedOracle:
    """Oracle stand-in with a fixed answer per node, for deterministic tests."""

    def __init__(self, alpha, answers):
        self.alpha = alpha
        self.answers = {int(k): int(v) for k, v in answers.items()}

    def query(self, node):
        return self.answers[int(node)]


class TestSelectorConfig:
    def test_defaults(self):
        cfg = rim.SelectorConfig(budget=10, batch_size=2)
        assert cfg.theta == 0.05 and cfg.k == 2 and cfg.strategy == "rim"
        assert cfg.reliable_selection and cfg.reliable_training

    @pytest.mark.parametrize("kwargs,msg", [
        (dict(budget=0, batch_size=1), "budget"),
        (dict(budget=5, batch_size=0), "batch_size"),
        (dict(budget=5, batch_size=6), "batch_size"),
        (dict(budget=5, batch_size=2, theta=-0.1), "theta"),
        (dict(budget=5, batch_size=2, mode="dual"), "mode"),
        (dict(budget=5, batch_size=2, strategy="pagerank"), "strategy"),
        (dict(budget=5, batch_size=2, lp_iters=0), "lp_iters"),
    ])
    def test_rejects_bad_values(self, kwargs, msg):
        with pytest.raises(ValueError, match=msg):
            rim.SelectorConfig(**kwargs)


class TestGreedyBatch:
    def test_path_first_pick_is_middle(self):
        """All three columns activate everything at theta=0.05, so the gain
        ties at 3 and the larger raw mass (46/36 vs 31/36) selects node 1."""
        g = path3()
        op = rim.PropagationOperator(g, 2)
        cfg = rim.SelectorConfig(budget=1, batch_size=1, theta=0.05,
                                 reliable_selection=False)
        sel = rim.greedy_batch(op, rim.LabeledSet(alpha=1.0), cfg,
                               [0, 1, 2], 1)
        assert sel.picked == [1]
        assert sel.gains == [3]
        assert sel.objective_values == [3]
        assert sorted(sel.newly_activated[0].tolist()) == [0, 1, 2]

    def test_reliable_selection_scales_candidate_quality(self):
        """At alpha=0.5 and theta=0.3 no scaled influence clears the
        threshold (best entry is 0.5 * 4/9), so reliable selection reports
        zero gain and falls back to the mass tie-break; without it node 1
        activates all three nodes."""
        g = path3()
        op = rim.PropagationOperator(g, 2)
        ls = rim.LabeledSet(alpha=0.5)
        on = rim.SelectorConfig(budget=1, batch_size=1, theta=0.3,
                                reliable_selection=True)
        off = rim.SelectorConfig(budget=1, batch_size=1, theta=0.3,
                                 reliable_selection=False)
        sel_on = rim.greedy_batch(op, ls, on, [0, 1, 2], 1)
        sel_off = rim.greedy_batch(op, ls, off, [0, 1, 2], 1)
        assert sel_on.picked == [1] and sel_on.gains == [0]
        assert sel_off.picked == [1] and sel_off.gains == [3]

    def test_gain_tie_breaks_to_lower_id_when_masses_equal(self):
        g = two_components()
        op = rim.PropagationOperator(g, 2)
        cfg = rim.SelectorConfig(budget=2, batch_size=2, theta=0.05,
                                 reliable_selection=False)
        sel = rim.greedy_batch(op, rim.LabeledSet(alpha=1.0), cfg,
                               [0, 1, 2, 3], 2)
        assert sel.picked == [0, 2]
        assert sel.gains == [2, 2]
        assert sel.objective_values == [2, 4]

    def test_zero_gains_fall_back_to_highest_mass(self):
        """theta=1 can never be strictly exceeded, so all gains are zero and
        the pick is the node with the heaviest influence column: the hub."""
        g = star5()
        op = rim.PropagationOperator(g, 2)
        cfg = rim.SelectorConfig(budget=1, batch_size=1, theta=1.0,
                                 reliable_selection=False)
        sel = rim.greedy_batch(op, rim.LabeledSet(alpha=1.0), cfg,
                               np.arange(5), 1)
        assert sel.picked == [3]
        assert sel.gains == [0]

    def test_lazy_matches_naive(self):
        """The stale-gain heap must reproduce the naive greedy argmax
        (including tie handling) pick for pick."""
        rng = np.random.default_rng(99)
        for _ in range(25):
            n = int(rng.integers(4, 16))
            g = random_graph(rng, n, float(rng.uniform(0.1, 0.7)))
            op = rim.PropagationOperator(g, int(rng.integers(1, 4)))
            theta = float(rng.uniform(0.0, 0.4))
            alpha = float(rng.uniform(0.5, 1.0))
            b = int(rng.integers(1, n + 1))
            cfg = rim.SelectorConfig(budget=b, batch_size=b, theta=theta)
            m = int(rng.integers(0, 3))
            ls = labeled_from(g, rng.choice(n, m, replace=False),
                              rng.uniform(0.2, 1.0, m), alpha=alpha)
            cands = np.setdiff1d(np.arange(n), ls.nodes())
            take = min(b, cands.size)
            lazy = rim.greedy_batch(op, ls, cfg, cands, take)
            naive = rim.greedy_batch(op, ls, cfg, cands, take, lazy=False)
            assert lazy.picked == naive.picked
            assert lazy.gains == naive.gains
            assert lazy.objective_values == naive.objective_values

    def test_gains_telescope_into_objective(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, 12, 0.3)
        op = rim.PropagationOperator(g, 2)
        ls = labeled_from(g, [0], [0.6])
        cfg = rim.SelectorConfig(budget=4, batch_size=4, theta=0.1)
        base = rim.objective(op, ls, cfg.theta)
        sel = rim.greedy_batch(op, ls, cfg, np.arange(1, 12), 4)
        running = base
        for gain, obj in zip(sel.gains, sel.objective_values):
            running += gain
            assert obj == running

    def test_objective_matches_independent_coverage(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            g = random_graph(rng, 10, 0.4)
            op = rim.PropagationOperator(g, 2)
            theta = float(rng.uniform(0.0, 0.3))
            cfg = rim.SelectorConfig(budget=3, batch_size=3, theta=theta,
                                     reliable_selection=False)
            sel = rim.greedy_batch(op, rim.LabeledSet(alpha=1.0), cfg,
                                   np.arange(10), 3)
            expected = coverage_value(op, sel.picked, [1.0] * 3, theta)
            assert sel.objective_values[-1] == expected

    def test_too_few_candidates(self):
        g = path3()
        op = rim.PropagationOperator(g, 2)
        cfg = rim.SelectorConfig(budget=3, batch_size=3)
        with pytest.raises(ValueError, match="candidates"):
            rim.greedy_batch(op, rim.LabeledSet(alpha=0.9), cfg, [0, 1], 3)

    def test_select_batch_returns_picks(self):
        g = path3()
        op = rim.PropagationOperator(g, 2)
        cfg = rim.SelectorConfig(budget=2, batch_size=2, theta=0.05,
                                 reliable_selection=False)
        picks = rim.select_batch(op, rim.LabeledSet(alpha=1.0), cfg, [0, 1, 2])
        assert len(picks) == 2 and picks[0] == 1


class TestSoftLabelEntropy:
    def test_known_values(self):
        rows = np.array([[0.5, 0.5], [1.0, 0.0], [0.0, 0.0], [0.4, 0.0]])
        h = rim.soft_label_entropy(rows, 2)
        np.testing.assert_allclose(
            h, [np.log(2), 0.0, np.log(2), -0.4 * np.log(0.4)], atol=1e-15)

    def test_rows_not_renormalized(self):
        """A low-mass copy of a distribution scores differently from the
        distribution itself; that asymmetry is what lets unreached regions
        look uncertain."""
        h_full = rim.soft_label_entropy(np.array([[0.5, 0.5]]), 2)[0]
        h_low = rim.soft_label_entropy(np.array([[0.1, 0.1]]), 2)[0]
        np.testing.assert_allclose(h_full, np.log(2), atol=1e-15)
        np.testing.assert_allclose(h_low, -0.2 * np.log(0.1), atol=1e-15)
        assert h_low < h_full

    def test_single_row_input(self):
        assert rim.soft_label_entropy(np.array([1.0, 0.0]), 2).shape == (1,)


class TestBaselines:
    def test_random_is_seeded_subset_of_pool(self):
        rng = np.random.default_rng(0)
        g = random_graph(rng, 20, 0.2)
        ls = labeled_from(g, [3, 7], [0.9, 0.9])
        p1 = rim.baseline_select("random", g, ls, 5, np.random.default_rng(42))
        p2 = rim.baseline_select("random", g, ls, 5, np.random.default_rng(42))
        assert p1 == p2
        assert len(set(p1)) == 5
        assert not {3, 7} & set(p1)

    def test_degree_order_with_low_id_ties(self):
        g = rim.build_graph(4, [(0, 1), (1, 2), (2, 3)], [0, 1, 0, 1],
                            splits={"train": [0, 1, 2, 3]})
        picks = rim.baseline_select("degree", g, rim.LabeledSet(alpha=0.9), 3,
                                    np.random.default_rng(0))
        assert picks == [1, 2, 0]

    def test_lp_me_cold_start_is_random(self):
        """With no labels every entropy ties at log c, so the batch is the
        head of a seeded permutation; equal seeds agree."""
        rng = np.random.default_rng(1)
        g = random_graph(rng, 15, 0.3)
        a = rim.baseline_select("lp_me", g, rim.LabeledSet(alpha=0.8), 4,
                                np.random.default_rng(5))
        b = rim.baseline_select("lp_me", g, rim.LabeledSet(alpha=0.8), 4,
                                np.random.default_rng(5))
        assert a == b and len(set(a)) == 4

    def test_lp_me_picks_argmax_entropy(self):
        rng = np.random.default_rng(2)
        g = random_graph(rng, 14, 0.3, num_classes=3)
        op = rim.PropagationOperator(g, 2)
        ls = labeled_from(g, [0, 1], [1.0, 1.0])
        state = rim.lp_fit_predict(op, ls, iters=10, use_reliability=False)
        pool = np.setdiff1d(g.train_nodes, ls.nodes())
        # independent entropy computation on raw rows
        rows = state.soft[pool]
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.where(rows > 0, rows * np.log(rows), 0.0).sum(axis=1)
        h[~rows.any(axis=1)] = np.log(3)
        picks = rim.baseline_select("lp_me", g, ls, 1,
                                    np.random.default_rng(0), state)
        assert h[pool.tolist().index(picks[0])] == h.max()

    def test_lp_mre_frozen_pick_on_path(self):
        """Labeled {0} on the path: simulating node 2's argmax label reduces
        total raw-row entropy by 0.2941355781 versus 0.2931764276 for node 1,
        so the far endpoint wins."""
        g = path3()
        op = rim.PropagationOperator(g, 2)
        ls = labeled_from(g, [0], [1.0])
        state = rim.lp_fit_predict(op, ls, iters=10, use_reliability=False)
        picks = rim.baseline_select("lp_mre", g, ls, 1,
                                    np.random.default_rng(0), state, op=op)
        assert picks == [2]
        # recompute both reductions independently
        base = rim.soft_label_entropy(state.soft, 2).sum()
        reductions = {}
        for v in (1, 2):
            sim = rim.LabeledSet(alpha=0.7)
            sim.add(0, 0, 1.0, 0)
            sim.add(v, int(np.argmax(state.soft[v])), 1.0, 0)
            y = rim.lp_fit_predict(op, sim, iters=10, use_reliability=False)
            reductions[v] = base - rim.soft_label_entropy(y.soft, 2).sum()
        np.testing.assert_allclose(reductions[1], 0.2931764276, atol=1e-9)
        np.testing.assert_allclose(reductions[2], 0.2941355781, atol=1e-9)

    def test_lp_mre_subsample_is_seeded(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 18, 0.3)
        op = rim.PropagationOperator(g, 2)
        ls = labeled_from(g, [0], [1.0])
        state = rim.lp_fit_predict(op, ls, iters=5, use_reliability=False)
        kw = dict(op=op, lp_iters=5, max_candidates=6)
        a = rim.baseline_select("lp_mre", g, ls, 2, np.random.default_rng(9),
                                state, **kw)
        b = rim.baseline_select("lp_mre", g, ls, 2, np.random.default_rng(9),
                                state, **kw)
        assert a == b and len(a) == 2

    def test_rejects_rim_and_pool_exhaustion(self):
        g = path3()
        with pytest.raises(ValueError, match="baseline"):
            rim.baseline_select("rim", g, rim.LabeledSet(alpha=0.9), 1,
                                np.random.default_rng(0))
        ls = labeled_from(g, [0, 1], [1.0, 1.0])
        with pytest.raises(ValueError, match="candidates"):
            rim.baseline_select("random", g, ls, 2, np.random.default_rng(0))


class TestRunAlLoop:
    def _graph(self, seed=0, n=24):
        rng = np.random.default_rng(seed)
        return random_graph(rng, n, 0.2, num_classes=3, with_features=True)

    def test_bit_reproducible(self):
        g = self._graph()
        cfg = rim.SelectorConfig(budget=6, batch_size=3, seed=4)
        for strategy in rim.STRATEGIES:
            c = rim.SelectorConfig(budget=6, batch_size=3, seed=4,
                                   strategy=strategy)
            o1 = rim.NoisyOracle.for_graph(g, 0.7, np.random.default_rng(11))
            o2 = rim.NoisyOracle.for_graph(g, 0.7, np.random.default_rng(11))
            ls1, t1 = rim.run_al_loop(g, c, o1)
            ls2, t2 = rim.run_al_loop(g, c, o2)
            assert [e.node for e in ls1.entries] == [e.node for e in ls2.entries]
            assert [e.label for e in ls1.entries] == [e.label for e in ls2.entries]
            assert [e.quality for e in ls1.entries] == [e.quality for e in ls2.entries]
            np.testing.assert_array_equal(t1.first_activator, t2.first_activator)

    def test_batch_sizes_and_partial_tail(self):
        g = self._graph(1)
        cfg = rim.SelectorConfig(budget=5, batch_size=2, seed=0)
        oracle = rim.NoisyOracle.for_graph(g, 0.9, np.random.default_rng(0))
        labeled, trace = rim.run_al_loop(g, cfg, oracle)
        assert [len(b.picked) for b in trace.batches] == [2, 2, 1]
        assert len(labeled) == 5
        assert [e.batch for e in labeled.entries] == [0, 0, 1, 1, 2]

    def test_no_node_labeled_twice(self):
        g = self._graph(2)
        cfg = rim.SelectorConfig(budget=10, batch_size=3, seed=1)
        oracle = rim.NoisyOracle.for_graph(g, 0.5, np.random.default_rng(3))
        labeled, _ = rim.run_al_loop(g, cfg, oracle)
        nodes = [e.node for e in labeled.entries]
        assert len(nodes) == len(set(nodes)) == 10

    def test_reliable_selection_off_pins_quality_one(self):
        g = self._graph(3)
        cfg = rim.SelectorConfig(budget=6, batch_size=2, seed=2,
                                 reliable_selection=False)
        oracle = rim.NoisyOracle.for_graph(g, 0.6, np.random.default_rng(4))
        labeled, trace = rim.run_al_loop(g, cfg, oracle)
        assert all(e.quality == 1.0 for e in labeled.entries)
        for b in trace.batches:
            assert all(q == 1.0 for q in b.qualities.values())

    def test_quality_update_applied_per_batch(self):
        g = self._graph(4)
        cfg = rim.SelectorConfig(budget=8, batch_size=4, seed=3)
        oracle = rim.NoisyOracle.for_graph(g, 0.7, np.random.default_rng(5))
        labeled, trace = rim.run_al_loop(g, cfg, oracle)
        assert all(0.0 <= e.quality <= 1.0 for e in labeled.entries)
        for record in trace.batches:
            for node, q in record.qualities.items():
                assert labeled.entry_for(node).quality == q

    @pytest.mark.parametrize("mode", ["feature", "label"])
    def test_seed_batch_keeps_alpha(self, mode):
        """First-batch nodes have no earlier labels to be judged against, so
        their quality stays exactly alpha; later batches do get updated."""
        g = self._graph(9)
        cfg = rim.SelectorConfig(budget=9, batch_size=3, seed=9, mode=mode)
        oracle = rim.NoisyOracle.for_graph(g, 0.7, np.random.default_rng(10))
        labeled, _ = rim.run_al_loop(g, cfg, oracle)
        assert all(e.quality == 0.7 for e in labeled.entries if e.batch == 0)
        assert any(e.quality != 0.7 for e in labeled.entries if e.batch > 0)

    def test_label_mode_judges_against_prebatch_state(self):
        """A second-batch label is scored against the soft-label state from
        before its batch was labeled, while the node itself was still a
        propagation target rather than a clamped seed.

        Two disjoint edges 0-1 (class 0) and 2-3 (class 1). Batch one labels
        0 and 2 correctly; the propagated state then points component {0,1}
        at class 0 and {2,3} at class 1. Batch two picks 1 and 3 and the
        scripted oracle calls both class 1. Node 1 contradicts its component:
        both same-label references (2, and batch-mate 3) sit in the other
        component, cosine 0, reliability 0, so its quality drops to 0. Node 3
        agrees with reference 2 (cosine 1, vote 1) and disagrees with
        batch-mate 1 (vote 0); the references weigh 0.7 each, giving 1/2.
        """
        g = rim.build_graph(4, [(0, 1), (2, 3)], [0, 0, 1, 1],
                            splits={"train": [0, 1, 2, 3]})
        oracle = ScriptedOracle(0.7, {0: 0, 1: 1, 2: 1, 3: 1})
        cfg = rim.SelectorConfig(budget=4, batch_size=2, theta=0.3,
                                 mode="label", seed=0)
        labeled, trace = rim.run_al_loop(g, cfg, oracle)
        assert trace.batches[0].picked == [0, 2]
        assert trace.batches[1].picked == [1, 3]
        q = {e.node: e.quality for e in labeled.entries}
        assert q[0] == 0.7 and q[2] == 0.7
        assert q[1] == 0.0
        assert q[3] == 0.5

    def test_first_activator_points_at_labeled_nodes(self):
        g = self._graph(5)
        cfg = rim.SelectorConfig(budget=9, batch_size=3, seed=5, theta=0.02)
        oracle = rim.NoisyOracle.for_graph(g, 0.8, np.random.default_rng(6))
        labeled, trace = rim.run_al_loop(g, cfg, oracle)
        nodes = set(e.node for e in labeled.entries)
        fa = trace.first_activator
        assert set(fa[fa >= 0].tolist()) <= nodes
        op = rim.PropagationOperator(g, cfg.k)
        state = rim.build_activation(op, labeled, cfg.theta)
        active = np.flatnonzero(state.activated_mask)
        assert (fa[active] >= 0).all()

    def test_rim_objective_values_non_decreasing(self):
        g = self._graph(6)
        cfg = rim.SelectorConfig(budget=8, batch_size=4, seed=6, theta=0.03)
        oracle = rim.NoisyOracle.for_graph(g, 0.7, np.random.default_rng(7))
        _, trace = rim.run_al_loop(g, cfg, oracle)
        for b in trace.batches:
            assert b.objective_values == sorted(b.objective_values)
            assert len(b.picked) == len(b.gains) == len(b.objective_values)

    def test_baselines_record_no_gains(self):
        g = self._graph(7)
        cfg = rim.SelectorConfig(budget=4, batch_size=2, seed=7,
                                 strategy="degree")
        oracle = rim.NoisyOracle.for_graph(g, 0.9, np.random.default_rng(8))
        _, trace = rim.run_al_loop(g, cfg, oracle)
        assert trace.strategy == "degree"
        for b in trace.batches:
            assert b.gains == [] and b.objective_values == []
            assert b.activated_count >= 0

    def test_label_mode_needs_no_features(self):
        rng = np.random.default_rng(8)
        g = random_graph(rng, 16, 0.3, num_classes=2, with_features=False)
        cfg = rim.SelectorConfig(budget=4, batch_size=2, seed=8, mode="label")
        oracle = rim.NoisyOracle.for_graph(g, 0.7, np.random.default_rng(9))
        labeled, _ = rim.run_al_loop(g, cfg, oracle)
        assert len(labeled) == 4

    def test_feature_mode_without_features_fails(self):
        rng = np.random.default_rng(9)
        g = random_graph(rng, 10, 0.3, with_features=False)
        cfg = rim.SelectorConfig(budget=2, batch_size=1, seed=0)
        oracle = rim.NoisyOracle.for_graph(g, 0.7, np.random.default_rng(0))
        with pytest.raises(ValueError, match="features"):
            rim.run_al_loop(g, cfg, oracle)

    def test_budget_beyond_train_split_fails(self):
        g = path3()
        cfg = rim.SelectorConfig(budget=4, batch_size=2)
        oracle = rim.NoisyOracle.for_graph(g, 0.9, np.random.default_rng(0))
        with pytest.raises(ValueError, match="train split"):
            rim.run_al_loop(g, cfg, oracle)
