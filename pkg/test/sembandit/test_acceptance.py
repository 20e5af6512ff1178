"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module content: long experiments checking the statistical behavior of sembandit. They only run
with ``pytest --DO_SLOW``.
"""

# Import from Python
import pytest
import numpy as np

# Import from this package
from sembandit.gallery import HierarchicalSpec, hierarchical, random_dag
from sembandit.sem import (Environment, enumerate_arms, arm_masks, arm_means, exact_mean,
                           path_sum, path_sum_powers, sample, intervention_margin, value_bound,
                           best_arm_brute_force)
from sembandit.learner import (LassoProblem, SkeletonEstimate, lasso_fit, kkt_residual,
                               run_structure_learning, recovery_summary)
from sembandit.designer import run_intervention_design, stage_cap
from sembandit.bench import ExperimentConfig, run_experiment, scaling_sweep


def skip_unless(do_slow: bool) -> None:
    """ Skip the calling test unless --DO_SLOW was given. """
    if not do_slow:
        pytest.skip('Use --DO_SLOW to run this test.')


def test_mean_oracle(do_slow):
    """ Monte-Carlo means match the exact means, and both path-sum forms agree. """

    skip_unless(do_slow)
    rng = np.random.default_rng(2024)
    n_draws = 100000

    hits = []
    for seed in range(20):
        inst = random_dag(int(rng.integers(3, 7)), int(rng.integers(0, 4)), seed=seed)
        reward = inst.n_nodes
        for arm in enumerate_arms(inst.n_nodes):
            xs = sample(inst, arm, seed=rng, n=n_draws)[:, -1]
            band = 4 * xs.std(ddof=1) / np.sqrt(n_draws)
            hits += [abs(xs.mean() - exact_mean(inst, arm, reward)) <= band + 1e-12]
            assert np.allclose(path_sum(inst, arm, reward), path_sum_powers(inst, arm, reward),
                               rtol=0, atol=1e-10)

    assert np.mean(hits) >= 0.99


def test_structure_recovery(do_slow):
    """ Structure learning yields a valid order and contains the parents, most of the time. """

    skip_unless(do_slow)
    inst = hierarchical(HierarchicalSpec(2, 2))
    diagnostics = []
    for seed in range(50):
        (est, _) = run_structure_learning(
            Environment(inst, seed=seed), intervention_margin(inst), value_bound(inst),
            inst.skeleton.max_in_degree, prms={'DELTA': 0.1}, truth=inst.skeleton)
        diagnostics += [est.diagnostics]

    rates = recovery_summary(diagnostics)
    assert rates['order_valid_rate'] >= 0.7
    assert rates['parents_contained_rate'] >= 0.7


def test_regret_sublinear(do_slow):
    """ The cumulative regret grows sublinearly on the 3 x 2 hierarchical instance. """

    skip_unless(do_slow)
    horizon = 20000
    config = ExperimentConfig(generator='hierarchical', d=3, n_layers=2, horizon=horizon,
                              replications=20, mode='known-graph', alpha=0.1, lam=0.1, t1=500,
                              t2=500)
    (report, _) = run_experiment(config)['known-graph']

    inst = hierarchical(HierarchicalSpec(3, 2))
    arms = enumerate_arms(inst.n_nodes)
    means = arm_means(inst.b_obs, inst.b_int, inst.nu, inst.skeleton.order,
                      arm_masks(arms, inst.n_nodes))[:, -1]
    gap_max = means.max() - means.min()

    curve = report.data['mean_cum_regret'].to_numpy()
    assert curve[-1] <= 0.75 * gap_max * horizon
    assert curve[-1] - curve[horizon // 2 - 1] <= 0.9 * curve[horizon // 2 - 1]


def test_scaling_in_depth(do_slow):
    """ The final regret grows with the depth, faster than linearly. """

    skip_unless(do_slow)
    base = ExperimentConfig(generator='hierarchical', horizon=2000, replications=5,
                            mode='known-graph')
    regret = scaling_sweep('L', [1, 2, 3], base)['final_mean_regret'].to_numpy()

    assert np.all(np.diff(regret) > 0)
    assert regret[2] / regret[1] > regret[1] / regret[0] - 0.5


def test_scaling_in_width(do_slow):
    """ The final regret grows with the layer width. """

    skip_unless(do_slow)
    base = ExperimentConfig(generator='hierarchical', horizon=2000, replications=5,
                            mode='known-graph')
    regret = scaling_sweep('d', [2, 3, 4], base)['final_mean_regret'].to_numpy()

    assert np.all(np.diff(regret) > 0)


def test_width_coverage(do_slow):
    """ The widths cover the estimation errors, and the best arm survives the eliminations. """

    skip_unless(do_slow)
    inst = hierarchical(HierarchicalSpec(2, 2))
    est = SkeletonEstimate.from_skeleton(inst.skeleton)
    (_, mu_star) = best_arm_brute_force(inst)

    covered = []
    survived = []
    for seed in range(50):
        trace = run_intervention_design(Environment(inst, seed=seed), est, 2000,
                                        mode='known-graph', checkpoints=[100, 500, 1000, 2000])
        covered += [abs(item['mu_hat'] - item['mu']) <= item['width']
                    for item in trace.meta['coverage']]
        final = trace.meta['final_candidates'].arms
        final_means = arm_means(inst.b_obs, inst.b_int, inst.nu, inst.skeleton.order,
                                arm_masks(final, inst.n_nodes))[:, -1]
        survived += [np.isclose(final_means.max(), mu_star)]

    assert np.mean(covered) >= 0.85
    assert np.mean(survived) >= 0.85


def test_properties(do_slow):
    """ Invariants of the bandit and of the Lasso, over randomized small instances. """

    skip_unless(do_slow)
    rng = np.random.default_rng(7)

    for case in range(200):
        inst = random_dag(int(rng.integers(2, 6)), int(rng.integers(0, 3)), seed=case)
        est = SkeletonEstimate.from_skeleton(inst.skeleton)
        horizon = int(rng.integers(20, 80))
        trace = run_intervention_design(Environment(inst, seed=case), est, horizon,
                                        mode='known-graph')
        data = trace.data

        # Candidates only shrink, stages only grow
        assert np.all(np.diff(data['candidate_count']) <= 0)
        assert np.all(np.diff(data['stage']) >= 0)
        assert data['stage'].max() <= stage_cap(horizon)
        assert trace.meta['lambda_min_floor'] >= 1 - 1e-12
        assert np.all(data['inst_regret'] >= -1e-12)
        assert np.all(np.diff(data['cum_regret']) >= -1e-12)

        again = run_intervention_design(Environment(inst, seed=case), est, horizon,
                                        mode='known-graph')
        assert again.data.equals(data)

        # Lasso optimality
        design = rng.uniform(0, 1, size=(50, 3))
        problem = LassoProblem(design, design @ rng.normal(0, 1, 3) + rng.normal(0, 0.1, 50),
                               float(rng.uniform(0.01, 0.5)))
        assert kkt_residual(problem, lasso_fit(problem)) <= 1e-6
