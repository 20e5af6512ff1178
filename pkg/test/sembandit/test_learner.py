"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module content: tests for the learner module
"""

# Import from Python
from pytest import approx, mark, param, raises, warns
import numpy as np

# Import from this package
from sembandit.errors import (SembanditError, SembanditWarning, BudgetExceeded,
                              SolverDidNotConverge)
from sembandit.graph import DagSkeleton
from sembandit.noise import NoiseSpec
from sembandit.gallery import HierarchicalSpec, hierarchical, random_dag
from sembandit.sem import (Arm, EMPTY_ARM, SemInstance, Environment, exact_means,
                           intervention_margin, value_bound)
from sembandit.learner import (MeanTable, LassoProblem, SkeletonEstimate, lasso_fit, lasso_lambda,
                               kkt_residual, exploration_constants, probe_round,
                               estimate_descendants, estimate_ancestors, dag_consistent,
                               order_from_ancestors, run_structure_learning, recovery_summary)


def chain(n_nodes: int) -> SemInstance:
    """ A chain 1 -> ... -> n_nodes, with weights 1 / 0.5 and Uniform(0, 1) noise. """

    skel = DagSkeleton(n_nodes, [(i, i + 1) for i in range(1, n_nodes)])
    return SemInstance(skel, np.where(skel.adjacency, 1., 0.), np.where(skel.adjacency, 0.5, 0.),
                       [NoiseSpec.uniform(0, 1)] * n_nodes)


def test_exploration_constants():
    """ Test the exploration_constants function. """

    (t_1, _) = exploration_constants(1, 0.5, 10, 3, 0.05)
    assert t_1 == 1062

    (_, t_2) = exploration_constants(1, 0.5, 7, 3, 0.05, c=2)
    assert t_2 == 12

    # Vanishing exploration is floored at one sweep
    (t_1, _) = exploration_constants(1, 1e12, 10, 3, 0.05)
    assert t_1 == 1

    for args in [(0, 0.5, 10, 3, 0.05), (1, 0, 10, 3, 0.05), (1, 0.5, 10, 3, 1.5)]:
        with raises(SembanditError):
            exploration_constants(*args)
    with raises(SembanditError):
        exploration_constants(1, 0.5, 10, 3, 0.05, c=1)


def test_meantable():
    """ Test the MeanTable class. """

    table = MeanTable(3)
    assert table.probe_arms == [EMPTY_ARM, Arm.of(1), Arm.of(2)]
    assert np.all(np.isnan(table.means))

    table.add(EMPTY_ARM, np.array([1., 2., 3.]))
    table.add(EMPTY_ARM, np.array([[3., 2., 1.], [2., 2., 2.]]))
    table.add(Arm.of(2), np.array([0., 1., 0.]))

    assert table.n_obs == 3
    assert list(table.counts) == [3, 0, 1]
    assert table.mean(1, EMPTY_ARM) == 2.
    assert table.mean(2, Arm.of(2)) == 1.
    assert np.isnan(table.mean(1, Arm.of(1)))
    assert table.observations.shape == (3, 3)

    # The reward node is never probed
    with raises(SembanditError):
        table.add(Arm.of(3), np.zeros(3))
    with raises(SembanditError):
        table.add(Arm.of(1, 2), np.zeros(3))


def test_probe_round():
    """ Probe means stay within a Hoeffding band of the exact means. """

    inst = hierarchical(HierarchicalSpec(2, 2))
    env = Environment(inst, seed=5)
    table = probe_round(env, MeanTable(inst.n_nodes), n_sweeps=500)

    assert list(table.counts) == [500] * inst.n_nodes
    assert env.n_pulls == 500 * inst.n_nodes

    exact = np.vstack([exact_means(inst, arm) for arm in table.probe_arms])
    band = value_bound(inst) * np.sqrt(np.log(2 / 0.01) / (2 * 500))
    assert np.mean(np.abs(table.means - exact) <= band) >= 0.99


def test_estimate_descendants():
    """ Test the estimate_descendants function. """

    # Node 1 intervened: node 2 moves from 1.0 to 0.7 (kept) or 0.9 (not kept), with eta = 0.4
    for (shifted, expected) in [(0.7, {2}), (0.9, set())]:
        means = np.array([[0., 1., 0.], [0., shifted, 0.], [0., 1., 0.]])
        de_hat = estimate_descendants(MeanTable.from_means(means), 0.4)
        assert de_hat[1] == frozenset(expected)
        assert de_hat[3] == frozenset({3})

    # Exact means of a chain
    inst = chain(2)
    de_hat = estimate_descendants(MeanTable.from_instance(inst), intervention_margin(inst))
    assert de_hat == {1: frozenset(), 2: frozenset({2})}

    # Every probe arm must have been played
    with raises(SembanditError):
        estimate_descendants(MeanTable(3), 0.4)


def test_estimate_ancestors():
    """ Test the estimate_ancestors function. """

    de_hat = {1: frozenset(), 2: frozenset(), 3: frozenset()}
    assert estimate_ancestors(de_hat, 3) == {1: frozenset({2, 3}), 2: frozenset({1, 3}),
                                             3: frozenset({1, 2})}

    de_hat = {1: frozenset({1, 2}), 2: frozenset({2})}
    assert 1 in estimate_ancestors(de_hat, 2)[2]


def test_dag_consistent():
    """ Test the dag_consistent function. """

    assert dag_consistent({1: frozenset(), 2: frozenset(), 3: frozenset()})
    assert not dag_consistent({1: frozenset({1, 2}), 2: frozenset({1, 2})})

    inst = hierarchical(HierarchicalSpec(2, 3))
    skel = inst.skeleton
    assert dag_consistent({i: skel.descendants(i) | {i} for i in skel.nodes})


def test_order_from_ancestors():
    """ Test the order_from_ancestors function. """

    inst = hierarchical(HierarchicalSpec(2, 3))
    de_hat = estimate_descendants(MeanTable.from_instance(inst), intervention_margin(inst))
    an_hat = estimate_ancestors(de_hat, inst.n_nodes)
    order = order_from_ancestors(de_hat, an_hat)
    position = {node: ind for (ind, node) in enumerate(order)}

    assert sorted(order) == list(inst.skeleton.nodes)
    assert all(position[src] < position[dst] for (src, dst) in inst.skeleton.edges)


def test_lasso_fit():
    """ Test the lasso_fit function. """

    rng = np.random.default_rng(3)
    design = rng.uniform(0, 1, size=(50, 3))

    # All responses zero
    problem = LassoProblem(design, np.zeros(50), 0.1)
    assert np.array_equal(lasso_fit(problem), np.zeros(3))

    # No penalty: least squares
    problem = LassoProblem([[1.], [1.]], [2., 2.], 0.)
    assert lasso_fit(problem) == approx([2.])

    # Sparse truth, and the KKT conditions
    response = design @ np.array([1., 0., -2.]) + rng.normal(0, 0.01, 50)
    problem = LassoProblem(design, response, 0.01)
    coef = lasso_fit(problem)
    assert kkt_residual(problem, coef) <= 1e-6
    assert coef[0] > 0.5 and coef[2] < -1.5

    # No column at all
    assert lasso_fit(LassoProblem(np.zeros((3, 0)), np.zeros(3), 0.1)).size == 0

    with raises(SembanditError):
        LassoProblem(design, np.zeros(49), 0.1)
    with raises(SembanditError):
        LassoProblem(design, np.zeros(50), -0.1)


def test_lasso_fit_not_converged():
    """ A solver stopped early raises SolverDidNotConverge, never a half-fitted model. """

    rng = np.random.default_rng(4)
    design = rng.uniform(0, 1, size=(50, 3))
    problem = LassoProblem(design, design @ np.array([1., 2., 3.]), 0.01, max_iter=1,
                           kkt_tol=1e-12)
    with raises(SolverDidNotConverge):
        lasso_fit(problem)

    # An all-zero response needs no iteration at all
    problem = LassoProblem(design, np.zeros(50), 0.01, max_iter=1, kkt_tol=1e-12)
    assert np.array_equal(lasso_fit(problem), np.zeros(3))


def test_lasso_lambda():
    """ Test the lasso_lambda function. """

    assert lasso_lambda(1, 4, 2, 0.05, 100) == approx(np.sqrt(2 * np.log(640) / 100))
    # A node without candidates counts as one
    assert lasso_lambda(1, 4, 0, 0.05, 100) == lasso_lambda(1, 4, 1, 0.05, 100)


def parent_screening_rate(inst: SemInstance, n_obs: int, n_reps: int, lam=None) -> float:
    """ How often the Lasso supports on the true ancestors contain every true parent.

    Args:
        lam (float, optional): a fixed penalty. Defaults to None, for the automatic penalty
            of :py:func:`lasso_lambda` with the value bound of the instance and delta = 0.05.

    """

    skel = inst.skeleton
    hits = []
    for seed in range(n_reps):
        obs = Environment(inst, seed=seed).pull(EMPTY_ARM, n=n_obs)
        contained = True
        for i in skel.nodes:
            columns = tuple(sorted(skel.ancestors(i)))
            if len(columns) == 0:
                continue
            penalty = lasso_lambda(value_bound(inst), inst.n_nodes, len(columns), 0.05,
                                   n_obs) if lam is None else lam
            problem = LassoProblem(obs[:, np.array(columns) - 1], obs[:, i - 1] - inst.nu[i - 1],
                                   penalty, columns=columns)
            coef = lasso_fit(problem)
            support = {col for (col, val) in zip(columns, coef) if abs(val) > 1e-10}
            contained = contained and set(skel.parents(i)) <= support
        hits += [contained]

    return float(np.mean(hits))


def test_lasso_parent_screening():
    """ With the automatic penalty, Lasso supports contain the true parents once T1
    observational rows are in. """

    inst = hierarchical(HierarchicalSpec(2, 2))
    (m, eta) = (value_bound(inst), intervention_margin(inst))
    assert (m, eta) == approx((7, 0.5))
    (t_1, _) = exploration_constants(m, eta, 5, 2, 0.05)
    assert t_1 == 43326
    assert lasso_lambda(m, 5, 4, 0.05, t_1) == approx(0.1292, abs=1e-4)
    assert parent_screening_rate(inst, t_1, 10) >= 0.9

    # A few hundred rows put the penalty at the level of the parent signal
    assert lasso_lambda(m, 5, 2, 0.05, 500) > 1


def test_lasso_parent_screening_fixed_lambda():
    """ A small fixed penalty screens the parents from a few hundred rows. """

    assert parent_screening_rate(hierarchical(HierarchicalSpec(2, 2)), 500, 50, lam=0.1) >= 0.9


def test_skeletonestimate():
    """ Test the SkeletonEstimate class. """

    inst = hierarchical(HierarchicalSpec(2, 2))
    est = SkeletonEstimate.from_skeleton(inst.skeleton)

    assert est.n_nodes == 5
    assert est.reward_node == 5
    assert est.parents(5) == (3, 4)
    assert est.depths == inst.skeleton.depths
    assert est.max_in_degree == 2
    assert est.depth == 2
    assert est.reward_ancestors == frozenset({1, 2, 3, 4})
    assert est.order_is_valid(inst.skeleton)
    assert est.parents_contained(inst.skeleton)

    with raises(SembanditError):
        SkeletonEstimate(de_hat={1: frozenset(), 2: frozenset({2})},
                         an_hat={1: frozenset(), 2: frozenset()},
                         pa_hat={1: frozenset(), 2: frozenset({1})}, order=(1, 2))


def test_run_structure_learning_single_node():
    """ A single node has no parents. """

    inst = SemInstance(DagSkeleton(1, []), np.zeros((1, 1)), np.zeros((1, 1)),
                       [NoiseSpec.uniform(0, 1)])
    # T1 > T2 = 0 here
    with warns(SembanditWarning):
        (est, rounds) = run_structure_learning(Environment(inst, seed=1), 1., 1., 0, t_1=5)

    assert est.pa_hat == {1: frozenset()}
    assert est.order == (1,)
    assert rounds == 5


@mark.parametrize('n_nodes', [param(3, id='chain 3'), param(4, id='chain 4')])
def test_run_structure_learning_chain(n_nodes):
    """ Chains are recovered, over replications. """

    inst = chain(n_nodes)
    diagnostics = []
    for seed in range(5):
        (est, rounds) = run_structure_learning(
            Environment(inst, seed=seed), intervention_margin(inst), value_bound(inst),
            inst.skeleton.max_in_degree, t_1=2000, truth=inst.skeleton)
        assert est.order == tuple(range(1, n_nodes + 1))
        assert est.parents_contained(inst.skeleton)
        assert rounds == 2000 * n_nodes
        assert est.diagnostics['n_obs'] == 2000
        assert est.diagnostics['kappa_min'] > 0
        assert set(est.kappa_report) == set(range(2, n_nodes + 1))
        diagnostics += [est.diagnostics]

    assert recovery_summary(diagnostics) == {'order_valid_rate': 1.,
                                             'parents_contained_rate': 1.}
    with raises(SembanditError):
        recovery_summary([{'t1': 1}])


def test_run_structure_learning_top_up():
    """ Observational rounds are topped up to max(T1, T2). """

    inst = chain(3)
    (est, rounds) = run_structure_learning(
        Environment(inst, seed=1), intervention_margin(inst), value_bound(inst), 1, t_1=1000,
        t_2=1500)

    assert est.diagnostics['n_obs'] == 1500
    assert rounds == 1000 * 3 + 500


def test_run_structure_learning_budget():
    """ Test the hard cap on the structure-learning rounds. """

    inst = chain(3)
    with raises(BudgetExceeded):
        run_structure_learning(Environment(inst, seed=1), intervention_margin(inst),
                               value_bound(inst), 1, prms={'MAX_ROUNDS': 30}, t_1=100)


def test_run_structure_learning_constant_roots():
    """ Roots without noise give all-zero centred responses, which screen to no parent. """

    skel = DagSkeleton(3, [(1, 3), (2, 3)])
    inst = SemInstance(skel, np.where(skel.adjacency, 1., 0.), np.where(skel.adjacency, 0.5, 0.),
                       [NoiseSpec.constant(1.), NoiseSpec.constant(1.), NoiseSpec.uniform(0, 1)])

    # T1 = 10 > T2 = 5
    with warns(SembanditWarning):
        (est, rounds) = run_structure_learning(Environment(inst, seed=0), 0.5, 4., 2, t_1=10)

    assert rounds == 30
    assert est.diagnostics['n_obs'] == 10
    assert est.parents(1) == ()
    assert est.parents(2) == ()
    assert est.an_hat[3] == frozenset({1, 2})
    assert all(est.pa_hat[i] <= est.an_hat[i] for i in skel.nodes)


def test_descendant_recovery_from_exact_means():
    """ On random DAGs, exact means with eta set to the intervention margin give back
    De(i) + {i} for every intervened non-root node, and all of An(i) in the ancestor estimates. """

    rng = np.random.default_rng(8)
    for seed in range(200):
        n_nodes = int(rng.integers(2, 9))
        inst = random_dag(n_nodes, int(rng.integers(0, 4)), seed=seed)
        skel = inst.skeleton

        de_hat = estimate_descendants(MeanTable.from_instance(inst), intervention_margin(inst))
        roots = {i for i in range(1, n_nodes) if skel.depth_of(i) == 0}
        for i in range(1, n_nodes):
            expected = frozenset() if i in roots else skel.descendants(i) | {i}
            assert de_hat[i] == expected, f'seed {seed}, node {i}'
        assert de_hat[n_nodes] == frozenset({n_nodes})
        assert dag_consistent(de_hat)

        an_hat = estimate_ancestors(de_hat, n_nodes)
        for i in skel.nodes:
            assert an_hat[i] == skel.ancestors(i) | (roots - {i}), f'seed {seed}, node {i}'

        order = order_from_ancestors(de_hat, an_hat)
        position = {node: ind for (ind, node) in enumerate(order)}
        assert all(position[src] < position[dst] for (src, dst) in skel.edges)
