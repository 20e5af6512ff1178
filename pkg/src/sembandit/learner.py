"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: structure learning from single-node interventions and Lasso parent screening
"""

# Import from Python
import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence
import numpy as np
from scipy.linalg import eigvalsh
from sklearn.linear_model import Lasso
from sklearn.exceptions import ConvergenceWarning

# Import from this package
from .errors import (SembanditError, SembanditWarning, SolverDidNotConverge, BudgetExceeded)
from .logger import log_func_call
from .graph import DagSkeleton
from .sem import Arm, EMPTY_ARM, Environment, SemInstance, exact_means
from .utils import utils

# Instantiate the module logger
logger = logging.getLogger(__name__)


class MeanTable:
    """ Running sums, counts and means of every node under the probe arms {} and {1}, ..., {N-1}.

    Args:
        n_nodes (int): the number of nodes N.

    Row 0 of the table belongs to the empty arm, row j to the arm {j}. The reward node N is never
    probed. The observational realizations are kept as well, since they are the Lasso design.

    """

    def __init__(self, n_nodes: int) -> None:
        self._n = int(n_nodes)
        self._sums = np.zeros((self._n, self._n))
        self._counts = np.zeros(self._n, dtype=int)
        self._obs = []

    @property
    def n_nodes(self) -> int:
        """ N. """
        return self._n

    @property
    def probe_arms(self) -> list:
        """ The probe arms, in play order. """
        return [EMPTY_ARM] + [Arm.of(j) for j in range(1, self._n)]

    @property
    def counts(self) -> np.ndarray:
        """ N_a(t) per probe arm (a copy). """
        return self._counts.copy()

    @property
    def n_obs(self) -> int:
        """ N_{}(t), the number of observational rounds. """
        return int(self._counts[0])

    @property
    def sums(self) -> np.ndarray:
        """ The running sums (a copy), one row per probe arm. """
        return self._sums.copy()

    @property
    def means(self) -> np.ndarray:
        """ The mean estimates, one row per probe arm (NaN for arms never played). """
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(self._counts[:, np.newaxis] > 0,
                            self._sums / self._counts[:, np.newaxis], np.nan)

    @property
    def observations(self) -> np.ndarray:
        """ All the observational realizations, as an (N_{}, N) array. """
        if len(self._obs) == 0:
            return np.zeros((0, self._n))
        return np.vstack(self._obs)

    def mean(self, i: int, arm: Arm) -> float:
        """ The estimate of mu_{i,a} for a probe arm. """
        return float(self.means[self._row(arm), i - 1])

    def _row(self, arm: Arm) -> int:
        if len(arm) == 0:
            return 0
        if len(arm) == 1 and arm.members[0] < self._n:
            return arm.members[0]
        raise SembanditError(f'{arm} is not a probe arm of this table.')

    def add(self, arm: Arm, xs: np.ndarray) -> None:
        """ Feed one realization (shape (N,)) or a batch (shape (n, N)) played under a probe arm.
        """

        xs = np.atleast_2d(xs)
        row = self._row(arm)
        self._sums[row] += xs.sum(axis=0)
        self._counts[row] += xs.shape[0]
        if row == 0:
            self._obs += [xs]

    @classmethod
    def from_means(cls, means: np.ndarray) -> 'MeanTable':
        """ A table holding the given means, one row per probe arm, each with a count of 1. """

        means = np.asarray(means, dtype=float)
        out = cls(means.shape[1])
        if means.shape != (out.n_nodes, out.n_nodes):
            raise SembanditError(f'Expected {out.n_nodes} rows of means, not {means.shape[0]}')
        out._sums = means.copy()
        out._counts[:] = 1
        return out

    @classmethod
    def from_instance(cls, instance: SemInstance) -> 'MeanTable':
        """ A table filled with the exact means of an instance. """

        out = cls(instance.n_nodes)
        return cls.from_means(np.vstack([exact_means(instance, arm) for arm in out.probe_arms]))


@dataclass
class LassoProblem:
    """ The l1-penalized regression of a node on its candidate ancestors.

    Args:
        design (ndarray): (n, k) observational rows restricted to the candidate ancestors.
        response (ndarray): (n,) responses, centred by the noise mean of the node.
        lam (float): the penalty lambda.
        columns (tuple of int, optional): the node labels of the design columns.
        tol (float, optional): solver tolerance.
        max_iter (int, optional): solver iteration cap.
        kkt_tol (float, optional): largest accepted KKT residual.

    The objective is (1/n) * ||response - design @ theta||^2 + lam * ||theta||_1.

    """

    design: np.ndarray
    response: np.ndarray
    lam: float
    columns: tuple = ()
    tol: float = 1e-8
    max_iter: int = 100000
    kkt_tol: float = 1e-6

    def __post_init__(self) -> None:
        self.design = np.atleast_2d(np.asarray(self.design, dtype=float))
        self.response = np.asarray(self.response, dtype=float).ravel()
        if self.design.shape[0] != self.response.shape[0]:
            raise SembanditError(f'Design has {self.design.shape[0]} rows but response has' +
                                 f' {self.response.shape[0]}')
        if self.design.shape[0] < 1:
            raise SembanditError('A Lasso problem needs at least one observation.')
        utils.check_positive('lam', self.lam, strict=False)
        if len(self.columns) == 0:
            self.columns = tuple(range(1, self.design.shape[1] + 1))

    @property
    def n_rows(self) -> int:
        """ The number of observations. """
        return self.design.shape[0]


def lasso_lambda(m: float, n_nodes: int, n_ancestors: int, delta: float, n_obs: int) -> float:
    """ lambda = m * sqrt(2 log(4 N |An(i)| / delta) / N_{}). """

    return float(m * np.sqrt(2 * np.log(4 * n_nodes * max(n_ancestors, 1) / delta) / n_obs))


def kkt_residual(problem: LassoProblem, coef: np.ndarray) -> float:
    """ The largest violation of the Lasso optimality conditions at ``coef``.

    Zero coordinates need |g_j| <= lam, non-zero ones g_j + lam * sign(theta_j) = 0, with g the
    gradient of the quadratic part of the objective.

    """

    if coef.size == 0:
        return 0.
    grad = -2 / problem.n_rows * problem.design.T @ (problem.response - problem.design @ coef)
    zero = coef == 0
    out = np.where(zero, np.maximum(np.abs(grad) - problem.lam, 0),
                   np.abs(grad + problem.lam * np.sign(coef)))
    return float(np.max(out))


@log_func_call(logger)
def lasso_fit(problem: LassoProblem) -> np.ndarray:
    """ Solve a Lasso problem by cyclic coordinate descent.

    Args:
        problem (LassoProblem): the problem.

    Returns:
        ndarray: the k coefficients, aligned with ``problem.columns``.

    Raises:
        SolverDidNotConverge: if the KKT residual is still above ``problem.kkt_tol`` once the
            iteration cap is spent.

    scikit-learn minimizes (1/2n) * ||y - X theta||^2 + alpha * ||theta||_1, which is our
    objective divided by two: alpha = lam / 2. A zero penalty falls back on least squares, and
    an all-zero response gives theta = 0 without calling the solver.

    """

    if problem.design.shape[1] == 0:
        return np.zeros(0)
    if not np.any(problem.response):
        return np.zeros(problem.design.shape[1])

    if problem.lam == 0:
        return np.linalg.lstsq(problem.design, problem.response, rcond=None)[0]

    model = Lasso(alpha=problem.lam / 2, fit_intercept=False, tol=problem.tol,
                  max_iter=problem.max_iter, selection='cyclic', warm_start=True)

    # Tighten the duality gap tolerance until the KKT conditions are met as well
    tol = problem.tol
    for _ in range(4):
        model.set_params(tol=tol)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always', ConvergenceWarning)
            model.fit(problem.design, problem.response)
        converged = not any(issubclass(item.category, ConvergenceWarning) for item in caught)
        coef = np.array(model.coef_, dtype=float).ravel()
        residual = kkt_residual(problem, coef)
        if residual <= problem.kkt_tol:
            return coef
        if not converged:
            break
        tol /= 100

    raise SolverDidNotConverge(problem.max_iter, residual)


@log_func_call(logger)
def exploration_constants(m: float, eta: float, n_nodes: int, d: int, delta: float,
                          c: float = 2.) -> tuple:
    """ The exploration lengths of structure learning.

    Args:
        m (float): the bound on the node values.
        eta (float): the intervention margin.
        n_nodes (int): N.
        d (int): the max in-degree.
        delta (float): the confidence level, in ]0, 1[.
        c (float, optional): the T2 constant, > 1. Defaults to 2.

    Returns:
        int, int: T1 = ceil(32 m^2 / eta^2 * log(2 N^2 / delta)), floored at 1, and
        T2 = ceil(c d log N).

    """

    utils.check_positive('m', m)
    utils.check_positive('eta', eta)
    if not 0 < delta < 1:
        raise SembanditError(f'delta must be in ]0, 1[, not: {delta}')
    if c <= 1:
        raise SembanditError(f'c must be > 1, not: {c}')

    t_1 = max(1, int(np.ceil(32 * m ** 2 / eta ** 2 * np.log(2 * n_nodes ** 2 / delta))))
    t_2 = int(np.ceil(c * d * np.log(n_nodes)))

    return t_1, t_2


def probe_round(env: Environment, table: MeanTable, n_sweeps: int = 1) -> MeanTable:
    """ Play sweeps of the probe arms: {} first, then {1}, ..., {N-1}.

    Args:
        env (Environment): the sampler.
        table (MeanTable): the table to feed.
        n_sweeps (int, optional): the number of sweeps, played arm by arm in batches.
            Defaults to 1.

    Returns:
        MeanTable: the same table, updated.

    """

    for arm in table.probe_arms:
        table.add(arm, env.pull(arm, n=n_sweeps))
    return table


def estimate_descendants(table: MeanTable, eta: float) -> dict:
    """ de_hat(i) = {j : |mu_{j,{}} - mu_{j,{i}}| > eta / 2}.

    Args:
        table (MeanTable): the mean estimates.
        eta (float): the intervention margin.

    Returns:
        dict: node -> frozenset of estimated descendants. The reward node is never probed and is
        taken as a sink: de_hat(N) = {N}.

    """

    if np.any(table.counts == 0):
        raise SembanditError('Every probe arm must be played before estimating descendants.')

    means = table.means
    n_nodes = table.n_nodes
    out = {}
    for i in range(1, n_nodes):
        shifted = np.abs(means[0] - means[i]) > eta / 2
        out[i] = frozenset(int(j) + 1 for j in np.flatnonzero(shifted))
    out[n_nodes] = frozenset([n_nodes])

    return out


def estimate_ancestors(de_hat: dict, n_nodes: int) -> dict:
    """ an_hat(i) = {j != i : de_hat(j) is empty, or i in de_hat(j)}. """

    return {i: frozenset(j for j in range(1, n_nodes + 1)
                         if j != i and (len(de_hat[j]) == 0 or i in de_hat[j]))
            for i in range(1, n_nodes + 1)}


def dag_consistent(de_hat: dict) -> bool:
    """ False iff two distinct nodes each appear in the other's descendant set. """

    for (i, des) in de_hat.items():
        for j in des:
            if j != i and i in de_hat.get(j, ()):
                return False
    return True


def order_from_ancestors(de_hat: dict, an_hat: dict) -> tuple:
    """ Build an order in which every non-root node comes after its estimated non-root ancestors.

    Nodes with an empty de_hat (the roots) come first, by ascending index. The others are
    inserted one at a time, always picking the smallest index whose non-root ancestors are
    already placed.

    """

    nodes = sorted(de_hat.keys())
    roots = [i for i in nodes if len(de_hat[i]) == 0]
    pending = {i: {j for j in an_hat[i] if len(de_hat[j]) > 0} for i in nodes if i not in roots}

    out = list(roots)
    placed = set(roots)
    while pending:
        ready = [i for i in sorted(pending) if pending[i] <= placed]
        if len(ready) == 0:
            # Longer cycles can survive the pairwise check: break them by index
            ready = [min(pending)]
            logger.warning('Ancestor estimates are cyclic: forcing node %d into the order.',
                           ready[0])
        out += [ready[0]]
        placed.add(ready[0])
        del pending[ready[0]]

    return tuple(out)


@dataclass
class SkeletonEstimate:
    """ The outcome of structure learning.

    Args:
        de_hat (dict): node -> estimated descendants.
        an_hat (dict): node -> estimated ancestors.
        pa_hat (dict): node -> estimated parents.
        order (tuple): the estimated topological order.
        kappa_report (dict, optional): node -> |pa_hat(i)| / |Pa(i)|, when the truth is known.
        diagnostics (dict, optional): resolved constants, penalties and recovery checks.

    """

    de_hat: dict
    an_hat: dict
    pa_hat: dict
    order: tuple
    kappa_report: Optional[dict] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (i, pa) in self.pa_hat.items():
            if not set(pa) <= set(self.an_hat[i]):
                raise SembanditError(f'pa_hat({i}) is not a subset of an_hat({i})')

    @property
    def n_nodes(self) -> int:
        """ N. """
        return len(self.order)

    @property
    def reward_node(self) -> int:
        """ N. """
        return self.n_nodes

    def parents(self, i: int) -> tuple:
        """ The estimated parents of a node, sorted. """
        return tuple(sorted(self.pa_hat[i]))

    @property
    def depths(self) -> dict:
        """ Node -> estimated causal depth, the longest chain of estimated parents that the
        order places upstream. """

        out = {}
        for i in self.order:
            out[i] = max((out[j] + 1 for j in self.pa_hat[i] if j in out), default=0)
        return out

    @property
    def max_in_degree(self) -> int:
        """ d_hat = max_i |pa_hat(i)|. """
        return max(len(pa) for pa in self.pa_hat.values())

    @property
    def depth(self) -> int:
        """ L_hat, the largest estimated depth. """
        return max(self.depths.values())

    @property
    def reward_ancestors(self) -> frozenset:
        """ an_hat(N). """
        return self.an_hat[self.reward_node]

    def order_is_valid(self, skeleton: DagSkeleton) -> bool:
        """ Whether the estimated order is a topological order of a (true) graph. """
        position = {node: ind for (ind, node) in enumerate(self.order)}
        return all(position[src] < position[dst] for (src, dst) in skeleton.edges)

    def parents_contained(self, skeleton: DagSkeleton) -> bool:
        """ Whether Pa(i) is a subset of pa_hat(i) for every node. """
        return all(set(skeleton.parents(i)) <= set(self.pa_hat[i]) for i in skeleton.nodes)

    @classmethod
    def from_skeleton(cls, skeleton: DagSkeleton) -> 'SkeletonEstimate':
        """ The estimate one would get with a perfect structure learner. """

        de_hat = {i: (skeleton.descendants(i) | {i}) if skeleton.parents(i) else frozenset()
                  for i in skeleton.nodes}
        de_hat[skeleton.reward_node] = frozenset([skeleton.reward_node])
        return cls(de_hat=de_hat,
                   an_hat={i: skeleton.ancestors(i) for i in skeleton.nodes},
                   pa_hat={i: frozenset(skeleton.parents(i)) for i in skeleton.nodes},
                   order=skeleton.order,
                   kappa_report={i: 1. for i in skeleton.nodes if skeleton.parents(i)},
                   diagnostics={'known_graph': True})


def kappa_diagnostics(observations: np.ndarray, m: float, d: int, delta: float,
                      t_2: int) -> dict:
    """ Empirical conditioning of the observational second moment E[X X^T].

    Returns:
        dict: kappa_min, kappa_max and the resulting constant
        9 * min(m^2, kappa_max + m^2 * sqrt(16 / (3 T2) * log(2 d N / delta))) / kappa_min.

    """

    n_nodes = observations.shape[1]
    moment = observations.T @ observations / max(observations.shape[0], 1)
    eigs = eigvalsh(moment)
    (k_min, k_max) = (float(eigs[0]), float(eigs[-1]))
    if t_2 > 0:
        slack = m ** 2 * np.sqrt(16 / (3 * t_2) * np.log(2 * max(d, 1) * n_nodes / delta))
    else:
        slack = np.inf
    kappa = 9 * min(m ** 2, k_max + slack) / k_min if k_min > 0 else np.inf

    return {'kappa_min': k_min, 'kappa_max': k_max, 'kappa': float(kappa)}


@log_func_call(logger)
def run_structure_learning(env: Environment, eta: float, m: float, d: int,
                           prms: Optional[dict] = None, t_1: Optional[int] = None,
                           t_2: Optional[int] = None,
                           truth: Optional[DagSkeleton] = None) -> tuple:
    """ Learn the ancestor and parent sets of every node by interventions and Lasso screening.

    Args:
        env (Environment): the sampler.
        eta (float): the intervention margin (or a lower bound of it).
        m (float): the bound on the node values.
        d (int): the max in-degree used for T2.
        prms (dict, optional): parameters overriding :py:data:`sembandit.dynamic.SEMBANDIT_PRMS`
            (DELTA, T2_CONST, MAX_ROUNDS, LAMBDA and LASSO_PRMS are used). Defaults to None.
        t_1 (int, optional): overrides T1. Defaults to None.
        t_2 (int, optional): overrides T2. Defaults to None.
        truth (DagSkeleton, optional): the true graph, for recovery diagnostics. Defaults to
            None.

    Returns:
        SkeletonEstimate, int: the estimate, and the number of rounds used.

    Raises:
        BudgetExceeded: if MAX_ROUNDS is hit before the descendant estimates are DAG-consistent.

    Probe sweeps are played until the descendant estimates are DAG-consistent and at least T1
    sweeps are done. Observational rounds are then added until there are max(T1, T2) of them.

    """

    prms = utils.setup_prms(prms)
    delta = prms['DELTA']
    n_nodes = env.instance.n_nodes

    (auto_t1, auto_t2) = exploration_constants(m, eta, n_nodes, d, delta, c=prms['T2_CONST'])
    t_1 = auto_t1 if t_1 is None else int(t_1)
    t_2 = auto_t2 if t_2 is None else int(t_2)
    if t_1 < 1:
        raise SembanditError(f'T1 must be >= 1, not: {t_1}')
    if t_1 > t_2:
        msg = f'T1={t_1} exceeds T2={t_2}: no observational top-up will take place.'
        warnings.warn(msg, SembanditWarning)
        logger.warning(msg)

    cap = prms['MAX_ROUNDS']
    table = MeanTable(n_nodes)

    # The first T1 sweeps are compulsory, and can be played in one go
    n_first = t_1 if cap is None else min(t_1, cap // n_nodes)
    if n_first > 0:
        probe_round(env, table, n_sweeps=n_first)
    sweeps = n_first
    if sweeps < t_1:
        raise BudgetExceeded(sweeps * n_nodes, cap)

    de_hat = estimate_descendants(table, eta)
    while not dag_consistent(de_hat):
        if cap is not None and (sweeps + 1) * n_nodes > cap:
            raise BudgetExceeded(sweeps * n_nodes, cap)
        probe_round(env, table)
        sweeps += 1
        de_hat = estimate_descendants(table, eta)
    logger.info('Descendant estimates DAG-consistent after %d sweeps.', sweeps)

    n_top_up = max(0, max(t_1, t_2) - table.n_obs)
    if n_top_up > 0:
        table.add(EMPTY_ARM, env.pull(EMPTY_ARM, n=n_top_up))
    rounds_used = sweeps * n_nodes + n_top_up

    an_hat = estimate_ancestors(de_hat, n_nodes)
    order = order_from_ancestors(de_hat, an_hat)

    # Parent screening, one Lasso per node
    obs = table.observations
    lasso_prms = prms['LASSO_PRMS']
    pa_hat = {}
    lambdas = {}
    coefs = np.zeros((n_nodes, n_nodes))
    for i in range(1, n_nodes + 1):
        columns = tuple(sorted(an_hat[i]))
        if len(columns) == 0:
            pa_hat[i] = frozenset()
            continue
        if utils.is_auto(prms['LAMBDA']):
            lam = lasso_lambda(m, n_nodes, len(columns), delta, table.n_obs)
        else:
            lam = float(prms['LAMBDA'])
        problem = LassoProblem(obs[:, np.array(columns) - 1],
                               obs[:, i - 1] - env.instance.nu[i - 1], lam, columns=columns,
                               tol=lasso_prms['tol'], max_iter=lasso_prms['max_iter'],
                               kkt_tol=lasso_prms['kkt_tol'])
        coef = lasso_fit(problem)
        coefs[np.array(columns) - 1, i - 1] = coef
        pa_hat[i] = frozenset(col for (col, val) in zip(columns, coef)
                              if abs(val) > lasso_prms['support_tol'])
        lambdas[i] = lam

    diagnostics = {'t1': t_1, 't2': t_2, 'eta': float(eta), 'm': float(m), 'sweeps': sweeps,
                   'n_obs': table.n_obs, 'rounds_used': rounds_used, 'lambdas': lambdas,
                   'lasso_coef': coefs, 'mean_table': table}
    diagnostics.update(kappa_diagnostics(obs, m, d, delta, t_2))

    kappa_report = None
    if truth is not None:
        kappa_report = {i: len(pa_hat[i]) / len(truth.parents(i))
                        for i in truth.nodes if truth.parents(i)}

    out = SkeletonEstimate(de_hat=de_hat, an_hat=an_hat, pa_hat=pa_hat, order=order,
                           kappa_report=kappa_report, diagnostics=diagnostics)

    if truth is not None:
        out.diagnostics['order_valid'] = out.order_is_valid(truth)
        out.diagnostics['parents_contained'] = out.parents_contained(truth)
        logger.info('Structure recovery: order valid: %s, parents contained: %s',
                    out.diagnostics['order_valid'], out.diagnostics['parents_contained'])

    return out, rounds_used


def recovery_summary(diagnostics: Sequence[dict]) -> dict:
    """ The empirical frequencies of a valid order and of parent containment over replications.

    Args:
        diagnostics (list of dict): the diagnostics of each run, e.g.
            ``[est.diagnostics for est in estimates]``.

    """

    valid = [item.get('order_valid') for item in diagnostics]
    contained = [item.get('parents_contained') for item in diagnostics]
    if any(item is None for item in valid + contained):
        raise SembanditError('Recovery diagnostics require runs with a known truth.')

    return {'order_valid_rate': float(np.mean(valid)),
            'parents_contained_rate': float(np.mean(contained))}
