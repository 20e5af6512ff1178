"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: per-node ridge regressions, recursive confidence widths and phased elimination
"""

# Import from Python
import logging
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence
import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigvalsh, LinAlgError

# Import from this package
from .errors import SembanditError
from .logger import log_func_call
from .sem import (Arm, Environment, arm_masks, arm_means, best_arm_brute_force,
                  enumerate_arms, value_bound)
from .learner import SkeletonEstimate
from .data import RegretTrace
from .utils import utils
from . import hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)

#: int: index of the observational side of a regressor
OBS = 0
#: int: index of the interventional side of a regressor
INT = 1


class NodeRegressor:
    """ The two ridge regressions of one node on its estimated parents: one fed by the rounds
    where the node is left alone, one by the rounds where it is intervened on.

    Args:
        node (int): the node i.
        parents (sequence of int): its estimated parents.
        n_nodes (int): N.

    Internally, each side only stores the k x k block of the parents (k = |pa_hat(i)|). The
    N x N zero-padded views (identity off the parents block) are available as properties.

    """

    def __init__(self, node: int, parents: Sequence[int], n_nodes: int) -> None:
        self._node = int(node)
        self._parents = tuple(sorted(int(j) for j in parents))
        self._idx = np.array(self._parents, dtype=int) - 1
        self._n = int(n_nodes)
        k = len(self._parents)

        self._gram = [np.eye(k), np.eye(k)]
        self._cross = [np.zeros(k), np.zeros(k)]
        self._counts = [0, 0]
        self._fixed = None
        self._cache = [None, None]

    @property
    def node(self) -> int:
        """ The node i. """
        return self._node

    @property
    def parents(self) -> tuple:
        """ The estimated parents of the node. """
        return self._parents

    @property
    def parent_index(self) -> np.ndarray:
        """ The 0-based matrix indices of the parents. """
        return self._idx

    @property
    def n_obs(self) -> int:
        """ N_i(t). """
        return self._counts[OBS]

    @property
    def n_int(self) -> int:
        """ N*_i(t). """
        return self._counts[INT]

    def _pad(self, block: np.ndarray) -> np.ndarray:
        out = np.eye(self._n)
        out[np.ix_(self._idx, self._idx)] = block
        return out

    def _pad_vec(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self._n)
        out[self._idx] = vec
        return out

    @property
    def gram_obs(self) -> np.ndarray:
        """ V_i(t), zero-padded to N x N with an identity off the parents block. """
        return self._pad(self._gram[OBS])

    @property
    def gram_int(self) -> np.ndarray:
        """ V*_i(t), zero-padded to N x N with an identity off the parents block. """
        return self._pad(self._gram[INT])

    @property
    def cross_obs(self) -> np.ndarray:
        """ The observational cross accumulator, zero-padded to length N. """
        return self._pad_vec(self._cross[OBS])

    @property
    def cross_int(self) -> np.ndarray:
        """ The interventional cross accumulator, zero-padded to length N. """
        return self._pad_vec(self._cross[INT])

    @property
    def coef_obs(self) -> np.ndarray:
        """ [B_hat(t)]_i, zero-padded to length N. """
        return self._pad_vec(self.block_coef(OBS))

    @property
    def coef_int(self) -> np.ndarray:
        """ [B*_hat(t)]_i, zero-padded to length N. """
        return self._pad_vec(self.block_coef(INT))

    def _factor(self, side: int) -> dict:
        """ Cholesky factor, coefficients and effective smallest eigenvalue of one side. """

        if self._cache[side] is None:
            gram = self._gram[side]
            try:
                chol = cho_factor(gram, lower=True)
            except LinAlgError as err:
                raise SembanditError(f'Gram matrix of node {self._node} is not positive' +
                                     ' definite.') from err
            if self._fixed is not None:
                coef = self._fixed[side]
            else:
                coef = cho_solve(chol, self._cross[side])
            self._cache[side] = {'chol': chol, 'coef': coef,
                                 'lam_min': max(1., float(eigvalsh(gram)[0]))}
        return self._cache[side]

    def block_coef(self, side: int) -> np.ndarray:
        """ The coefficients of one side, on the parents only. """
        if len(self._parents) == 0:
            return np.zeros(0)
        return self._factor(side)['coef']

    def lambda_min(self, side: int) -> float:
        """ The effective smallest eigenvalue of the gram matrix of one side (inf if the node
        has no parents). """
        if len(self._parents) == 0:
            return np.inf
        return self._factor(side)['lam_min']

    def inv_norms(self, side: int, vecs: np.ndarray) -> np.ndarray:
        """ ||v||_{V^-1} for every row v of a (n, k) array of parent vectors. """
        if len(self._parents) == 0:
            return np.zeros(vecs.shape[0])
        solved = cho_solve(self._factor(side)['chol'], vecs.T)
        return np.sqrt(np.maximum(np.sum(vecs.T * solved, axis=0), 0))

    def update(self, intervened: bool, x_pa: np.ndarray, x_i: float, nu_i: float) -> None:
        """ Add one sample to one side. ``x_pa`` is the snapshot of the parents only. """

        side = INT if intervened else OBS
        self._counts[side] += 1
        if len(self._parents) == 0:
            return
        self._gram[side] += np.outer(x_pa, x_pa)
        self._cross[side] += x_pa * (x_i - nu_i)
        self._cache[side] = None

    def freeze(self, coef_obs: np.ndarray, coef_int: np.ndarray) -> None:
        """ Pin the coefficients of both sides (zero-padded length-N vectors) to given values.
        Later updates still feed the gram matrices. """

        self._fixed = (np.asarray(coef_obs, dtype=float)[self._idx],
                       np.asarray(coef_int, dtype=float)[self._idx])
        self._cache = [None, None]


def regressor_update(reg: NodeRegressor, intervened: bool, x_pa: np.ndarray, x_i: float,
                     nu_i: float) -> NodeRegressor:
    """ Feed one sample to a node regressor.

    Args:
        reg (NodeRegressor): the regressor.
        intervened (bool): whether the node was intervened on, i.e. which side gets the sample.
        x_pa (ndarray): the length-N parent snapshot, zero outside the parents.
        x_i (float): the realized value of the node.
        nu_i (float): the noise mean of the node.

    Returns:
        NodeRegressor: the same regressor, updated.

    """

    x_pa = np.asarray(x_pa, dtype=float)
    mask = np.ones(x_pa.shape[0], dtype=bool)
    mask[reg.parent_index] = False
    if np.any(x_pa[mask] != 0):
        raise SembanditError(f'Parent snapshot of node {reg.node} is non-zero outside its' +
                             ' parents.')
    reg.update(intervened, x_pa[reg.parent_index], x_i, nu_i)
    return reg


def make_regressors(estimate: SkeletonEstimate,
                    nodes: Optional[Sequence[int]] = None) -> dict:
    """ One fresh regressor per node (all nodes by default), keyed by node. """

    if nodes is None:
        nodes = estimate.order
    return {i: NodeRegressor(i, estimate.parents(i), estimate.n_nodes) for i in nodes}


def active_nodes(estimate: SkeletonEstimate) -> tuple:
    """ The nodes that feed the estimated mean of the reward node: N and its estimated parents,
    recursively. Returned in the estimated order. """

    keep = {estimate.reward_node}
    stack = [estimate.reward_node]
    while stack:
        for j in estimate.parents(stack.pop()):
            if j not in keep:
                keep.add(j)
                stack.append(j)
    return tuple(i for i in estimate.order if i in keep)


def estimate_means(regressors: Mapping, estimate: SkeletonEstimate, masks: np.ndarray,
                   nu: np.ndarray) -> np.ndarray:
    """ The estimated means of the regressed nodes under many arms at once.

    Args:
        regressors (dict): node -> NodeRegressor.
        estimate (SkeletonEstimate): the estimated structure.
        masks (ndarray): (n_arms, N) boolean arm indicators.
        nu (ndarray): the noise means.

    Returns:
        ndarray: (n_arms, N) means. Nodes without a regressor keep their noise mean.

    """

    out = np.tile(np.asarray(nu, dtype=float), (masks.shape[0], 1))
    for i in estimate.order:
        if i not in regressors:
            continue
        reg = regressors[i]
        if len(reg.parents) == 0:
            continue
        idx = reg.parent_index
        coefs = np.where(masks[:, [i - 1]], reg.block_coef(INT), reg.block_coef(OBS))
        out[:, i - 1] += np.sum(coefs * out[:, idx], axis=1)
    return out


def estimate_arm_mean(regressors: Mapping, estimate: SkeletonEstimate, arm: Arm,
                      nu: np.ndarray) -> np.ndarray:
    """ The estimated means mu_hat_{i,a}(t) of every node under one arm.

    Args:
        regressors (dict): node -> NodeRegressor.
        estimate (SkeletonEstimate): the estimated structure.
        arm (Arm): the arm.
        nu (ndarray): the noise means.

    Returns:
        ndarray: the length-N vector of estimated means.

    """

    masks = arm.indicator(len(nu))[np.newaxis, :]
    return estimate_means(regressors, estimate, masks, nu)[0]


@dataclass
class WidthTable:
    """ Estimated means and widths of the candidate arms at the current round, together with the
    per-depth parent norm scales m_{Pa,l}.

    Args:
        init_scale (float): the scale used at a depth before any parent snapshot was observed.

    """

    init_scale: float
    scales: dict = field(default_factory=dict)
    arms: list = field(default_factory=list)
    means: Optional[np.ndarray] = None
    widths: Optional[np.ndarray] = None

    def scale(self, depth: int) -> float:
        """ m_{Pa,l}: 0 at depth 0, else the running max of the observed parent norms. """
        if depth == 0:
            return 0.
        return self.scales.get(depth, self.init_scale)

    def observe(self, depth: int, norm: float) -> None:
        """ Feed the norm of a parent snapshot of a node at a given depth. """
        if depth == 0:
            return
        self.scales[depth] = max(self.scales.get(depth, 0.), float(norm))

    @property
    def ucbs(self) -> np.ndarray:
        """ mu_hat_N + w_N for every arm of the table. """
        return self.means[:, -1] + self.widths[:, -1]


def estimate_widths(regressors: Mapping, table: WidthTable, estimate: SkeletonEstimate,
                    masks: np.ndarray, means: np.ndarray, alpha: float,
                    inflate: float = 1.) -> np.ndarray:
    """ The recursive confidence widths of the regressed nodes under many arms at once.

    Args:
        regressors (dict): node -> NodeRegressor.
        table (WidthTable): holds the per-depth scales.
        estimate (SkeletonEstimate): the estimated structure.
        masks (ndarray): (n_arms, N) boolean arm indicators.
        means (ndarray): (n_arms, N) estimated means, from :py:func:`estimate_means`.
        alpha (float): the confidence multiplier.
        inflate (float, optional): multiplies the eigenvalue term. Defaults to 1.

    Returns:
        ndarray: (n_arms, N) widths, with w_i = sum_{j in pa(i)} w_j
        + alpha * (||mu_hat_pa(i)||_{V^-1} + m_{Pa,L_i} * lambda_min^-1/2).

    """

    depths = estimate.depths
    out = np.zeros(masks.shape, dtype=float)
    for i in estimate.order:
        if i not in regressors or len(regressors[i].parents) == 0:
            continue
        reg = regressors[i]
        idx = reg.parent_index
        side = masks[:, i - 1]
        parent_means = means[:, idx]
        norms = np.where(side, reg.inv_norms(INT, parent_means), reg.inv_norms(OBS, parent_means))
        lam = np.where(side, reg.lambda_min(INT), reg.lambda_min(OBS))
        bonus = norms + inflate * table.scale(depths[i]) / np.sqrt(lam)
        out[:, i - 1] = out[:, idx].sum(axis=1) + alpha * bonus
    return out


def width(regressors: Mapping, table: WidthTable, estimate: SkeletonEstimate, arm: Arm,
          alpha: float, nu: np.ndarray, inflate: float = 1.) -> np.ndarray:
    """ The widths w_{i,a}(t) of every node under one arm, as a length-N vector. ``inflate``
    multiplies the eigenvalue term, as in :py:func:`estimate_widths`. """

    masks = arm.indicator(estimate.n_nodes)[np.newaxis, :]
    means = estimate_means(regressors, estimate, masks, nu)
    return estimate_widths(regressors, table, estimate, masks, means, alpha, inflate=inflate)[0]


@log_func_call(logger)
def alpha_default(n_nodes: int, horizon: int, delta: float, d_hat: int) -> float:
    """ alpha = sqrt(log(N T / delta) / 2) + sqrt(d_hat).

    Args:
        n_nodes (int): N.
        horizon (int): T.
        delta (float): the confidence level.
        d_hat (int): the estimated max in-degree.

    Returns:
        float: alpha.

    """

    for (name, val) in [('N', n_nodes), ('T', horizon), ('delta', delta)]:
        utils.check_positive(name, val)
    utils.check_positive('d_hat', d_hat, strict=False)

    return float(np.sqrt(0.5 * np.log(n_nodes * horizon / delta)) + np.sqrt(d_hat))


@dataclass(frozen=True)
class EliminationEvent:
    """ One elimination: the stage it closed, the arms it removed and the UCB threshold. """

    stage: int
    removed: tuple
    threshold: float


@dataclass(frozen=True)
class CandidateSet:
    """ The candidate arms of a stage, in canonical order, with the elimination history. """

    arms: tuple
    stage: int = 1
    history: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, 'arms', tuple(sorted(set(self.arms))))
        if len(self.arms) == 0:
            raise SembanditError('The candidate set cannot be empty.')

    def __len__(self) -> int:
        return len(self.arms)

    def __contains__(self, arm: Arm) -> bool:
        return arm in self.arms


def stage_cap(horizon: int) -> int:
    """ S = ceil(log2(sqrt(T))), at least 1. """
    return max(1, int(np.ceil(np.log2(np.sqrt(horizon)))))


def eliminate(candidates: CandidateSet, ucbs: np.ndarray, m: float) -> CandidateSet:
    """ Keep the arms whose UCB is within m * 2^(1-s) of the best one, and move to stage s+1.

    Args:
        candidates (CandidateSet): the stage-s candidates.
        ucbs (ndarray): the UCBs, aligned with ``candidates.arms``.
        m (float): the bound on the node values.

    Returns:
        CandidateSet: the stage-(s+1) candidates.

    """

    ucbs = np.asarray(ucbs, dtype=float)
    stage = candidates.stage
    threshold = float(np.max(ucbs) - m * 2. ** (1 - stage))
    keep = ucbs >= threshold
    removed = tuple(arm for (arm, flag) in zip(candidates.arms, keep) if not flag)
    if removed:
        logger.info('Stage %d: %d arms eliminated (UCB threshold %.6g).', stage, len(removed),
                    threshold)

    return CandidateSet(arms=tuple(arm for (arm, flag) in zip(candidates.arms, keep) if flag),
                        stage=stage + 1,
                        history=candidates.history + (EliminationEvent(stage, removed, threshold),))


def select_arm(candidates: CandidateSet, widths: np.ndarray, ucbs: np.ndarray, m: float,
               horizon: int) -> tuple:
    """ Decide what to play next.

    Args:
        candidates (CandidateSet): the current candidates.
        widths (ndarray): the reward node widths, aligned with ``candidates.arms``.
        ucbs (ndarray): the UCBs, aligned with ``candidates.arms``.
        m (float): the bound on the node values.
        horizon (int): T.

    Returns:
        Arm, str, CandidateSet: the arm, the mode, and the (possibly shrunk) candidates.

    The mode is 'exploit' once every width is below m / sqrt(T) (or the stage cap is reached):
    the arm with the largest UCB is then meant to be played until the end. Otherwise, stages are
    closed for as long as every width is below m * 2^-s, after which the first arm whose width is
    above m * 2^-s is explored. The mode is 'eliminate' if at least one stage was closed on the
    way, and 'explore' if not.

    """

    widths = np.asarray(widths, dtype=float)
    ucbs = np.asarray(ucbs, dtype=float)
    cap = stage_cap(horizon)
    closed = False

    while True:
        if np.all(widths <= m / np.sqrt(horizon)):
            break
        above = widths > m * 2. ** (-candidates.stage)
        if np.any(above):
            return candidates.arms[int(np.argmax(above))], \
                'eliminate' if closed else 'explore', candidates
        if candidates.stage >= cap:
            break
        kept = ucbs >= np.max(ucbs) - m * 2. ** (1 - candidates.stage)
        candidates = eliminate(candidates, ucbs, m)
        (widths, ucbs) = (widths[kept], ucbs[kept])
        closed = True

    # Ties go to the first arm in canonical order
    return candidates.arms[int(np.argmax(ucbs))], 'exploit', candidates


@log_func_call(logger)
def run_intervention_design(env: Environment, estimate: SkeletonEstimate, horizon: int,
                            alpha: Optional[float] = None, m: Optional[float] = None,
                            universe: Optional[Sequence[Arm]] = None,
                            mode: str = 'unknown-graph', prms: Optional[dict] = None,
                            regressors: Optional[dict] = None,
                            checkpoints: Optional[Sequence[int]] = None) -> RegretTrace:
    """ Play the bandit for T rounds on top of an estimated (or known) structure.

    Args:
        env (Environment): the sampler.
        estimate (SkeletonEstimate): the structure to regress on.
        horizon (int): T.
        alpha (float, optional): the confidence multiplier. Defaults to None, i.e.
            :py:func:`alpha_default`.
        m (float, optional): the bound on the node values. Defaults to None, i.e.
            :py:func:`sembandit.sem.value_bound` of the instance.
        universe (sequence of Arm, optional): the arms to choose from. Defaults to None, i.e.
            2^[N], or the subsets of an_hat(N) in the 'graph-dependent' mode.
        mode (str, optional): one of :py:data:`sembandit.hardcoded.MODES`. Picks the default
            universe and the regressed nodes. Defaults to 'unknown-graph'.
        prms (dict, optional): parameters overriding the defaults (DELTA, ARM_GUARD and
            WIDTH_PRMS are used). Defaults to None.
        regressors (dict, optional): node -> NodeRegressor to start from. Defaults to None.
        checkpoints (sequence of int, optional): rounds at which the estimated means, widths
            and exact means of every candidate are recorded in the trace metadata.
            Defaults to None.

    Returns:
        RegretTrace: one row per round.

    The instantaneous regret is measured against the best arm of 2^[N] when N is within the
    enumeration guard, and against the best arm of the universe otherwise.

    """

    prms = utils.setup_prms(prms)
    if mode not in hardcoded.MODES:
        raise SembanditError(f'Unknown mode: {mode}')
    utils.check_positive('horizon', horizon)
    instance = env.instance
    n_nodes = instance.n_nodes
    guard = prms['ARM_GUARD']

    if m is None:
        m = value_bound(instance)
    if alpha is None:
        alpha = alpha_default(n_nodes, horizon, prms['DELTA'], estimate.max_in_degree)
    inflate = np.sqrt(2) if prms['WIDTH_PRMS']['proof_faithful'] else 1.

    if universe is None:
        if mode == 'graph-dependent':
            universe = enumerate_arms(estimate.reward_ancestors, guard=guard)
        else:
            universe = enumerate_arms(n_nodes, guard=guard)
    candidates = CandidateSet(tuple(universe))

    # Exact regret reference
    if n_nodes <= guard:
        (_, mu_star) = best_arm_brute_force(instance, guard=guard)
    else:
        (_, mu_star) = best_arm_brute_force(instance, candidates=candidates.arms)
    exact = dict(zip(candidates.arms,
                     arm_means(instance.b_obs, instance.b_int, instance.nu,
                               instance.skeleton.order,
                               arm_masks(candidates.arms, n_nodes))[:, -1]))

    nodes = active_nodes(estimate) if mode == 'graph-dependent' else estimate.order
    if regressors is None:
        regressors = make_regressors(estimate, nodes=nodes)
    depths = estimate.depths
    table = WidthTable(init_scale=np.sqrt(estimate.max_in_degree) * m)
    nu = instance.nu
    checkpoints = set(checkpoints or [])
    coverage = []

    cols = {key: np.zeros(horizon, dtype=dtype if dtype in [int, float] else object)
            for (key, dtype) in hardcoded.TRACE_COLS.items()}
    locked = None
    lam_min_floor = np.inf
    start = time.perf_counter()

    for t in range(1, horizon + 1):
        if locked is None:
            masks = arm_masks(candidates.arms, n_nodes)
            means = estimate_means(regressors, estimate, masks, nu)
            widths = estimate_widths(regressors, table, estimate, masks, means, alpha,
                                     inflate=inflate)
            ucbs = means[:, -1] + widths[:, -1]
            if t in checkpoints:
                coverage += [{'round': t, 'arm': arm, 'mu_hat': float(means[ind, -1]),
                              'width': float(widths[ind, -1]), 'mu': float(exact[arm])}
                             for (ind, arm) in enumerate(candidates.arms)]
            (arm, action, candidates) = select_arm(candidates, widths[:, -1], ucbs, m, horizon)
            if action == 'exploit':
                locked = arm
                logger.info('Round %d: exploiting %s from now on (%d candidates left).', t, arm,
                            len(candidates))
        else:
            (arm, action) = (locked, 'exploit')

        x = env.pull(arm)
        for i in nodes:
            reg = regressors[i]
            x_pa = x[reg.parent_index]
            reg.update(i in arm, x_pa, x[i - 1], nu[i - 1])
            if len(reg.parents) > 0:
                table.observe(depths[i], np.linalg.norm(x_pa))
                lam_min_floor = min(lam_min_floor, reg.lambda_min(INT if i in arm else OBS))

        cols['round'][t - 1] = t
        cols['arm_bitmask'][t - 1] = arm.mask
        cols['reward'][t - 1] = x[-1]
        cols['inst_regret'][t - 1] = mu_star - exact[arm]
        cols['stage'][t - 1] = candidates.stage
        cols['mode'][t - 1] = action
        cols['candidate_count'][t - 1] = len(candidates)

    cols['cum_regret'] = np.cumsum(cols['inst_regret'])

    meta = {'mode': mode, 'horizon': int(horizon), 'alpha': float(alpha), 'm': float(m),
            'mu_star': float(mu_star), 'final_candidates': candidates,
            'locked_arm': locked, 'stage_cap': stage_cap(horizon),
            'lambda_min_floor': float(lam_min_floor), 'coverage': coverage,
            'wall_time': time.perf_counter() - start}

    return RegretTrace.from_columns(cols, meta=meta)
