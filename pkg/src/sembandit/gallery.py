"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: generators of experimental and theoretical instances
"""

# Import from Python
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union
import numpy as np

# Import from this package
from .errors import SembanditError
from .logger import log_func_call
from .graph import DagSkeleton
from .noise import NoiseSpec
from .sem import (Arm, EMPTY_ARM, SemInstance, best_arm_brute_force, exact_means,
                  intervention_margin, write_bundle)
from .utils import utils

# Instantiate the module logger
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HierarchicalSpec:
    """ L fully-connected layers of d nodes, the last of which feeds a single reward node.

    Args:
        d (int): nodes per layer.
        n_layers (int): the number of layers L.
        w_obs (float, optional): the observational weight of every edge. Defaults to 1.
        w_int (float, optional): the interventional weight of every edge. Defaults to 0.5.
        noise (NoiseSpec, optional): the noise of every node. Defaults to Uniform(0, 1).

    """

    d: int
    n_layers: int
    w_obs: float = 1.
    w_int: float = 0.5
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec.uniform(0, 1))

    def __post_init__(self) -> None:
        if self.d < 1 or self.n_layers < 1:
            raise SembanditError(f'Need d >= 1 and L >= 1, not: d={self.d}, L={self.n_layers}')

    @property
    def n_nodes(self) -> int:
        """ N = d L + 1. """
        return self.d * self.n_layers + 1

    def layer(self, ell: int) -> list:
        """ The nodes of layer ell (1-indexed); layer L+1 is the reward node alone. """
        if ell == self.n_layers + 1:
            return [self.n_nodes]
        return list(range((ell - 1) * self.d + 1, ell * self.d + 1))


def hierarchical_skeleton(d: int, n_layers: int) -> DagSkeleton:
    """ The graph of a hierarchical instance: adjacent layers fully connected. """

    spec = HierarchicalSpec(d, n_layers)
    edges = [(src, dst) for ell in range(1, n_layers + 1)
             for src in spec.layer(ell) for dst in spec.layer(ell + 1)]
    return DagSkeleton(spec.n_nodes, edges)


@log_func_call(logger)
def hierarchical(spec: HierarchicalSpec) -> SemInstance:
    """ Build a hierarchical instance.

    Args:
        spec (HierarchicalSpec): the recipe.

    Returns:
        SemInstance: N = d L + 1 nodes, every node of layer l+1 having all of layer l as parents,
        every edge weighted w_obs (observational) and w_int (interventional).

    """

    skeleton = hierarchical_skeleton(spec.d, spec.n_layers)
    adjacency = skeleton.adjacency
    b_obs = np.where(adjacency, spec.w_obs, 0.)
    b_int = np.where(adjacency, spec.w_int, 0.)

    return SemInstance(skeleton, b_obs, b_int, [spec.noise] * spec.n_nodes)


@dataclass
class LowerBoundPair:
    """ Two hierarchical instances that only differ on the weights of the second layer, which no
    policy can tell apart within T rounds.

    Args:
        d (int): nodes per layer.
        n_layers (int): the number of layers L.
        horizon (int): T.
        m_b (float): the weight bound.
        delta_gap (float): the weight perturbation.
        instances (tuple): the two instances (I, I_bar).
        kl_value (float): the KL divergence between the T-round observation laws.
        metadata (dict): best arms, suboptimality impact and regret floor.

    """

    d: int
    n_layers: int
    horizon: int
    m_b: float
    delta_gap: float
    instances: tuple
    kl_value: float
    metadata: dict = field(default_factory=dict)

    def write(self, pth: Union[str, Path]) -> None:
        """ Write both instances and the metadata to a single YAML file. """

        content = {'metadata': self.metadata,
                   'instance_I': self.instances[0].to_dict(),
                   'instance_I_bar': self.instances[1].to_dict()}
        write_bundle(content, pth)


@log_func_call(logger)
def lower_bound_pair(d: int, n_layers: int, horizon: int, m_b: float = 1.,
                     truncated: bool = False) -> LowerBoundPair:
    """ Build the two-instance family behind the minimax regret lower bound.

    Args:
        d (int): nodes per layer, >= 1.
        n_layers (int): the number of layers L, >= 2.
        horizon (int): T, >= 1.
        m_b (float, optional): the weight bound. Defaults to 1.
        truncated (bool, optional): if True, truncate every Gaussian noise at 6 sd, such that
            the instances can be fed to the bandit algorithms. Defaults to False, i.e. exact
            Gaussian noise, for the closed forms.

    Returns:
        LowerBoundPair: the pair.

    Every edge carries (m_b, m_b - delta) as (observational, interventional) weights, except
    that the columns of the second layer (nodes d+1..2d) are swapped in I_bar. The first layer has
    mean-1 Gaussian noise, all the other nodes standard Gaussian noise. With
    delta = 1 / sqrt(d^2 (1 + d) T), the KL divergence is T d^2 (1 + d) delta^2 = 1.

    """

    if d < 1 or n_layers < 2 or horizon < 1:
        raise SembanditError(f'Need d >= 1, L >= 2 and T >= 1, not: d={d}, L={n_layers},' +
                             f' T={horizon}')
    utils.check_positive('m_b', m_b)

    delta_gap = 1 / np.sqrt(d ** 2 * (1 + d) * horizon)
    if not delta_gap < m_b:
        raise SembanditError(f'The perturbation {delta_gap} must be smaller than m_b={m_b}:' +
                             ' increase T.')
    kl_value = horizon * d ** 2 * (1 + d) * delta_gap ** 2

    spec = HierarchicalSpec(d, n_layers)
    skeleton = hierarchical_skeleton(d, n_layers)
    adjacency = skeleton.adjacency

    def gaussian(mean: float) -> NoiseSpec:
        if truncated:
            return NoiseSpec.truncated_gaussian(mean, 1., 6.)
        return NoiseSpec.gaussian(mean, 1.)

    noise = [gaussian(1.) if i in spec.layer(1) else gaussian(0.) for i in skeleton.nodes]

    b_hi = np.where(adjacency, m_b, 0.)
    b_lo = np.where(adjacency, m_b - delta_gap, 0.)
    second = np.array(spec.layer(2)) - 1
    b_obs_bar = b_hi.copy()
    b_int_bar = b_lo.copy()
    b_obs_bar[:, second] = b_lo[:, second]
    b_int_bar[:, second] = b_hi[:, second]

    inst = SemInstance(skeleton, b_hi, b_lo, noise, m_b=m_b)
    inst_bar = SemInstance(skeleton, b_obs_bar, b_int_bar, noise, m_b=m_b)

    (best, mu_best) = best_arm_brute_force(inst)
    (best_bar, mu_best_bar) = best_arm_brute_force(inst_bar)
    if best != EMPTY_ARM or best_bar != Arm(spec.layer(2)):
        raise SembanditError(f'Unexpected best arms {best} and {best_bar}.')

    # Reward mean lost per intervened node of the second layer, in I
    base = exact_means(inst, EMPTY_ARM)[-1]
    impact = {i: float(base - exact_means(inst, Arm.of(i))[-1]) for i in spec.layer(2)}
    floor = horizon / 4 * delta_gap * m_b ** (n_layers - 1) * d ** (n_layers - 1) * d * \
        np.exp(-kl_value)

    metadata = {'d': d, 'L': n_layers, 'T': horizon, 'm_b': float(m_b),
                'delta': float(delta_gap), 'kl': float(kl_value),
                'best_arm_I': list(best.members), 'best_mean_I': mu_best,
                'best_arm_I_bar': list(best_bar.members), 'best_mean_I_bar': mu_best_bar,
                'impact': impact, 'regret_floor': float(floor),
                'noise': 'truncated-gaussian' if truncated else 'gaussian'}

    return LowerBoundPair(d=d, n_layers=n_layers, horizon=horizon, m_b=float(m_b),
                          delta_gap=float(delta_gap), instances=(inst, inst_bar),
                          kl_value=float(kl_value), metadata=metadata)


@log_func_call(logger)
def random_dag(n_nodes: int, d: int, seed: utils.SeedLike = None,
               obs_range: tuple = (0.5, 1.), int_range: tuple = (0., 0.5),
               min_gap: float = 0.1, noise: Optional[NoiseSpec] = None,
               max_tries: int = 100) -> SemInstance:
    """ Draw a random instance.

    Args:
        n_nodes (int): N >= 1.
        d (int): the largest number of parents per node, >= 0.
        seed (int|SeedSequence|Generator, optional): the seed. Defaults to None.
        obs_range (tuple, optional): range of the observational weights. Defaults to (0.5, 1).
        int_range (tuple, optional): range of the interventional weights. Defaults to (0, 0.5).
        min_gap (float, optional): the smallest |B - B*| of every edge. Defaults to 0.1.
        noise (NoiseSpec, optional): the noise of every node. Defaults to Uniform(0, 1).
        max_tries (int, optional): the number of draws allowed to get a positive intervention
            margin. Defaults to 100.

    Returns:
        SemInstance: the instance.

    A uniformly random order is drawn for the nodes 1..N-1, with N appended last (the reward
    node is a sink). Each node then picks up to d parents uniformly without replacement among its
    predecessors. The same seed always yields the same instance.

    """

    if n_nodes < 1 or d < 0:
        raise SembanditError(f'Need N >= 1 and d >= 0, not: N={n_nodes}, d={d}')
    for rng_bounds in [obs_range, int_range]:
        if rng_bounds[0] > rng_bounds[1]:
            raise SembanditError(f'Invalid weight range: {rng_bounds}')
    if max(abs(obs_range[1] - int_range[0]), abs(int_range[1] - obs_range[0])) < min_gap:
        raise SembanditError(f'The weight ranges cannot be {min_gap} apart.')
    if noise is None:
        noise = NoiseSpec.uniform(0, 1)

    rng = utils.get_rng(seed)

    for attempt in range(max_tries):
        order = list(rng.permutation(np.arange(1, n_nodes))) + [n_nodes]
        edges = []
        for (pos, node) in enumerate(order):
            n_pa = int(rng.integers(0, min(d, pos) + 1))
            if n_pa > 0:
                parents = rng.choice(order[:pos], size=n_pa, replace=False)
                edges += [(int(src), int(node)) for src in parents]
        skeleton = DagSkeleton(n_nodes, edges)

        b_obs = np.zeros((n_nodes, n_nodes))
        b_int = np.zeros((n_nodes, n_nodes))
        for (src, dst) in sorted(edges):
            (w_obs, w_int) = (0., 0.)
            while abs(w_obs - w_int) < min_gap:
                w_obs = rng.uniform(*obs_range)
                w_int = rng.uniform(*int_range)
            b_obs[src - 1, dst - 1] = w_obs
            b_int[src - 1, dst - 1] = w_int

        out = SemInstance(skeleton, b_obs, b_int, [noise] * n_nodes, require_margin=False)
        if intervention_margin(out) > 0:
            return out
        logger.info('Random instance %d has no intervention margin: drawing again.', attempt)

    raise SembanditError(f'No instance with a positive intervention margin in {max_tries}' +
                         ' draws: widen the weight gap.')
