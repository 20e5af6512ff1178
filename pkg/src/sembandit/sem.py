"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: linear structural equation models under soft interventions
"""

# Import from Python
import logging
import itertools
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union
import numpy as np
from ruamel.yaml import YAML

# Import from this package
from .errors import SembanditError, SembanditWarning, TooManyArms
from .logger import log_func_call
from .graph import DagSkeleton
from .noise import NoiseSpec
from .utils import utils
from . import hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Arm:
    """ A set of intervened nodes (1-indexed), stored canonically as a sorted tuple.

    Args:
        members (iterable of int): the intervened nodes.

    Arms sort by their canonical order: fewest members first, then lexicographically.

    """

    members: tuple = ()

    def __post_init__(self) -> None:
        members = tuple(sorted({int(item) for item in self.members}))
        if any(item < 1 for item in members):
            raise SembanditError(f'Arm members are 1-indexed node labels, not: {members}')
        object.__setattr__(self, 'members', members)

    @classmethod
    def of(cls, *members: int) -> 'Arm':
        """ Convenience constructor: ``Arm.of(3, 4)``. """
        return cls(tuple(members))

    @classmethod
    def from_mask(cls, mask: int) -> 'Arm':
        """ Build an arm from its bitmask (bit i-1 set iff node i is intervened). """
        return cls(tuple(bit + 1 for bit in range(int(mask).bit_length()) if (mask >> bit) & 1))

    @property
    def mask(self) -> int:
        """ The bitmask of the arm. """
        return sum(1 << (item - 1) for item in self.members)

    @property
    def sort_key(self) -> tuple:
        """ The canonical sort key. """
        return (len(self.members), self.members)

    def __lt__(self, other: 'Arm') -> bool:
        return self.sort_key < other.sort_key

    def __contains__(self, item: int) -> bool:
        return item in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __str__(self) -> str:
        return '{' + ','.join(str(item) for item in self.members) + '}'

    def indicator(self, n_nodes: int) -> np.ndarray:
        """ The length-N boolean vector a with a_i = 1{i in arm}. """
        out = np.zeros(n_nodes, dtype=bool)
        if self.members:
            if self.members[-1] > n_nodes:
                raise SembanditError(f'Arm {self} is not a subset of 1..{n_nodes}')
            out[np.array(self.members) - 1] = True
        return out


#: Arm: the observational (empty) arm.
EMPTY_ARM = Arm()


@log_func_call(logger)
def enumerate_arms(nodes: Union[int, Iterable[int]], guard: int = hardcoded.ARM_ENUM_GUARD) -> list:
    """ List all the subsets of a set of nodes, in canonical arm order.

    Args:
        nodes (int|iterable of int): N (meaning nodes 1..N), or an explicit set of nodes.
        guard (int, optional): largest allowed number of nodes. Defaults to
            :py:data:`sembandit.hardcoded.ARM_ENUM_GUARD`.

    Returns:
        list of Arm: the 2^|nodes| arms, fewest members first then lexicographically.

    Raises:
        TooManyArms: if there are more than ``guard`` nodes.

    """

    nodes = list(range(1, nodes + 1)) if isinstance(nodes, (int, np.integer)) \
        else sorted(set(nodes))
    if len(nodes) > guard:
        raise TooManyArms(len(nodes), guard)

    return [Arm(combo) for size in range(len(nodes) + 1)
            for combo in itertools.combinations(nodes, size)]


def arm_masks(arms: Sequence[Arm], n_nodes: int) -> np.ndarray:
    """ Stack the indicator vectors of a list of arms into an (n_arms, N) boolean array. """
    out = np.zeros((len(arms), n_nodes), dtype=bool)
    for (ind, arm) in enumerate(arms):
        out[ind] = arm.indicator(n_nodes)
    return out


def _as_weights(mat, n_nodes: int, name: str) -> np.ndarray:
    """ Turn a weight matrix into a read-only float array of shape (N, N). """

    out = np.array(mat, dtype=float)
    if out.shape != (n_nodes, n_nodes):
        raise SembanditError(f'{name} should have shape ({n_nodes}, {n_nodes}), not {out.shape}')
    if not np.all(np.isfinite(out)):
        raise SembanditError(f'{name} contains non-finite values')
    out.setflags(write=False)
    return out


class SemInstance:
    """ The ground-truth environment: a DAG, observational and interventional weights, and noise.

    Args:
        skeleton (DagSkeleton): the graph.
        b_obs (array-like): the N x N observational weights B, with [B]_{j,i} the weight of the
            edge j -> i (matrix indices are node labels minus one).
        b_int (array-like): the N x N interventional weights B*.
        noise (sequence of NoiseSpec): one noise model per node.
        m_b (float, optional): bound on the absolute weights. Defaults to the largest absolute
            weight (1 for an edgeless graph).
        m_eps (float, optional): bound on the absolute noise. Defaults to the largest noise
            bound.
        require_margin (bool, optional): if True, complain unless every single-node
            intervention visibly shifts the mean of its descendants (positive
            :py:func:`intervention_margin`). Defaults to True.

    Instances are immutable: all arrays are read-only.

    """

    def __init__(self, skeleton: DagSkeleton, b_obs, b_int, noise: Sequence[NoiseSpec],
                 m_b: Optional[float] = None, m_eps: Optional[float] = None,
                 require_margin: bool = True) -> None:

        if not isinstance(skeleton, DagSkeleton):
            raise SembanditError(f'skeleton should be a DagSkeleton, not: {type(skeleton)}')
        self._skeleton = skeleton
        n_nodes = skeleton.n_nodes

        self._b_obs = _as_weights(b_obs, n_nodes, 'b_obs')
        self._b_int = _as_weights(b_int, n_nodes, 'b_int')

        # The weights must live on the edges of the graph
        off_graph = ~skeleton.adjacency
        for (name, mat) in [('b_obs', self._b_obs), ('b_int', self._b_int)]:
            if np.any(mat[off_graph] != 0):
                bad = np.argwhere((mat != 0) & off_graph)[0] + 1
                raise SembanditError(f'{name} has a non-zero weight on the non-edge' +
                                     f' {bad[0]} -> {bad[1]}')

        if len(noise) != n_nodes:
            raise SembanditError(f'Need {n_nodes} noise specs, not {len(noise)}')
        self._noise = tuple(noise)
        self._nu = np.array([spec.mean for spec in self._noise], dtype=float)
        self._nu.setflags(write=False)

        max_weight = float(max(np.max(np.abs(self._b_obs)), np.max(np.abs(self._b_int))))
        self._m_b = float(m_b) if m_b is not None else (max_weight if max_weight > 0 else 1.)
        if max_weight > self._m_b:
            raise SembanditError(f'Weights up to {max_weight} exceed m_b={self._m_b}')

        max_noise = max(spec.bound for spec in self._noise)
        self._m_eps = float(m_eps) if m_eps is not None else float(max_noise)
        if max_noise > self._m_eps:
            raise SembanditError(f'Noise bound {max_noise} exceeds m_eps={self._m_eps}')

        if require_margin and not intervention_margin(self) > 0:
            raise SembanditError('Some single-node intervention does not shift the mean of' +
                                 ' its descendants (the intervention margin is not positive).')

    def __repr__(self) -> str:
        return f'SemInstance(N={self.n_nodes}, d={self.skeleton.max_in_degree},' + \
            f' L={self.skeleton.depth})'

    def __eq__(self, other) -> bool:
        if not isinstance(other, SemInstance):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    @property
    def skeleton(self) -> DagSkeleton:
        """ The graph. """
        return self._skeleton

    @property
    def n_nodes(self) -> int:
        """ N. """
        return self._skeleton.n_nodes

    @property
    def b_obs(self) -> np.ndarray:
        """ The observational weights B (read-only). """
        return self._b_obs

    @property
    def b_int(self) -> np.ndarray:
        """ The interventional weights B* (read-only). """
        return self._b_int

    @property
    def noise(self) -> tuple:
        """ The per-node noise models. """
        return self._noise

    @property
    def nu(self) -> np.ndarray:
        """ The noise means (read-only). """
        return self._nu

    @property
    def m_b(self) -> float:
        """ The weight bound. """
        return self._m_b

    @property
    def m_eps(self) -> float:
        """ The noise bound. """
        return self._m_eps

    @property
    def is_bounded(self) -> bool:
        """ Whether all the noise terms are bounded. """
        return all(spec.is_bounded for spec in self._noise)

    def to_dict(self) -> dict:
        """ A YAML-friendly representation, with sparse weights as [j, i, value] triplets. """

        def sparse(mat: np.ndarray) -> list:
            return [[int(j) + 1, int(i) + 1, float(mat[j, i])]
                    for (j, i) in zip(*np.nonzero(mat))]

        return {'node_count': self.n_nodes,
                'edges': [list(edge) for edge in sorted(self.skeleton.edges)],
                'b_obs': sparse(self._b_obs),
                'b_int': sparse(self._b_int),
                'noise': [spec.to_dict() for spec in self._noise],
                'nu': [float(val) for val in self._nu],
                'm_b': self._m_b,
                'm_eps': self._m_eps}

    @classmethod
    def from_dict(cls, spec: dict, require_margin: bool = True) -> 'SemInstance':
        """ Inverse of :py:meth:`to_dict`. """

        n_nodes = int(spec['node_count'])
        skeleton = DagSkeleton(n_nodes, [tuple(edge) for edge in spec['edges']])

        mats = []
        for key in ['b_obs', 'b_int']:
            mat = np.zeros((n_nodes, n_nodes))
            for (j, i, val) in spec[key]:
                mat[int(j) - 1, int(i) - 1] = float(val)
            mats += [mat]

        noise = [NoiseSpec.from_dict(item) for item in spec['noise']]
        out = cls(skeleton, mats[0], mats[1], noise, m_b=spec.get('m_b'),
                  m_eps=spec.get('m_eps'), require_margin=require_margin)

        if 'nu' in spec and not np.array_equal(np.array(spec['nu'], dtype=float), out.nu):
            raise SembanditError('The nu entry is inconsistent with the noise means.')

        return out


def _yaml() -> YAML:
    """ The YAML handler used for every sembandit file. """
    yaml = YAML(typ='safe')
    yaml.default_flow_style = None
    return yaml


@log_func_call(logger)
def write_instance(instance: SemInstance, pth: Union[str, Path],
                   metadata: Optional[dict] = None) -> None:
    """ Write an instance to a YAML file.

    Args:
        instance (SemInstance): the instance.
        pth (str|Path): path+filename to write to.
        metadata (dict, optional): extra information stored under a ``metadata`` key.
            Defaults to None.

    Floats are written with their shortest round-tripping representation, such that
    :py:func:`read_instance` reproduces the instance bit-for-bit.

    """

    content = instance.to_dict()
    if metadata is not None:
        content['metadata'] = metadata

    write_bundle(content, pth)


def write_bundle(content: dict, pth: Union[str, Path]) -> None:
    """ Dump a dict (e.g. several instance dicts and their metadata) to a YAML file. """

    try:
        with open(pth, 'w', encoding='utf-8') as fid:
            _yaml().dump(content, fid)
    except OSError as err:
        raise SembanditError(f'Cannot write instance file {pth}: {err}') from err


@log_func_call(logger)
def read_instance(pth: Union[str, Path], key: Optional[str] = None,
                  require_margin: bool = True) -> SemInstance:
    """ Read an instance from a YAML file written by :py:func:`write_instance`.

    Args:
        pth (str|Path): path+filename to read.
        key (str, optional): for files bundling several instances (e.g. a lower-bound pair),
            the name of the instance to load. Defaults to None.
        require_margin (bool, optional): see :py:class:`SemInstance`. Defaults to True.

    Returns:
        SemInstance: the instance.

    """

    pth = Path(pth)
    if not pth.is_file():
        raise SembanditError(f'I cannot find the instance file {pth}')

    content = _yaml().load(pth)
    if key is not None:
        if key not in content:
            raise SembanditError(f'No instance named {key} in {pth}')
        content = content[key]
    elif 'node_count' not in content:
        raise SembanditError(f'{pth} bundles several instances: specify which one to load.')

    return SemInstance.from_dict(content, require_margin=require_margin)


def arm_matrix(instance: SemInstance, arm: Arm) -> np.ndarray:
    """ The post-intervention weights B_a: column i is taken from B* if i is in the arm, from B
    otherwise.

    Args:
        instance (SemInstance): the instance.
        arm (Arm): the intervention.

    Returns:
        ndarray: the N x N matrix B_a.

    """

    return np.where(arm.indicator(instance.n_nodes)[np.newaxis, :], instance.b_int, instance.b_obs)


def path_sums(b_a: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """ All the path-compounding vectors f_i(B_a) at once, via the forward recursion.

    Args:
        b_a (ndarray): N x N weights, supported on a DAG.
        order (sequence of int): a topological order of that DAG (1-indexed).

    Returns:
        ndarray: the N x N matrix F whose column i-1 is f_i, i.e. F[j-1, i-1] is the sum over all
        directed paths j -> ... -> i of the products of the weights along the path (1 for j = i).

    The recursion f_i = e_i + sum_{j in Pa(i)} [B_a]_{j,i} f_j costs O(N^2) per node.

    """

    n_nodes = b_a.shape[0]
    out = np.zeros((n_nodes, n_nodes))
    for i in order:
        col = i - 1
        out[:, col] = out @ b_a[:, col]
        out[col, col] += 1.
    return out


def path_sum(instance: SemInstance, arm: Arm, i: int) -> np.ndarray:
    """ The path-compounding vector f_i(B_a), whose entry j-1 sums the weight products of all
    directed paths j -> ... -> i (including the empty path at j = i).

    Args:
        instance (SemInstance): the instance.
        arm (Arm): the intervention.
        i (int): the node.

    Returns:
        ndarray: the length-N vector f_i(B_a).

    """

    return path_sums(arm_matrix(instance, arm), instance.skeleton.order)[:, i - 1]


def path_sum_powers(instance: SemInstance, arm: Arm, i: int) -> np.ndarray:
    """ Same as :py:func:`path_sum`, but summing the columns of the matrix powers B_a^l for
    l = 0..L_i. Meant as a cross-check of the recursion.
    """

    b_a = arm_matrix(instance, arm)
    power = np.eye(instance.n_nodes)
    out = power[:, i - 1].copy()
    for _ in range(instance.skeleton.depth_of(i)):
        power = power @ b_a
        out += power[:, i - 1]
    return out


def exact_means(instance: SemInstance, arm: Arm) -> np.ndarray:
    """ The exact means mu_{i,a} of every node under an arm, as a length-N vector. """

    return arm_means(instance.b_obs, instance.b_int, instance.nu, instance.skeleton.order,
                     arm.indicator(instance.n_nodes)[np.newaxis, :])[0]


def exact_mean(instance: SemInstance, arm: Arm, i: int) -> float:
    """ The exact mean mu_{i,a} = <f_i(B_a), nu> of node i under an arm.

    Args:
        instance (SemInstance): the instance.
        arm (Arm): the intervention.
        i (int): the node.

    Returns:
        float: the mean.

    """

    return float(path_sum(instance, arm, i) @ instance.nu)


def arm_means(b_obs: np.ndarray, b_int: np.ndarray, nu: np.ndarray, order: Sequence[int],
              masks: np.ndarray) -> np.ndarray:
    """ The means of every node under many arms at once.

    Args:
        b_obs (ndarray): N x N observational weights (true or estimated).
        b_int (ndarray): N x N interventional weights (true or estimated).
        nu (ndarray): the noise means.
        order (sequence of int): a topological order of the support of the weights.
        masks (ndarray): (n_arms, N) boolean arm indicators.

    Returns:
        ndarray: (n_arms, N) array of means, mu_{i,a} = nu_i + sum_j [B_a]_{j,i} mu_{j,a}.

    This is the recursion in which <f_i(B_a), nu> unrolls, evaluated in topological order.

    """

    out = np.zeros(masks.shape, dtype=float)
    for i in order:
        col = i - 1
        weights = np.where(masks[:, [col]], b_int[:, col], b_obs[:, col])
        out[:, col] = nu[col] + np.sum(weights * out, axis=1)
    return out


def reduced_form(instance: SemInstance, arm: Arm) -> np.ndarray:
    """ The matrix (I - B_a^T)^-1, which maps a noise draw onto the realization X. """

    eye = np.eye(instance.n_nodes)
    return np.linalg.solve(eye - arm_matrix(instance, arm).T, eye)


@log_func_call(logger)
def best_arm_brute_force(instance: SemInstance, candidates: Optional[Sequence[Arm]] = None,
                         guard: int = hardcoded.ARM_ENUM_GUARD) -> tuple:
    """ Find the arm with the largest exact mean at the reward node.

    Args:
        instance (SemInstance): the instance.
        candidates (sequence of Arm, optional): the arms to consider. Defaults to None, i.e. all
            the 2^N arms.
        guard (int, optional): largest N for which all the 2^N arms may be enumerated.

    Returns:
        Arm, float: the best arm and its mean. Ties go to the arm first in canonical order
        (fewest members, then lexicographic).

    Raises:
        TooManyArms: if N > guard and no candidates are given.

    """

    if candidates is None:
        candidates = enumerate_arms(instance.n_nodes, guard=guard)
    candidates = sorted(set(candidates))
    if len(candidates) == 0:
        raise SembanditError('No candidate arms to pick from.')

    means = arm_means(instance.b_obs, instance.b_int, instance.nu, instance.skeleton.order,
                      arm_masks(candidates, instance.n_nodes))[:, -1]
    best = int(np.argmax(means))

    return candidates[best], float(means[best])


@log_func_call(logger)
def intervention_margin(instance: SemInstance) -> float:
    """ The smallest mean shift that a single-node intervention causes on itself or any of its
    descendants.

    Args:
        instance (SemInstance): the instance.

    Returns:
        float: min over nodes i with L_i >= 1 and j in De(i) U {i} of |mu_{j,{}} - mu_{j,{i}}|,
        or inf if there is no such pair.

    """

    skeleton = instance.skeleton
    base = exact_means(instance, EMPTY_ARM)
    out = np.inf
    for i in skeleton.nodes:
        if skeleton.depth_of(i) < 1:
            continue
        shifted = exact_means(instance, Arm.of(i))
        affected = np.array(sorted(skeleton.descendants(i) | {i})) - 1
        out = min(out, float(np.min(np.abs(base[affected] - shifted[affected]))))

    return out


def value_bound(instance: SemInstance) -> float:
    """ The bound m = m_eps * sum_{l=0..L} (d m_b)^l on |X_i|, valid under every arm. """

    skeleton = instance.skeleton
    ratio = skeleton.max_in_degree * instance.m_b
    return float(instance.m_eps * sum(ratio ** ell for ell in range(skeleton.depth + 1)))


class Environment:
    """ A sampler of an instance, that owns its random stream.

    Args:
        instance (SemInstance): the instance to sample from.
        seed (int|SeedSequence|Generator, optional): the seed of the stream. Defaults to None.

    Example:
        ::

            env = Environment(instance, seed=42)
            x = env.pull(Arm.of(2))          # one realization, shape (N,)
            xs = env.pull(EMPTY_ARM, n=100)  # 100 realizations, shape (100, N)

    """

    def __init__(self, instance: SemInstance, seed: utils.SeedLike = None) -> None:
        self._instance = instance
        self._rng = utils.get_rng(seed)
        self._n_pulls = 0

        if not instance.is_bounded:
            warnings.warn('Sampling an instance with unbounded noise.', SembanditWarning)
            logger.warning('Sampling an instance with unbounded noise: the bandit guarantees' +
                           ' do not apply.')

    @property
    def instance(self) -> SemInstance:
        """ The instance. """
        return self._instance

    @property
    def n_pulls(self) -> int:
        """ The number of realizations drawn so far. """
        return self._n_pulls

    def pull(self, arm: Arm, n: Optional[int] = None) -> np.ndarray:
        """ Draw realizations of X under an arm.

        Args:
            arm (Arm): the intervention.
            n (int, optional): the number of realizations. Defaults to None, i.e. one
                realization returned as a 1-D array.

        Returns:
            ndarray: shape (N,) if n is None, else (n, N).

        """

        out = sample(self._instance, arm, self._rng, n=n)
        self._n_pulls += 1 if n is None else n
        return out


def draw_noise(instance: SemInstance, rng: np.random.Generator, n: int) -> np.ndarray:
    """ Draw an (n, N) array of noise terms, node by node. """

    return np.column_stack([spec.draw(rng, n) for spec in instance.noise])


def sample(instance: SemInstance, arm: Arm, seed: utils.SeedLike = None,
           n: Optional[int] = None) -> np.ndarray:
    """ Draw realizations of X = B_a^T X + epsilon by forward substitution in topological order.

    Args:
        instance (SemInstance): the instance.
        arm (Arm): the intervention.
        seed (int|SeedSequence|Generator, optional): the seed, or a Generator to draw from.
            Defaults to None.
        n (int, optional): the number of realizations. Defaults to None (one realization,
            returned as a 1-D array).

    Returns:
        ndarray: shape (N,) if n is None, else (n, N).

    """

    rng = utils.get_rng(seed)
    size = 1 if n is None else n
    b_a = arm_matrix(instance, arm)

    out = draw_noise(instance, rng, size)
    for i in instance.skeleton.order:
        parents = np.array(instance.skeleton.parents(i), dtype=int) - 1
        if len(parents) > 0:
            out[:, i - 1] += out[:, parents] @ b_a[parents, i - 1]

    return out[0] if n is None else out
