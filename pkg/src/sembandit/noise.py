"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: noise models of the structural equations
"""

# Import from Python
import logging
from dataclasses import dataclass, field
import numpy as np
from scipy.stats import truncnorm

# Import from this package
from .errors import SembanditError
from . import hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)

#: dict: the parameters required by each noise family.
FAMILY_PRMS = {'uniform': ('lo', 'hi'),
               'truncated-gaussian': ('mean', 'sd', 'bound'),
               'gaussian': ('mean', 'sd'),
               'constant': ('c',)}


@dataclass(frozen=True)
class NoiseSpec:
    """ The distribution of one exogenous noise term epsilon_i.

    Args:
        family (str): one of 'uniform', 'truncated-gaussian', 'gaussian', 'constant'.
        prms (dict): the family parameters:

            - uniform: ``lo``, ``hi`` (support [lo, hi])
            - truncated-gaussian: ``mean``, ``sd``, ``bound`` (a Gaussian(mean, sd) truncated
              symmetrically to [mean - bound, mean + bound], which leaves the mean unchanged)
            - gaussian: ``mean``, ``sd`` (unbounded; only meant for exact-mean and KL fixtures)
            - constant: ``c``

    Every family knows its exact mean, so that the noise means nu of an instance are always
    consistent with its noise draws.

    """

    family: str
    prms: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in hardcoded.NOISE_FAMILIES:
            raise SembanditError(f'Noise family unknown: {self.family}')
        if set(self.prms.keys()) != set(FAMILY_PRMS[self.family]):
            raise SembanditError(f'Noise family {self.family} requires the parameters' +
                                 f' {FAMILY_PRMS[self.family]}, not: {sorted(self.prms)}')
        # Store plain floats, such that specs compare (and serialize) cleanly.
        object.__setattr__(self, 'prms', {key: float(val) for (key, val) in self.prms.items()})

        if self.family == 'uniform' and self.prms['hi'] < self.prms['lo']:
            raise SembanditError(f'Uniform noise needs lo <= hi, not: {self.prms}')
        if self.family in ['truncated-gaussian', 'gaussian'] and self.prms['sd'] <= 0:
            raise SembanditError(f'Gaussian noise needs sd > 0, not: {self.prms}')
        if self.family == 'truncated-gaussian' and self.prms['bound'] <= 0:
            raise SembanditError(f'Truncated Gaussian noise needs bound > 0, not: {self.prms}')

    def __hash__(self) -> int:
        return hash((self.family, tuple(sorted(self.prms.items()))))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> 'NoiseSpec':
        """ Uniform noise on [lo, hi]. """
        return cls('uniform', {'lo': lo, 'hi': hi})

    @classmethod
    def truncated_gaussian(cls, mean: float, sd: float, bound: float) -> 'NoiseSpec':
        """ Gaussian noise truncated to [mean - bound, mean + bound]. """
        return cls('truncated-gaussian', {'mean': mean, 'sd': sd, 'bound': bound})

    @classmethod
    def gaussian(cls, mean: float, sd: float) -> 'NoiseSpec':
        """ Unbounded Gaussian noise. """
        return cls('gaussian', {'mean': mean, 'sd': sd})

    @classmethod
    def constant(cls, c: float) -> 'NoiseSpec':
        """ Deterministic noise equal to c. """
        return cls('constant', {'c': c})

    @property
    def mean(self) -> float:
        """ The exact mean of the distribution. """
        if self.family == 'uniform':
            return (self.prms['lo'] + self.prms['hi']) / 2
        if self.family == 'constant':
            return self.prms['c']
        return self.prms['mean']

    @property
    def bound(self) -> float:
        """ The smallest m such that |epsilon| <= m almost surely (inf if unbounded). """
        if self.family == 'uniform':
            return max(abs(self.prms['lo']), abs(self.prms['hi']))
        if self.family == 'constant':
            return abs(self.prms['c'])
        if self.family == 'truncated-gaussian':
            return abs(self.prms['mean']) + self.prms['bound']
        return np.inf

    @property
    def is_bounded(self) -> bool:
        """ Whether the support is bounded. """
        return bool(np.isfinite(self.bound))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """ Draw ``size`` i.i.d. values from the distribution.

        Args:
            rng (numpy.random.Generator): the random stream.
            size (int): number of draws.

        Returns:
            ndarray: the draws.

        """

        if self.family == 'uniform':
            return rng.uniform(self.prms['lo'], self.prms['hi'], size=size)
        if self.family == 'constant':
            return np.full(size, self.prms['c'])
        if self.family == 'gaussian':
            return rng.normal(self.prms['mean'], self.prms['sd'], size=size)

        half = self.prms['bound'] / self.prms['sd']
        return truncnorm.rvs(-half, half, loc=self.prms['mean'], scale=self.prms['sd'],
                             size=size, random_state=rng)

    def to_dict(self) -> dict:
        """ A YAML-friendly representation. """
        return {'family': self.family, **self.prms}

    @classmethod
    def from_dict(cls, spec: dict) -> 'NoiseSpec':
        """ Inverse of :py:meth:`to_dict`. """
        spec = dict(spec)
        family = spec.pop('family')
        return cls(family, spec)
