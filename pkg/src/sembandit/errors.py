"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: custom error and warning classes
"""

from typing import Optional, Sequence


class SembanditError(Exception):
    """ The default error class for sembandit, which is a child of the :py:exc:`Exception` class.
    """


class SembanditWarning(Warning):
    """ The default warning class for sembandit, which is a child of the :py:class:`Warning`
    class.
    """


class CycleDetected(SembanditError):
    """ Raised when a set of edges admits no topological order.

    Args:
        witness (list of int): the nodes (1-indexed) of one directed cycle.

    """

    def __init__(self, witness: Sequence[int]) -> None:
        self.witness = list(witness)
        super().__init__(f'The edge set contains a directed cycle through nodes {self.witness}')

    def __reduce__(self):
        return (self.__class__, (self.witness,))


class TooManyArms(SembanditError):
    """ Raised when the full power set of arms is requested beyond the enumeration guard. """

    def __init__(self, n_nodes: int, guard: int) -> None:
        self.n_nodes = n_nodes
        self.guard = guard
        super().__init__(f'Cannot enumerate 2^{n_nodes} arms (guard: N <= {guard}).' +
                         ' Supply an explicit list of candidate arms instead.')

    def __reduce__(self):
        return (self.__class__, (self.n_nodes, self.guard))


class SolverDidNotConverge(SembanditError):
    """ Raised when the Lasso solver misses its KKT tolerance at the iteration cap. """

    def __init__(self, iterations: int, residual: float) -> None:
        self.iterations = iterations
        self.residual = residual
        super().__init__(f'Lasso solver did not converge after {iterations} iterations' +
                         f' (KKT residual: {residual:.3e})')

    def __reduce__(self):
        return (self.__class__, (self.iterations, self.residual))


class BudgetExceeded(SembanditError):
    """ Raised when structure learning hits the hard round cap before the ancestor estimates
    form a DAG. """

    def __init__(self, rounds: int, cap: int) -> None:
        self.rounds = rounds
        self.cap = cap
        super().__init__(f'Round cap of {cap} reached after {rounds} rounds without a' +
                         ' DAG-consistent descendant estimate.')

    def __reduce__(self):
        return (self.__class__, (self.rounds, self.cap))


class ConfigError(SembanditError):
    """ Raised for invalid or unknown configuration entries. """

    def __init__(self, msg: str, key: Optional[str] = None) -> None:
        self.key = key
        super().__init__(msg)

    def __reduce__(self):
        return (self.__class__, (self.args[0], self.key))


class ReplicationError(SembanditError):
    """ Wraps any error raised inside a benchmark replication, with its index attached. """

    def __init__(self, index: int, cause: Exception) -> None:
        self.index = index
        self.cause = cause
        super().__init__(f'Replication {index} failed: {cause!r}')

    def __reduce__(self):
        return (self.__class__, (self.index, self.cause))
