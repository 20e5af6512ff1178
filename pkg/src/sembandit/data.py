"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: data classes for regret traces and aggregate reports
"""

# Import from Python
from typing import Optional, Sequence
import logging
import copy
import numpy as np
import pandas as pd

# Import from this package
from .errors import SembanditError
from .logger import log_func_call
from .utils import utils
from . import hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)


class RegretTrace:
    """ The round-by-round record of one bandit run.

    Args:
        data (pd.DataFrame): one row per round, with the columns of
            :py:data:`sembandit.hardcoded.TRACE_COLS`.
        meta (dict, optional): run metadata (resolved parameters, final candidates, wall time,
            ...). Defaults to None.

    The data is checked with :py:func:`sembandit.utils.utils.check_trace_consistency`.

    """

    #: dict: required data columns
    DATA_COLS = copy.deepcopy(hardcoded.TRACE_COLS)

    def __init__(self, data: pd.DataFrame, meta: Optional[dict] = None) -> None:
        self._data = utils.check_trace_consistency(data, req_cols=self.DATA_COLS)
        self._meta = {} if meta is None else dict(meta)

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self) -> str:
        return f'RegretTrace(T={self.horizon}, final_regret={self.final_regret:.6g})'

    @property
    def data(self) -> pd.DataFrame:
        """ The trace, as a pandas DataFrame. """
        return self._data

    @property
    def meta(self) -> dict:
        """ The run metadata. """
        return self._meta

    @property
    def horizon(self) -> int:
        """ The number of rounds T. """
        return len(self._data)

    @property
    def cum_regret(self) -> np.ndarray:
        """ The cumulative regret R(t), t = 1..T. """
        return self._data['cum_regret'].to_numpy(dtype=float)

    @property
    def final_regret(self) -> float:
        """ R(T), 0 for an empty trace. """
        return float(self.cum_regret[-1]) if len(self._data) > 0 else 0.

    @classmethod
    def from_columns(cls, cols: dict, meta: Optional[dict] = None) -> 'RegretTrace':
        """ Build a trace from a dict of equal-length column arrays. """

        data = pd.DataFrame({key: pd.Series(cols[key]).astype(dtype)
                             for (key, dtype) in cls.DATA_COLS.items()})
        return cls(data, meta=meta)

    @classmethod
    def empty(cls) -> 'RegretTrace':
        """ A trace with no rounds. """
        return cls.from_columns({key: [] for key in cls.DATA_COLS})


class AggregateReport:
    """ Regret statistics across the replications of one experiment.

    Args:
        data (pd.DataFrame): one row per round, with the columns of
            :py:data:`sembandit.hardcoded.REPORT_COLS`.
        n_replications (int): the number of replications R.
        summary (dict, optional): anything else worth reporting (resolved parameters,
            structure-learning success rates, wall-clock statistics). Defaults to None.

    """

    #: dict: required data columns
    DATA_COLS = copy.deepcopy(hardcoded.REPORT_COLS)

    def __init__(self, data: pd.DataFrame, n_replications: int,
                 summary: Optional[dict] = None) -> None:
        utils.check_positive('n_replications', n_replications)
        self._data = utils.check_trace_consistency(data, req_cols=self.DATA_COLS)
        self._n = int(n_replications)
        self._summary = {} if summary is None else dict(summary)

    def __repr__(self) -> str:
        return f'AggregateReport(R={self._n}, T={len(self._data)})'

    @property
    def data(self) -> pd.DataFrame:
        """ The per-round aggregates, as a pandas DataFrame. """
        return self._data

    @property
    def n_replications(self) -> int:
        """ R. """
        return self._n

    @property
    def summary(self) -> dict:
        """ The final-regret summary and everything else reported alongside the curve. """
        return self._summary

    @property
    def final_mean(self) -> float:
        """ The mean of R(T) across replications. """
        return float(self._data['mean_cum_regret'].iloc[-1]) if len(self._data) > 0 else 0.

    @property
    def final_se(self) -> float:
        """ The standard error of R(T) across replications. """
        return float(self._data['se_cum_regret'].iloc[-1]) if len(self._data) > 0 else 0.

    @classmethod
    @log_func_call(logger)
    def from_traces(cls, traces: Sequence[RegretTrace],
                    summary: Optional[dict] = None) -> 'AggregateReport':
        """ Aggregate replications, in the order they are given.

        Args:
            traces (list of RegretTrace): the replications, all of the same horizon.
            summary (dict, optional): extra entries for the summary. Defaults to None.

        Returns:
            AggregateReport: per-round mean and standard error (sd / sqrt(R), with the sample
            sd) of the cumulative regret, plus the final regret and wall-clock statistics.

        """

        if len(traces) == 0:
            raise SembanditError('Cannot aggregate zero replications.')
        if len({trace.horizon for trace in traces}) != 1:
            raise SembanditError('All replications must share the same horizon.')

        curves = np.vstack([trace.cum_regret for trace in traces])
        n_rep = curves.shape[0]
        mean = curves.mean(axis=0)
        if n_rep > 1:
            se = curves.std(axis=0, ddof=1) / np.sqrt(n_rep)
        else:
            se = np.zeros_like(mean)

        data = pd.DataFrame({'round': np.arange(1, curves.shape[1] + 1, dtype=int),
                             'mean_cum_regret': mean, 'se_cum_regret': se})

        out = {'final_mean_regret': float(mean[-1]) if mean.size else 0.,
               'final_se_regret': float(se[-1]) if se.size else 0.,
               'final_regrets': [trace.final_regret for trace in traces]}

        wall = [trace.meta['wall_time'] for trace in traces if 'wall_time' in trace.meta]
        if wall:
            out['wall_time'] = {'mean': float(np.mean(wall)), 'std': float(np.std(wall)),
                                'min': float(np.min(wall)), 'max': float(np.max(wall))}
        if summary is not None:
            out.update(summary)

        return cls(data, n_rep, summary=out)
