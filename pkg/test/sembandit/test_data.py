"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module content: tests for the data module
"""

# Import from Python
from pytest import approx, raises, warns
import numpy as np
import pandas as pd

# Import from this package
from sembandit.errors import SembanditError, SembanditWarning
from sembandit.data import RegretTrace, AggregateReport


def mock_trace(inst_regret, wall_time=None) -> RegretTrace:
    """ A trace with given instantaneous regrets, every other column being filler. """

    inst_regret = np.asarray(inst_regret, dtype=float)
    n_rounds = len(inst_regret)
    cols = {'round': np.arange(1, n_rounds + 1), 'arm_bitmask': np.zeros(n_rounds, dtype=int),
            'reward': np.ones(n_rounds), 'inst_regret': inst_regret,
            'cum_regret': np.cumsum(inst_regret), 'stage': np.ones(n_rounds, dtype=int),
            'mode': ['explore'] * n_rounds, 'candidate_count': np.ones(n_rounds, dtype=int)}
    meta = {} if wall_time is None else {'wall_time': wall_time}
    return RegretTrace.from_columns(cols, meta=meta)


def test_regrettrace():
    """ Test the RegretTrace class. """

    trace = mock_trace([0.5, 0.25, 0.])

    assert trace.horizon == 3
    assert len(trace) == 3
    assert trace.final_regret == 0.75
    assert trace.cum_regret == approx([0.5, 0.75, 0.75])
    assert list(trace.data.columns) == list(RegretTrace.DATA_COLS)
    assert trace.data['mode'].dtype == RegretTrace.DATA_COLS['mode']

    empty = RegretTrace.empty()
    assert empty.horizon == 0
    assert empty.final_regret == 0


def test_regrettrace_consistency():
    """ Inconsistent traces are rejected. """

    data = mock_trace([0.5, 0.25]).data

    bad = data.copy()
    bad.loc[1, 'cum_regret'] = 1.
    with raises(SembanditError):
        RegretTrace(bad)

    bad = data.copy()
    bad['round'] = [1, 3]
    with raises(SembanditError):
        RegretTrace(bad)

    with raises(SembanditError):
        RegretTrace(data.drop(columns='stage'))

    with warns(SembanditWarning):
        RegretTrace(data.assign(extra=0))

    with warns(SembanditWarning):
        mock_trace([-0.5, 0.25])


def test_aggregatereport():
    """ Test the AggregateReport class. """

    traces = [mock_trace([1., 1.], wall_time=1.), mock_trace([0., 1.], wall_time=3.),
              mock_trace([2., 0.], wall_time=2.)]
    report = AggregateReport.from_traces(traces, summary={'extra': 1})

    assert report.n_replications == 3
    assert list(report.data['round']) == [1, 2]
    assert list(report.data['mean_cum_regret']) == approx([1., 5 / 3])
    # Sample standard deviations over sqrt(R)
    assert report.final_se == approx(np.std([2., 1., 2.], ddof=1) / np.sqrt(3))
    assert report.final_mean == approx(5 / 3)
    assert report.summary['final_regrets'] == [2., 1., 2.]
    assert report.summary['wall_time']['max'] == 3.
    assert report.summary['extra'] == 1

    # A single replication has no spread
    report = AggregateReport.from_traces(traces[:1])
    assert report.final_se == 0
    assert 'wall_time' in report.summary

    with raises(SembanditError):
        AggregateReport.from_traces([])
    with raises(SembanditError):
        AggregateReport.from_traces([mock_trace([1.]), mock_trace([1., 1.])])
    with raises(SembanditError):
        AggregateReport(pd.DataFrame({'round': [1], 'mean_cum_regret': [0.],
                                      'se_cum_regret': [0.]}), 0)
