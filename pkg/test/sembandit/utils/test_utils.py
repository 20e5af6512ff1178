"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module content: tests for the utils.utils module
"""

# Import from Python
import warnings
from pytest import mark, param, raises, warns
import numpy as np
import pandas as pd

# Import from this package
from sembandit.utils.utils import (get_rng, adjust_nested_dict, setup_prms, is_auto,
                                   check_positive, check_trace_consistency)
from sembandit.errors import SembanditError, SembanditWarning
from sembandit import dynamic, hardcoded


def canonical_trace() -> pd.DataFrame:
    """ A valid three-round trace. """

    data = pd.DataFrame({'round': [1, 2, 3], 'arm_bitmask': [0, 1, 0],
                         'reward': [1., 0.5, 1.], 'inst_regret': [0., 0.5, 0.],
                         'cum_regret': [0., 0.5, 0.5], 'stage': [1, 1, 2],
                         'mode': ['explore', 'explore', 'eliminate'],
                         'candidate_count': [2, 2, 1]})
    data['mode'] = data['mode'].astype(hardcoded.TRACE_COLS['mode'])
    return data


def test_check_trace_consistency():
    """ This routine tests the check_trace_consistency method. """

    # A valid trace raises no warning
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        warnings.simplefilter('default', category=FutureWarning)
        out = check_trace_consistency(canonical_trace())
        assert out.equals(canonical_trace())

        # Neither does an empty one
        check_trace_consistency(canonical_trace().iloc[:0])

    ### ERRORS ###
    with raises(SembanditError):
        check_trace_consistency(canonical_trace().to_numpy())
    with raises(SembanditError):
        check_trace_consistency(canonical_trace().drop(columns='reward'))
    with raises(SembanditError):
        data = canonical_trace()
        data['round'] = [0, 1, 2]
        check_trace_consistency(data)
    with raises(SembanditError):
        data = canonical_trace()
        data['cum_regret'] = [0., 0.5, 1.]
        check_trace_consistency(data)

    ### WARNINGS ###
    with warns(SembanditWarning):
        # Bad data type
        data = canonical_trace()
        data['stage'] = data['stage'].astype(float)
        out = check_trace_consistency(data)
    assert out['stage'].dtype == int
    with warns(SembanditWarning):
        # Superfluous column
        out = check_trace_consistency(canonical_trace().assign(extra=1))
    assert 'extra' not in out.columns
    with warns(SembanditWarning):
        # Negative regret
        data = canonical_trace()
        data['inst_regret'] = [0., -0.5, 0.]
        data['cum_regret'] = [0., -0.5, -0.5]
        check_trace_consistency(data)


def test_adjust_nested_dict():
    """ This routine tests the adjust_nested_dict function. """

    ref = {'a': 1, 'b': {'c': 2, 'd': 3}}
    out = adjust_nested_dict(ref, {'b': {'c': 4}})
    assert out == {'a': 1, 'b': {'c': 4, 'd': 3}}

    with warns(SembanditWarning):
        out = adjust_nested_dict({'a': 1}, {'z': 2})
    assert out == {'a': 1}


def test_setup_prms():
    """ This routine tests the setup_prms function. """

    out = setup_prms({'DELTA': 0.1, 'LASSO_PRMS': {'tol': 1e-6}})
    assert out['DELTA'] == 0.1
    assert out['LASSO_PRMS']['tol'] == 1e-6
    assert out['LASSO_PRMS']['max_iter'] == dynamic.SEMBANDIT_PRMS['LASSO_PRMS']['max_iter']
    # The global parameters are left untouched
    assert dynamic.SEMBANDIT_PRMS['DELTA'] == 0.05


def test_get_rng():
    """ This routine tests the get_rng function. """

    assert get_rng(3).uniform() == get_rng(3).uniform()
    rng = np.random.default_rng(1)
    assert get_rng(rng) is rng

    # Consecutive seeds, as used for the bench replications, give distinct streams
    assert get_rng(0).uniform() != get_rng(1).uniform()


@mark.parametrize('val, expected', [
    param('auto', True, id='auto'),
    param('AUTO', True, id='AUTO'),
    param(None, True, id='None'),
    param(0.1, False, id='float'),
    param('0.1', False, id='str'),
])
def test_is_auto(val, expected):
    """ This routine tests the is_auto function. """

    assert is_auto(val) == expected


def test_check_positive():
    """ This routine tests the check_positive function. """

    check_positive('x', 1)
    check_positive('x', 0, strict=False)

    for val in [0, -1, np.nan, np.inf, None]:
        with raises(SembanditError):
            check_positive('x', val)
