"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: generic utilities
"""

# Import from Python
import logging
from typing import Union
import warnings
import copy
import pandas as pd
import numpy as np

# Import from this package
from ..errors import SembanditError, SembanditWarning
from ..logger import log_func_call
from .. import dynamic, hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)

#: type: anything that can seed a :py:class:`numpy.random.Generator`.
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def get_rng(seed: SeedLike = None) -> np.random.Generator:
    """ Return a :py:class:`numpy.random.Generator` for a given seed.

    Args:
        seed (int|SeedSequence|Generator, optional): the seed. A Generator is returned as-is, so
            that a caller can thread one stream through several draws. Defaults to None (fresh
            OS entropy).

    Returns:
        numpy.random.Generator: the random stream.

    Every random draw in sembandit goes through an explicit Generator: no global state is ever
    touched, which keeps replications independent and reproducible from their seed.

    """

    if isinstance(seed, np.random.Generator):
        return seed

    return np.random.default_rng(seed)


@log_func_call(logger)
def adjust_nested_dict(ref_dict: dict, new_dict: dict, lvls: Union[list, None] = None) -> dict:
    """ Update a given (nested) dictionnary given a second (possibly incomplete) one.

    Args:
        ref_dict (dict): reference dict of dict (of dict of dict ...).
        new_dict (dict): values to update as a dict (of dict or dict of dict ...)
        lvls (list of str, optional): names of the keys of the parent nested dict layers, used
            for reporting useful warnings. Defaults to None.

    Returns:
        dict: the updated dict (of dict of dict of dict ...)

    Unknown keys are ignored with a :py:class:`sembandit.errors.SembanditWarning`.

    """

    if lvls is None:
        lvls = []

    for key, item in new_dict.items():
        here = lvls + [key]
        if key not in ref_dict.keys():
            warnings.warn(f'Key unknown (and thus ignored): {".".join(here)}', SembanditWarning)
            logger.warning('Ignoring unknown parameter: %s', '.'.join(here))
            continue
        if isinstance(item, dict) and isinstance(ref_dict[key], dict):
            ref_dict[key] = adjust_nested_dict(ref_dict[key], item, lvls=here)
        else:
            ref_dict[key] = item

    return ref_dict


def setup_prms(prms: Union[dict, None] = None) -> dict:
    """ Setup a full dict of sembandit prms given a user input, using the current
    :py:data:`sembandit.dynamic.SEMBANDIT_PRMS` where necessary.

    Args:
        prms (dict, optional): (nested) dict of parameters to adjust. Defaults to None.

    Returns:
        dict: a deep copy of the current parameters, adjusted.

    This is the thread-safe way of running sembandit with non-default parameters: the global
    dict is only read, never written.

    """

    full_prms = copy.deepcopy(dynamic.SEMBANDIT_PRMS)

    if prms is not None:
        full_prms = adjust_nested_dict(full_prms, prms)

    return full_prms


def is_auto(val) -> bool:
    """ Whether a parameter value asks for automatic resolution. """

    return val is None or (isinstance(val, str) and val.lower() == 'auto')


def check_positive(name: str, val: Union[int, float], strict: bool = True) -> None:
    """ Raise a :py:class:`sembandit.errors.SembanditError` if a value is not positive.

    Args:
        name (str): parameter name, for the error message.
        val (int|float): value to check.
        strict (bool, optional): if False, 0 is accepted. Defaults to True.

    """

    if val is None or not np.isfinite(val) or val < 0 or (strict and val == 0):
        raise SembanditError(f'{name} must be {"> 0" if strict else ">= 0"}, not: {val}')


def check_trace_consistency(pdf: pd.DataFrame, req_cols: Union[dict, None] = None,
                            atol: float = 1e-9) -> pd.DataFrame:
    """ Assesses whether a given :py:class:`pandas.DataFrame` is a valid regret trace.

    Args:
        pdf (pd.DataFrame): the data to check.
        req_cols (dict, optional): the required columns and their types. Defaults to None, i.e.
            :py:data:`sembandit.hardcoded.TRACE_COLS`.
        atol (float, optional): tolerance of the running sum check. Defaults to 1e-9.

    Returns:
        pd.DataFrame: a copy of the data, with superfluous columns dropped, the required columns
        in their canonical order, and corrected dtypes.

    This will raise a :py:class:`sembandit.errors.SembanditError` if:

        * ``pdf`` is not a :py:class:`pandas.DataFrame`.
        * ``pdf`` is missing a required column.
        * the rounds are not 1, 2, ..., T.
        * the cumulative regret is not the running sum of the instantaneous regret.

    and a :py:class:`sembandit.errors.SembanditWarning` if a column has the wrong type (fixed on
    the fly), if a superfluous column is present (dropped), or if any instantaneous regret is
    negative. An empty trace (header only) is valid.

    """

    data = copy.deepcopy(pdf)

    if req_cols is None:
        req_cols = hardcoded.TRACE_COLS

    if not isinstance(data, pd.DataFrame):
        raise SembanditError(f'I was expecting a pandas DataFrame, not: {type(data)}')

    for (col, type_req) in req_cols.items():
        if col not in data.columns:
            raise SembanditError(f'Column {col} is missing from the trace.')
        if (type_in := data[col].dtype) != type_req:
            # Empty columns come back from CSV files as object: not worth a warning
            if len(data) > 0:
                warnings.warn(f'Column {col} has type "{type_in}" instead of "{type_req}".',
                              SembanditWarning)
                logger.warning('Adjusting the dtype of column %s from %s to %s',
                               col, type_in, type_req)
            data[col] = data[col].astype(type_req)

    for key in data.columns:
        if key not in req_cols.keys():
            warnings.warn(f'Column {key} is not part of a trace.', SembanditWarning)
            logger.warning('Dropping the superfluous %s column from the trace.', key)
    data = data[list(req_cols.keys())].reset_index(drop=True)

    if 'round' in req_cols and not np.array_equal(data['round'].values,
                                                  np.arange(1, len(data) + 1)):
        raise SembanditError('Rounds must be contiguous, from 1 to T.')

    if 'cum_regret' in req_cols:
        if not np.allclose(np.cumsum(data['inst_regret'].values), data['cum_regret'].values,
                           rtol=0, atol=atol * max(1, len(data))):
            raise SembanditError('cum_regret is not the running sum of inst_regret.')
        if np.any(data['inst_regret'].values < -atol):
            msg = 'Some instantaneous regrets are negative ?!'
            warnings.warn(msg, SembanditWarning)
            logger.warning(msg)

    return data
