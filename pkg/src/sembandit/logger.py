"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: the function call logger
"""

# Import from Python
import logging
import inspect
from typing import Any, Callable
from functools import wraps
import numpy as np


def _brief(val: Any) -> str:
    """ Short form of an argument value: arrays are reduced to their shape and dtype. """
    if isinstance(val, np.ndarray):
        return f'<ndarray {val.shape} {val.dtype}>'
    return repr(val)


def log_func_call(logger: logging.Logger) -> Callable:
    """ Decorator logging each call of a public operation to ``logger``.

    The function name goes out at INFO. The bound arguments go out at DEBUG, with weight
    matrices and sample arrays reduced to their shape, and are only assembled when DEBUG is
    enabled for that logger.

    Args:
        logger (logging.Logger): the module logger of the decorated function.

    """

    def deco(func: Callable) -> Callable:

        @wraps(func)
        def logged(*args, **kwargs):

            logger.info('Calling %s()', func.__name__)

            if logger.isEnabledFor(logging.DEBUG):
                call = inspect.signature(func).bind(*args, **kwargs)
                call.apply_defaults()
                logger.debug('%s() arguments: %s', func.__name__,
                             ', '.join(f'{key}={_brief(val)}'
                                       for (key, val) in call.arguments.items()))

            return func(*args, **kwargs)
        return logged
    return deco
