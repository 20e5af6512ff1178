"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: wall-clock benchmark of the demo run
"""

# Import from Python
import logging
import time
import pandas as pd

# Import from this package
from ..logger import log_func_call
from ..core import demo

logger = logging.getLogger(__name__)


@log_func_call(logger)
def get_speed_benchmark(niter: int = 10) -> dict:
    """ Times ``niter`` runs of :py:func:`sembandit.core.demo` on this machine.

    Args:
        niter (int, optional): number of demo runs. Defaults to 10.

    Returns:
        dict: ``niter``, the ``mean``, ``std``, ``median``, ``min`` and ``max`` run time in s,
        and ``rounds_per_s``, the bandit rounds processed per second on average.

    """

    times = []
    rounds = 0
    for _ in range(niter):
        start = time.perf_counter()
        (_, trace) = demo()
        times += [time.perf_counter() - start]
        rounds += trace.horizon

    stats = pd.Series(times, dtype=float)
    out = {'niter': niter, 'mean': stats.mean(), 'std': stats.std(ddof=0),
           'median': stats.median(), 'min': stats.min(), 'max': stats.max(),
           'rounds_per_s': rounds / stats.sum()}

    logger.info('demo() over %i runs: %.2fs mean, %.2fs std, %.0f rounds/s', niter,
                out['mean'], out['std'], out['rounds_per_s'])
    return out
