"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: hardcoded data
"""

from pandas import StringDtype

#: int: largest N for which the full power set of 2^N arms may be enumerated.
ARM_ENUM_GUARD = 20

#: dict: the columns & associated types of a regret trace, in output order.
TRACE_COLS = {'round': int, 'arm_bitmask': int, 'reward': float, 'inst_regret': float,
              'cum_regret': float, 'stage': int, 'mode': StringDtype(), 'candidate_count': int}

#: dict: the columns & associated types of the per-round aggregate of a report.
REPORT_COLS = {'round': int, 'mean_cum_regret': float, 'se_cum_regret': float}

#: int: number of significant digits used for every float written to CSV.
CSV_SIG_DIGITS = 12

#: str: environment variable overriding the number of benchmark workers.
ENV_N_WORKERS = 'SEMBANDIT_N_WORKERS'

#: list of str: the algorithm modes.
MODES = ['unknown-graph', 'known-graph', 'graph-dependent']

#: list of str: the supported noise families.
NOISE_FAMILIES = ['uniform', 'truncated-gaussian', 'gaussian', 'constant']
