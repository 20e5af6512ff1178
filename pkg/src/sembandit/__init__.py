"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: package init
"""

# Import from Python
import logging

# Import from this package
from . import version as vers
from .core import *  # noqa: F401,F403

# Instantiate the module logger
logger = logging.getLogger(__name__)
# Stay silent unless the user configures logging
logger.addHandler(logging.NullHandler())

__version__ = vers.VERSION
