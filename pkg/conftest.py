"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: pytest utilities
"""

# Import from python packages and modules
import pytest


def pytest_addoption(parser) -> None:
    """ Feed command line arguments to the pytest command, e.g.:

        pytest --DO_SLOW

    """

    parser.addoption("--DO_SLOW", action="store_true", default=False,
                     help="If used, will run the long acceptance experiments (regret scaling," +
                     " lower-bound pair, replication statistics).")


@pytest.fixture(scope='session')
def do_slow(request):
    """ A pytest fixture to decide whether to run the long acceptance experiments.

    To use this, call it as an argument in any test function, e.g.:

        def test_some_func(do_slow):
            if not do_slow:
                pytest.skip('Use --DO_SLOW to run this test.')

    """

    return request.config.getoption("--DO_SLOW")
