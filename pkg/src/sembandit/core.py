"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: core sembandit routines. All fcts meant to be used by users directly are here.

"""

# Import from Python
import warnings
import logging
from typing import Optional, Union
from pathlib import Path
from shutil import copy
from datetime import datetime
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

# Import from this package
from .errors import SembanditError, SembanditWarning, ConfigError
from .logger import log_func_call
from .sem import SemInstance
from .gallery import HierarchicalSpec, hierarchical
from .bench import resolve_params, run_replication
from .utils import utils
from . import dynamic, hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)

__all__ = ['copy_prm_file', 'set_prms', 'reset_prms', 'run', 'demo']


@log_func_call(logger)
def copy_prm_file(save_loc: str = './', which: str = 'default') -> None:
    """ Writes a copy of one of the shipped parameter files, to be edited and fed back to
    :py:func:`.set_prms`.

    Args:
        save_loc (str, optional): an existing directory. Defaults to './'.
        which (str, optional): the parameter set, i.e. ``sembandit_<which>_prms.yml``.
            Defaults to 'default'.

    Raises:
        SembanditError: if save_loc is not a directory, if the parameter set does not exist,
            or if the copy would overwrite a file.

    The same is available from the command line with ``sembandit copy-prm-file``.

    """

    dest = Path(save_loc)
    if not dest.is_dir():
        raise SembanditError(f'Not a directory: {dest}')

    shipped = {item.name: item for item in (Path(__file__).resolve().parent / 'prms').glob('*.yml')}
    fname = f'sembandit_{which}_prms.yml'
    if fname not in shipped:
        raise SembanditError(f'Unknown parameter set "{which}", available: {sorted(shipped)}')
    if (dest / fname).exists():
        raise SembanditError(f'Refusing to overwrite {dest / fname}')

    copy(shipped[fname], dest / fname)
    logger.info('Copied %s to %s', fname, dest)


@log_func_call(logger)
def set_prms(pth: Union[str, Path]) -> None:
    """ Overlays the parameters of a local YAML file on :py:data:`dynamic.SEMBANDIT_PRMS`.

    Keys missing from the file keep their current value. Unknown keys are ignored, with a
    warning.

    Args:
        pth (str|Path): the YAML parameter file.

    Raises:
        SembanditError: if the file does not exist.
        ConfigError: if the file is not a YAML mapping.

    .. warning::
        This changes the parameters of every later run in this process. To adjust a single run,
        feed ``prms`` to :py:func:`.run` instead.

    Example:
        ::

            import sembandit
            sembandit.copy_prm_file(save_loc='.', which='default')
            sembandit.set_prms('./sembandit_default_prms.yml')

    """

    pth = Path(pth)
    if not pth.is_file():
        raise SembanditError(f'No parameter file at: {pth}')
    if pth.suffix != '.yml':
        msg = f'Parameter files end in .yml, got: {pth.name}'
        warnings.warn(msg, SembanditWarning)
        logger.warning(msg)

    logger.info('Loading parameters from %s', pth)
    try:
        user_prms = YAML(typ='safe').load(pth)
    except YAMLError as err:
        raise ConfigError(f'Malformed parameter file {pth}: {err}') from err
    if not isinstance(user_prms, dict):
        raise ConfigError(f'Parameter file {pth} does not hold a mapping.')

    dynamic.SEMBANDIT_PRMS = utils.adjust_nested_dict(dynamic.SEMBANDIT_PRMS, user_prms)


@log_func_call(logger)
def reset_prms(which: Union[str, list, None] = None) -> None:
    """ Restores the default value of some or all parameters.

    Args:
        which (str|list, optional): top-level parameter name(s) to restore. Defaults to None,
            which restores everything.

    Raises:
        ConfigError: if a name is not a top-level parameter. Nothing is restored then.

    Example:
        ::

            import sembandit
            from sembandit import dynamic

            dynamic.SEMBANDIT_PRMS['DELTA'] = 0.1
            sembandit.reset_prms('DELTA')

    """

    defaults = dynamic.get_default_prms()
    if which is None:
        dynamic.SEMBANDIT_PRMS = defaults
        return

    names = [which] if isinstance(which, str) else list(which)
    if unknown := [name for name in names if name not in defaults]:
        raise ConfigError(f'Unknown parameter(s): {unknown}', key=unknown[0])

    dynamic.SEMBANDIT_PRMS.update({name: defaults[name] for name in names})


@log_func_call(logger)
def run(instance: SemInstance, horizon: int, mode: str = 'unknown-graph',
        seed: utils.SeedLike = None, prms: Optional[dict] = None) -> tuple:
    """ Runs structure learning (unless the graph is known) and intervention design on an
    instance.

    Args:
        instance (SemInstance): the environment.
        horizon (int): the number of intervention design rounds T.
        mode (str, optional): one of 'unknown-graph', 'known-graph' and 'graph-dependent'.
            Defaults to 'unknown-graph'.
        seed (int, optional): the seed of the run. Defaults to None.
        prms (dict, optional): a (nested) dict of parameters to adjust for this specific run.
            This is meant as a thread-safe way of adjusting parameters for different runs. Any
            unspecified parameter will be taken from :py:data:`dynamic.SEMBANDIT_PRMS`.

    Returns:
        :py:class:`.learner.SkeletonEstimate`, :py:class:`.data.RegretTrace`: the structure the
        bandit ran on, and the round-by-round record.

    The parameters ETA, M, ALPHA, LAMBDA, T1 and T2 are resolved from the instance when set to
    'auto' (see :py:func:`.bench.resolve_params`).

    Example:
        ::

            import sembandit
            from sembandit.gallery import HierarchicalSpec, hierarchical

            instance = hierarchical(HierarchicalSpec(d=2, n_layers=2))
            estimate, trace = sembandit.run(instance, 2000, mode='known-graph', seed=1)
            print(trace.final_regret)

    """

    starttime = datetime.now()
    logger.info('Starting a sembandit run at %s', starttime)

    if mode not in hardcoded.MODES:
        raise SembanditError(f'Unknown mode: {mode}')

    full_prms = utils.setup_prms(prms)
    resolved = resolve_params(instance, delta=full_prms['DELTA'], c=full_prms['T2_CONST'],
                              eta=full_prms['ETA'], m=full_prms['M'], lam=full_prms['LAMBDA'],
                              alpha=full_prms['ALPHA'], t1=full_prms['T1'], t2=full_prms['T2'])

    (estimate, trace) = run_replication(instance, mode, resolved, horizon, seed, prms=full_prms)

    logger.info('End of the sembandit run in %.1f s', (datetime.now()-starttime).total_seconds())

    return estimate, trace


@log_func_call(logger)
def demo() -> tuple:
    """ Run sembandit on the 2 x 2 hierarchical demonstration instance, with a known graph.

    Returns:
        :py:class:`.sem.SemInstance`, :py:class:`.data.RegretTrace`: the instance, and the trace
        of 2000 rounds.

    """

    instance = hierarchical(HierarchicalSpec(d=2, n_layers=2))

    (_, trace) = run(instance, 2000, mode='known-graph', seed=42)

    return instance, trace
