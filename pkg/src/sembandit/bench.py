"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: experiment orchestration, replication sweeps and CSV output
"""

# Import from Python
import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, asdict
from pathlib import Path
from typing import Optional, Sequence, Union
import numpy as np
import pandas as pd
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

# Import from this package
from .errors import SembanditError, SembanditWarning, ConfigError, ReplicationError
from .logger import log_func_call
from .noise import NoiseSpec
from .sem import (SemInstance, Environment, arm_masks, arm_means,
                  intervention_margin, read_instance, value_bound,
                  write_bundle)
from .learner import SkeletonEstimate, run_structure_learning, recovery_summary
from .designer import run_intervention_design
from .gallery import HierarchicalSpec, hierarchical, lower_bound_pair, random_dag
from .data import RegretTrace, AggregateReport
from .utils import utils
from . import dynamic, hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)

#: list of str: the instance generators known to a config.
GENERATORS = ['hierarchical', 'lower-bound', 'random']


@dataclass(frozen=True)
class ExperimentConfig:
    """ The description of one experiment, as read from a flat YAML file.

    The YAML keys are the field names below (``lambda`` is accepted for ``lam``). Any other key is
    a :py:class:`sembandit.errors.ConfigError`. Parameters set to ``auto`` are resolved from the
    instance.

    Instance source (exactly one of ``instance`` and ``generator``):
        instance (str): path of an instance file.
        generator (str): 'hierarchical', 'lower-bound' or 'random'.
        d (int): nodes per layer (hierarchical, lower-bound) or max in-degree (random).
            Defaults to 2.
        n_layers (int): number of layers L (hierarchical, lower-bound). Defaults to 2.
        n_nodes (int): number of nodes (random). Defaults to 6.
        w_obs, w_int (float): edge weights (hierarchical). Default to 1 and 0.5.
        noise_lo, noise_hi (float): support of the uniform noise (hierarchical, random).
            Default to 0 and 1.
        twin (bool): use the perturbed instance of the lower-bound pair. Defaults to False.
        instance_seed (int): seed of the random generator. Defaults to 0.

    Runs:
        horizon (int): T. Defaults to 1000.
        replications (int): R. Defaults to 1.
        seed_base (int): replication r uses the seed seed_base + r. Defaults to 0.
        mode (str|list of str): one or more of 'unknown-graph', 'known-graph',
            'graph-dependent'. Defaults to 'unknown-graph'.
        delta (float): confidence level. Defaults to 0.05.
        alpha, lam, eta, m (float|'auto'): width multiplier, Lasso penalty, intervention
            margin, value bound. Default to 'auto'.
        t1, t2 (int|'auto'): exploration lengths. Default to 'auto'.
        c (float): the T2 constant. Defaults to 2.
        n_workers (int): size of the replication pool. Defaults to None, see
            :py:func:`n_workers`.
        output_dir (str): where to write the CSV files and the summaries. Defaults to None.

    """

    instance: Optional[str] = None
    generator: Optional[str] = None
    d: int = 2
    n_layers: int = 2
    n_nodes: int = 6
    w_obs: float = 1.
    w_int: float = 0.5
    noise_lo: float = 0.
    noise_hi: float = 1.
    twin: bool = False
    instance_seed: int = 0
    horizon: int = 1000
    replications: int = 1
    seed_base: int = 0
    mode: tuple = ('unknown-graph',)
    delta: float = 0.05
    alpha: Union[float, str] = 'auto'
    lam: Union[float, str] = 'auto'
    eta: Union[float, str] = 'auto'
    m: Union[float, str] = 'auto'
    t1: Union[int, str] = 'auto'
    t2: Union[int, str] = 'auto'
    c: float = 2.
    n_workers: Optional[int] = None
    output_dir: Optional[str] = None

    def __post_init__(self) -> None:
        modes = (self.mode,) if isinstance(self.mode, str) else tuple(self.mode)
        object.__setattr__(self, 'mode', modes)

        if (self.instance is None) == (self.generator is None):
            raise ConfigError('Specify exactly one of instance and generator.', key='instance')
        if self.generator is not None and self.generator not in GENERATORS:
            raise ConfigError(f'Unknown generator: {self.generator}', key='generator')
        if len(modes) == 0 or any(item not in hardcoded.MODES for item in modes):
            raise ConfigError(f'Unknown mode in: {modes}', key='mode')

        for key in ['horizon', 'replications', 'd', 'n_layers', 'n_nodes']:
            self._check(key, getattr(self, key), integer=True, strict=key != 'd')
        if not 0 < self.delta < 1:
            raise ConfigError(f'delta must be in ]0, 1[, not: {self.delta}', key='delta')
        if not self.c > 1:
            raise ConfigError(f'c must be > 1, not: {self.c}', key='c')
        for key in ['eta', 'm']:
            self._check(key, getattr(self, key), auto=True)
        for key in ['alpha', 'lam']:
            self._check(key, getattr(self, key), auto=True, strict=False)
        self._check('t1', self.t1, auto=True, integer=True)
        self._check('t2', self.t2, auto=True, integer=True, strict=False)
        if self.n_workers is not None:
            self._check('n_workers', self.n_workers, integer=True)

    @staticmethod
    def _check(key: str, val, auto: bool = False, integer: bool = False,
               strict: bool = True) -> None:
        if auto and utils.is_auto(val):
            return
        if isinstance(val, bool) or not isinstance(val, (int, float)) or \
           (integer and not float(val).is_integer()):
            raise ConfigError(f'{key} has an invalid value: {val}', key=key)
        if val < 0 or (strict and val == 0):
            raise ConfigError(f'{key} must be {"> 0" if strict else ">= 0"}, not: {val}',
                              key=key)

    @classmethod
    def from_dict(cls, content: dict) -> 'ExperimentConfig':
        """ Build a config from a flat dict, complaining about unknown keys. Missing replications
        and seed_base entries are taken from the BENCH_PRMS parameters. """

        if not isinstance(content, dict):
            raise ConfigError(f'A config must be a mapping, not: {type(content)}')
        content = dict(content)
        if 'lambda' in content:
            content['lam'] = content.pop('lambda')
        for key in ['replications', 'seed_base']:
            content.setdefault(key, dynamic.SEMBANDIT_PRMS['BENCH_PRMS'][key])
        known = {item.name for item in fields(cls)}
        for key in content:
            if key not in known:
                raise ConfigError(f'Unknown config key: {key}', key=key)
        return cls(**content)

    @classmethod
    def from_yaml(cls, pth: Union[str, Path]) -> 'ExperimentConfig':
        """ Read a config from a flat YAML file. """

        pth = Path(pth)
        if not pth.is_file():
            raise ConfigError(f'I cannot find the config file {pth}')
        try:
            content = YAML(typ='safe').load(pth)
        except YAMLError as err:
            raise ConfigError(f'Cannot parse {pth}: {err}') from err
        return cls.from_dict(content)

    def replace(self, **changes) -> 'ExperimentConfig':
        """ A copy with some fields changed. """
        return ExperimentConfig(**{**asdict(self), **changes})


@log_func_call(logger)
def build_instance(config: ExperimentConfig) -> SemInstance:
    """ Load or generate the instance of an experiment. """

    if config.instance is not None:
        return read_instance(config.instance)

    noise = NoiseSpec.uniform(config.noise_lo, config.noise_hi)
    if config.generator == 'hierarchical':
        return hierarchical(HierarchicalSpec(config.d, config.n_layers, w_obs=config.w_obs,
                                             w_int=config.w_int, noise=noise))
    if config.generator == 'lower-bound':
        pair = lower_bound_pair(config.d, config.n_layers, config.horizon, truncated=True)
        return pair.instances[1 if config.twin else 0]
    return random_dag(config.n_nodes, config.d, seed=config.instance_seed, noise=noise)


def resolve_params(instance: SemInstance, delta: float = 0.05, c: float = 2.,
                   eta: Union[float, str, None] = 'auto', m: Union[float, str, None] = 'auto',
                   lam: Union[float, str, None] = 'auto',
                   alpha: Union[float, str, None] = 'auto',
                   t1: Union[int, str, None] = 'auto', t2: Union[int, str, None] = 'auto',
                   **_) -> dict:
    """ Replace 'auto' (or None) parameters by their values for a given instance.

    Args:
        instance (SemInstance): the instance.
        delta, c, eta, m, lam, alpha, t1, t2: as in :py:class:`ExperimentConfig`, whose fields
            can be passed as keyword arguments.

    Returns:
        dict: eta (intervention margin), m (value bound), d (true max in-degree), lambda (None
        for the per-node formula), alpha (None for the default of each run), t1 and t2 (None for
        the exploration constants), delta and c.

    """

    out = {'delta': float(delta), 'c': float(c), 'd': instance.skeleton.max_in_degree}
    margin = intervention_margin(instance)
    out['eta'] = float(margin) if utils.is_auto(eta) else float(eta)
    out['m'] = float(value_bound(instance)) if utils.is_auto(m) else float(m)
    out['lambda'] = None if utils.is_auto(lam) else float(lam)
    out['alpha'] = None if utils.is_auto(alpha) else float(alpha)
    out['t1'] = None if utils.is_auto(t1) else int(t1)
    out['t2'] = None if utils.is_auto(t2) else int(t2)

    if not np.isfinite(out['eta']):
        # No eligible pair: any margin will do
        out['eta'] = 1.
    if not np.isfinite(out['m']):
        raise ConfigError('The value bound is infinite (unbounded noise): set m explicitly.',
                          key='m')

    if not utils.is_auto(eta) and out['eta'] > margin:
        msg = f'eta={out["eta"]} exceeds the true intervention margin {margin:.6g}.'
        warnings.warn(msg, SembanditWarning)
        logger.warning(msg)

    return out


def n_workers(config: Optional[ExperimentConfig] = None, prms: Optional[dict] = None) -> int:
    """ The size of the replication pool: the SEMBANDIT_N_WORKERS environment variable if set,
    else the config, else BENCH_PRMS['n_workers'], else 1. """

    if (env := os.environ.get(hardcoded.ENV_N_WORKERS)) is not None:
        try:
            out = int(env)
        except ValueError as err:
            raise ConfigError(f'{hardcoded.ENV_N_WORKERS} must be an integer, not: {env}',
                              key=hardcoded.ENV_N_WORKERS) from err
    elif config is not None and config.n_workers is not None:
        out = config.n_workers
    else:
        out = utils.setup_prms(prms)['BENCH_PRMS']['n_workers'] or 1

    if out < 1:
        raise ConfigError(f'The number of workers must be >= 1, not: {out}', key='n_workers')
    return out


def run_replication(instance: SemInstance, mode: str, resolved: dict, horizon: int,
                    seed: int, prms: Optional[dict] = None) -> tuple:
    """ One structure learning (unless the graph is known) + intervention design run.

    Args:
        instance (SemInstance): the environment.
        mode (str): the algorithm mode.
        resolved (dict): the parameters, from :py:func:`resolve_params`.
        horizon (int): T.
        seed (int): the seed of this replication.
        prms (dict, optional): parameters overriding the defaults. Defaults to None.

    Returns:
        SkeletonEstimate, RegretTrace: the structure used, and the trace with the
        structure-learning outcome in its metadata.

    """

    prms = utils.adjust_nested_dict(utils.setup_prms(prms),
                                    {'DELTA': resolved['delta'], 'T2_CONST': resolved['c'],
                                     'LAMBDA': 'auto' if resolved['lambda'] is None
                                     else resolved['lambda']})
    start = time.perf_counter()
    env = Environment(instance, seed=seed)

    if mode == 'known-graph':
        estimate = SkeletonEstimate.from_skeleton(instance.skeleton)
        rounds_used = 0
    else:
        (estimate, rounds_used) = run_structure_learning(
            env, resolved['eta'], resolved['m'], resolved['d'], prms=prms,
            t_1=resolved['t1'], t_2=resolved['t2'], truth=instance.skeleton)

    trace = run_intervention_design(env, estimate, horizon, alpha=resolved['alpha'],
                                    m=resolved['m'], mode=mode, prms=prms)

    sl_regret = 0. if mode == 'known-graph' else \
        structure_learning_regret(instance, estimate, trace.meta['mu_star'])
    trace.meta.update({'seed': seed, 'sl_rounds': rounds_used, 'sl_regret': sl_regret,
                       'order_valid': estimate.diagnostics.get('order_valid'),
                       'parents_contained': estimate.diagnostics.get('parents_contained'),
                       'wall_time': time.perf_counter() - start})
    return estimate, trace


def structure_learning_regret(instance: SemInstance, estimate: SkeletonEstimate,
                              mu_star: float) -> float:
    """ The exact regret incurred by the probe and top-up rounds of structure learning, given
    the best reward mean. """

    table = estimate.diagnostics['mean_table']
    mus = arm_means(instance.b_obs, instance.b_int, instance.nu, instance.skeleton.order,
                    arm_masks(table.probe_arms, instance.n_nodes))[:, -1]
    return float(np.sum(table.counts * (mu_star - mus)))


def _replicate(args: tuple) -> RegretTrace:
    """ Pool entry point: rebuild the instance and run one replication. """

    (inst_dict, mode, resolved, horizon, seed, index, prms) = args
    try:
        instance = SemInstance.from_dict(inst_dict, require_margin=False)
        return run_replication(instance, mode, resolved, horizon, seed, prms=prms)[1]
    except Exception as err:
        raise ReplicationError(index, err) from err


def _strip(trace: RegretTrace) -> RegretTrace:
    """ Drop the metadata that should not travel back from a worker. """
    trace.meta.pop('final_candidates', None)
    trace.meta.pop('coverage', None)
    return trace


@log_func_call(logger)
def run_experiment(config: ExperimentConfig, prms: Optional[dict] = None) -> dict:
    """ Run all the replications of an experiment, for every mode it lists.

    Args:
        config (ExperimentConfig): the experiment.
        prms (dict, optional): parameters overriding the defaults. Defaults to None.

    Returns:
        dict: mode -> (AggregateReport, list of RegretTrace), replications in index order.

    Replication r is seeded with ``config.seed_base + r`` and owns its random stream, so that
    the outcome does not depend on the number of workers. If ``config.output_dir`` is set, the
    report, the traces and a YAML summary are written there for each mode.

    """

    instance = build_instance(config)
    resolved = resolve_params(instance, **{key: val for (key, val) in asdict(config).items()
                                           if key != 'instance'})
    workers = n_workers(config, prms)
    logger.info('Running %d replications x %d modes with %d workers.', config.replications,
                len(config.mode), workers)

    out = {}
    for mode in config.mode:
        jobs = [(instance.to_dict(), mode, resolved, config.horizon, config.seed_base + ind,
                 ind, prms) for ind in range(config.replications)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                traces = list(pool.map(_strip_replicate, jobs))
        else:
            traces = [_strip_replicate(job) for job in jobs]

        summary = {'mode': mode, 'resolved': resolved,
                   'alphas': [trace.meta['alpha'] for trace in traces],
                   'sl_rounds': [trace.meta['sl_rounds'] for trace in traces],
                   'sl_regret': [trace.meta['sl_regret'] for trace in traces]}
        if mode != 'known-graph':
            summary.update(recovery_rates(traces))
        report = AggregateReport.from_traces(traces, summary=summary)
        out[mode] = (report, traces)

        if config.output_dir is not None:
            write_outputs(Path(config.output_dir), mode, report, traces)

    return out


def _strip_replicate(args: tuple) -> RegretTrace:
    return _strip(_replicate(args))


def recovery_rates(traces: Sequence[RegretTrace]) -> dict:
    """ Structure-learning success rates across replications. """
    return recovery_summary([trace.meta for trace in traces])


def write_outputs(out_dir: Path, mode: str, report: AggregateReport,
                  traces: Sequence[RegretTrace]) -> None:
    """ Write the report, the traces and the summary of one mode to a directory. """

    if not out_dir.is_dir():
        raise SembanditError(f'output_dir does not appear to be a directory: {out_dir}')
    write_csv(report, out_dir / f'report_{mode}.csv')
    for (ind, trace) in enumerate(traces):
        write_csv(trace, out_dir / f'trace_{mode}_{ind:03d}.csv')
    write_bundle(to_builtin(report.summary), out_dir / f'summary_{mode}.yml')


def to_builtin(obj):
    """ Turn numpy scalars and arrays nested in dicts and lists into plain Python objects. """

    if isinstance(obj, dict):
        return {str(key): to_builtin(val) for (key, val) in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@log_func_call(logger)
def scaling_sweep(axis: str, values: Sequence[int], base: ExperimentConfig,
                  prms: Optional[dict] = None) -> pd.DataFrame:
    """ Final regret as a function of the depth L or of the layer width d of hierarchical
    instances.

    Args:
        axis (str): 'L' or 'd'.
        values (list of int): the values to sweep, ascending.
        base (ExperimentConfig): the config to re-parameterize. d is pinned to 2 when sweeping
            L, and L to 2 when sweeping d.
        prms (dict, optional): parameters overriding the defaults. Defaults to None.

    Returns:
        pd.DataFrame: one row per (value, mode), with the final mean regret and its standard
        error.

    """

    if axis not in ['L', 'd']:
        raise ConfigError(f'axis must be L or d, not: {axis}', key='axis')
    values = list(values)
    if len(values) == 0 or any(nxt <= prev for (prev, nxt) in zip(values[:-1], values[1:])):
        raise ConfigError(f'values must be non-empty and ascending, not: {values}', key='values')

    rows = []
    for val in values:
        if axis == 'L':
            config = base.replace(instance=None, generator='hierarchical', d=2, n_layers=val,
                                  output_dir=None)
        else:
            config = base.replace(instance=None, generator='hierarchical', d=val, n_layers=2,
                                  output_dir=None)
        for (mode, (report, _)) in run_experiment(config, prms=prms).items():
            rows += [{'axis': axis, 'value': int(val), 'mode': mode,
                      'final_mean_regret': report.final_mean,
                      'final_se_regret': report.final_se}]
            logger.info('Sweep %s=%d (%s): final regret %.6g', axis, val, mode,
                        report.final_mean)

    return pd.DataFrame(rows)


def write_csv(obj: Union[RegretTrace, AggregateReport, pd.DataFrame],
              pth: Union[str, Path]) -> None:
    """ Write a trace, a report or a table to CSV, with 12 significant digits.

    Args:
        obj (RegretTrace|AggregateReport|pd.DataFrame): what to write.
        pth (str|Path): path+filename.

    """

    data = obj if isinstance(obj, pd.DataFrame) else obj.data
    try:
        data.to_csv(pth, index=False, float_format=f'%.{hardcoded.CSV_SIG_DIGITS}g')
    except OSError as err:
        raise SembanditError(f'Cannot write {pth}: {err}') from err


def read_csv(pth: Union[str, Path], kind: str = 'trace') -> Union[RegretTrace, AggregateReport]:
    """ Read back a CSV file written by :py:func:`write_csv`.

    Args:
        pth (str|Path): path+filename.
        kind (str, optional): 'trace' or 'report'. Defaults to 'trace'.

    Returns:
        RegretTrace|AggregateReport: the data (reports come back with R = 1 and no summary, as
        only the per-round table is stored in CSV).

    """

    if kind not in ['trace', 'report']:
        raise SembanditError(f'kind must be trace or report, not: {kind}')
    cols = hardcoded.TRACE_COLS if kind == 'trace' else hardcoded.REPORT_COLS
    try:
        data = pd.read_csv(pth, dtype=cols)
    except OSError as err:
        raise SembanditError(f'Cannot read {pth}: {err}') from err

    if kind == 'trace':
        return RegretTrace(data)
    return AggregateReport(data, 1)
