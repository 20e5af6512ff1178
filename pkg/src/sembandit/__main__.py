"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module contains: high-level entry point routines
"""

# Import from Python
import sys
import argparse
import logging
import platform
import multiprocessing as mp
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence
import numpy as np
import pandas as pd
from ruamel.yaml.error import YAMLError

# Import from this package
from .version import VERSION
from .errors import SembanditError, ConfigError
from .sem import Arm, Environment, read_instance, write_instance, exact_means, \
    intervention_margin, value_bound, write_bundle
from .learner import run_structure_learning
from .gallery import HierarchicalSpec, hierarchical, lower_bound_pair, random_dag
from .noise import NoiseSpec
from .bench import ExperimentConfig, run_experiment, write_csv, to_builtin
from .core import copy_prm_file, run
from .utils import performance
from . import hardcoded

# Instantiate the module logger
logger = logging.getLogger(__name__)

#: int: exit code of a successful command
EXIT_OK = 0
#: int: exit code of a configuration or argument problem
EXIT_CONFIG = 1
#: int: exit code of a runtime fault
EXIT_FAULT = 2


class _Parser(argparse.ArgumentParser):
    """ An ArgumentParser that reports bad arguments as a ConfigError instead of exiting. """

    def error(self, message: str):
        raise ConfigError(message)


def _auto_float(val: str):
    """ argparse type for 'auto' or a float. """
    if val.lower() == 'auto':
        return 'auto'
    try:
        return float(val)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f'expected a number or auto, not: {val}') from err


def _arm(val: str) -> Arm:
    """ argparse type for a comma-separated list of nodes (empty for the observational arm). """
    try:
        return Arm(tuple(int(item) for item in val.split(',') if item.strip()))
    except ValueError as err:
        raise argparse.ArgumentTypeError(f'expected nodes like 1,3,4, not: {val}') from err


def cmd_simulate(args: argparse.Namespace) -> None:
    """ Draw realizations of an instance under an arm. """

    instance = read_instance(args.instance)
    xs = Environment(instance, seed=args.seed).pull(args.arm, n=args.n)
    data = pd.DataFrame(xs, columns=[f'X{i}' for i in instance.skeleton.nodes])
    write_csv(data, args.out)

    means = exact_means(instance, args.arm)
    print(f'Exact means under {args.arm}:')
    for i in instance.skeleton.nodes:
        print(f' * X{i}: {means[i - 1]:.12g}')


def cmd_learn_structure(args: argparse.Namespace) -> None:
    """ Run structure learning and write the estimate as YAML. """

    instance = read_instance(args.instance)
    eta = intervention_margin(instance) if args.eta == 'auto' else args.eta
    if not np.isfinite(eta):
        eta = 1.
    env = Environment(instance, seed=args.seed)
    (estimate, rounds) = run_structure_learning(
        env, eta, value_bound(instance), instance.skeleton.max_in_degree,
        prms={'DELTA': args.delta}, truth=instance.skeleton)

    diag = {key: val for (key, val) in estimate.diagnostics.items()
            if key not in ['mean_table', 'lasso_coef']}
    content = {'de_hat': {i: sorted(val) for (i, val) in estimate.de_hat.items()},
               'an_hat': {i: sorted(val) for (i, val) in estimate.an_hat.items()},
               'pa_hat': {i: sorted(val) for (i, val) in estimate.pa_hat.items()},
               'order': list(estimate.order), 'rounds_used': rounds,
               'kappa_report': estimate.kappa_report, 'diagnostics': diag}
    write_bundle(to_builtin(content), args.out)
    print(f'Order: {estimate.order} ({rounds} rounds)')


def cmd_run_bandit(args: argparse.Namespace) -> None:
    """ Run the bandit on an instance and write the trace. """

    instance = read_instance(args.instance)
    prms = {'ALPHA': args.alpha, 'DELTA': args.delta,
            'T1': 'auto' if args.t1 is None else args.t1,
            'T2': 'auto' if args.t2 is None else args.t2}
    (_, trace) = run(instance, args.horizon, mode=args.mode, seed=args.seed, prms=prms)
    write_csv(trace, args.out)
    print(f'Cumulative regret after {trace.horizon} rounds: {trace.final_regret:.6g}')


def cmd_bench(args: argparse.Namespace) -> None:
    """ Run an experiment from a config file. """

    config = ExperimentConfig.from_yaml(args.config)
    for (mode, (report, _)) in run_experiment(config).items():
        print(f'{mode}: final mean regret {report.final_mean:.6g}' +
              f' [se {report.final_se:.3g}] over {report.n_replications} replications')


def cmd_make_instance(args: argparse.Namespace) -> None:
    """ Generate an instance file. """

    noise = NoiseSpec.uniform(args.noise_lo, args.noise_hi)
    if args.kind == 'hierarchical':
        instance = hierarchical(HierarchicalSpec(args.d, args.layers, w_obs=args.w_obs,
                                                 w_int=args.w_int, noise=noise))
        write_instance(instance, args.out)
    elif args.kind == 'random':
        instance = random_dag(args.n_nodes, args.d, seed=args.seed, noise=noise)
        write_instance(instance, args.out)
    else:
        pair = lower_bound_pair(args.d, args.layers, args.horizon, m_b=args.m_b,
                                truncated=args.truncated)
        pair.write(args.out)
    print(f'Instance written to {args.out}')


def cmd_speed_test(args: argparse.Namespace) -> None:
    """ Time the demo. """

    out = performance.get_speed_benchmark(niter=args.niter)

    print(f'\n{datetime.now():%Y-%m-%d %H:%M:%S} on {platform.platform()}, ' +
          f'{mp.cpu_count()} CPUs')
    print(f'sembandit.demo() over {out["niter"]} runs:')
    print(f' * mean [std]: {out["mean"]:.2f}s [{out["std"]:.2f}s]')
    print(f' * median [min; max]: {out["median"]:.2f}s [{out["min"]:.2f}s; {out["max"]:.2f}s]')
    print(f' * throughput: {out["rounds_per_s"]:.0f} rounds/s\n')


def cmd_copy_prm_file(args: argparse.Namespace) -> None:
    """ Get a local copy of a parameter file. """

    copy_prm_file(save_loc=args.save_loc, which=args.which)
    print('\nSuccess.')


def build_parser() -> argparse.ArgumentParser:
    """ The command line parser, with one sub-parser per command. """

    parser = _Parser(
        prog='sembandit',
        description=f'sembandit {VERSION} - causal bandits on linear structural equation' +
        ' models with soft interventions.',
        formatter_class=argparse.RawTextHelpFormatter)
    parser.add_argument('--verbose', '-v', action='count', default=0,
                        help='Log more (-v: INFO, -vv: DEBUG).')
    subs = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    sub = subs.add_parser('simulate', help='Draw realizations under an arm.')
    sub.add_argument('--instance', required=True, type=Path, help='Instance file.')
    sub.add_argument('--arm', default=Arm(), type=_arm,
                     help='Intervened nodes, comma-separated. Defaults to none.')
    sub.add_argument('--n', default=1, type=int, help='Number of realizations.')
    sub.add_argument('--seed', default=None, type=int, help='Seed.')
    sub.add_argument('--out', required=True, type=Path, help='Output CSV file.')
    sub.set_defaults(func=cmd_simulate)

    sub = subs.add_parser('learn-structure', help='Learn ancestors and parents.')
    sub.add_argument('--instance', required=True, type=Path, help='Instance file.')
    sub.add_argument('--delta', default=0.05, type=float, help='Confidence level.')
    sub.add_argument('--eta', default='auto', type=_auto_float, help='Margin, or auto.')
    sub.add_argument('--seed', default=None, type=int, help='Seed.')
    sub.add_argument('--out', required=True, type=Path, help='Output YAML file.')
    sub.set_defaults(func=cmd_learn_structure)

    sub = subs.add_parser('run-bandit', help='Run the bandit and write its trace.')
    sub.add_argument('--instance', required=True, type=Path, help='Instance file.')
    sub.add_argument('--horizon', required=True, type=int, help='Number of rounds T.')
    sub.add_argument('--alpha', default='auto', type=_auto_float, help='Width multiplier.')
    sub.add_argument('--delta', default=0.05, type=float, help='Confidence level.')
    sub.add_argument('--mode', default='unknown-graph', choices=hardcoded.MODES,
                     help='Algorithm mode.')
    sub.add_argument('--t1', default=None, type=int, help='T1 (default: auto).')
    sub.add_argument('--t2', default=None, type=int, help='T2 (default: auto).')
    sub.add_argument('--seed', default=None, type=int, help='Seed.')
    sub.add_argument('--out', required=True, type=Path, help='Output CSV file.')
    sub.set_defaults(func=cmd_run_bandit)

    sub = subs.add_parser('bench', help='Run an experiment config.')
    sub.add_argument('--config', required=True, type=Path, help='Experiment YAML file.')
    sub.set_defaults(func=cmd_bench)

    sub = subs.add_parser('make-instance', help='Generate an instance file.')
    sub.add_argument('kind', choices=['hierarchical', 'lower-bound', 'random'])
    sub.add_argument('--d', default=2, type=int, help='Layer width, or max in-degree.')
    sub.add_argument('--layers', default=2, type=int, help='Number of layers L.')
    sub.add_argument('--n-nodes', default=6, type=int, help='Number of nodes (random).')
    sub.add_argument('--w-obs', default=1., type=float, help='Observational weight.')
    sub.add_argument('--w-int', default=0.5, type=float, help='Interventional weight.')
    sub.add_argument('--noise-lo', default=0., type=float, help='Uniform noise lower bound.')
    sub.add_argument('--noise-hi', default=1., type=float, help='Uniform noise upper bound.')
    sub.add_argument('--horizon', default=10000, type=int, help='T (lower-bound).')
    sub.add_argument('--m-b', default=1., type=float, help='Weight bound (lower-bound).')
    sub.add_argument('--truncated', action='store_true',
                     help='Truncated Gaussian noise (lower-bound).')
    sub.add_argument('--seed', default=0, type=int, help='Seed (random).')
    sub.add_argument('--out', required=True, type=Path, help='Output YAML file.')
    sub.set_defaults(func=cmd_make_instance)

    sub = subs.add_parser('speed-test', help='Time the demo on this machine.')
    sub.add_argument('--niter', default=10, type=int, help='Number of demo() runs.')
    sub.set_defaults(func=cmd_speed_test)

    sub = subs.add_parser('copy-prm-file', help='Get a local copy of a parameter file.')
    sub.add_argument('--which', default='default', type=str, help='Parameter file name.')
    sub.add_argument('--save-loc', default='./', type=str, help='Where to copy it.')
    sub.set_defaults(func=cmd_copy_prm_file)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """ The sembandit entry point, meant to be launched from the command line.

    Returns:
        int: 0 on success, 1 for configuration or argument problems, 2 for runtime faults.

    """

    try:
        args = build_parser().parse_args(argv)
    except ConfigError as err:
        print(f'sembandit: {err}', file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(level={0: logging.WARNING, 1: logging.INFO}.get(args.verbose,
                                                                        logging.DEBUG))

    try:
        args.func(args)
    except (ConfigError, YAMLError) as err:
        logger.error('Configuration problem: %s', err)
        return EXIT_CONFIG
    except SembanditError as err:
        logger.error('%s', err)
        return EXIT_FAULT
    except Exception:  # pylint: disable=broad-except
        logger.exception('Unexpected fault.')
        return EXIT_FAULT

    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
