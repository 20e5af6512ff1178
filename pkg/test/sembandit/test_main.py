"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module content: tests for the command line entry point
"""

# Import from Python
from pytest import mark, param
import pandas as pd
from ruamel.yaml import YAML

# Import from this package
from sembandit.__main__ import main, EXIT_OK, EXIT_CONFIG, EXIT_FAULT
from sembandit.sem import read_instance
from sembandit.gallery import HierarchicalSpec, hierarchical
from sembandit.bench import read_csv


def test_make_instance(tmp_path):
    """ Test the make-instance command. """

    pth = tmp_path / 'inst.yml'
    assert main(['make-instance', 'hierarchical', '--d', '2', '--layers', '2',
                 '--out', str(pth)]) == EXIT_OK
    assert read_instance(pth) == hierarchical(HierarchicalSpec(2, 2))

    pth = tmp_path / 'random.yml'
    assert main(['make-instance', 'random', '--n-nodes', '5', '--d', '2', '--seed', '3',
                 '--out', str(pth)]) == EXIT_OK
    assert read_instance(pth).n_nodes == 5

    pth = tmp_path / 'pair.yml'
    assert main(['make-instance', 'lower-bound', '--d', '2', '--layers', '2', '--truncated',
                 '--out', str(pth)]) == EXIT_OK
    content = YAML(typ='safe').load(pth)
    assert 'kl' in content['metadata']
    assert read_instance(pth, key='instance_I').n_nodes == 5


def test_simulate(tmp_path, capsys):
    """ Test the simulate command. """

    inst = tmp_path / 'inst.yml'
    main(['make-instance', 'hierarchical', '--d', '1', '--layers', '2', '--out', str(inst)])

    out = tmp_path / 'draws.csv'
    assert main(['simulate', '--instance', str(inst), '--arm', '2,3', '--n', '20',
                 '--seed', '1', '--out', str(out)]) == EXIT_OK
    data = pd.read_csv(out)
    assert list(data.columns) == ['X1', 'X2', 'X3']
    assert len(data) == 20
    # Under the arm, mu_2 = 0.5 * 0.5 + 0.5 and mu_3 = 0.5 * 0.75 + 0.5
    assert 'X3: 0.875' in capsys.readouterr().out


def test_learn_structure(tmp_path):
    """ Test the learn-structure command. """

    inst = tmp_path / 'inst.yml'
    main(['make-instance', 'hierarchical', '--d', '1', '--layers', '2', '--out', str(inst)])

    out = tmp_path / 'structure.yml'
    assert main(['learn-structure', '--instance', str(inst), '--seed', '1',
                 '--out', str(out)]) == EXIT_OK
    content = YAML(typ='safe').load(out)
    assert content['order'] == [1, 2, 3]
    assert set(content) >= {'de_hat', 'an_hat', 'pa_hat', 'rounds_used', 'diagnostics'}


def test_run_bandit_and_bench(tmp_path):
    """ Test the run-bandit and bench commands. """

    inst = tmp_path / 'inst.yml'
    main(['make-instance', 'hierarchical', '--d', '2', '--layers', '1', '--out', str(inst)])

    out = tmp_path / 'trace.csv'
    assert main(['run-bandit', '--instance', str(inst), '--horizon', '50', '--mode',
                 'graph-dependent', '--alpha', '0.1', '--t1', '200', '--seed', '2',
                 '--out', str(out)]) == EXIT_OK
    assert read_csv(out).horizon == 50

    config = tmp_path / 'config.yml'
    config.write_text(f'instance: {inst}\nhorizon: 30\nreplications: 2\nmode: known-graph\n' +
                      f'output_dir: {tmp_path}\n', encoding='utf-8')
    assert main(['bench', '--config', str(config)]) == EXIT_OK
    assert (tmp_path / 'report_known-graph.csv').is_file()


@mark.parametrize('argv, code', [
    param([], EXIT_CONFIG, id='no command'),
    param(['fly'], EXIT_CONFIG, id='unknown command'),
    param(['run-bandit', '--horizon', '10'], EXIT_CONFIG, id='missing argument'),
    param(['run-bandit', '--instance', 'x.yml', '--horizon', 'ten', '--out', 'x.csv'],
          EXIT_CONFIG, id='bad type'),
    param(['simulate', '--instance', 'x.yml', '--arm', 'a,b', '--out', 'x.csv'], EXIT_CONFIG,
          id='bad arm'),
    param(['run-bandit', '--instance', 'missing.yml', '--horizon', '10', '--out', 'x.csv'],
          EXIT_FAULT, id='missing instance'),
])
def test_exit_codes(argv, code):
    """ Test the exit codes of the entry point. """

    assert main(argv) == code


def test_exit_codes_bench(tmp_path):
    """ Config problems of the bench command. """

    config = tmp_path / 'config.yml'
    config.write_text('generator: hierarchical\nhorizon: -1\n', encoding='utf-8')
    assert main(['bench', '--config', str(config)]) == EXIT_CONFIG

    config.write_text('generator: hierarchical\nspeed: 12\n', encoding='utf-8')
    assert main(['bench', '--config', str(config)]) == EXIT_CONFIG

    assert main(['bench', '--config', str(tmp_path / 'missing.yml')]) == EXIT_CONFIG


def test_copy_prm_file_command(tmp_path):
    """ Test the copy-prm-file command. """

    assert main(['copy-prm-file', '--save-loc', str(tmp_path)]) == EXIT_OK
    assert (tmp_path / 'sembandit_default_prms.yml').is_file()
    # Second time round, the file exists already
    assert main(['copy-prm-file', '--save-loc', str(tmp_path)]) == EXIT_FAULT


def test_speed_test(capsys):
    """ Test the speed-test command. """

    assert main(['speed-test', '--niter', '1']) == EXIT_OK
    assert 'rounds/s' in capsys.readouterr().out
