"""
Copyright (c) 2024 sembandit contributors, listed in AUTHORS.

Distributed under the terms of the 3-Clause BSD License.

SPDX-License-Identifier: BSD-3-Clause

Module content: tests for the core module
"""

# Import from Python
from pytest import mark, param, raises, warns

# Import from this package
from sembandit import dynamic, hardcoded
from sembandit.errors import SembanditError, SembanditWarning, ConfigError
from sembandit.gallery import HierarchicalSpec, hierarchical
from sembandit.data import RegretTrace
from sembandit.core import copy_prm_file, reset_prms, set_prms, run, demo


def test_copy_prm_file(tmp_path):
    """ Test the copy_prm_file routine. """

    copy_prm_file(save_loc=tmp_path, which='default')
    assert (tmp_path / 'sembandit_default_prms.yml').is_file()

    # No overwriting
    with raises(SembanditError):
        copy_prm_file(save_loc=tmp_path, which='default')
    with raises(SembanditError):
        copy_prm_file(save_loc=tmp_path, which='nope')
    with raises(SembanditError):
        copy_prm_file(save_loc=tmp_path / 'missing')
    with raises(SembanditError):
        copy_prm_file(save_loc=tmp_path / 'sembandit_default_prms.yml')


def test_set_prms(tmp_path):
    """ Test the set_prms and reset_prms routines. """

    pth = tmp_path / 'my_prms.yml'
    pth.write_text('DELTA: 0.1\nLASSO_PRMS:\n    tol: 1.0e-6\n', encoding='utf-8')
    set_prms(pth)
    assert dynamic.SEMBANDIT_PRMS['DELTA'] == 0.1
    assert dynamic.SEMBANDIT_PRMS['LASSO_PRMS']['tol'] == 1e-6
    assert dynamic.SEMBANDIT_PRMS['LASSO_PRMS']['max_iter'] == 100000

    reset_prms(which='DELTA')
    assert dynamic.SEMBANDIT_PRMS['DELTA'] == 0.05
    assert dynamic.SEMBANDIT_PRMS['LASSO_PRMS']['tol'] == 1e-6

    reset_prms()
    assert dynamic.SEMBANDIT_PRMS['LASSO_PRMS']['tol'] == 1e-8

    with raises(SembanditError):
        reset_prms(which=['DELTA', 'GAMMA'])
    with raises(SembanditError):
        set_prms(tmp_path / 'missing.yml')
    with raises(SembanditError):
        set_prms(tmp_path)

    bad = tmp_path / 'bad.yml'
    bad.write_text('DELTA: [0.1\n', encoding='utf-8')
    with raises(ConfigError):
        set_prms(bad)
    bad.write_text('- DELTA\n', encoding='utf-8')
    with raises(ConfigError):
        set_prms(bad)

    other = tmp_path / 'my_prms.yaml'
    other.write_text('ARM_GUARD: 12\n', encoding='utf-8')
    with warns(SembanditWarning):
        set_prms(str(other))
    assert dynamic.SEMBANDIT_PRMS['ARM_GUARD'] == 12
    reset_prms()


@mark.parametrize('mode', [param(item, id=item) for item in hardcoded.MODES])
def test_run(mode):
    """ Test the run routine, in every mode. """

    inst = hierarchical(HierarchicalSpec(2, 1))
    (estimate, trace) = run(inst, 100, mode=mode, seed=5,
                            prms={'T1': 300, 'ALPHA': 0.5, 'LAMBDA': 0.1})

    assert isinstance(trace, RegretTrace)
    assert trace.horizon == 100
    assert trace.meta['mode'] == mode
    assert trace.meta['alpha'] == 0.5
    assert estimate.n_nodes == 3
    assert trace.final_regret >= 0
    if mode != 'known-graph':
        assert estimate.diagnostics['t1'] == 300
        assert estimate.diagnostics['lambdas'][3] == 0.1

    # The same seed gives the same run
    (_, again) = run(inst, 100, mode=mode, seed=5, prms={'T1': 300, 'ALPHA': 0.5, 'LAMBDA': 0.1})
    assert again.data.equals(trace.data)

    with raises(SembanditError):
        run(inst, 100, mode='oracle')


def test_demo():
    """ Test the demo routine. """

    (inst, trace) = demo()

    assert inst.n_nodes == 5
    assert trace.horizon == 2000
    assert trace.meta['mode'] == 'known-graph'
    assert trace.meta['locked_arm'] is None or trace.meta['locked_arm'] in \
        trace.meta['final_candidates']
    assert 0 <= trace.final_regret <= 2000 * trace.meta['mu_star']
