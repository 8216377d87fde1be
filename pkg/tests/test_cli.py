import io
import json

import pytest

from inertlab.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, run_command
from inertlab.scenarios import get_scenario

Z3_Q3 = {'atoms': [{'kind': 'cyclic', 'p': 3, 'k': 1}, {'kind': 'localizedQ', 'p': 3}]}
PRUEFER_Q2 = {'atoms': [{'kind': 'pruefer', 'p': 2}, {'kind': 'localizedQ', 'p': 2}]}
Z = {'atoms': [{'kind': 'freeZ'}]}
CRITICAL = {'atoms': [{'kind': 'pruefer', 'p': 2}, {'kind': 'cyclicOmega', 'p': 2, 'k': 2}]}
THREE_ON_Q = {'tag': 'BlockSum', 'blocks': [{'atom': 1, 'expr': {'tag': 'RatMult', 'm': 3}}]}
TWO_ON_Q = {'tag': 'BlockSum', 'blocks': [{'atom': 1, 'expr': {'tag': 'RatMult', 'm': 2}}]}


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    status = run_command(list(argv), out, err)
    return status, out.getvalue(), err.getvalue()


def test_inertia_check_passes_for_gamma_3(write_json):
    status, out, _ = run('inertia', 'check', '--group', write_json('g.json', Z3_Q3),
                         '--auto', write_json('a.json', THREE_ON_Q), '--format', 'json')
    assert status == EXIT_PASS
    report = json.loads(out)
    assert report['fields']['verdict'] == 'INERTIAL'
    assert report['data']['verdict']['case'] == 'Recalls-2'


def test_inertia_check_exit_status_follows_expectation(write_json):
    group, auto = write_json('g.json', PRUEFER_Q2), write_json('a.json', TWO_ON_Q)
    assert run('inertia', 'check', '--group', group, '--auto', auto)[0] == EXIT_FAIL
    assert run('inertia', 'check', '--group', group, '--auto', auto, '--expect', 'NOT_INERTIAL')[0] == EXIT_PASS


def test_almost_power_and_falsify(write_json):
    group, auto = write_json('g.json', Z3_Q3), write_json('a.json', THREE_ON_Q)
    assert run('inertia', 'almost-power', '--group', group, '--auto', auto)[0] == EXIT_PASS
    status, out, _ = run('inertia', 'falsify', '--group', group, '--auto', auto, '--trials', '30')
    assert status == EXIT_PASS
    assert 'witness' in out


def test_missing_group_is_a_usage_error(write_json):
    status, _, err = run('inertia', 'check', '--auto', write_json('a.json', THREE_ON_Q))
    assert status == EXIT_USAGE
    assert 'error: Usage' in err


def test_no_subcommand_is_a_usage_error():
    assert run()[0] == EXIT_USAGE
    assert run('inertia')[0] == EXIT_USAGE


def test_version():
    assert run('--version')[0] == EXIT_PASS


def test_parse_error_reports_token_and_position(write_json):
    bad = write_json('bad.json', {'atoms': [{'kind': 'cyclic', 'p': 4, 'k': 1}]})
    status, out, err = run('eexp', '--group', bad, '--format', 'json')
    assert status == EXIT_USAGE
    assert out == ''
    report = json.loads(err)
    assert report['data']['token'] == '4'
    assert report['data']['position'] == '$.atoms[0]'


def test_missing_file_is_a_usage_error(tmp_path):
    assert run('eexp', '--group', str(tmp_path / 'absent.json'))[0] == EXIT_USAGE


def test_invalid_automorphism_fails(write_json):
    auto = write_json('a.json', {'tag': 'RatMult', 'm': 1, 'n': 2})
    status, _, err = run('inertia', 'check', '--group', write_json('g.json', Z), '--auto', auto)
    assert status == EXIT_FAIL
    assert 'Not An Automorphism' in err


def test_eexp_report(write_json):
    status, out, _ = run('eexp', '--group', write_json('g.json', CRITICAL), '--format', 'json')
    assert status == EXIT_PASS
    fields = json.loads(out)['fields']
    assert fields['r0'] == '0'
    assert fields['critical primes'] == '[2]'


def test_comm(write_json):
    group = write_json('g.json', Z)
    two = write_json('h.json', {'generators': [{'coords': [{'atom': 0, 'value': 2}]}]})
    three = write_json('k.json', {'generators': [{'coords': [{'atom': 0, 'value': 3}]}]})
    status, out, _ = run('comm', '--group', group, '--sub', two, '--sub', three,
                         '--expect', 'commensurable', '--format', 'json')
    assert status == EXIT_PASS
    assert json.loads(out)['data']['commensurable'] is True
    assert run('comm', '--group', group, '--sub', two)[0] == EXIT_USAGE


def test_decompose_hypothesis_failure(write_json):
    status, _, err = run('decompose', 'pgroup', '--group', write_json('g.json', Z3_Q3))
    assert status == EXIT_FAIL
    assert 'Hypotheses Not Met' in err


def test_decompose_critical_pgroup(write_json):
    status, out, _ = run('decompose', 'pgroup', '--group', write_json('g.json', CRITICAL), '--budget', '2',
                         '--format', 'json')
    assert status == EXIT_PASS
    assert json.loads(out)['data']['tag'] == 'PROP51_CRIT'


@pytest.mark.parametrize('argv', [
    ['scenario', 'run', 'few-automorphisms', '--budget', '3'],
    ['scenario', 'run', 'counterexample', '--primes', '5'],
    ['scenario', 'run', 'fc-center', '--budget', '5'],
    ['scenario', 'run', 'non-nilpotent', '--n', '4', '--s', '2'],
])
def test_scenarios_pass(argv):
    status, out, _ = run(*argv)
    assert status == EXIT_PASS, out


def test_unknown_scenario():
    assert run('scenario', 'run', 'no-such-thing')[0] == EXIT_USAGE


def test_scenario_list():
    status, out, _ = run('scenario', 'list', '--format', 'json')
    assert status == EXIT_PASS
    names = [s['name'] for s in json.loads(out)['data']['scenarios']]
    assert names == sorted(names)
    assert 'counterexample' in names


def test_json_reports_are_reproducible():
    argv = ['scenario', 'run', 'split-bounded', '--seed', '7', '--budget', '3', '--format', 'json']
    assert run(*argv)[1] == run(*argv)[1]


def test_scenario_suite_passes():
    status, out, _ = run('scenario', 'all', '--budget', '3', '--seed', '0', '--format', 'json')
    report = json.loads(out)
    assert status == EXIT_PASS, [c['name'] for c in report['checks'] if c['status'] == 'fail']
    assert {c['provenance'] for c in report['checks']} <= {'PAPER', 'TRIVIAL', 'DERIVED'}


@pytest.mark.slow
@pytest.mark.parametrize('name', ['few-automorphisms', 'theorem-b-factor', 'split-bounded'])
def test_scenarios_pass_at_full_size(name):
    result = get_scenario(name).run(budget=3, seed=0)
    assert result.passed, [a.id for a in result.assertions if not a.passed]
    details = {a.id: a.detail for a in result.assertions}
    if name == 'few-automorphisms':
        assert int(details['p3.others'].split()[0]) > 50
    if name == 'theorem-b-factor':
        assert int(details['round-trip'].split()[0]) > 0
