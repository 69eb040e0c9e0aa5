import json
import os

import pytest

from app.commands import experiment_commands
from app.exceptions import AcceptanceCheckError, NumericalError


@pytest.fixture
def out_dir(tmp_path):
    return str(tmp_path / 'out')


@pytest.fixture
def scenario(out_dir):
    return {
        'name': 'demo',
        'distribution': {'kind': 'uniform', 'low': 0.0, 'high': 1.0},
        'n': 2,
        'T': 2,
        'beta': 0.9,
        'policy': {'tau': [0.0, 0.0], 'sigma': [-1.0, -1.0]},
        'utility': {'kind': 'log', 'w1': 0.5},
        'mc': {'paths': 20000, 'seed': 7, 'tolerance_sigmas': 4},
        'regimes': ['dollars', 'tokens'],
        'output': {'dir': out_dir, 'prefix': 'demo'},
        'extension': {'c_grid': [0.0, 5.0], 'sigma_grid_points': 41},
    }


def body(path):
    with open(path) as handle:
        return handle.read().splitlines()[1:]


def test_validate_accepts_a_valid_scenario(runner, write_scenario, scenario):
    result = runner.invoke(args=['validate', '--config', write_scenario(scenario)])
    assert result.exit_code == 0
    assert 'OK' in result.output


def test_validate_lists_violations(runner, write_scenario, scenario):
    scenario['policy']['sigma'] = [-1.5, 0.0]
    result = runner.invoke(args=['validate', '--config', write_scenario(scenario)])
    assert result.exit_code == 2
    assert 'policy.sigma[0]=-1.5: sigma below -1' in result.output


def test_invalid_scenario_exits_with_config_code(runner, write_scenario, scenario):
    scenario['beta'] = 1.5
    result = runner.invoke(args=['solve', '--config', write_scenario(scenario)])
    assert result.exit_code == 2


def test_missing_config_exits_with_config_code(runner, tmp_path):
    result = runner.invoke(args=['solve', '--config', str(tmp_path / 'nope.yaml')])
    assert result.exit_code == 2


def test_solve_writes_the_profile(runner, write_scenario, scenario, out_dir):
    result = runner.invoke(args=['solve', '--config', write_scenario(scenario)])
    assert result.exit_code == 0, result.output
    path = os.path.join(out_dir, 'demo_solve.csv')
    lines = open(path).read().splitlines()
    assert lines[2] == '# seed=7'
    assert lines[4] == 't,P_t,speculation_prob'
    assert float(lines[5].split(',')[1]) == pytest.approx(1 / 3 + 0.9 / 3, abs=1e-9)


def test_overrides_apply_to_seed_and_format(runner, write_scenario, scenario, out_dir):
    result = runner.invoke(args=['solve', '--config', write_scenario(scenario), '--seed', '99', '--format', 'json'])
    assert result.exit_code == 0, result.output
    document = json.load(open(os.path.join(out_dir, 'demo_solve.json')))
    assert document['metadata']['seed'] == '99'
    assert len(document['data']['rows']) == 2


def test_simulate_is_reproducible(runner, write_scenario, scenario, out_dir):
    config_path = write_scenario(scenario)
    first = runner.invoke(args=['simulate', '--config', config_path, '--paths', '500'])
    assert first.exit_code == 0, first.output
    bodies = {kind: body(os.path.join(out_dir, f'demo_{kind}.csv'))
              for kind in ('trace_tokens', 'trace_dollars', 'revenue_profile')}

    second = runner.invoke(args=['simulate', '--config', config_path, '--paths', '500'])
    assert second.exit_code == 0
    for kind, lines in bodies.items():
        assert body(os.path.join(out_dir, f'demo_{kind}.csv')) == lines
    assert bodies['trace_tokens'][3] == 'path_id,t,B,p,S,M,A,revenue,bidder_payoff_mean'


def test_burn_demo_passes(runner, write_scenario, scenario):
    result = runner.invoke(args=['burn-demo', '--config', write_scenario(scenario)])
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)['summary']
    assert summary['max_later_revenue'] == 0.0


def test_compare_formats_passes(runner, write_scenario, scenario):
    result = runner.invoke(args=['compare-formats', '--config', write_scenario(scenario)])
    assert result.exit_code == 0, result.output


def test_compare_formats_with_atoms_is_unsupported(runner, write_scenario, scenario):
    scenario['distribution'] = {'kind': 'discrete', 'atoms': [[1.0, 0.5], [2.0, 0.5]]}
    result = runner.invoke(args=['compare-formats', '--config', write_scenario(scenario)])
    assert result.exit_code == 2


def test_corollary_passes(runner, write_scenario, scenario):
    scenario['T'] = 3
    scenario['policy'] = {}
    result = runner.invoke(args=['corollary', '--config', write_scenario(scenario)])
    assert result.exit_code == 0, result.output


def test_extension_passes(runner, write_scenario, scenario, out_dir):
    result = runner.invoke(args=['extension', '--config', write_scenario(scenario)])
    assert result.exit_code == 0, result.output
    lines = open(os.path.join(out_dir, 'demo_extension.csv')).read().splitlines()
    assert lines[4] == 'c,dollar_utility,token_utility,sigma_star,expected_alpha'


@pytest.mark.parametrize('error, code', [
    (AcceptanceCheckError('verificación'), 4),
    (NumericalError('sin convergencia'), 3),
])
def test_failures_map_to_exit_codes(runner, write_scenario, scenario, monkeypatch, error, code):
    def failing(_scenario):
        raise error

    monkeypatch.setattr(experiment_commands.experiment_service, 'run_solve', failing)
    result = runner.invoke(args=['solve', '--config', write_scenario(scenario)])
    assert result.exit_code == code
