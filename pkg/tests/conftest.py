import os
import sys

import pytest
import yaml

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.main import create_app  # noqa: E402
from app.models.valuation import ValuationDistribution  # noqa: E402


@pytest.fixture
def app(tmp_path):
    app = create_app('testing')
    app.config['OUTPUT_DIR'] = str(tmp_path / 'artifacts')
    app.config['DEFAULT_PATHS'] = 2000
    return app


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def write_scenario(tmp_path):
    """Escribe un escenario YAML en tmp_path y devuelve su ruta"""
    def _write(content, name='scenario.yaml'):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(content, sort_keys=False))
        return str(path)
    return _write


@pytest.fixture
def unit_uniform():
    return ValuationDistribution.uniform(0.0, 1.0)


@pytest.fixture
def shifted_uniform():
    return ValuationDistribution.uniform(1.0, 2.0)


@pytest.fixture
def two_atoms():
    return ValuationDistribution.discrete([(1.0, 0.5), (2.0, 0.5)])
