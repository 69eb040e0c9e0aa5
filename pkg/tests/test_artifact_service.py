import json
import os

import pandas as pd

from app.services.artifact_service import ArtifactService, config_hash

RAW = {'name': 'demo', 'n': 2, 'T': 1, 'beta': 0.9}


def test_config_hash_ignores_key_order():
    reordered = {'beta': 0.9, 'T': 1, 'n': 2, 'name': 'demo'}
    assert config_hash(RAW) == config_hash(reordered)
    assert config_hash(RAW) != config_hash({**RAW, 'n': 3})


def test_csv_has_provenance_header_and_full_precision(tmp_path):
    service = ArtifactService(str(tmp_path / 'out'))
    frame = pd.DataFrame({'t': [1], 'P_t': [1 / 3]})
    path = service.write_frame(frame, 'demo', 'solve', RAW, seed=42)

    assert path == os.path.join(str(tmp_path / 'out'), 'demo_solve.csv')
    lines = open(path).read().splitlines()
    assert lines[0].startswith('# generated_at=')
    assert lines[1] == f'# config_hash={config_hash(RAW)}'
    assert lines[2] == '# seed=42'
    assert lines[3].startswith('# versions=')
    assert lines[4] == 't,P_t'
    assert float(lines[5].split(',')[1]) == 1 / 3


def test_json_artifact_carries_metadata(tmp_path):
    service = ArtifactService(str(tmp_path))
    path = service.write_frame(pd.DataFrame({'t': [1, 2]}), 'demo', 'solve', RAW, seed=7, fmt='json')
    document = json.load(open(path))
    assert document['metadata']['seed'] == '7'
    assert document['metadata']['config_hash'] == config_hash(RAW)
    assert document['data']['rows'] == [{'t': 1}, {'t': 2}]


def test_prefix_cannot_escape_the_output_directory(tmp_path):
    service = ArtifactService(str(tmp_path / 'out'))
    path = service.write_frame(pd.DataFrame({'t': [1]}), '../../escape', 'solve', RAW, seed=1)
    assert os.path.dirname(path) == str(tmp_path / 'out')
