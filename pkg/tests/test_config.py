"""
Configuration layering and validation
"""

import pytest

import config
from src.models.errors import ConfigurationError
from src.models.switch_config import SwitchConfig
from src.utils.normalizers import parse_int


@pytest.fixture
def clean_env(monkeypatch):
    monkeypatch.setattr(config, 'ENV_SETTINGS', {})
    monkeypatch.setattr(config, '_ENV_PROBLEMS', [])


def test_defaults(clean_env):
    cfg = config.load_switch_config()
    assert cfg == SwitchConfig()
    assert cfg.effective_max_wait == 4 * cfg.port_count


def test_precedence(clean_env, monkeypatch, tmp_path):
    monkeypatch.setattr(config, 'ENV_SETTINGS', {'port_count': 16, 'table_count': 2, 'miss_send_len': 64})
    cfg = config.load_switch_config(overrides={'table_count': 3, 'buffer_ttl': None})
    assert (cfg.port_count, cfg.table_count, cfg.miss_send_len) == (16, 3, 64)
    assert cfg.buffer_ttl == SwitchConfig().buffer_ttl

    path = tmp_path / 'switch.conf'
    path.write_text('TABLE_COUNT=6\nBUFFER_TTL=2.5\nDATAPATH_ID=0x00000000000000ff\n')
    cfg = config.load_switch_config(path=str(path), overrides={'table_count': 3})
    assert (cfg.port_count, cfg.table_count) == (16, 6)
    assert cfg.buffer_ttl == 2.5
    assert cfg.datapath_id == 0xFF


def test_every_problem_is_reported(clean_env, tmp_path):
    path = tmp_path / 'bad.conf'
    path.write_text('PORT_COUNT=zero\nMISS_POLICY=flood\nNOT_A_KEY=1\n')
    with pytest.raises(ConfigurationError) as e:
        config.load_switch_config(path=str(path))
    joined = ' '.join(e.value.problems)
    assert 'PORT_COUNT' in joined
    assert 'NOT_A_KEY' in joined


def test_invalid_values_after_merge(clean_env):
    with pytest.raises(ConfigurationError) as e:
        config.load_switch_config(overrides={'miss_policy': 'flood', 'chunk_width': 17, 'queue_capacity': 0})
    assert len(e.value.problems) == 3


def test_environment_problems_surface(clean_env, monkeypatch):
    monkeypatch.setattr(config, '_ENV_PROBLEMS', ['WORKERS must be a int, got \'many\''])
    with pytest.raises(ConfigurationError):
        config.load_switch_config()


def test_unknown_override(clean_env):
    with pytest.raises(ConfigurationError):
        config.load_switch_config(overrides={'colour': 'blue'})


def test_missing_file(clean_env, tmp_path):
    with pytest.raises(ConfigurationError):
        config.load_switch_config(path=str(tmp_path / 'absent.conf'))


def test_with_overrides_rejects_unknown_names():
    with pytest.raises(ConfigurationError):
        SwitchConfig().with_overrides(speed=10)


def test_cast_of_file_values(clean_env, tmp_path):
    path = tmp_path / 'switch.conf'
    path.write_text('CONTROLLER_HOST= 10.0.0.9 \nCONTROLLER_PORT=6633\nCONNECTION_MODE=passive\nWORKERS=1_0\n')
    cfg = config.load_switch_config(path=str(path))
    assert cfg.controller_host == '10.0.0.9'
    assert cfg.controller_port == 6633
    assert cfg.connection_mode == 'passive'
    assert cfg.workers == 10


@pytest.mark.parametrize('text, value', [('42', 42), ('0x2a', 42), ('0b101010', 42), (' 1_000 ', 1000)])
def test_parse_int(text, value):
    assert parse_int(text) == value


def test_print_config(capsys):
    config.print_config(SwitchConfig(s3_bucket='bench-results'))
    out = capsys.readouterr().out
    assert 'Tables: 4 x 1024' in out
    assert 's3://bench-results/benchmarks' in out
