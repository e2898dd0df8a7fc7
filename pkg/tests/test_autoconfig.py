from __future__ import annotations

import os
from pathlib import Path
from unittest.mock import patch

import pytest

from swselect.settings import AutoConfig
from swselect.settings import Csv
from swselect.settings import RepositoryEmpty
from swselect.settings import RepositoryEnv
from swselect.settings import RepositoryIni
from swselect.settings import UndefinedValueError

TEST_DIR = Path(__file__).parent


def test_autoconfig_ini():
    config = AutoConfig(TEST_DIR / 'autoconfig' / 'ini' / 'project')
    assert '0.9' == config('SWSELECT_P')
    assert 0.9 == config('SWSELECT_P', cast=float)
    assert isinstance(config.config.repository, RepositoryIni)


def test_autoconfig_env():
    config = AutoConfig(TEST_DIR / 'autoconfig' / 'env' / 'project')
    assert 0.7 == config('SWSELECT_P', cast=float)
    assert [0.01, 0.1] == config('SWSELECT_EPSILON_GRID', cast=Csv(float))
    assert isinstance(config.config.repository, RepositoryEnv)


@pytest.mark.parametrize('kind', ['ini', 'env'])
def test_autoconfig_searches_parent_directories(kind):
    config = AutoConfig(TEST_DIR / 'autoconfig' / kind / 'project' / 'subdir')
    assert config('SWSELECT_P', cast=float) in {0.7, 0.9}


def test_autoconfig_defaults_to_working_directory():
    config = AutoConfig()
    project = TEST_DIR / 'autoconfig' / 'ini' / 'project'
    with patch('swselect.settings.Path.cwd', return_value=project):
        assert 'fead' == config('SWSELECT_METHOD')


def test_autoconfig_environ_wins():
    config = AutoConfig(TEST_DIR / 'autoconfig' / 'ini' / 'project')
    with patch.dict(os.environ, {'SWSELECT_P': '0.5'}):
        assert 0.5 == config('SWSELECT_P', cast=float)


def test_autoconfig_no_repository():
    config = AutoConfig(TEST_DIR / 'autoconfig' / 'no_repository')
    with patch('swselect.settings.Path.is_file', return_value=False):
        with pytest.raises(UndefinedValueError):
            config('SWSELECT_KEY_NOT_ANYWHERE')
        assert isinstance(config.config.repository, RepositoryEmpty)


def test_autoconfig_permission_error_falls_back_to_environ():
    config = AutoConfig(TEST_DIR / 'autoconfig' / 'ini' / 'project')
    with patch('swselect.settings.Path.is_file', side_effect=PermissionError('denied')):
        with patch.dict(os.environ, {'SWSELECT_STANDARDIZE': 'on'}):
            assert True is config('SWSELECT_STANDARDIZE', cast=bool)
    assert isinstance(config.config.repository, RepositoryEmpty)


def test_autoconfig_reset_reloads():
    config = AutoConfig(TEST_DIR / 'autoconfig' / 'ini' / 'project')
    assert '0.9' == config('SWSELECT_P')
    config.search_path = TEST_DIR / 'autoconfig' / 'env' / 'project'
    assert '0.9' == config('SWSELECT_P')
    config.reset()
    assert '0.7' == config('SWSELECT_P')
