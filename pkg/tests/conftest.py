"""Shared fixtures for gridtune tests."""

import pytest

from gridtune.config import load_preset
from gridtune.types import SearchSpace


@pytest.fixture
def resnet_space() -> SearchSpace:
    return load_preset("resnet50-int8").space


@pytest.fixture
def truncated_space() -> SearchSpace:
    return load_preset("resnet50-int8-truncated").space
