import pathlib

import numpy as np
import pytest

from nilforge import rho

DATA = pathlib.Path(__file__).parent.parent / 'src' / 'nilforge' / 'data'


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture(scope='session')
def cx():
    return rho.default()
