import numpy as np
import pytest

from ptproc import StraussModel, StraussParams, Window
from ptproc.rng import SeedTree


@pytest.fixture
def unit_window() -> Window:
    return Window.square(-0.5, 0.5)


@pytest.fixture
def tiny_window() -> Window:
    return Window([0.0, 0.0], [0.2, 0.2])


@pytest.fixture
def tiny_strauss(tiny_window) -> StraussModel:
    return StraussModel(StraussParams(beta=50.0, gamma=0.5, r=0.1), tiny_window)


@pytest.fixture
def tree() -> SeedTree:
    return SeedTree(20260822)


def rng_for(*parts) -> np.random.Generator:
    return SeedTree(20260822).child(*parts).generator()
