"""Shared fixtures. Expensive calibrations are computed once per session."""

import numpy as np
import pytest

from corrocal import bayes, fixtures, nn


@pytest.fixture(scope="session")
def hyper():
    return fixtures.hyperparameters()


@pytest.fixture(scope="session")
def temp_model():
    return fixtures.temperature_model()


@pytest.fixture(scope="session")
def real_points():
    return fixtures.calibration_set().points


@pytest.fixture(scope="session")
def sanity_points():
    return fixtures.sanity_calibration_set().points


@pytest.fixture(scope="session")
def real_calibration(real_points, hyper):
    return bayes.calibrate(real_points, hyper=hyper)


@pytest.fixture(scope="session")
def sanity_calibration(sanity_points, hyper):
    return bayes.calibrate(sanity_points, hyper=hyper)


@pytest.fixture(scope="session")
def trained_network(real_points, hyper):
    return nn.train(real_points, hyper, 1.62)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
