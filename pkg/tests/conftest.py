# Copyright (C) 2026 The perisolve authors. All rights reserved.
# SPDX-License-Identifier: MIT

import pytest

from perisolve.examples.models import (
    autonomous_patches,
    extinction,
    periodic_nicholson,
    planar_distributed_nicholson,
    planar_mackey_glass,
    planar_nicholson,
    scalar_nicholson,
)
from perisolve.integrator import SolverConfig
from perisolve.model import SystemModel, load_model
from tests.helpers import scalar_document


@pytest.fixture
def scalar_model() -> SystemModel:
    return scalar_nicholson().build()


@pytest.fixture
def periodic_model() -> SystemModel:
    return periodic_nicholson().build()


@pytest.fixture
def example_3_1() -> SystemModel:
    return planar_mackey_glass().build()


@pytest.fixture
def example_3_2() -> SystemModel:
    return planar_distributed_nicholson().build()


@pytest.fixture
def planar_model() -> SystemModel:
    return planar_nicholson().build()


@pytest.fixture
def patches_model() -> SystemModel:
    return autonomous_patches().build()


@pytest.fixture
def extinction_model() -> SystemModel:
    return extinction().build()


@pytest.fixture
def decay_model() -> SystemModel:
    """
    x' = -x, without delayed terms.
    """
    return load_model(document=scalar_document(), name="decay")


@pytest.fixture
def fast_config() -> SolverConfig:
    return SolverConfig(steps_per_period=64)
