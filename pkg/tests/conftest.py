import numpy as np
import pytest

from psodesign import Design, Factor, FactorSpace, LinearConstraint, ModelSpec, load_problem
from psodesign.io import load_design


@pytest.fixture(scope="session")
def one_factor():
    """One continuous factor on [-4, 4], intercept + slope logit model."""
    space = FactorSpace((Factor.continuous("x", -4, 4),))
    model = ModelSpec(intercept=True, main_effects=(0,), link="logit")
    return space, model, np.array([0.0, 1.0])


@pytest.fixture(scope="session")
def mixed_space():
    """One discrete and one continuous factor (the sweep-study space)."""
    return FactorSpace((Factor.discrete("x1", (-1, 1)), Factor.continuous("x2", -1, 1)))


@pytest.fixture(scope="session")
def flashing_problem():
    return load_problem("flashing")


@pytest.fixture(scope="session")
def odor_problem():
    return load_problem("odor")


@pytest.fixture(scope="session")
def esd_problem():
    return load_problem("esd")


@pytest.fixture(scope="session")
def stufken_problem():
    return load_problem("stufken_yang")


@pytest.fixture(scope="session")
def stufken_tight_problem():
    return load_problem("stufken_yang_tight")


def reference_design(name: str) -> Design:
    design, _ = load_design(name)
    return design.normalized()


@pytest.fixture(scope="session")
def stufken_8pt():
    return reference_design("stufken_yang_theory_8pt")


@pytest.fixture(scope="session")
def stufken_4pt():
    return reference_design("stufken_yang_pso_4pt")


@pytest.fixture(scope="session")
def odor_reference():
    return reference_design("odor_reference")


@pytest.fixture(scope="session")
def esd_reference():
    return reference_design("esd_reference")


@pytest.fixture(scope="session")
def flashing_reference():
    return reference_design("flashing_reference")
