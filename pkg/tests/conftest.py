import os
import pytest
from hypothesis import HealthCheck, settings

from modules.models import build_model

settings.register_profile('default', max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.register_profile('ci', max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'default'))


@pytest.fixture
def oscillator():
    return build_model('HO', omega=1.)


@pytest.fixture
def skin():
    return build_model('H1', gamma=0.5, V0=1., L=15.)


@pytest.fixture
def lattice():
    return build_model('H2', t0=-1., delta=0.35, q=1, L=32, p_y=0.)


@pytest.fixture
def double_well():
    return build_model('H3', g=0.5, a=2., Gamma=4.)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run the command line entry points from a scratch folder, results/ and tensorboard_log/ land there."""
    monkeypatch.chdir(tmp_path)
    return tmp_path
