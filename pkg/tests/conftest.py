from importlib import resources
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
DESK_CONFIG = REPO / "configs" / "desk.toml"


@pytest.fixture(scope="session")
def model():
    from soccerwalk import kinematics as rb

    text = (resources.files("soccerwalk") / "models" / "biped.urdf").read_text()
    return rb.load_model(text)


@pytest.fixture(scope="session")
def desk_config_path():
    return DESK_CONFIG


@pytest.fixture()
def coarse_config(tmp_path):
    """Desk config with a coarse strategy grid and few samples, for fast tests."""
    text = DESK_CONFIG.read_text()
    text = text.replace("grid_resolution = 0.1", "grid_resolution = 0.5")
    text = text.replace("n_samples = 16", "n_samples = 6")
    path = tmp_path / "coarse.toml"
    path.write_text(text)
    return path


def random_configuration(model, rng, scale=0.4):
    from soccerwalk import kinematics as rb

    lo, hi = model.joint_limits()
    q = rng.uniform(lo * scale, hi * scale)
    return rb.Configuration(rng.normal(size=3), rng.normal(size=4), q)
