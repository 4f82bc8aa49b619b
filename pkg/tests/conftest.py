import os
import sys
from pathlib import Path

# Ensure project root is on sys.path so `import src` works
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
	sys.path.insert(0, str(ROOT))

# Default environment for tests
os.environ.setdefault("ENV_FILE", ".env.test")
os.environ.setdefault("CIAOSR_THREADS", "1")
os.environ.setdefault("CIAOSR_LOG_LEVEL", "WARNING")
import numpy as np
import pytest

from src.core.logging import setup_logging
from src.engine.random import make_rng
from src.engine.tensor import get_tape
from src.schemas.training import load_experiment_config
from src.services.image_io import save_image
from src.services.synthetic import synthetic_images

setup_logging()


def pytest_configure(config):
	config.addinivalue_line("markers", "slow: desk-scale runs, enabled with CIAOSR_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
	if os.environ.get("CIAOSR_RUN_SLOW") == "1":
		return
	skip_slow = pytest.mark.skip(reason="set CIAOSR_RUN_SLOW=1 to run desk-scale tests")
	for item in items:
		if "slow" in item.keywords:
			item.add_marker(skip_slow)


def pytest_runtest_setup(item):
	# Each test starts with an empty tape on the main thread
	get_tape().clear()


@pytest.fixture
def rng() -> np.random.Generator:
	return make_rng(1234)


@pytest.fixture
def tiny_config():
	return load_experiment_config("tiny")


@pytest.fixture
def image_folder(tmp_path) -> Path:
	# Three small seeded textures as PNG, one as PPM
	folder = tmp_path / "images"
	images = synthetic_images(4, size=40, seed=5)
	for i, img in enumerate(images):
		suffix = ".ppm" if i == 3 else ".png"
		save_image(img, folder / f"img{i}{suffix}")
	return folder
