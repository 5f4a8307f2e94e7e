"""
Pytest configuration and fixtures for PCAdv tests
"""
import numpy as np
import pytest

from src.config.settings import Settings, settings as global_settings
from src.attacks import AttackConfig
from src.dataset import build_dataset, save_dataset
from src.diffnet import build_ae, build_classifier, save_checkpoint

N_POINTS = 32
N_CLASSES = 8


@pytest.fixture(scope="session", autouse=True)
def isolated_logs(tmp_path_factory):
    """Keep side log files out of the working tree"""
    log_dir = tmp_path_factory.mktemp("logs")
    original = global_settings.LOG_FILE
    global_settings.LOG_FILE = str(log_dir / "pcadv.log")
    yield log_dir
    global_settings.LOG_FILE = original


@pytest.fixture
def mock_settings(tmp_path):
    """Mock settings for testing"""
    settings = Settings()
    settings.PCADV_THREADS = 2
    settings.TORCH_THREADS = 1
    settings.OUTPUT_DIR = str(tmp_path / "runs")
    settings.RESOURCE_LOG_INTERVAL = 1
    return settings


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cloud(rng):
    """16-point cloud inside the unit ball"""
    points = rng.uniform(-1.0, 1.0, (16, 3))
    return (points / np.linalg.norm(points, axis=1).max()).astype(np.float32)


@pytest.fixture
def tiny_classifier():
    return build_classifier("pointnet_tiny", N_CLASSES, seed=0)


@pytest.fixture
def tiny_edgeconv():
    return build_classifier("edgeconv_lite", N_CLASSES, seed=1, knn_k=4)


@pytest.fixture
def tiny_ae():
    return build_ae(16, latent_dim=8, seed=2)


@pytest.fixture
def double_models():
    """Float64 copies of every architecture for finite-difference checks"""
    return {
        "pointnet_tiny": build_classifier("pointnet_tiny", 4, seed=3).double(),
        "pointnet_wide": build_classifier("pointnet_wide", 4, seed=4).double(),
        "edgeconv_lite": build_classifier("edgeconv_lite", 4, seed=5, knn_k=4).double(),
        "autoencoder": build_ae(16, latent_dim=8, seed=6).double(),
    }


@pytest.fixture
def fast_attack():
    """Short untargeted hard attack without the AE term"""
    return AttackConfig(constraint="linf", epsilon=0.1, gamma=0.0, iterations=8, n_restarts=2, seed=7)


@pytest.fixture
def tiny_dataset():
    return build_dataset("train", n_per_class=2, n_points=N_POINTS, base_seed=11)


@pytest.fixture
def experiment_dir(tmp_path):
    """
    Test split, two untrained classifiers and an autoencoder on disk,
    plus a config writer returning the INI path
    """
    save_dataset(build_dataset("test", n_per_class=2, n_points=N_POINTS, base_seed=5), tmp_path / "test.pcds")
    save_checkpoint(build_classifier("pointnet_tiny", N_CLASSES, seed=21), tmp_path / "alpha.pckp")
    save_checkpoint(build_classifier("pointnet_wide", N_CLASSES, seed=22), tmp_path / "beta.pckp")
    save_checkpoint(build_ae(N_POINTS, latent_dim=8, seed=23), tmp_path / "ae.pckp")

    def write_config(models=("alpha",), epsilons="0.05", samples=3, extra="", output="runs"):
        sections = [
            "[experiment]",
            "seed = 3",
            f"output_dir = {output}",
            f"samples_per_cell = {samples}",
            "only_correct = false",
            "workers = 2",
            "",
            "[dataset]",
            "path = test.pcds",
            "",
            "[autoencoder]",
            "attack = ae.pckp",
            "defense = ae.pckp",
            "",
        ]
        for name in models:
            sections += [f"[model.{name}]", f"checkpoint = {name}.pckp", ""]
        sections += [
            "[attack.advpc]",
            "preset = advpc",
            f"epsilons = {epsilons}",
            "iterations = 3",
            "n_restarts = 1",
            "",
        ]
        path = tmp_path / "experiment.ini"
        path.write_text("\n".join(sections) + "\n" + extra, encoding="utf-8")
        return path

    return tmp_path, write_config
