"""
Pytest configuration and fixtures.
"""
import os

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

# Set test environment variables
os.environ.setdefault("PLANELOC_ENVIRONMENT", "development")
os.environ.setdefault("PLANELOC_LOG_LEVEL", "WARNING")
os.environ.setdefault("PLANELOC_DEFAULT_SEED", "0")
os.environ.setdefault("PLANELOC_DEFAULT_THREADS", "1")

from config.experiment import NoiseModel, SceneSpec  # noqa: E402
from config.logging import configure_logging  # noqa: E402
from services.geometry import Intrinsics, Pose, look_at  # noqa: E402
from simulation.scene import room_shell  # noqa: E402

configure_logging()


@pytest.fixture
def rng():
    """Seeded generator so randomized tests are reproducible."""
    return np.random.default_rng(12345)


@pytest.fixture
def intrinsics():
    """Small pinhole camera, 80×60 with a 100 px focal length."""
    return Intrinsics(fx=100.0, fy=100.0, cx=40.0, cy=30.0, width=80, height=60)


@pytest.fixture
def vga_intrinsics():
    """640×480 camera with the principal point at the image center."""
    return Intrinsics(fx=525.0, fy=525.0, cx=320.0, cy=240.0, width=640, height=480)


@pytest.fixture
def box_map():
    """Room shell of a 4 m × 4 m × 3 m box, normals facing inward."""
    return room_shell((4.0, 4.0, 3.0))


@pytest.fixture
def corner_pose():
    """Camera inside the box looking into the (4, 4) corner, slightly downward."""
    return look_at(np.array([1.5, 1.5, 1.6]), np.array([1.0, 1.0, -0.35]))


@pytest.fixture
def random_pose(rng):
    """Generic rigid pose with a rotation well away from π."""
    rotation = Rotation.from_rotvec(rng.uniform(-1.0, 1.0, size=3)).as_matrix()
    return Pose(rotation, rng.uniform(-2.0, 2.0, size=3))


@pytest.fixture
def small_scene_spec():
    """Small, fast scene: two cameras at 64×48."""
    return SceneSpec(
        extents=(5.0, 4.0, 3.0),
        interior_primitives=2,
        cameras=2,
        image_size=(64, 48),
        focal_length=50.0,
        min_visible_pixels=40,
        rng_seed=7,
    )


@pytest.fixture
def noisy_scene_spec(small_scene_spec):
    """The small scene with depth noise and monocular mis-scale."""
    return small_scene_spec.model_copy(
        update={"noise": NoiseModel(depth_sigma=0.01, scale_range=(0.8, 1.25))}
    )


@pytest.fixture
def scene_dir(tmp_path, small_scene_spec):
    """A synthesized scene written to disk."""
    from worker.tasks.synth import process_synth_job

    directory = tmp_path / "scene"
    process_synth_job(small_scene_spec, directory)
    return directory
