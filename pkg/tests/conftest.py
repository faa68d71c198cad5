import sys
from pathlib import Path

import numpy as np
import pytest

from rvoskit import SynthConfig, synth_generate
from rvoskit.ingest import ObjectScript

TESTS_DIR = Path(__file__).parent
STUB_ADAPTER = TESTS_DIR / "stub_adapter.py"


def stub_command(behavior: str, **kwargs) -> tuple[str, ...]:
    cmd = [sys.executable, str(STUB_ADAPTER), "--behavior", behavior]
    for key, value in kwargs.items():
        cmd += [f"--{key.replace('_', '-')}", str(value)]
    return tuple(cmd)


def random_mask(rng: np.random.Generator, height: int, width: int, density=None):
    if density is None:
        density = rng.random()
    return rng.random((height, width)) < density


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    """Small dataset shared by read-only tests: 3 videos x 10 frames."""
    root = tmp_path_factory.mktemp("synth-small")
    cfg = SynthConfig(
        num_videos=3,
        frames_per_video=10,
        height=40,
        width=56,
        objects_per_video=2,
        seed=11,
    )
    return synth_generate(cfg, root)


@pytest.fixture(scope="session")
def scripted_dataset(tmp_path_factory):
    """One video with hand-written scripts so expected masks are analytic."""
    root = tmp_path_factory.mktemp("synth-scripted")
    scripts = (
        (
            ObjectScript("square", 3, (2, 2), (0, 2)),
            ObjectScript("disk", 2, (12, 8), (1, 0)),
        ),
    )
    cfg = SynthConfig(
        num_videos=1,
        frames_per_video=5,
        height=24,
        width=24,
        objects_per_video=2,
        seed=5,
        scripts=scripts,
    )
    return synth_generate(cfg, root)
