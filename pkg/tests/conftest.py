from pathlib import Path

import hypothesis
import pytest

# derandomized so CI failures reproduce locally without sharing a seed
hypothesis.settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60
)
hypothesis.settings.load_profile("repo")


@pytest.fixture
def data_dir() -> Path:
    return Path(__file__).parent / "data"
