import os

import numpy as np
import pytest


def pytest_collection_modifyitems(config, items):
    if os.environ.get("ANISOFDTD_EXTENDED"):
        return
    skip = pytest.mark.skip(reason="paper-scale run; set ANISOFDTD_EXTENDED=1")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
