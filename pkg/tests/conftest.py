import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from graspforge.geometry import GripperSpec
from graspforge.stand_ins import build_desk_catalog


@pytest.fixture(scope="session")
def spec() -> GripperSpec:
    return GripperSpec()


@pytest.fixture(scope="session")
def desk_catalog(spec):
    return build_desk_catalog(spec)


@pytest.fixture(scope="session")
def desk_catalog_map(desk_catalog):
    return {obj.id: obj for obj in desk_catalog}
