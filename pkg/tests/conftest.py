import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for `import oracles`

from edrsim.cache import CacheGeometry


@pytest.fixture
def small_geometry():
    # 64 KB, 8-way, 64 B blocks, 1 KB pages -> 8 colors, 128 sets, 2 banks
    return CacheGeometry(size_bytes=64 * 1024, associativity=8, block_bytes=64,
                         page_bytes=1024, bank_bytes=32 * 1024)


@pytest.fixture
def tiny_geometry():
    # 32 KB, 8-way, 64 B blocks, 1 KB pages -> 4 colors, 64 sets, 2 banks
    return CacheGeometry(size_bytes=32 * 1024, associativity=8, block_bytes=64,
                         page_bytes=1024, bank_bytes=16 * 1024)


@pytest.fixture
def geometry_2mb():
    # 2 MB, 8-way, 64 B blocks, 4 KB pages, 1 MB banks -> 64 colors
    return CacheGeometry(size_bytes=2 * 1024 * 1024, associativity=8)
