import os
import pathlib
import shutil
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA = pathlib.Path(os.environ.get("QUICKSEG_TEST_DATA", ROOT / "tests" / "data"))

if "QUICKSEG_NO_PATH_HACK" not in os.environ:
    sys.path.insert(0, str(ROOT / "build" / "python"))


@pytest.fixture
def data():
    return DATA


@pytest.fixture
def cli():
    exe = os.environ.get("QUICKSEG_CLI") or shutil.which("quickseg") or str(ROOT / "build" / "tools" / "quickseg")
    if not pathlib.Path(exe).exists():
        pytest.skip("quickseg CLI not built")
    return exe
