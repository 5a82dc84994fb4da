import glob
import json
import os

import pytest

from geosolver.harness import ProblemRecord, load_bundled_kb

HERE = os.path.dirname(__file__)
DATA = os.path.join(HERE, "..", "src", "geosolver", "data")


@pytest.fixture(scope="session")
def kb():
    return load_bundled_kb()


@pytest.fixture(scope="session")
def bundled_problems():
    records = []
    for path in sorted(glob.glob(os.path.join(DATA, "problems", "*.json"))):
        with open(path) as f:
            records.append(ProblemRecord.from_dict(json.load(f)))
    return records
