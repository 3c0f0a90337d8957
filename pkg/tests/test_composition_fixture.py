"""Composition parity cases shared with the exporter's test suite.

Both implementations must reproduce these hand-derived outputs exactly,
so the fixture is the contract that keeps them in lockstep.
"""

import json
from pathlib import Path

import numpy as np

from n2o.embedders import compose_tokens

FIXTURE = Path(__file__).parent / "fixtures" / "composition_cases.json"


def test_compose_tokens_matches_shared_fixture():
    cases = json.loads(FIXTURE.read_text(encoding="utf-8"))
    assert cases
    for case in cases:
        for mode, expected in case["expected"].items():
            got = compose_tokens(case["tokens"], mode)
            assert got.dtype == np.float32
            want = np.asarray(expected, dtype=np.float32)
            assert np.array_equal(got, want), (case["name"], mode)
