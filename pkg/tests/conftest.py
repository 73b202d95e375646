from pathlib import Path

import pytest

from dyncon import OpInstance

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS


def op(process_id: int, seq_no: int, method: str, *args) -> OpInstance:
    return OpInstance(process_id, seq_no, method, tuple(args))
