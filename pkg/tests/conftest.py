import json
from pathlib import Path

import pytest

from sentattn.corpus import PatentRecord

DATA_DIR = Path(__file__).parent / "data"


def record_line(rid: str, codes: list[str], title: str = "A machine. It works.",
                abstract: str = "The device has parts. They move.") -> str:
    return json.dumps({"id": rid, "title": title, "abstract": abstract, "ipc_codes": codes})


def write_corpus(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def toy_records() -> list[PatentRecord]:
    """Code multiset {G06N x3, H04L x2, B82Y x1} across three records."""
    return [
        PatentRecord(id="a", title="t", ipc_codes=["G06N 3/00", "H04L"]),
        PatentRecord(id="b", title="t", ipc_codes=["G06N", "B82Y 20/00"]),
        PatentRecord(id="c", title="t", ipc_codes=["G06N 5/00", "H04L 1/00"]),
    ]
