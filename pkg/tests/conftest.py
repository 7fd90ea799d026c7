from __future__ import annotations

from pathlib import Path

import pytest

from vmoves.diagram import Diagram, parse_diagram

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load(name: str) -> Diagram:
    return parse_diagram((FIXTURES / f"{name}.vlink").read_text())


def corpus_paths() -> list[Path]:
    return sorted(FIXTURES.glob("*.vlink"))


def corpus() -> list[Diagram]:
    return [parse_diagram(p.read_text()) for p in corpus_paths()]


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
