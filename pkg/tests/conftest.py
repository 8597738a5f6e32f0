import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from sccheck.loader import elaborate
from sccheck.parser import parse_spec

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus" / "resistor.scspec"


@pytest.fixture(scope="session")
def corpus_text() -> str:
    return CORPUS.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def corpus_universe(corpus_text):
    result = parse_spec(corpus_text)
    assert result.ok(), [d.render() for d in result.diagnostics]
    universe, diags = elaborate(result.document)
    assert universe is not None, [d.render() for d in diags]
    return universe
