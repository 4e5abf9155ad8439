import json
from pathlib import Path

import pytest

from lexiforge.ingestion import parse_dictionary
from lexiforge.model import Dictionary, DictionaryEntry, PosTag, Sense

DATA_DIR = Path(__file__).parent / "data"


def make_entry(lemma: str, label: str, *senses: str | tuple[str, str | None]) -> DictionaryEntry:
    """Entry from bare definition strings or (definition, example) pairs."""
    built = []
    for i, sense in enumerate(senses, start=1):
        if isinstance(sense, tuple):
            definition, example = sense
        else:
            definition, example = sense, None
        built.append(Sense(definition=definition, example=example, ordinal=i))
    return DictionaryEntry(lemma=lemma, pos=PosTag.from_label(label), senses=tuple(built))


def make_dictionary(name: str, *entries: DictionaryEntry) -> Dictionary:
    dictionary = Dictionary(name=name)
    for entry in entries:
        dictionary.add(entry)
    return dictionary


def load_fixture_dictionary(filename: str, name: str = "dictionary") -> Dictionary:
    with open(DATA_DIR / filename, encoding="utf-8") as fh:
        return parse_dictionary(fh, name=name)


def load_fixture_rows(filename: str) -> list[dict]:
    rows = []
    with open(DATA_DIR / filename, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fixture20():
    return (
        load_fixture_dictionary("fixture20_generated.jsonl", "generated"),
        load_fixture_dictionary("fixture20_gold.jsonl", "gold"),
    )


@pytest.fixture
def planted():
    return (
        load_fixture_dictionary("planted_generated.jsonl", "generated"),
        load_fixture_dictionary("planted_gold.jsonl", "gold"),
    )
