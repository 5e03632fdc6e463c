"""Bundled example puzzles used as a verification fixture corpus.

Each entry is a real mystery-function puzzle shipped under assets/puzzles/
with free-form tags in corpus.json. Sources are kept byte-exact; they double
as sandbox regression fixtures and as ready inputs for the verify CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Tuple


@dataclass(frozen=True)
class Fixture:
    name: str
    source: str
    tags: Tuple[str, ...]


def _asset_dir():
    return resources.files(__package__).joinpath("assets", "puzzles")


@lru_cache(maxsize=None)
def load_all() -> Tuple[Fixture, ...]:
    index = json.loads(_asset_dir().joinpath("corpus.json").read_text("utf-8"))
    fixtures = []
    for entry in index:
        source = _asset_dir().joinpath(entry["file"]).read_text("utf-8")
        fixtures.append(Fixture(entry["name"], source, tuple(entry["tags"])))
    return tuple(fixtures)


def names() -> Tuple[str, ...]:
    return tuple(f.name for f in load_all())


def get(name: str) -> Fixture:
    for fixture in load_all():
        if fixture.name == name:
            return fixture
    raise KeyError(f"no bundled puzzle named {name!r} (have: {', '.join(names())})")
