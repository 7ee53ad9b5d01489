"""
High-level input loader.

Resolves specification (.bz) and automaton (.json) inputs either from the
filesystem or from the catalog shipped in boltzmann_py/data, and turns them
into validated objects.
"""

import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional

from .spec_parser import ValidatedSpec, load_spec
from .words import Dfa

logger = logging.getLogger(__name__)

SPEC_SUFFIX = ".bz"
DFA_SUFFIX = ".json"


@dataclass
class Source:
    """Text of one input and where it came from"""
    name: str
    text: str
    origin: str  # "file" or "catalog"


class BoltzmannLoader:
    """Loader for specification and automaton files"""

    def __init__(self, search_catalog: bool = True):
        """
        Initialize loader.

        Args:
            search_catalog: Fall back to the shipped catalog when a path does
                not exist on disk
        """
        self.search_catalog = search_catalog

    @staticmethod
    def catalog() -> List[str]:
        """Names of the shipped example files"""
        data = resources.files("boltzmann_py") / "data"
        return sorted(entry.name for entry in data.iterdir()
                      if entry.name.endswith((SPEC_SUFFIX, DFA_SUFFIX)))

    def read(self, path: str) -> Source:
        """
        Read an input as UTF-8 text.

        Raises:
            FileNotFoundError: neither a file nor a catalog entry
        """
        file_path = Path(path)
        if file_path.is_file():
            logger.info("loading %s", file_path)
            return Source(file_path.stem, file_path.read_text(encoding="utf-8"), "file")
        if self.search_catalog and file_path.name in self.catalog():
            logger.info("loading %s from the shipped catalog", file_path.name)
            entry = resources.files("boltzmann_py") / "data" / file_path.name
            return Source(file_path.stem, entry.read_text(encoding="utf-8"), "catalog")
        raise FileNotFoundError(f"no such file or catalog entry: {path}")

    def load_spec(self, path: str) -> ValidatedSpec:
        """
        Load and validate a specification.

        Raises:
            SpecError: syntax, unknown name or ill-founded system
        """
        source = self.read(path)
        spec = load_spec(source.text)
        logger.info("  %d class(es), root %s", len(spec.classes), spec.root)
        return spec

    def load_dfa(self, path: str, name: Optional[str] = None) -> Dfa:
        """
        Load an automaton document; the language is named after the file stem.

        Raises:
            DfaError: malformed document
        """
        source = self.read(path)
        return Dfa.from_json(source.text, name=name or source.name)
