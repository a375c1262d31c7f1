"""
Artifact manifest.

``manifest.json`` in the output directory lists every artifact a run wrote, with the subcommand that
produced it and the hash of the configuration it was produced under.
"""

from pathlib import Path
from typing import Dict, List, Literal, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError

from petrecon.errors import FormatError

MANIFEST_NAME = "manifest.json"
ArtifactKind = Literal["image", "sinogram", "weights", "csv", "plot"]


class ManifestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ArtifactKind
    path: str
    command: str
    config_hash: str


class ManifestDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    entries: List[ManifestEntry] = []


class Manifest:
    """
    The artifact list of one output directory.

    Entries are keyed by their path relative to the output directory; recording a path again replaces
    the previous entry. The file is written sorted by path.
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self._entries: Dict[str, ManifestEntry] = {}

    @property
    def path(self) -> Path:
        return self.root / MANIFEST_NAME

    @classmethod
    def load(cls, root: Union[str, Path]) -> "Manifest":
        manifest = cls(root)
        if manifest.path.is_file():
            try:
                document = ManifestDocument.model_validate_json(manifest.path.read_text(encoding="utf-8"))
            except ValidationError as err:
                raise FormatError(f"Malformed manifest '{manifest.path}'") from err
            for entry in document.entries:
                manifest._entries[entry.path] = entry
        return manifest

    def record(self, kind: ArtifactKind, path: Union[str, Path], command: str, config_hash: str) -> ManifestEntry:
        relative = Path(path).resolve().relative_to(self.root.resolve()).as_posix()
        entry = ManifestEntry(kind=kind, path=relative, command=command, config_hash=config_hash)
        self._entries[relative] = entry
        return entry

    def entries(self) -> List[ManifestEntry]:
        return [self._entries[key] for key in sorted(self._entries)]

    def __contains__(self, path: str) -> bool:
        return path in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def save(self) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        document = ManifestDocument(entries=self.entries())
        self.path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.debug(f"Manifest lists {len(self)} artifacts")
        return self.path
