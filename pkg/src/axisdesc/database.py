"""Descriptor databases: a directory of ``.desc`` files plus a ``manifest``.

Manifest layout (UTF-8 text)::

    AXISDB 1
    param <name> <value>        one line per extraction parameter
    entry <id> <category> <n_alternatives> <source>

Entry ``id`` owns the files ``<id>.<k>.desc`` for ``k < n_alternatives``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .descriptor import ShapeDescriptor, format_descriptor, read_descriptor
from .errors import DescriptorFormatError, ManifestMismatchError
from .matcher import MatchResult, SimilarityThresholds, match_multi
from .pipeline import ExtractParams

MANIFEST = "manifest"
VERSION = 1


@dataclass
class Entry:
    shape_id: str
    category: str
    descriptors: list[ShapeDescriptor]
    source: str = "-"


@dataclass
class DescriptorDatabase:
    root: Path
    params: ExtractParams
    entries: list[Entry] = field(default_factory=list)

    @classmethod
    def create(cls, root, params: ExtractParams) -> "DescriptorDatabase":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        if (root / MANIFEST).exists():
            db = cls.open(root)
            db.check(params)
            return db
        db = cls(root, params)
        db.save_manifest()
        return db

    @classmethod
    def open(cls, root) -> "DescriptorDatabase":
        root = Path(root)
        path = root / MANIFEST
        if not path.exists():
            raise DescriptorFormatError(f"{root}: no manifest")
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].split() != ["AXISDB", str(VERSION)]:
            raise DescriptorFormatError(f"{path}: missing 'AXISDB {VERSION}' header")
        items, rows = {}, []
        for ln in lines[1:]:
            parts = ln.split(maxsplit=4)
            if not parts:
                continue
            if parts[0] == "param" and len(parts) == 3:
                items[parts[1]] = parts[2]
            elif parts[0] == "entry" and len(parts) == 5:
                rows.append(parts[1:])
            else:
                raise DescriptorFormatError(f"{path}: bad line {ln!r}")
        db = cls(root, ExtractParams.from_items(items))
        for sid, cat, n, src in rows:
            descs = [read_descriptor(root / f"{sid}.{k}.desc") for k in range(int(n))]
            db.entries.append(Entry(sid, cat, descs, src))
        return db

    def check(self, params: ExtractParams) -> None:
        """Refuse to mix descriptors extracted with different parameters."""
        mine, theirs = dict(self.params.as_items()), dict(params.as_items())
        diff = [k for k in mine if mine[k] != theirs.get(k)]
        if diff:
            detail = ", ".join(f"{k}: db={mine[k]} now={theirs.get(k)}" for k in diff)
            raise ManifestMismatchError(f"{self.root}: extraction parameters differ ({detail})")

    def save_manifest(self) -> None:
        lines = [f"AXISDB {VERSION}"]
        lines += [f"param {k} {v}" for k, v in self.params.as_items()]
        for e in self.entries:
            lines.append(f"entry {e.shape_id} {e.category} {len(e.descriptors)} {e.source}")
        (self.root / MANIFEST).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def add(self, shape_id: str, category: str, descriptors: list[ShapeDescriptor], source: str = "-") -> None:
        if not shape_id or any(ch.isspace() for ch in shape_id + category):
            raise ValueError("shape id and category must be non-empty and free of whitespace")
        old = next((e for e in self.entries if e.shape_id == shape_id), None)
        n_old = len(old.descriptors) if old else 0
        if old:
            self.entries.remove(old)
        for k, d in enumerate(descriptors):
            (self.root / f"{shape_id}.{k}.desc").write_text(format_descriptor(d), encoding="utf-8")
        for k in range(len(descriptors), n_old):
            (self.root / f"{shape_id}.{k}.desc").unlink(missing_ok=True)
        self.entries.append(Entry(shape_id, category, list(descriptors), source or "-"))
        self.entries.sort(key=lambda e: e.shape_id)
        self.save_manifest()

    def query(
        self,
        descriptors: list[ShapeDescriptor],
        k: int | None = None,
        thr: SimilarityThresholds = SimilarityThresholds(),
        mode: str = "invariant",
        exclude: str | None = None,
    ) -> list[tuple[Entry, MatchResult]]:
        """Entries ranked by best match score; ties go to the smaller id."""
        if not self.entries:
            raise ValueError(f"{self.root}: database is empty")
        scored = [
            (e, match_multi(descriptors, e.descriptors, thr, mode)) for e in self.entries if e.shape_id != exclude
        ]
        scored.sort(key=lambda t: (-t[1].total, t[0].shape_id))
        return scored if k is None else scored[:k]
