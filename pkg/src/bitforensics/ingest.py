"""File ingestion: detection line files, bit manifests, cause-label CSVs.

Detection files carry one detection per line, ``<class> <cx> <cy> <w> <h>
[<conf>]``, whitespace-separated, ``#`` starting a comment.  A bit manifest
is one JSON document naming the per-image detection files of both streams;
a directory of manifests forms a dataset.  Cause labels travel as a binary
CSV with one row per bit.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    GreenConflictError,
    ManifestError,
    MissingFileError,
    ParseError,
    UnknownClassError,
)
from .records import VIEW_SIDE, VIEW_TOP, BitDetections, BoundingBox, Detection, ImageRecord
from .taxonomy import CAUSE_CSV_ORDER, FailureCause, parse_class

CAUSE_CSV_HEADER = ("bit_id",) + tuple(c.code for c in CAUSE_CSV_ORDER)


# ---------------------------------------------------------------------------
# detection line files


def parse_detection_lines(
    text: str, kind: str, has_confidence: bool = True, *, path=None
) -> list[Detection]:
    """Parse a detection text block into :class:`Detection` values.

    ``kind`` selects the class taxonomy ("location" or "damage").  With
    ``has_confidence`` false (ground-truth files) every line has five
    fields and confidence defaults to 1.0.
    """
    expected = 6 if has_confidence else 5
    detections = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != expected:
            raise ParseError(
                f"expected {expected} fields, got {len(fields)}", line=lineno, path=path
            )
        try:
            label = parse_class(fields[0], kind)
        except UnknownClassError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
        try:
            numbers = [float(f) for f in fields[1:]]
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line=lineno, path=path) from None
        try:
            box = BoundingBox(*numbers[:4])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
        confidence = numbers[4] if has_confidence else 1.0
        try:
            detections.append(Detection(box=box, label=label, confidence=confidence))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
    return detections


def format_detection_lines(
    detections: Iterable[Detection], include_confidence: bool = True
) -> str:
    """Serialize detections in the line format, coordinates at 6 decimals."""
    lines = []
    for det in detections:
        box = det.box
        line = f"{det.label.code} {box.cx:.6f} {box.cy:.6f} {box.w:.6f} {box.h:.6f}"
        if include_confidence:
            line += f" {det.confidence:.6f}"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")


def parse_detection_file(path, kind: str, has_confidence: bool = True) -> list[Detection]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MissingFileError(path, str(exc)) from None
    return parse_detection_lines(text, kind, has_confidence, path=path)


# ---------------------------------------------------------------------------
# bit manifests


@dataclass(frozen=True)
class ManifestEntry:
    """One image of a bit: its view and the detection files of both streams."""

    image_id: str
    view: str
    location_file: Path
    damage_file: Path
    side_index: int | None = None
    gt_location_file: Path | None = None
    gt_damage_file: Path | None = None


@dataclass(frozen=True)
class BitManifest:
    bit_id: str
    num_main_blades: int
    entries: tuple[ManifestEntry, ...]


def load_manifest(path) -> BitManifest:
    """Read and validate one bit manifest JSON document.

    File paths are resolved relative to the manifest's directory and must
    exist at load time.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise MissingFileError(path, str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None

    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    bit_id = raw.get("bit_id")
    if not isinstance(bit_id, str) or not bit_id:
        raise ManifestError(f"{path}: bit_id must be a nonempty string")
    num_main_blades = raw.get("num_main_blades", 7)
    if not isinstance(num_main_blades, int) or num_main_blades < 1:
        raise ManifestError(f"{path}: num_main_blades must be a positive integer")
    images = raw.get("images")
    if not isinstance(images, list):
        raise ManifestError(f"{path}: images must be a list")

    base = path.parent
    entries = []
    seen_ids = set()
    next_side = 1
    n_tops = 0
    for item in images:
        if not isinstance(item, dict):
            raise ManifestError(f"{path}: image entries must be objects")
        image_id = item.get("image_id")
        if not isinstance(image_id, str) or not image_id:
            raise ManifestError(f"{path}: image_id must be a nonempty string")
        if image_id in seen_ids:
            raise ManifestError(f"{path}: duplicate image_id {image_id!r}")
        seen_ids.add(image_id)
        view = item.get("view")
        if view not in (VIEW_TOP, VIEW_SIDE):
            raise ManifestError(f"{path}: view must be 'top' or 'side', got {view!r}")
        side_index = None
        if view == VIEW_SIDE:
            side_index = item.get("side_index", next_side)
            if not isinstance(side_index, int) or side_index < 1:
                raise ManifestError(f"{path}: side_index must be an integer >= 1")
            next_side = max(next_side, side_index) + 1
        else:
            n_tops += 1
            if n_tops > 1:
                raise ManifestError(f"{path}: more than one top view")

        def resolve(key: str, required: bool) -> Path | None:
            value = item.get(key)
            if value is None:
                if required:
                    raise ManifestError(f"{path}: entry {image_id!r} lacks {key}")
                return None
            if not isinstance(value, str):
                raise ManifestError(f"{path}: {key} must be a string path")
            file_path = base / value
            if not file_path.is_file():
                raise MissingFileError(file_path)
            return file_path

        entries.append(
            ManifestEntry(
                image_id=image_id,
                view=view,
                side_index=side_index,
                location_file=resolve("location_file", required=True),
                damage_file=resolve("damage_file", required=True),
                gt_location_file=resolve("gt_location_file", required=False),
                gt_damage_file=resolve("gt_damage_file", required=False),
            )
        )
    return BitManifest(bit_id=bit_id, num_main_blades=num_main_blades, entries=tuple(entries))


def load_bit(manifest: BitManifest) -> BitDetections:
    """Read every file named by ``manifest`` into one :class:`BitDetections`.

    No entry is ever dropped silently: the result carries exactly one
    record per manifest entry in each stream, with empty ground-truth
    records where no annotation file was given.
    """
    loc_records, dmg_records = [], []
    gt_loc_records, gt_dmg_records = [], []
    for entry in manifest.entries:
        common = {"image_id": entry.image_id, "view": entry.view, "side_index": entry.side_index}
        loc_records.append(
            ImageRecord(detections=parse_detection_file(entry.location_file, "location"), **common)
        )
        dmg_records.append(
            ImageRecord(detections=parse_detection_file(entry.damage_file, "damage"), **common)
        )
        gt_loc = (
            parse_detection_file(entry.gt_location_file, "location", has_confidence=False)
            if entry.gt_location_file
            else []
        )
        gt_dmg = (
            parse_detection_file(entry.gt_damage_file, "damage", has_confidence=False)
            if entry.gt_damage_file
            else []
        )
        gt_loc_records.append(ImageRecord(detections=gt_loc, **common))
        gt_dmg_records.append(ImageRecord(detections=gt_dmg, **common))
    return BitDetections(
        bit_id=manifest.bit_id,
        num_main_blades=manifest.num_main_blades,
        location_images=tuple(loc_records),
        damage_images=tuple(dmg_records),
        gt_location_images=tuple(gt_loc_records),
        gt_damage_images=tuple(gt_dmg_records),
    )


def load_bit_file(path) -> BitDetections:
    return load_bit(load_manifest(path))


def load_dataset(directory) -> list[BitDetections]:
    """Load every ``*.json`` manifest under ``directory``, sorted by bit_id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise MissingFileError(directory, "not a directory")
    manifest_paths = sorted(directory.glob("*.json"))
    if not manifest_paths:
        raise ManifestError(f"{directory}: no manifest files (*.json) found")
    bits = [load_bit_file(p) for p in manifest_paths]
    by_id = {}
    for bit in bits:
        if bit.bit_id in by_id:
            raise ManifestError(f"{directory}: duplicate bit_id {bit.bit_id!r}")
        by_id[bit.bit_id] = bit
    return sorted(bits, key=lambda b: b.bit_id)


# ---------------------------------------------------------------------------
# cause-label CSVs


@dataclass(frozen=True)
class CauseLabelRecord:
    """Failure causes annotated or predicted for one bit."""

    bit_id: str
    causes: frozenset[FailureCause]

    def __post_init__(self):
        if not self.bit_id:
            raise ValueError("bit_id must be nonempty")
        object.__setattr__(self, "causes", frozenset(self.causes))


def parse_cause_labels(text: str) -> list[CauseLabelRecord]:
    """Parse a cause-label CSV; cells are 0/1, green excludes all others."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty cause CSV") from None
    if tuple(header) != CAUSE_CSV_HEADER:
        raise ParseError(
            f"bad header; expected {','.join(CAUSE_CSV_HEADER)!r}, got {','.join(header)!r}",
            line=1,
        )
    records = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CAUSE_CSV_HEADER):
            raise ParseError(f"expected {len(CAUSE_CSV_HEADER)} cells, got {len(row)}", line=lineno)
        bit_id = row[0]
        if not bit_id:
            raise ParseError("empty bit_id", line=lineno)
        if bit_id in seen:
            raise ParseError(f"duplicate bit_id {bit_id!r}", line=lineno)
        seen.add(bit_id)
        causes = set()
        for cause, cell in zip(CAUSE_CSV_ORDER, row[1:]):
            if cell not in ("0", "1"):
                raise ParseError(f"non-binary cell {cell!r} in column {cause.code}", line=lineno)
            if cell == "1":
                causes.add(cause)
        if FailureCause.GREEN in causes and len(causes) > 1:
            raise GreenConflictError(
                f"line {lineno}: bit {bit_id!r} marks green together with other causes"
            )
        records.append(CauseLabelRecord(bit_id=bit_id, causes=frozenset(causes)))
    return records


def format_cause_labels(records: Sequence[CauseLabelRecord]) -> str:
    """Serialize cause records to the CSV format accepted by the parser."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CAUSE_CSV_HEADER)
    for rec in records:
        writer.writerow([rec.bit_id] + ["1" if c in rec.causes else "0" for c in CAUSE_CSV_ORDER])
    return out.getvalue()


def parse_cause_labels_file(path) -> list[CauseLabelRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MissingFileError(path, str(exc)) from None
    try:
        return parse_cause_labels(text)
    except ParseError as exc:
        raise ParseError(exc.reason, line=exc.line, path=path) from None
