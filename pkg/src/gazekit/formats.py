"""Bit-exact readers and writers for the external data formats.

Formats handled here:

* fixation logs — UTF-8 CSV, header
  ``subject_id,image_id,t_start_ms,t_end_ms,x_px,y_px``;
* FGRID — a tiny binary container for float grid stacks: magic ``FG01``,
  then count/height/width as unsigned 32-bit little-endian, then
  count*height*width IEEE-754 binary32 little-endian values, row-major,
  grid-major (see docs/fgrid_format.md);
* semantic masks — binary PGM (``P5``, maxval <= 255), pixel value is the
  category id, 0 is unlabeled;
* images — binary PPM (``P6``, maxval 255);
* transcripts — JSON lines of
  ``{subject_id, image_id, text, nouns:[{word, order, category_id|null}]}``;
* per-image scores, category tables, and noun lexicons — small CSVs.

CSV fields are never quoted; subject and image identifiers are restricted
to ``[A-Za-z0-9_-]`` so no escaping logic exists anywhere. All parsers
validate declared lengths before touching the payload; malformed input
raises a :class:`~gazekit.errors.GazekitError`, never an uncontrolled
exception.
"""

from __future__ import annotations

import json
import math
import re
import struct
from typing import Mapping

import numpy as np

from .core import (
    Category,
    CategoryKind,
    CategoryTable,
    FixationRecord,
    FloatGridStack,
    Noun,
    SemanticMask,
    Transcript,
)
from .errors import (
    BadMagic,
    DuplicateImage,
    MalformedHeader,
    MalformedLine,
    MalformedRow,
    NonIncreasingOrder,
    TruncatedPayload,
    UnknownCategory,
    UnsupportedFormat,
)

__all__ = [
    "FIXATION_HEADER",
    "parse_categories",
    "parse_fixation_log",
    "parse_lexicon",
    "parse_mask",
    "parse_scores",
    "parse_transcripts",
    "read_fgrid",
    "read_ppm",
    "write_categories",
    "write_fixation_log",
    "write_fgrid",
    "write_lexicon",
    "write_mask",
    "write_pgm",
    "write_ppm",
    "write_scores",
    "write_transcripts",
]

FIXATION_HEADER = "subject_id,image_id,t_start_ms,t_end_ms,x_px,y_px"
SCORES_HEADER = "image_id,score"
CATEGORIES_HEADER = "category_id,name,kind"
LEXICON_HEADER = "word,category_id"

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")
_FGRID_MAGIC = b"FG01"


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedHeader(f"file is not UTF-8: {exc}") from None


def _lines(text: str) -> list[str]:
    lines = [ln.rstrip("\r") for ln in text.split("\n")]
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _fmt_ms(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


# --- fixation log ---------------------------------------------------------


def parse_fixation_log(data: bytes) -> list[FixationRecord]:
    """Parse a fixation CSV into records, in file order.

    Line numbers in errors are 1-based and include the header line.
    ``x_px``/``y_px`` must be integers (fractional pixels are malformed);
    timestamps may be integers or decimals.
    """
    lines = _lines(_decode(data))
    if not lines or lines[0] != FIXATION_HEADER:
        raise MalformedHeader(f"expected header {FIXATION_HEADER!r}")
    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 6:
            raise MalformedRow(line_no, f"expected 6 fields, got {len(fields)}")
        subject_id, image_id, t_start, t_end, x, y = fields
        if not _ID_RE.match(subject_id) or not _ID_RE.match(image_id):
            raise MalformedRow(line_no, "identifiers must match [A-Za-z0-9_-]+")
        try:
            rec = FixationRecord(
                subject_id=subject_id,
                image_id=image_id,
                t_start=float(t_start),
                t_end=float(t_end),
                x=int(x),
                y=int(y),
            )
        except ValueError:
            raise MalformedRow(line_no, "non-numeric field") from None
        if not (math.isfinite(rec.t_start) and math.isfinite(rec.t_end)):
            raise MalformedRow(line_no, "non-finite timestamp")
        records.append(rec)
    return records


def write_fixation_log(records: list[FixationRecord]) -> bytes:
    rows = [FIXATION_HEADER]
    for r in records:
        rows.append(
            f"{r.subject_id},{r.image_id},{_fmt_ms(r.t_start)},{_fmt_ms(r.t_end)},{r.x},{r.y}"
        )
    return ("\n".join(rows) + "\n").encode("utf-8")


# --- FGRID ----------------------------------------------------------------


def read_fgrid(data: bytes) -> FloatGridStack:
    """Read an FGRID container into a stack of float64 grids.

    Values are exact upcasts of the stored binary32 payload.
    """
    if len(data) < 4 or data[:4] != _FGRID_MAGIC:
        raise BadMagic("missing FG01 magic")
    if len(data) < 16:
        raise TruncatedPayload("header shorter than 16 bytes")
    count, height, width = struct.unpack_from("<III", data, 4)
    if count < 1 or height < 1 or width < 1:
        raise TruncatedPayload("zero-sized grid stack")
    expected = 16 + count * height * width * 4
    if len(data) != expected:
        raise TruncatedPayload(
            f"payload length {len(data) - 16} != {count}*{height}*{width}*4"
        )
    flat = np.frombuffer(data, dtype="<f4", offset=16)
    return FloatGridStack(flat.reshape(count, height, width).astype(np.float64))


def write_fgrid(stack: FloatGridStack) -> bytes:
    """Serialize a stack as FGRID. Values are stored as binary32: stacks
    read from FGRID round-trip bit-exactly, other values are rounded."""
    header = _FGRID_MAGIC + struct.pack("<III", stack.count, stack.height, stack.width)
    return header + stack.grids.astype("<f4").tobytes(order="C")


# --- PGM / PPM ------------------------------------------------------------


def _read_pnm(data: bytes, magic: bytes, channels: int) -> tuple[int, int, int, bytes]:
    """Shared binary PNM header scanner. Returns (width, height, maxval,
    raster) after validating the payload length exactly."""
    pos = 0

    def skip_space_and_comments(pos: int) -> int:
        while pos < len(data):
            c = data[pos : pos + 1]
            if c in b" \t\r\n":
                pos += 1
            elif c == b"#":
                nl = data.find(b"\n", pos)
                if nl < 0:
                    return len(data)
                pos = nl + 1
            else:
                break
        return pos

    def read_int(pos: int) -> tuple[int, int]:
        pos = skip_space_and_comments(pos)
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise UnsupportedFormat("malformed header integer")
        return int(data[start:pos]), pos

    if data[:2] != magic:
        raise UnsupportedFormat(f"not a binary {magic.decode()} file")
    pos = 2
    width, pos = read_int(pos)
    height, pos = read_int(pos)
    maxval, pos = read_int(pos)
    if width < 1 or height < 1:
        raise UnsupportedFormat("zero-sized image")
    if not (1 <= maxval <= 255):
        raise UnsupportedFormat(f"maxval {maxval} outside 1..255")
    if pos >= len(data) or data[pos : pos + 1] not in b" \t\r\n":
        raise UnsupportedFormat("missing whitespace before raster")
    pos += 1
    raster = data[pos:]
    if len(raster) != width * height * channels:
        raise UnsupportedFormat(
            f"raster length {len(raster)} != {width}x{height}x{channels}"
        )
    return width, height, maxval, raster


def parse_mask(data: bytes, table: CategoryTable) -> SemanticMask:
    """Parse a P5 mask whose pixel values are category ids; every nonzero
    value must exist in ``table``."""
    width, height, _maxval, raster = _read_pnm(data, b"P5", 1)
    labels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    for v in np.unique(labels):
        if v != 0 and int(v) not in table:
            raise UnknownCategory(int(v))
    return SemanticMask(labels.astype(np.int32))


def write_pgm(grid: np.ndarray) -> bytes:
    """Write a 2-D grid of values in 0..255 as binary PGM."""
    arr = np.asarray(grid)
    if arr.ndim != 2:
        raise ValueError("PGM grid must be 2-D")
    if arr.size and (int(arr.min()) < 0 or int(arr.max()) > 255):
        raise ValueError("PGM values must lie in 0..255")
    h, w = arr.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + arr.astype(np.uint8).tobytes()


def write_mask(mask: SemanticMask) -> bytes:
    if int(mask.labels.max(initial=0)) > 255:
        raise ValueError("mask labels exceed 8-bit PGM range")
    return write_pgm(mask.labels)


def read_ppm(data: bytes) -> np.ndarray:
    """Read a binary P6 image into an (H, W, 3) uint8 array."""
    width, height, _maxval, raster = _read_pnm(data, b"P6", 3)
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(image: np.ndarray) -> bytes:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("PPM image must have shape (H, W, 3)")
    h, w, _ = arr.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + arr.astype(np.uint8).tobytes()


# --- transcripts ----------------------------------------------------------


def parse_transcripts(data: bytes) -> list[Transcript]:
    """Parse JSONL transcripts; noun orders must be the consecutive ranks
    1..n (``NonIncreasingOrder`` otherwise). Null category ids stay
    unresolved."""
    out = []
    for line_no, line in enumerate(_lines(_decode(data)), start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_no, f"bad JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise MalformedLine(line_no, "expected a JSON object")
        try:
            subject_id = obj["subject_id"]
            image_id = obj["image_id"]
            text = obj["text"]
            raw_nouns = obj["nouns"]
        except KeyError as exc:
            raise MalformedLine(line_no, f"missing key {exc.args[0]!r}") from None
        if (
            not isinstance(subject_id, str)
            or not isinstance(image_id, str)
            or not isinstance(text, str)
            or not isinstance(raw_nouns, list)
        ):
            raise MalformedLine(line_no, "wrong field types")
        nouns = []
        for n in raw_nouns:
            if not isinstance(n, dict):
                raise MalformedLine(line_no, "noun entries must be objects")
            word, order, cat = n.get("word"), n.get("order"), n.get("category_id")
            if not isinstance(word, str) or not isinstance(order, int) or isinstance(order, bool):
                raise MalformedLine(line_no, "noun needs a word and integer order")
            if cat is not None and (not isinstance(cat, int) or isinstance(cat, bool) or cat <= 0):
                raise MalformedLine(line_no, "category_id must be null or a positive integer")
            nouns.append(Noun(word=word, order=order, category_id=cat))
        for rank, n in enumerate(nouns, start=1):
            if n.order != rank:
                raise NonIncreasingOrder(line_no)
        out.append(
            Transcript(
                subject_id=subject_id, image_id=image_id, text=text, nouns=tuple(nouns)
            )
        )
    return out


def write_transcripts(transcripts: list[Transcript]) -> bytes:
    lines = []
    for t in transcripts:
        obj = {
            "subject_id": t.subject_id,
            "image_id": t.image_id,
            "text": t.text,
            "nouns": [
                {"word": n.word, "order": n.order, "category_id": n.category_id}
                for n in t.nouns
            ],
        }
        lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


# --- per-image scores -----------------------------------------------------


def parse_scores(data: bytes) -> dict[str, float]:
    """Parse an ``image_id,score`` CSV. Duplicate image ids are rejected
    outright (last-wins would silently hide data problems)."""
    lines = _lines(_decode(data))
    if not lines or lines[0] != SCORES_HEADER:
        raise MalformedHeader(f"expected header {SCORES_HEADER!r}")
    scores: dict[str, float] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 2:
            raise MalformedRow(line_no, f"expected 2 fields, got {len(fields)}")
        image_id, raw = fields
        if not _ID_RE.match(image_id):
            raise MalformedRow(line_no, "identifiers must match [A-Za-z0-9_-]+")
        try:
            value = float(raw)
        except ValueError:
            raise MalformedRow(line_no, "non-numeric score") from None
        if not math.isfinite(value):
            raise MalformedRow(line_no, "non-finite score")
        if image_id in scores:
            raise DuplicateImage(image_id)
        scores[image_id] = value
    return scores


def write_scores(scores: Mapping[str, float]) -> bytes:
    rows = [SCORES_HEADER]
    for image_id in scores:
        rows.append(f"{image_id},{repr(float(scores[image_id]))}")
    return ("\n".join(rows) + "\n").encode("utf-8")


# --- category table and lexicon -------------------------------------------


def parse_categories(data: bytes) -> CategoryTable:
    """Parse a ``category_id,name,kind`` CSV into a CategoryTable."""
    lines = _lines(_decode(data))
    if not lines or lines[0] != CATEGORIES_HEADER:
        raise MalformedHeader(f"expected header {CATEGORIES_HEADER!r}")
    entries = []
    seen = set()
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 3:
            raise MalformedRow(line_no, f"expected 3 fields, got {len(fields)}")
        raw_id, name, kind = fields
        try:
            cid = int(raw_id)
        except ValueError:
            raise MalformedRow(line_no, "non-integer category id") from None
        if cid <= 0 or cid in seen:
            raise MalformedRow(line_no, f"invalid or duplicate category id {cid}")
        if kind not in (CategoryKind.OBJECT.value, CategoryKind.BACKGROUND.value):
            raise MalformedRow(line_no, f"kind must be object|background, got {kind!r}")
        seen.add(cid)
        entries.append(Category(category_id=cid, name=name, kind=CategoryKind(kind)))
    return CategoryTable(entries=tuple(entries))


def write_categories(table: CategoryTable) -> bytes:
    rows = [CATEGORIES_HEADER]
    for e in table.entries:
        rows.append(f"{e.category_id},{e.name},{e.kind.value}")
    return ("\n".join(rows) + "\n").encode("utf-8")


def parse_lexicon(data: bytes) -> dict[str, int]:
    """Parse a ``word,category_id`` CSV mapping nouns to categories."""
    lines = _lines(_decode(data))
    if not lines or lines[0] != LEXICON_HEADER:
        raise MalformedHeader(f"expected header {LEXICON_HEADER!r}")
    lexicon: dict[str, int] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 2:
            raise MalformedRow(line_no, f"expected 2 fields, got {len(fields)}")
        word, raw_id = fields
        try:
            cid = int(raw_id)
        except ValueError:
            raise MalformedRow(line_no, "non-integer category id") from None
        if cid <= 0 or word in lexicon:
            raise MalformedRow(line_no, f"invalid id or duplicate word {word!r}")
        lexicon[word] = cid
    return lexicon


def write_lexicon(lexicon: Mapping[str, int]) -> bytes:
    rows = [LEXICON_HEADER]
    for word in lexicon:
        rows.append(f"{word},{lexicon[word]}")
    return ("\n".join(rows) + "\n").encode("utf-8")
