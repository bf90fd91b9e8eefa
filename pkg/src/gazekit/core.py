"""Domain types shared by all modules, session validation, and noun
resolution.

Conventions, adopted package-wide:

* coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row,
  origin at the top-left, pixel units;
* timestamps are milliseconds;
* dense grids are numpy arrays indexed ``[y, x]`` (row-major);
* a saliency map is canonically normalized to unit sum.

All types are immutable after construction and safe to share across
threads. Structural invariants (shapes, normalization) are enforced at
construction; per-record gaze invariants are checked by
:func:`validate_session`, which reports violations as data instead of
raising.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "CAP3S_LIMIT_MS",
    "Category",
    "CategoryTable",
    "CategoryKind",
    "FixationLocationSet",
    "FixationRecord",
    "FloatGridStack",
    "GazeSession",
    "Noun",
    "SaliencyMap",
    "SemanticMask",
    "Task",
    "Transcript",
    "group_sessions",
    "points_of",
    "resolve_nouns",
    "validate_session",
]

UNIT_SUM_TOL = 1e-6
CAP3S_LIMIT_MS = 3000.0


class Task(str, Enum):
    """Viewing condition a gaze session was recorded under."""

    FREE = "free"
    CAP3S = "cap3s"
    CAP = "cap"


TASK_ORDER = (Task.FREE, Task.CAP3S, Task.CAP)


@dataclass(frozen=True)
class FixationRecord:
    """One stabilized gaze event: where a subject looked and for how long."""

    subject_id: str
    image_id: str
    t_start: float
    t_end: float
    x: int
    y: int

    @property
    def duration_ms(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class GazeSession:
    """All fixations of one subject on one image under one task."""

    subject_id: str
    image_id: str
    task: Task
    fixations: tuple[FixationRecord, ...]

    def points(self) -> list[tuple[int, int]]:
        return [(f.x, f.y) for f in self.fixations]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SaliencyMap:
    """Dense nonnegative attention density over an image, unit sum."""

    values: np.ndarray
    width: int = 0
    height: int = 0

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("saliency map values must be a 2-D grid")
        if not np.all(arr >= 0.0):
            raise ValueError("saliency map values must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > UNIT_SUM_TOL:
            raise ValueError(f"saliency map must sum to 1 (got {total!r})")
        object.__setattr__(self, "values", _freeze(arr))
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])

    @classmethod
    def normalized(cls, values: np.ndarray) -> "SaliencyMap":
        """Build a map from any nonnegative grid by dividing by its sum."""
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("saliency map values must be a 2-D grid")
        if not np.all(arr >= 0.0):
            raise ValueError("saliency map values must be nonnegative")
        total = float(arr.sum())
        if total <= 0.0:
            raise ValueError("cannot normalize an all-zero grid")
        return cls(arr / total)


@dataclass(frozen=True)
class SemanticMask:
    """Per-pixel category ids; 0 marks unlabeled pixels."""

    labels: np.ndarray
    width: int = 0
    height: int = 0

    def __post_init__(self):
        arr = np.array(self.labels)
        if arr.ndim != 2 or not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("mask labels must be a 2-D integer grid")
        if arr.size and int(arr.min()) < 0:
            raise ValueError("mask labels must be nonnegative")
        arr = arr.astype(np.int32, copy=False)
        object.__setattr__(self, "labels", _freeze(arr))
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])

    def present_ids(self) -> list[int]:
        """Nonzero category ids that actually occur in the mask."""
        return [int(v) for v in np.unique(self.labels) if v != 0]


class CategoryKind(str, Enum):
    OBJECT = "object"
    BACKGROUND = "background"


@dataclass(frozen=True)
class Category:
    category_id: int
    name: str
    kind: CategoryKind


@dataclass(frozen=True)
class CategoryTable:
    """Lookup table of semantic categories with the object/background split."""

    entries: tuple[Category, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.category_id <= 0:
                raise ValueError(f"category ids must be positive (got {e.category_id})")
            if e.category_id in seen:
                raise ValueError(f"duplicate category id {e.category_id}")
            seen.add(e.category_id)
        object.__setattr__(self, "_by_id", {e.category_id: e for e in self.entries})

    def __contains__(self, category_id: int) -> bool:
        return category_id in self._by_id

    def get(self, category_id: int) -> Category:
        return self._by_id[category_id]

    def kind_of(self, category_id: int) -> CategoryKind:
        return self._by_id[category_id].kind

    def object_ids(self) -> set[int]:
        return {e.category_id for e in self.entries if e.kind is CategoryKind.OBJECT}


#: Sentinel for a noun with no mask category. Kept as ``None`` in Python.
ABSENT = None


@dataclass(frozen=True)
class Noun:
    word: str
    order: int
    category_id: int | None


@dataclass(frozen=True)
class Transcript:
    """One subject's description of one image, reduced to ordered nouns."""

    subject_id: str
    image_id: str
    text: str
    nouns: tuple[Noun, ...]

    def described_ids(self) -> set[int]:
        """Category ids of all resolved nouns."""
        return {n.category_id for n in self.nouns if n.category_id is not None}


@dataclass(frozen=True)
class FloatGridStack:
    """C equally-sized dense real grids (activations, attention frames,
    or feature vectors as C x 1 x K)."""

    grids: np.ndarray
    count: int = 0
    width: int = 0
    height: int = 0

    def __post_init__(self):
        arr = np.array(self.grids, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError("grid stack must have shape (count, height, width)")
        if arr.shape[0] < 1:
            raise ValueError("grid stack must hold at least one grid")
        object.__setattr__(self, "grids", _freeze(arr))
        object.__setattr__(self, "count", arr.shape[0])
        object.__setattr__(self, "height", arr.shape[1])
        object.__setattr__(self, "width", arr.shape[2])

    def vectors(self) -> np.ndarray:
        """View a (C, 1, K) stack as C feature vectors of length K."""
        if self.height != 1:
            raise ValueError("stack does not hold 1-row feature vectors")
        return self.grids[:, 0, :]


@dataclass(frozen=True)
class FixationLocationSet:
    """Ordered fixated pixel locations, e.g. the output of WTA selection."""

    points: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.points) < 1:
            raise ValueError("a fixation location set holds at least one point")

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def points_of(fixations: Iterable) -> list[tuple[int, int]]:
    """Coerce FixationRecords, (x, y) pairs, or a FixationLocationSet to
    a plain list of integer pixel pairs."""
    pts = []
    for f in fixations:
        if isinstance(f, FixationRecord):
            pts.append((f.x, f.y))
        else:
            x, y = f
            pts.append((int(x), int(y)))
    return pts


def validate_session(session: GazeSession, width: int, height: int) -> list[str]:
    """Check every fixation of ``session`` against the image dimensions
    and the session's task rules.

    Returns a list of human-readable violations (empty when the session is
    valid). Violations are data, not failures: nothing raises.
    """
    violations = []
    prev_start = None
    for i, f in enumerate(session.fixations):
        if f.t_start < 0:
            violations.append(f"negative t_start @index {i}")
        if f.t_end < f.t_start:
            violations.append(f"t_end < t_start @index {i}")
        if not (0 <= f.x < width and 0 <= f.y < height):
            violations.append(f"out of bounds @index {i}")
        if prev_start is not None and f.t_start < prev_start:
            violations.append(f"not ordered by t_start @index {i}")
        if session.task is Task.CAP3S and f.t_start >= CAP3S_LIMIT_MS:
            violations.append(f"cap3s fixation at/after 3000 ms @index {i}")
        prev_start = f.t_start
    return violations


def resolve_nouns(transcript: Transcript, lexicon: Mapping[str, int]) -> Transcript:
    """Assign each noun the category id the lexicon maps its word to.

    Words missing from the lexicon become unresolved (``category_id=None``).
    Order and words are preserved; the operation is idempotent.
    """
    resolved = tuple(
        replace(n, category_id=lexicon.get(n.word, ABSENT)) for n in transcript.nouns
    )
    return replace(transcript, nouns=resolved)


def group_sessions(
    records: Sequence[FixationRecord], task: Task
) -> list[GazeSession]:
    """Group a flat fixation log into per-(subject, image) sessions.

    Records keep file order within each session; sessions appear in order
    of first appearance.
    """
    by_key: dict[tuple[str, str], list[FixationRecord]] = {}
    for r in records:
        by_key.setdefault((r.subject_id, r.image_id), []).append(r)
    return [
        GazeSession(subject_id=s, image_id=im, task=task, fixations=tuple(fs))
        for (s, im), fs in by_key.items()
    ]
