"""Dataset-level gaze statistics: attention allocation over described and
non-described regions, noun-order effects, fixation durations,
describe/fixate probabilities, inter-observer congruency, encoder
agreement, and the consistency/score correlation.

A pixel belongs to exactly one of four classes relative to one subject's
description of one image:

* DO  — object category mentioned by the subject,
* NDO — object category not mentioned,
* DB  — background category mentioned,
* NDB — background category not mentioned, including unlabeled pixels.

Per-(image, subject) ratios are macro-averaged (unweighted) across the
dataset; fixation durations are pooled over fixations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    TASK_ORDER,
    CategoryKind,
    CategoryTable,
    FloatGridStack,
    GazeSession,
    SaliencyMap,
    SemanticMask,
    Task,
    Transcript,
)
from .errors import (
    EmptyClass,
    EmptyDenominator,
    EmptyFixations,
    GazekitError,
    MissingTranscript,
    NoRegions,
    TooFewSubjects,
    UnknownCategory,
)
from .metrics import auc_judd, spearman
from .resample import bilinear_resize
from .salmap import DEFAULT_SIGMA_PX, connected_components, fixations_to_salmap, top_percent_mask

__all__ = [
    "AgreementResult",
    "AllocationRow",
    "Corpus",
    "DescribeFixateProbs",
    "DurationStats",
    "RegionAgreement",
    "RegionClass",
    "RegionPartition",
    "allocation_table",
    "attention_ratio",
    "congruency_correlation",
    "describe_fixate_probs",
    "encoder_agreement",
    "fixation_duration_stats",
    "ioc_matrix",
    "noun_order_allocation",
    "partition_regions",
    "unannotated_noun_tally",
]


class RegionClass(IntEnum):
    DO = 0
    NDO = 1
    DB = 2
    NDB = 3


@dataclass(frozen=True)
class RegionPartition:
    """Per-pixel assignment to the four description classes."""

    classes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.classes, dtype=np.int8)
        if arr.ndim != 2:
            raise ValueError("partition must be a 2-D grid")
        if arr.size and (arr.min() < 0 or arr.max() > 3):
            raise ValueError("partition entries must be RegionClass codes")
        arr.setflags(write=False)
        object.__setattr__(self, "classes", arr)

    def pixels_of(self, cls: RegionClass) -> np.ndarray:
        return self.classes == int(cls)


@dataclass(frozen=True)
class AllocationRow:
    task: Task
    ratios: dict[RegionClass, float]
    n_sessions: int


@dataclass(frozen=True)
class Corpus:
    """Everything the dataset-level analyses need, already parsed.

    ``sizes`` gives (width, height) per image; ``transcripts`` are keyed
    by (image_id, subject_id) and must be resolved before use.
    """

    table: CategoryTable
    sizes: Mapping[str, tuple[int, int]]
    masks: Mapping[str, SemanticMask]
    transcripts: Mapping[tuple[str, str], Transcript]
    sessions: tuple[GazeSession, ...]

    def sessions_for(self, task: Task | None) -> list[GazeSession]:
        if task is None:
            return list(self.sessions)
        return [s for s in self.sessions if s.task is task]

    def mask_for(self, image_id: str) -> SemanticMask:
        try:
            return self.masks[image_id]
        except KeyError:
            raise GazekitError(f"no semantic mask for image {image_id!r}") from None

    def transcript_for(self, session: GazeSession) -> Transcript:
        try:
            return self.transcripts[(session.image_id, session.subject_id)]
        except KeyError:
            raise MissingTranscript(session.image_id, session.subject_id) from None


def attention_ratio(fixations: Sequence, region) -> float:
    """Fraction of fixations whose pixel lies in ``region`` (a boolean
    grid or a set of (x, y) pairs)."""
    from .core import points_of

    pts = points_of(fixations)
    if not pts:
        raise EmptyFixations("need at least one fixation")
    if isinstance(region, np.ndarray):
        hits = sum(1 for x, y in pts if region[y, x])
    else:
        region = set(region)
        hits = sum(1 for p in pts if p in region)
    return hits / len(pts)


def partition_regions(
    mask: SemanticMask,
    table: CategoryTable,
    transcripts: Iterable[Transcript],
) -> RegionPartition:
    """Split an image's pixels into DO/NDO/DB/NDB for the describing
    subject(s) whose transcripts are given (normally exactly one)."""
    described: set[int] = set()
    for t in transcripts:
        for cid in t.described_ids():
            if cid not in table:
                raise UnknownCategory(cid)
            described.add(cid)
    classes = np.full(mask.labels.shape, int(RegionClass.NDB), dtype=np.int8)
    for cid in mask.present_ids():
        if cid not in table:
            raise UnknownCategory(cid)
        if table.kind_of(cid) is CategoryKind.OBJECT:
            cls = RegionClass.DO if cid in described else RegionClass.NDO
        else:
            cls = RegionClass.DB if cid in described else RegionClass.NDB
        classes[mask.labels == cid] = int(cls)
    return RegionPartition(classes)


def _session_ratios(corpus: Corpus, session: GazeSession) -> np.ndarray:
    partition = partition_regions(
        corpus.mask_for(session.image_id),
        corpus.table,
        [corpus.transcript_for(session)],
    )
    if not session.fixations:
        raise EmptyFixations(
            f"session {session.subject_id}/{session.image_id} has no fixations"
        )
    counts = np.zeros(4, dtype=np.float64)
    for f in session.fixations:
        counts[partition.classes[f.y, f.x]] += 1.0
    return counts / counts.sum()


def allocation_table(corpus: Corpus) -> list[AllocationRow]:
    """Mean attention allocation over the four classes, one row per task
    present in the corpus."""
    rows = []
    for task in TASK_ORDER:
        sessions = corpus.sessions_for(task)
        if not sessions:
            continue
        ratios = np.zeros(4, dtype=np.float64)
        for s in sessions:
            ratios += _session_ratios(corpus, s)
        ratios /= len(sessions)
        rows.append(
            AllocationRow(
                task=task,
                ratios={cls: float(ratios[int(cls)]) for cls in RegionClass},
                n_sessions=len(sessions),
            )
        )
    return rows


def _described_object_order(
    corpus: Corpus, session: GazeSession
) -> list[int]:
    """Object categories the subject described, in first-mention order,
    restricted to categories actually present in the image mask."""
    mask = corpus.mask_for(session.image_id)
    present = set(mask.present_ids())
    ordered: list[int] = []
    for noun in corpus.transcript_for(session).nouns:
        cid = noun.category_id
        if cid is None or cid in ordered:
            continue
        if cid not in corpus.table:
            raise UnknownCategory(cid)
        if corpus.table.kind_of(cid) is not CategoryKind.OBJECT or cid not in present:
            continue
        ordered.append(cid)
    return ordered


def noun_order_allocation(
    corpus: Corpus, max_order: int = 5
) -> dict[Task, dict[int, float]]:
    """Mean attention ratio on the k-th described object, per task.

    Order k is only averaged over sessions that actually described a k-th
    object present in the mask; orders beyond ``max_order`` are truncated.
    """
    sums: dict[Task, dict[int, list[float]]] = {t: {} for t in TASK_ORDER}
    for session in corpus.sessions:
        ordered = _described_object_order(corpus, session)
        if not ordered:
            continue
        mask = corpus.mask_for(session.image_id)
        for k, cid in enumerate(ordered[:max_order], start=1):
            ratio = attention_ratio(session.fixations, mask.labels == cid)
            sums[session.task].setdefault(k, []).append(ratio)
    return {
        task: {k: float(np.mean(vals)) for k, vals in sorted(per_task.items())}
        for task, per_task in sums.items()
        if per_task
    }


@dataclass(frozen=True)
class DurationStats:
    """Mean fixation duration (seconds) on described vs. non-described
    objects; a class nobody fixated reports None instead of a mean."""

    mean_do_s: float | None
    mean_ndo_s: float | None
    n_do: int
    n_ndo: int


def fixation_duration_stats(corpus: Corpus, task: Task | None = None) -> DurationStats:
    """Pool fixation durations over all matching sessions, split by
    whether the fixated pixel lies on a described or non-described
    object."""
    durations: dict[RegionClass, list[float]] = {RegionClass.DO: [], RegionClass.NDO: []}
    for session in corpus.sessions_for(task):
        partition = partition_regions(
            corpus.mask_for(session.image_id),
            corpus.table,
            [corpus.transcript_for(session)],
        )
        for f in session.fixations:
            cls = RegionClass(int(partition.classes[f.y, f.x]))
            if cls in durations:
                durations[cls].append(f.duration_ms / 1000.0)
    do, ndo = durations[RegionClass.DO], durations[RegionClass.NDO]
    if not do and not ndo:
        raise EmptyClass("no fixation landed on any object pixel")
    return DurationStats(
        mean_do_s=float(np.mean(do)) if do else None,
        mean_ndo_s=float(np.mean(ndo)) if ndo else None,
        n_do=len(do),
        n_ndo=len(ndo),
    )


@dataclass(frozen=True)
class DescribeFixateProbs:
    """P(described | fixated) and P(fixated | described) over
    (image, object category, subject) triples; an empty denominator
    reports None."""

    p_desc_given_fix: float | None
    p_fix_given_desc: float | None
    n_fixated: int
    n_described: int
    n_both: int


def _dilated_region(mask: SemanticMask, cid: int, radius: float) -> np.ndarray:
    region = mask.labels == cid
    if radius <= 0:
        return region
    from scipy.ndimage import binary_dilation

    r = int(math.floor(radius))
    ys, xs = np.mgrid[-r : r + 1, -r : r + 1]
    structure = (xs**2 + ys**2) <= radius**2
    return binary_dilation(region, structure=structure)


def describe_fixate_probs(
    corpus: Corpus, task: Task, dilation_px: float = 0.0
) -> DescribeFixateProbs:
    """Count, per session, which object categories present in the mask
    were fixated (>= 1 fixation pixel inside, optionally dilated by
    ``dilation_px``) and which were described."""
    n_fix = n_desc = n_both = 0
    object_ids = corpus.table.object_ids()
    for session in corpus.sessions_for(task):
        mask = corpus.mask_for(session.image_id)
        described = corpus.transcript_for(session).described_ids()
        pts = session.points()
        for cid in mask.present_ids():
            if cid not in object_ids:
                continue
            region = _dilated_region(mask, cid, dilation_px)
            fixated = any(region[y, x] for x, y in pts)
            is_desc = cid in described
            n_fix += fixated
            n_desc += is_desc
            n_both += fixated and is_desc
    if n_fix == 0 and n_desc == 0:
        raise EmptyDenominator("no object was fixated or described")
    return DescribeFixateProbs(
        p_desc_given_fix=n_both / n_fix if n_fix else None,
        p_fix_given_desc=n_both / n_desc if n_desc else None,
        n_fixated=n_fix,
        n_described=n_desc,
        n_both=n_both,
    )


def unannotated_noun_tally(transcripts: Iterable[Transcript]) -> dict[str, int]:
    """Count nouns that resolved to no category, most frequent first
    (ties alphabetical)."""
    counts: dict[str, int] = {}
    for t in transcripts:
        for n in t.nouns:
            if n.category_id is None:
                counts[n.word] = counts.get(n.word, 0) + 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def ioc_matrix(
    sessions: Iterable[GazeSession],
    sizes: Mapping[str, tuple[int, int]],
    sigma: float = DEFAULT_SIGMA_PX,
) -> np.ndarray:
    """Cross-task inter-observer congruency.

    Cell (row = left-out task L, col = reference task R) averages, over
    images and subjects s with fixations under L, the AUC-Judd of s's
    fixations against a map built from all other subjects' fixations
    under R. Cells with no valid (image, subject) pair are NaN. Task
    order is free, cap3s, cap.
    """
    by_task: dict[Task, dict[str, dict[str, list[tuple[int, int]]]]] = {
        t: {} for t in TASK_ORDER
    }
    for s in sessions:
        by_task[s.task].setdefault(s.image_id, {}).setdefault(s.subject_id, []).extend(
            s.points()
        )
    for task in TASK_ORDER:
        subjects = {subj for per_img in by_task[task].values() for subj in per_img}
        if len(subjects) < 2:
            raise TooFewSubjects(f"reference task {task.value!r} needs >= 2 subjects")

    matrix = np.full((3, 3), np.nan)
    for li, left_out in enumerate(TASK_ORDER):
        for ri, reference in enumerate(TASK_ORDER):
            scores = []
            for image_id in sorted(by_task[left_out]):
                ref_subjects = by_task[reference].get(image_id)
                if not ref_subjects or image_id not in sizes:
                    continue
                width, height = sizes[image_id]
                for subject in sorted(by_task[left_out][image_id]):
                    ref_pts = [
                        p
                        for other, pts in sorted(ref_subjects.items())
                        if other != subject
                        for p in pts
                    ]
                    if not ref_pts:
                        continue
                    ref_map = fixations_to_salmap(ref_pts, width, height, sigma)
                    scores.append(
                        auc_judd(ref_map, by_task[left_out][image_id][subject])
                    )
            if scores:
                matrix[li, ri] = float(np.mean(scores))
    return matrix


@dataclass(frozen=True)
class RegionAgreement:
    label: int
    pixel_count: int
    best_nss: float | None
    best_grid: int | None
    attended: bool
    skipped_grids: int


@dataclass(frozen=True)
class AgreementResult:
    attended_fraction: float
    mean_best_nss: float
    per_region: tuple[RegionAgreement, ...]


def encoder_agreement(
    human_map: SaliencyMap,
    activations: FloatGridStack,
    percent: float = 5.0,
    threshold: float = 4.0,
) -> AgreementResult:
    """How many human-attended regions the encoder's activation maps also
    attend.

    The human map is thresholded at its top ``percent`` and split into
    8-connected regions; a region counts as attended when some activation
    grid scores NSS > ``threshold`` over the region's pixels. Activation
    grids are bilinearly resampled to the map's size when needed;
    zero-variance grids are skipped and tallied per region.
    """
    regions = connected_components(top_percent_mask(human_map, percent))
    if not regions:
        raise NoRegions("thresholded map has no set bits")

    grids = activations.grids
    if (activations.height, activations.width) != (human_map.height, human_map.width):
        grids = np.stack(
            [
                bilinear_resize(grids[c], human_map.height, human_map.width)
                for c in range(activations.count)
            ]
        )
    z_grids = []
    skipped = 0
    for c in range(grids.shape[0]):
        std = float(grids[c].std())
        if std == 0.0:
            skipped += 1
            continue
        z_grids.append((c, (grids[c] - grids[c].mean()) / std))

    per_region = []
    attended = 0
    best_values = []
    for region in regions:
        xs = np.array([p[0] for p in region.pixels])
        ys = np.array([p[1] for p in region.pixels])
        best_nss = None
        best_grid = None
        for c, z in z_grids:
            score = float(z[ys, xs].mean())
            if best_nss is None or score > best_nss:
                best_nss = score
                best_grid = c
        is_attended = best_nss is not None and best_nss > threshold
        attended += is_attended
        if best_nss is not None:
            best_values.append(best_nss)
        per_region.append(
            RegionAgreement(
                label=region.label,
                pixel_count=len(region.pixels),
                best_nss=best_nss,
                best_grid=best_grid,
                attended=is_attended,
                skipped_grids=skipped,
            )
        )
    return AgreementResult(
        attended_fraction=attended / len(regions),
        mean_best_nss=float(np.mean(best_values)) if best_values else math.nan,
        per_region=tuple(per_region),
    )


def congruency_correlation(
    consistency: Mapping[str, float], scores: Mapping[str, float]
) -> float:
    """Spearman correlation between per-image attention consistency and
    per-image caption score, aligned on common image ids."""
    common = sorted(set(consistency) & set(scores))
    return spearman([consistency[i] for i in common], [scores[i] for i in common])
