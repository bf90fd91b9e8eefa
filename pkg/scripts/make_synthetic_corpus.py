#!/usr/bin/env python3
"""Generate a synthetic gaze corpus with planted, exactly-known statistics.

The generator emits the full on-disk corpus layout the CLI consumes
(per-task fixation CSVs, PGM masks, category table, lexicon, JSONL
transcripts, per-image scores) together with ``expected.json`` holding
the statistics implied by the construction plan. The expectations are
computed here from the plan arithmetic alone, never by calling the
analysis code, so they serve as an independent oracle for end-to-end
tests.

Layout: every image is a 40x30 grid split into four quadrants -- a
"person" object (top-left), a "dog" object (top-right), "sky" background
(bottom-left), and unlabeled pixels (bottom-right). Each of 2 subjects
describes each image once (the transcript is shared by that subject's
sessions in all three tasks), and fixation counts per quadrant are drawn
from a small pattern table keyed by (image, subject, task).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from gazekit.core import (
    Category,
    CategoryKind,
    CategoryTable,
    FixationRecord,
    Noun,
    SemanticMask,
    Transcript,
)
from gazekit.formats import (
    write_categories,
    write_fixation_log,
    write_lexicon,
    write_mask,
    write_scores,
    write_transcripts,
)

WIDTH, HEIGHT = 40, 30
SUBJECTS = ("s0", "s1")
TASKS = ("free", "cap3s", "cap")

PERSON, DOG, SKY, GRASS = 1, 2, 3, 4

CATEGORIES = CategoryTable(
    entries=(
        Category(PERSON, "person", CategoryKind.OBJECT),
        Category(DOG, "dog", CategoryKind.OBJECT),
        Category(SKY, "sky", CategoryKind.BACKGROUND),
        Category(GRASS, "grass", CategoryKind.BACKGROUND),
    )
)

LEXICON = {
    "man": PERSON,
    "woman": PERSON,
    "dog": DOG,
    "puppy": DOG,
    "sky": SKY,
    "grass": GRASS,
}

# Per-pattern plan: the nouns a subject utters (in order) and the number
# of fixations landing on (person, dog, sky, unlabeled) under each task.
# "weather" and "camera" are deliberately absent from the lexicon; "grass"
# resolves but never appears in a mask.
PATTERNS = (
    {
        "nouns": ("man", "dog", "sky"),
        "counts": {"free": (6, 2, 1, 1), "cap3s": (7, 1, 1, 1), "cap": (5, 2, 2, 1)},
    },
    {
        "nouns": ("woman",),
        "counts": {"free": (5, 3, 1, 1), "cap3s": (6, 2, 1, 1), "cap": (4, 3, 2, 1)},
    },
    {
        "nouns": ("dog", "man", "weather", "grass"),
        "counts": {"free": (2, 6, 1, 1), "cap3s": (2, 7, 0, 1), "cap": (3, 5, 1, 1)},
    },
    {
        "nouns": ("sky", "camera"),
        "counts": {"free": (4, 4, 1, 1), "cap3s": (5, 3, 1, 1), "cap": (3, 4, 2, 1)},
    },
    {
        "nouns": ("man", "dog"),
        "counts": {"free": (8, 0, 1, 1), "cap3s": (7, 0, 2, 1), "cap": (6, 0, 2, 2)},
    },
)

DUR_MS = {"DO": 600.0, "NDO": 300.0, "OTHER": 150.0}
FIX_STEP_MS = 280.0


def build_mask() -> SemanticMask:
    labels = np.zeros((HEIGHT, WIDTH), dtype=np.int32)
    labels[:15, :20] = PERSON
    labels[:15, 20:] = DOG
    labels[15:, :20] = SKY
    return SemanticMask(labels)


def _pixel(target: int, k: int) -> tuple[int, int]:
    """Deterministic in-region pixel for the k-th fixation of a session."""
    if target == 0:  # person
        return 2 + (3 * k) % 17, 2 + (5 * k) % 12
    if target == 1:  # dog
        return 21 + (3 * k) % 17, 2 + (5 * k) % 12
    if target == 2:  # sky
        return 2 + (3 * k) % 17, 16 + (5 * k) % 13
    return 21 + (3 * k) % 17, 16 + (5 * k) % 13  # unlabeled


def _pattern_index(image_idx: int, subject_idx: int) -> int:
    return (image_idx + 2 * subject_idx) % len(PATTERNS)


def build_corpus(n_images: int = 20) -> tuple[dict[str, bytes], dict]:
    """Return (files, expected): the on-disk corpus as relative-path ->
    bytes, and the statistics implied by the plan."""
    images = [f"im{i:02d}" for i in range(n_images)]
    mask = build_mask()

    files: dict[str, bytes] = {
        "categories.csv": write_categories(CATEGORIES),
        "lexicon.csv": write_lexicon(LEXICON),
    }
    for image_id in images:
        files[f"masks/{image_id}.pgm"] = write_mask(mask)

    transcripts = []
    for i, image_id in enumerate(images):
        for s_idx, subject in enumerate(SUBJECTS):
            pattern = PATTERNS[_pattern_index(i, s_idx)]
            nouns = tuple(
                Noun(word=w, order=rank, category_id=LEXICON.get(w))
                for rank, w in enumerate(pattern["nouns"], start=1)
            )
            transcripts.append(
                Transcript(
                    subject_id=subject,
                    image_id=image_id,
                    text=" ".join(pattern["nouns"]) + ".",
                    nouns=nouns,
                )
            )
    files["transcripts.jsonl"] = write_transcripts(transcripts)
    files["scores.csv"] = write_scores(
        {image_id: 0.30 + 0.02 * i for i, image_id in enumerate(images)}
    )

    # accumulators for the planted expectations
    alloc_sums = {t: np.zeros(4) for t in TASKS}
    order_sums: dict[str, dict[int, list[float]]] = {t: {} for t in TASKS}
    dur_lists = {scope: {"DO": [], "NDO": []} for scope in ("all", *TASKS)}
    prob_counts = {t: {"fix": 0, "desc": 0, "both": 0} for t in TASKS}
    unannotated: dict[str, int] = {}

    for t in transcripts:
        for n in t.nouns:
            if n.category_id is None:
                unannotated[n.word] = unannotated.get(n.word, 0) + 1

    records = {t: [] for t in TASKS}
    for i, image_id in enumerate(images):
        for s_idx, subject in enumerate(SUBJECTS):
            pattern = PATTERNS[_pattern_index(i, s_idx)]
            described = {LEXICON[w] for w in pattern["nouns"] if w in LEXICON}
            # class of each quadrant for this describing subject
            quad_class = [
                "DO" if PERSON in described else "NDO",
                "DO" if DOG in described else "NDO",
                "DB" if SKY in described else "NDB",
                "NDB",
            ]
            for task in TASKS:
                counts = pattern["counts"][task]
                total = sum(counts)
                ratios = {"DO": 0.0, "NDO": 0.0, "DB": 0.0, "NDB": 0.0}
                for quadrant, count in enumerate(counts):
                    ratios[quad_class[quadrant]] += count / total
                alloc_sums[task] += np.array(
                    [ratios["DO"], ratios["NDO"], ratios["DB"], ratios["NDB"]]
                )

                ordered_objects = []
                for w in pattern["nouns"]:
                    cid = LEXICON.get(w)
                    if cid in (PERSON, DOG) and cid not in ordered_objects:
                        ordered_objects.append(cid)
                for rank, cid in enumerate(ordered_objects, start=1):
                    quadrant = 0 if cid == PERSON else 1
                    order_sums[task].setdefault(rank, []).append(counts[quadrant] / total)

                for cid, quadrant in ((PERSON, 0), (DOG, 1)):
                    fixated = counts[quadrant] > 0
                    is_desc = cid in described
                    prob_counts[task]["fix"] += fixated
                    prob_counts[task]["desc"] += is_desc
                    prob_counts[task]["both"] += fixated and is_desc

                k = 0
                for quadrant, count in enumerate(counts):
                    cls = quad_class[quadrant]
                    dur = DUR_MS.get(cls, DUR_MS["OTHER"])
                    for _ in range(count):
                        x, y = _pixel(quadrant, k)
                        t_start = FIX_STEP_MS * k
                        records[task].append(
                            FixationRecord(
                                subject_id=subject,
                                image_id=image_id,
                                t_start=t_start,
                                t_end=t_start + dur,
                                x=x,
                                y=y,
                            )
                        )
                        if cls in ("DO", "NDO"):
                            dur_lists["all"][cls].append(dur / 1000.0)
                            dur_lists[task][cls].append(dur / 1000.0)
                        k += 1

    for task in TASKS:
        files[f"fixations_{task}.csv"] = write_fixation_log(records[task])

    n_sessions = n_images * len(SUBJECTS)
    expected = {
        "n_images": n_images,
        "n_sessions_per_task": n_sessions,
        "width": WIDTH,
        "height": HEIGHT,
        "allocation": {
            task: dict(zip(("DO", "NDO", "DB", "NDB"), (alloc_sums[task] / n_sessions).tolist()))
            for task in TASKS
        },
        "noun_order": {
            task: {str(k): float(np.mean(v)) for k, v in sorted(order_sums[task].items())}
            for task in TASKS
        },
        "durations": {
            scope: {
                "mean_do_s": float(np.mean(v["DO"])) if v["DO"] else None,
                "mean_ndo_s": float(np.mean(v["NDO"])) if v["NDO"] else None,
                "n_do": len(v["DO"]),
                "n_ndo": len(v["NDO"]),
            }
            for scope, v in dur_lists.items()
        },
        "probs": {
            task: {
                "p_desc_given_fix": c["both"] / c["fix"],
                "p_fix_given_desc": c["both"] / c["desc"],
                "n_fixated": c["fix"],
                "n_described": c["desc"],
                "n_both": c["both"],
            }
            for task, c in prob_counts.items()
        },
        "unannotated": dict(sorted(unannotated.items(), key=lambda kv: (-kv[1], kv[0]))),
    }
    files["expected.json"] = (json.dumps(expected, indent=2, sort_keys=True) + "\n").encode()
    return files, expected


def write_corpus(out_dir: Path, n_images: int = 20) -> dict:
    files, expected = build_corpus(n_images)
    for rel, data in files.items():
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    return expected


def main() -> int:
    ap = argparse.ArgumentParser(description="Write a synthetic gaze corpus")
    ap.add_argument("--out-dir", type=Path, default=Path("synthetic_corpus"))
    ap.add_argument("--n-images", type=int, default=20)
    args = ap.parse_args()
    write_corpus(args.out_dir, args.n_images)
    print(f"wrote corpus with {args.n_images} images to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
