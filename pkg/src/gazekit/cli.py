"""Command-line surface: reproducible batch runs over corpus files.

Every subcommand writes ``<out-dir>/<command>_report.json`` with the
schema ``{tool_version, command, config, results}`` (keys sorted, floats
printed with 9 significant digits) plus any binary artifacts, and prints
a one-line summary to stdout. Identical inputs, configuration, and seed
produce byte-identical reports; the parallelism level only changes how
fast they appear. Exit codes: 0 success, 1 data errors, 2 usage errors.

Options can come from a flat ``key=value`` config file (``--config``);
explicit flags win over the file, which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from . import __version__
from .analysis import (
    Corpus,
    RegionClass,
    allocation_table,
    congruency_correlation,
    describe_fixate_probs,
    encoder_agreement,
    fixation_duration_stats,
    ioc_matrix,
    noun_order_allocation,
    unannotated_noun_tally,
)
from .attend import (
    DEFAULT_FOVEA_R0_PX,
    DEFAULT_SUPPRESS_RADIUS_PX,
    DEFAULT_WTA_LOCATIONS,
    foveate,
    wta_select,
)
from .core import TASK_ORDER, Task, group_sessions, resolve_nouns, validate_session
from .errors import GazekitError
from .formats import (
    parse_categories,
    parse_fixation_log,
    parse_lexicon,
    parse_mask,
    parse_scores,
    parse_transcripts,
    read_fgrid,
    read_ppm,
    write_fgrid,
    write_ppm,
)
from .metrics import DEFAULT_SAUC_SPLITS, auc_judd, nss, shuffled_auc, sim
from .salmap import (
    DEFAULT_SIGMA_PX,
    average_map,
    fixations_to_salmap,
    salmap_from_stack,
    stack_from_salmaps,
)
from .temporal import DEFAULT_BIN_MS, bin_fixations, dtw_distance, sequence_from_stack

COMMANDS = (
    "validate",
    "salmap",
    "avgmap",
    "metrics",
    "ioc",
    "alloc",
    "nounorder",
    "durations",
    "probs",
    "unannotated",
    "agreement",
    "dtw",
    "correlate",
    "wta",
    "foveate",
)

TASK_CHOICES = tuple(t.value for t in TASK_ORDER)


# --- option schema ---------------------------------------------------------


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable = str
    default: object = None
    required: bool = False
    choices: tuple | None = None
    flag: bool = False
    help: str = ""


def _center(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected x,y")
    return float(parts[0]), float(parts[1])


_COMMON = (
    Opt("out-dir", str, "out", help="directory for reports and artifacts"),
    Opt("seed", int, 0, help="RNG seed for sampled computations"),
    Opt("parallelism", int, 1, help="worker threads for per-image batches"),
)

_CORPUS = (
    Opt("fixations-free", str, help="free-viewing fixation CSV"),
    Opt("fixations-cap3s", str, help="first-3s captioning fixation CSV"),
    Opt("fixations-cap", str, help="full captioning fixation CSV"),
    Opt("masks-dir", str, required=True, help="directory of <image_id>.pgm masks"),
    Opt("categories", str, required=True, help="category table CSV"),
    Opt("transcripts", str, required=True, help="transcripts JSONL"),
    Opt("lexicon", str, help="word->category CSV; resolves nouns on load"),
)

_DIMS = (
    Opt("width", int, required=True, help="image width in pixels"),
    Opt("height", int, required=True, help="image height in pixels"),
)

OPTIONS: dict[str, tuple[Opt, ...]] = {
    "validate": (
        Opt("fixations", str, required=True, help="fixation CSV to check"),
        *_DIMS,
        Opt("task", str, "free", choices=TASK_CHOICES, help="task rules to apply"),
    ),
    "salmap": (
        Opt("fixations", str, required=True),
        *_DIMS,
        Opt("sigma-px", float, DEFAULT_SIGMA_PX, help="Gaussian sigma in pixels"),
        Opt("subject", str, help="restrict to one subject"),
        Opt("image", str, help="restrict to one image"),
        Opt("per-subject", flag=True, help="one map per (image, subject)"),
    ),
    "avgmap": (
        Opt("fixations", str, required=True),
        *_DIMS,
        Opt("sigma-px", float, DEFAULT_SIGMA_PX),
    ),
    "metrics": (
        Opt("map", str, required=True, help="saliency map FGRID (count=1)"),
        Opt("fixations", str, required=True, help="positive fixations CSV"),
        Opt("image", str, help="restrict fixations to one image"),
        Opt("ref", str, help="second map FGRID for SIM"),
        Opt("pool", str, help="negative-pool fixation CSV for shuffled AUC"),
        Opt("n-splits", int, DEFAULT_SAUC_SPLITS, help="shuffled-AUC splits"),
    ),
    "ioc": (
        Opt("fixations-free", str, required=True),
        Opt("fixations-cap3s", str, required=True),
        Opt("fixations-cap", str, required=True),
        *_DIMS,
        Opt("sigma-px", float, DEFAULT_SIGMA_PX),
    ),
    "alloc": _CORPUS,
    "nounorder": (*_CORPUS, Opt("max-order", int, 5, help="deepest noun rank kept")),
    "durations": (
        *_CORPUS,
        Opt("task", str, choices=TASK_CHOICES, help="restrict to one task"),
    ),
    "probs": (
        *_CORPUS,
        Opt("dilation-px", float, 0.0, help="object-hit tolerance radius"),
    ),
    "unannotated": (
        Opt("transcripts", str, required=True),
        Opt("lexicon", str),
    ),
    "agreement": (
        Opt("fixations", str, required=True),
        *_DIMS,
        Opt("sigma-px", float, DEFAULT_SIGMA_PX),
        Opt("grids-dir", str, required=True, help="directory of <image_id>.fg stacks"),
        Opt("percent", float, 5.0, help="top-percent threshold for regions"),
        Opt("threshold", float, 4.0, help="NSS level a grid must exceed"),
    ),
    "dtw": (
        Opt("machine-grids-dir", str, required=True, help="machine sequences, <image_id>.fg"),
        Opt("human-grids-dir", str, help="prebuilt human sequences, <image_id>.fg"),
        Opt("fixations", str, help="captioning fixation CSV (used when no human grids)"),
        Opt("width", int, help="image width (fixation route)"),
        Opt("height", int, help="image height (fixation route)"),
        Opt("sigma-px", float, DEFAULT_SIGMA_PX),
        Opt("bin-ms", float, DEFAULT_BIN_MS, help="time-bin width in ms"),
        Opt("normalize", str, "pairs", choices=("pairs", "steps")),
    ),
    "correlate": (
        Opt("consistency", str, required=True, help="image_id,score CSV"),
        Opt("scores", str, required=True, help="image_id,score CSV"),
    ),
    "wta": (
        Opt("map", str, required=True, help="saliency map FGRID (count=1)"),
        Opt("n", int, DEFAULT_WTA_LOCATIONS, help="max locations to select"),
        Opt("suppress-radius", float, DEFAULT_SUPPRESS_RADIUS_PX),
        Opt("floor", float, 0.0, help="stop once the best value drops to this"),
    ),
    "foveate": (
        Opt("image", str, required=True, help="input PPM (P6) image"),
        Opt("center", _center, required=True, help="fovea center as x,y pixels"),
        Opt("levels", int, 6, help="pyramid levels"),
        Opt("r0-px", float, DEFAULT_FOVEA_R0_PX, help="acuity falloff radius"),
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazekit",
        description="Batch gaze/attention analytics with reproducible JSON reports.",
    )
    parser.add_argument("--version", action="version", version=f"gazekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", type=str, default=None, help="flat key=value file")
        for opt in (*OPTIONS[command], *_COMMON):
            flag = f"--{opt.name}"
            if opt.flag:
                p.add_argument(flag, action="store_const", const=True, default=None, help=opt.help)
            else:
                kwargs = {"type": opt.type, "default": None, "help": opt.help}
                if opt.choices:
                    kwargs["choices"] = opt.choices
                p.add_argument(flag, **kwargs)
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    values = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise GazekitError(f"config line {line_no}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip().replace("_", "-")] = value.strip()
    return values


def resolve_options(command: str, args: argparse.Namespace, parser) -> dict:
    """Merge CLI flags over config-file values over defaults."""
    from_file = _load_config_file(args.config) if args.config else {}
    resolved = {}
    for opt in (*OPTIONS[command], *_COMMON):
        dest = opt.name.replace("-", "_")
        value = getattr(args, dest)
        if value is None and opt.name in from_file:
            raw = from_file[opt.name]
            if opt.flag:
                value = raw.lower() in ("1", "true", "yes")
            else:
                value = opt.type(raw)
                if opt.choices and value not in opt.choices:
                    parser.error(f"config {opt.name}={raw!r}: not one of {opt.choices}")
        if value is None:
            if opt.required:
                parser.error(f"missing required option --{opt.name}")
            value = False if opt.flag else opt.default
        resolved[dest] = value
    return resolved


# --- report plumbing -------------------------------------------------------


def _canon(obj):
    """Make a structure JSON-stable: floats to 9 significant digits,
    non-finite to null, numpy scalars unwrapped."""
    if isinstance(obj, Mapping):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return float(format(f, ".9g")) if math.isfinite(f) else None
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    return obj


# execution-only knobs; excluded from the config echo so reports stay
# byte-identical across parallelism levels and output locations
_VOLATILE = {"parallelism", "out_dir"}


def write_report(out_dir: Path, command: str, config: dict, results) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "tool_version": __version__,
        "command": command,
        "config": _canon({k: v for k, v in config.items() if k not in _VOLATILE}),
        "results": _canon(results),
    }
    path = out_dir / f"{command}_report.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return path


def write_table_csv(out_dir: Path, command: str, header: list[str], rows: list[list]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(format(cell, ".9g"))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    path = out_dir / f"{command}.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def _map_jobs(fn, items: list, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# --- corpus loading --------------------------------------------------------


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def load_corpus(cfg: Mapping) -> Corpus:
    table = parse_categories(_read(cfg["categories"]))
    masks = {}
    masks_dir = Path(cfg["masks_dir"])
    for path in sorted(masks_dir.glob("*.pgm")):
        masks[path.stem] = parse_mask(path.read_bytes(), table)
    if not masks:
        raise GazekitError(f"no .pgm masks found under {masks_dir}")
    sizes = {image_id: (m.width, m.height) for image_id, m in masks.items()}

    transcripts = parse_transcripts(_read(cfg["transcripts"]))
    if cfg.get("lexicon"):
        lexicon = parse_lexicon(_read(cfg["lexicon"]))
        transcripts = [resolve_nouns(t, lexicon) for t in transcripts]
    by_key = {}
    for t in transcripts:
        key = (t.image_id, t.subject_id)
        if key in by_key:
            raise GazekitError(f"duplicate transcript for image/subject {key}")
        by_key[key] = t

    sessions = []
    for task in TASK_ORDER:
        path = cfg.get(f"fixations_{task.value}")
        if path:
            sessions.extend(group_sessions(parse_fixation_log(_read(path)), task))
    if not sessions:
        raise GazekitError("no fixation logs given (need at least one task)")
    return Corpus(
        table=table,
        sizes=sizes,
        masks=masks,
        transcripts=by_key,
        sessions=tuple(sessions),
    )


def _fixations_by_image(path: str, image: str | None = None, subject: str | None = None):
    records = parse_fixation_log(_read(path))
    grouped: dict[str, list] = {}
    for r in records:
        if image and r.image_id != image:
            continue
        if subject and r.subject_id != subject:
            continue
        grouped.setdefault(r.image_id, []).append(r)
    return grouped


# --- subcommand implementations --------------------------------------------


def cmd_validate(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    records = parse_fixation_log(_read(cfg["fixations"]))
    sessions = group_sessions(records, Task(cfg["task"]))
    rows = []
    total = 0
    for s in sessions:
        violations = validate_session(s, cfg["width"], cfg["height"])
        total += len(violations)
        rows.append(
            {"subject_id": s.subject_id, "image_id": s.image_id, "violations": violations}
        )
    results = {"sessions": rows, "total_violations": total}
    return results, f"{len(sessions)} sessions, {total} violations"


def cmd_salmap(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    records = parse_fixation_log(_read(cfg["fixations"]))
    grouped: dict[tuple, list] = {}
    for r in records:
        if cfg["image"] and r.image_id != cfg["image"]:
            continue
        if cfg["subject"] and r.subject_id != cfg["subject"]:
            continue
        key = (r.image_id, r.subject_id) if cfg["per_subject"] else (r.image_id,)
        grouped.setdefault(key, []).append(r)
    if not grouped:
        raise GazekitError("no fixations left after filtering")
    maps_dir = out_dir / "maps"
    maps_dir.mkdir(parents=True, exist_ok=True)

    def build(item):
        key, fixations = item
        salmap = fixations_to_salmap(
            fixations, cfg["width"], cfg["height"], cfg["sigma_px"]
        )
        name = "_".join(key) + ".fg"
        (maps_dir / name).write_bytes(write_fgrid(stack_from_salmaps([salmap])))
        peak = int(np.argmax(salmap.values))
        y, x = divmod(peak, salmap.width)
        entry = {
            "image_id": key[0],
            "n_fixations": len(fixations),
            "argmax": [x, y],
            "fgrid": f"maps/{name}",
        }
        if cfg["per_subject"]:
            entry["subject_id"] = key[1]
        return entry

    entries = _map_jobs(build, sorted(grouped.items()), cfg["parallelism"])
    return {"maps": entries}, f"{len(entries)} maps"


def cmd_avgmap(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    grouped = _fixations_by_image(cfg["fixations"])
    if not grouped:
        raise GazekitError("fixation log is empty")
    maps = [
        fixations_to_salmap(fx, cfg["width"], cfg["height"], cfg["sigma_px"])
        for _, fx in sorted(grouped.items())
    ]
    avg = average_map(maps)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "avgmap.fg").write_bytes(write_fgrid(stack_from_salmaps([avg])))
    peak = int(np.argmax(avg.values))
    y, x = divmod(peak, avg.width)
    results = {"n_maps": len(maps), "argmax": [x, y], "fgrid": "avgmap.fg"}
    return results, f"averaged {len(maps)} per-image maps"


def cmd_metrics(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    salmap = salmap_from_stack(read_fgrid(_read(cfg["map"])))
    records = parse_fixation_log(_read(cfg["fixations"]))
    points = [
        (r.x, r.y) for r in records if not cfg["image"] or r.image_id == cfg["image"]
    ]
    results = {
        "n_fixations": len(points),
        "nss": nss(salmap, points),
        "auc_judd": auc_judd(salmap, points),
    }
    if cfg["ref"]:
        ref = salmap_from_stack(read_fgrid(_read(cfg["ref"])))
        results["sim"] = sim(salmap, ref)
    if cfg["pool"]:
        pool_records = parse_fixation_log(_read(cfg["pool"]))
        pool = [(r.x, r.y) for r in pool_records]
        results["shuffled_auc"] = shuffled_auc(
            salmap, points, pool, n_splits=cfg["n_splits"], seed=cfg["seed"]
        )
    shown = ", ".join(k for k in ("nss", "auc_judd", "sim", "shuffled_auc") if k in results)
    return results, shown


def cmd_ioc(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    sessions = []
    for task in TASK_ORDER:
        records = parse_fixation_log(_read(cfg[f"fixations_{task.value}"]))
        sessions.extend(group_sessions(records, task))
    matrix = ioc_matrix(sessions, _uniform_sizes(sessions, cfg), cfg["sigma_px"])
    results = {"tasks": [t.value for t in TASK_ORDER], "matrix": matrix}
    return results, "3x3 congruency matrix"


def _uniform_sizes(sessions, cfg) -> dict[str, tuple[int, int]]:
    return {s.image_id: (cfg["width"], cfg["height"]) for s in sessions}


def cmd_alloc(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    corpus = load_corpus(cfg)
    rows = allocation_table(corpus)
    out_rows = [
        {
            "task": row.task.value,
            "n_sessions": row.n_sessions,
            "ratios": {cls.name: row.ratios[cls] for cls in RegionClass},
        }
        for row in rows
    ]
    write_table_csv(
        out_dir,
        "alloc",
        ["task", "DO", "NDO", "DB", "NDB", "n_sessions"],
        [
            [r.task.value, *[r.ratios[c] for c in RegionClass], r.n_sessions]
            for r in rows
        ],
    )
    return {"rows": out_rows}, f"{len(rows)} task rows"


def cmd_nounorder(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    corpus = load_corpus(cfg)
    table = noun_order_allocation(corpus, max_order=cfg["max_order"])
    out_rows = [
        {"task": task.value, "by_order": {str(k): v for k, v in per.items()}}
        for task, per in table.items()
    ]
    csv_rows = []
    for task, per in table.items():
        for k in sorted(per):
            csv_rows.append([task.value, k, per[k]])
    write_table_csv(out_dir, "nounorder", ["task", "order", "mean_ratio"], csv_rows)
    return {"rows": out_rows}, f"{len(out_rows)} task rows"


def cmd_durations(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    corpus = load_corpus(cfg)
    task = Task(cfg["task"]) if cfg["task"] else None
    stats = fixation_duration_stats(corpus, task)
    results = {
        "task": task.value if task else "all",
        "mean_do_s": stats.mean_do_s,
        "mean_ndo_s": stats.mean_ndo_s,
        "n_do": stats.n_do,
        "n_ndo": stats.n_ndo,
    }
    write_table_csv(
        out_dir,
        "durations",
        ["task", "mean_do_s", "mean_ndo_s", "n_do", "n_ndo"],
        [[results["task"], stats.mean_do_s, stats.mean_ndo_s, stats.n_do, stats.n_ndo]],
    )
    return results, f"DO {stats.mean_do_s}, NDO {stats.mean_ndo_s}"


def cmd_probs(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    corpus = load_corpus(cfg)
    rows = []
    for task in TASK_ORDER:
        if not corpus.sessions_for(task):
            continue
        p = describe_fixate_probs(corpus, task, dilation_px=cfg["dilation_px"])
        rows.append(
            {
                "task": task.value,
                "p_desc_given_fix": p.p_desc_given_fix,
                "p_fix_given_desc": p.p_fix_given_desc,
                "n_fixated": p.n_fixated,
                "n_described": p.n_described,
                "n_both": p.n_both,
            }
        )
    write_table_csv(
        out_dir,
        "probs",
        ["task", "p_desc_given_fix", "p_fix_given_desc", "n_fixated", "n_described", "n_both"],
        [
            [
                r["task"],
                r["p_desc_given_fix"],
                r["p_fix_given_desc"],
                r["n_fixated"],
                r["n_described"],
                r["n_both"],
            ]
            for r in rows
        ],
    )
    return {"rows": rows}, f"{len(rows)} task rows"


def cmd_unannotated(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    transcripts = parse_transcripts(_read(cfg["transcripts"]))
    if cfg["lexicon"]:
        lexicon = parse_lexicon(_read(cfg["lexicon"]))
        transcripts = [resolve_nouns(t, lexicon) for t in transcripts]
    tally = unannotated_noun_tally(transcripts)
    counts = [{"word": w, "count": c} for w, c in tally.items()]
    return {"counts": counts}, f"{len(counts)} distinct unannotated nouns"


def cmd_agreement(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    grouped = _fixations_by_image(cfg["fixations"])
    grids_dir = Path(cfg["grids_dir"])
    jobs = []
    skipped = []
    for image_id in sorted(grouped):
        path = grids_dir / f"{image_id}.fg"
        if path.exists():
            jobs.append((image_id, grouped[image_id], path))
        else:
            skipped.append(image_id)

    def run(job):
        image_id, fixations, path = job
        human = fixations_to_salmap(fixations, cfg["width"], cfg["height"], cfg["sigma_px"])
        result = encoder_agreement(
            human, read_fgrid(path.read_bytes()), cfg["percent"], cfg["threshold"]
        )
        return {
            "image_id": image_id,
            "attended_fraction": result.attended_fraction,
            "mean_best_nss": result.mean_best_nss,
            "regions": [
                {
                    "label": r.label,
                    "pixel_count": r.pixel_count,
                    "best_nss": r.best_nss,
                    "best_grid": r.best_grid,
                    "attended": r.attended,
                    "skipped_grids": r.skipped_grids,
                }
                for r in result.per_region
            ],
        }

    if not jobs:
        raise GazekitError("no image has both fixations and an activation stack")
    per_image = _map_jobs(run, jobs, cfg["parallelism"])
    fractions = [r["attended_fraction"] for r in per_image]
    nss_means = [r["mean_best_nss"] for r in per_image if math.isfinite(r["mean_best_nss"])]
    results = {
        "per_image": per_image,
        "skipped_images": skipped,
        "mean_attended_fraction": float(np.mean(fractions)),
        "mean_best_nss": float(np.mean(nss_means)) if nss_means else math.nan,
    }
    return results, f"{len(per_image)} images, mean attended {results['mean_attended_fraction']:.3f}"


def cmd_dtw(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    machine_dir = Path(cfg["machine_grids_dir"])
    jobs = []
    if cfg["human_grids_dir"]:
        human_dir = Path(cfg["human_grids_dir"])
        for path in sorted(human_dir.glob("*.fg")):
            machine_path = machine_dir / path.name
            if machine_path.exists():
                jobs.append((path.stem, None, path, machine_path))
    else:
        if not (cfg["fixations"] and cfg["width"] and cfg["height"]):
            raise GazekitError(
                "dtw needs either --human-grids-dir or --fixations with --width/--height"
            )
        records = parse_fixation_log(_read(cfg["fixations"]))
        sessions = group_sessions(records, Task.CAP)
        for s in sessions:
            machine_path = machine_dir / f"{s.image_id}.fg"
            if machine_path.exists():
                jobs.append((s.image_id, s, None, machine_path))
    if not jobs:
        raise GazekitError("no image has both a human and a machine sequence")

    def run(job):
        image_id, session, human_path, machine_path = job
        if session is not None:
            human = bin_fixations(
                session, cfg["width"], cfg["height"], cfg["bin_ms"], cfg["sigma_px"]
            )
        else:
            human = sequence_from_stack(read_fgrid(human_path.read_bytes()), cfg["bin_ms"])
        machine = sequence_from_stack(read_fgrid(machine_path.read_bytes()))
        result = dtw_distance(human, machine, normalize=cfg["normalize"])
        entry = {
            "image_id": image_id,
            "distance": result.distance,
            "path": [list(p) for p in result.path],
            "pair_costs": list(result.pair_costs),
            "n_human_frames": len(human),
            "n_machine_frames": len(machine),
        }
        if session is not None:
            entry["subject_id"] = session.subject_id
        return entry

    per_pair = _map_jobs(run, jobs, cfg["parallelism"])
    per_pair.sort(key=lambda e: (e["image_id"], e.get("subject_id", "")))
    mean_distance = float(np.mean([e["distance"] for e in per_pair]))
    results = {"per_image": per_pair, "mean_distance": mean_distance}
    return results, f"{len(per_pair)} alignments, mean distance {mean_distance:.3f}"


def cmd_correlate(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    consistency = parse_scores(_read(cfg["consistency"]))
    scores = parse_scores(_read(cfg["scores"]))
    rho = congruency_correlation(consistency, scores)
    n = len(set(consistency) & set(scores))
    return {"spearman": rho, "n": n}, f"spearman {rho:.4f} over {n} images"


def cmd_wta(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    salmap = salmap_from_stack(read_fgrid(_read(cfg["map"])))
    locations = wta_select(
        salmap, n=cfg["n"], suppress_radius=cfg["suppress_radius"], floor=cfg["floor"]
    )
    values = [float(salmap.values[y, x]) for x, y in locations]
    results = {"locations": [[x, y] for x, y in locations], "values": values}
    return results, f"{len(locations)} locations"


def cmd_foveate(cfg: dict, out_dir: Path) -> tuple[dict, str]:
    image = read_ppm(_read(cfg["image"]))
    out = foveate(image, cfg["center"], levels=cfg["levels"], r0=cfg["r0_px"])
    out_dir.mkdir(parents=True, exist_ok=True)
    data = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    (out_dir / "foveated.ppm").write_bytes(write_ppm(data))
    results = {
        "output": "foveated.ppm",
        "center": list(cfg["center"]),
        "levels": cfg["levels"],
        "r0_px": cfg["r0_px"],
    }
    return results, "wrote foveated.ppm"


_HANDLERS = {
    "validate": cmd_validate,
    "salmap": cmd_salmap,
    "avgmap": cmd_avgmap,
    "metrics": cmd_metrics,
    "ioc": cmd_ioc,
    "alloc": cmd_alloc,
    "nounorder": cmd_nounorder,
    "durations": cmd_durations,
    "probs": cmd_probs,
    "unannotated": cmd_unannotated,
    "agreement": cmd_agreement,
    "dtw": cmd_dtw,
    "correlate": cmd_correlate,
    "wta": cmd_wta,
    "foveate": cmd_foveate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_options(args.command, args, parser)
        out_dir = Path(cfg["out_dir"])
        results, summary = _HANDLERS[args.command](cfg, out_dir)
        report_path = write_report(out_dir, args.command, cfg, results)
    except (GazekitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: {summary} -> {report_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
