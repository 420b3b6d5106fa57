"""Boundary benchmark harness: pixel matching, scoring, sweeps, reports.

Detections are compared against human-drawn boundary maps with a
closest-pixel matching: predicted and reference edge pixels are paired
one-to-one within a distance budget, pairing as many pixels as
possible.  Matched pairs are true positives; unmatched predictions are
false positives; unmatched reference pixels are false negatives.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial import cKDTree

from .imgproc import read_edge_map, read_image
from .pipelines import build_runner

WORKERS_ENV = "DEDGE_WORKERS"

# Above this many candidate cost entries the matcher switches from the
# min-cost assignment to plain maximum-cardinality matching; the match
# counts are identical, only the tie-break among equal-count matchings
# differs.
_ASSIGNMENT_LIMIT = 4_000_000


class DatasetError(ValueError):
    """The dataset directory does not follow the expected layout."""


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "Score":
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(precision=p, recall=r, f1=f1)


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: tuple[tuple[tuple[int, int], tuple[int, int]], ...] = ()

    @property
    def score(self) -> Score:
        return Score.from_counts(self.tp, self.fp, self.fn)


@dataclass
class GroundTruth:
    """All reference boundary maps drawn for one image."""

    image_id: str
    maps: list[np.ndarray]

    def union(self) -> np.ndarray:
        out = np.zeros(self.maps[0].shape, dtype=bool)
        for m in self.maps:
            out |= m
        return out


def default_max_dist(shape: tuple[int, int]) -> float:
    """Matching radius: 0.0075 of the image diagonal."""
    return 0.0075 * math.hypot(shape[0], shape[1])


def _candidate_pairs(res_pts: np.ndarray, gt_pts: np.ndarray, max_dist: float):
    tree = cKDTree(gt_pts)
    hits = tree.query_ball_point(res_pts, r=max_dist)
    return hits


def cpm_match(
    result: np.ndarray,
    reference: np.ndarray,
    max_dist: float | None = None,
    method: str = "exact",
) -> MatchResult:
    """One-to-one closest-pixel matching within ``max_dist``.

    ``method="exact"`` maximises the number of matched pairs (breaking
    ties toward smaller total distance when the instance is small enough
    for the assignment solver); ``method="greedy"`` repeatedly takes the
    globally closest unmatched pair, which is faster but can undercount.
    """
    result = np.asarray(result, dtype=bool)
    reference = np.asarray(reference, dtype=bool)
    if method not in ("exact", "greedy"):
        raise ValueError(f"unknown matching method {method!r}")
    if result.shape != reference.shape:
        raise ValueError(f"shape mismatch: {result.shape} vs {reference.shape}")
    if max_dist is None:
        max_dist = default_max_dist(result.shape)
    res_pts = np.argwhere(result)
    gt_pts = np.argwhere(reference)
    n, m = len(res_pts), len(gt_pts)
    if n == 0 or m == 0:
        return MatchResult(tp=0, fp=n, fn=m)
    hits = _candidate_pairs(res_pts, gt_pts, max_dist)
    if method == "greedy":
        pairs = _match_greedy(res_pts, gt_pts, hits)
    else:
        n_candidates = sum(len(h) for h in hits)
        if n * m <= _ASSIGNMENT_LIMIT:
            pairs = _match_assignment(res_pts, gt_pts, hits, max_dist)
        elif n_candidates:
            pairs = _match_cardinality(n, m, hits)
        else:
            pairs = []
    tp = len(pairs)
    matched = tuple(
        ((int(res_pts[i][0]), int(res_pts[i][1])), (int(gt_pts[j][0]), int(gt_pts[j][1])))
        for i, j in pairs
    )
    return MatchResult(tp=tp, fp=n - tp, fn=m - tp, pairs=matched)


def _match_assignment(res_pts, gt_pts, hits, max_dist: float):
    n, m = len(res_pts), len(gt_pts)
    big = (n + m + 1) * (max_dist + 1.0)
    cost = np.full((n, m), big, dtype=np.float64)
    for i, js in enumerate(hits):
        if js:
            d = np.linalg.norm(gt_pts[js] - res_pts[i], axis=1)
            cost[i, js] = d
    rows, cols = linear_sum_assignment(cost)
    return [(i, j) for i, j in zip(rows, cols) if cost[i, j] < big]


def _match_cardinality(n: int, m: int, hits):
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i, js in enumerate(hits):
        indices.extend(sorted(js))
        indptr[i + 1] = len(indices)
    graph = csr_matrix(
        (np.ones(len(indices), dtype=np.int8), np.array(indices, dtype=np.int64), indptr),
        shape=(n, m),
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    return [(i, int(j)) for i, j in enumerate(match) if j >= 0]


def _match_greedy(res_pts, gt_pts, hits):
    entries = []
    for i, js in enumerate(hits):
        for j in js:
            d = float(np.linalg.norm(gt_pts[j] - res_pts[i]))
            entries.append((d, i, j))
    entries.sort()
    used_res = set()
    used_gt = set()
    pairs = []
    for _, i, j in entries:
        if i in used_res or j in used_gt:
            continue
        used_res.add(i)
        used_gt.add(j)
        pairs.append((i, j))
    return pairs


def evaluate(
    result: np.ndarray,
    gt: GroundTruth,
    policy: str = "union",
    max_dist: float | None = None,
    method: str = "exact",
) -> tuple[Score, MatchResult]:
    """Score one detection against one image's reference maps.

    ``policy="union"`` matches against the OR of all annotators;
    ``policy="best_annotator"`` scores against each map separately and
    keeps the best F1 (ties keep the lowest annotator index).
    """
    if policy == "union":
        match = cpm_match(result, gt.union(), max_dist=max_dist, method=method)
        return match.score, match
    if policy == "best_annotator":
        best: tuple[Score, MatchResult] | None = None
        for annotator_map in gt.maps:
            match = cpm_match(result, annotator_map, max_dist=max_dist, method=method)
            if best is None or match.score.f1 > best[0].f1:
                best = (match.score, match)
        assert best is not None
        return best
    raise ValueError(f"unknown policy {policy!r}")


# --- dataset handling ---------------------------------------------------------

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def list_dataset(root: str | Path) -> list[tuple[str, Path, list[Path]]]:
    """Enumerate (image_id, image_path, gt_paths) sorted by image id.

    Expected layout: ``images/<id>.png|jpg`` and ``gt/<id>.gt<k>.png``
    with one or more reference maps per image.
    """
    root = Path(root)
    img_dir = root / "images"
    gt_dir = root / "gt"
    if not img_dir.is_dir() or not gt_dir.is_dir():
        raise DatasetError(f"{root}: expected images/ and gt/ subdirectories")
    entries = []
    for img_path in sorted(img_dir.iterdir()):
        if img_path.suffix.lower() not in _IMAGE_SUFFIXES:
            continue
        image_id = img_path.stem
        gt_paths = sorted(
            gt_dir.glob(f"{image_id}.gt*.png"),
            key=lambda p: _gt_index(p.name, image_id),
        )
        if not gt_paths:
            raise DatasetError(f"{root}: no ground truth for image {image_id!r}")
        entries.append((image_id, img_path, gt_paths))
    if not entries:
        raise DatasetError(f"{root}: images/ holds no png/jpg files")
    return entries


def _gt_index(name: str, image_id: str) -> int:
    tail = name[len(image_id) + 3 : -4]  # between ".gt" and ".png"
    try:
        return int(tail)
    except ValueError:
        return 0


def load_ground_truth(image_id: str, gt_paths: list[Path]) -> GroundTruth:
    return GroundTruth(image_id=image_id, maps=[read_edge_map(p) for p in gt_paths])


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    return 1


@dataclass
class ImageRow:
    image_id: str
    tp: int
    fp: int
    fn: int

    @property
    def score(self) -> Score:
        return Score.from_counts(self.tp, self.fp, self.fn)


@dataclass
class DatasetResult:
    rows: list[ImageRow]
    policy: str
    method: str
    max_dist: float | None
    params: dict

    @property
    def totals(self) -> tuple[int, int, int]:
        tp = sum(r.tp for r in self.rows)
        fp = sum(r.fp for r in self.rows)
        fn = sum(r.fn for r in self.rows)
        return tp, fp, fn

    @property
    def pooled(self) -> Score:
        """Micro-average: counts pooled over all images, then one P/R/F1."""
        return Score.from_counts(*self.totals)


def _evaluate_one(args) -> tuple[str, int, int, int]:
    image_id, img_path, gt_paths, pipeline, options, policy, max_dist, method = args
    runner, _ = build_runner(pipeline, options)
    detection = runner(read_image(img_path))
    gt = load_ground_truth(image_id, [Path(p) for p in gt_paths])
    _, match = evaluate(detection, gt, policy=policy, max_dist=max_dist, method=method)
    return image_id, match.tp, match.fp, match.fn


def evaluate_dataset(
    pipeline: str,
    options: dict | None,
    dataset: str | Path,
    policy: str = "union",
    max_dist: float | None = None,
    method: str = "exact",
    workers: int | None = None,
    limit: int | None = None,
) -> DatasetResult:
    """Run one pipeline configuration over a dataset.

    Images are evaluated independently (in parallel when ``workers`` or
    the DEDGE_WORKERS variable says so) and the per-image counts are
    pooled into one dataset-level precision/recall/F1.
    """
    _, resolved = build_runner(pipeline, options)  # validate before spawning
    entries = list_dataset(dataset)
    if limit is not None:
        entries = entries[:limit]
    workers = resolve_workers(workers)
    jobs = [
        (image_id, str(img_path), [str(p) for p in gt_paths], pipeline, dict(options or {}), policy, max_dist, method)
        for image_id, img_path, gt_paths in entries
    ]
    if workers == 1:
        results = [_evaluate_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_one, jobs))
    rows = [ImageRow(image_id=i, tp=tp, fp=fp, fn=fn) for i, tp, fp, fn in sorted(results)]
    return DatasetResult(rows=rows, policy=policy, method=method, max_dist=max_dist, params=resolved)


# --- parameter sweeps ---------------------------------------------------------


@dataclass
class SweepCombo:
    values: dict
    result: DatasetResult


def sweep_grid(axes: dict[str, list]) -> list[dict]:
    """Cartesian product of the grid, axes sorted by name, row-major."""
    names = sorted(axes)
    combos: list[dict] = [{}]
    for name in names:
        combos = [dict(c, **{name: v}) for c in combos for v in axes[name]]
    return combos


def run_sweep(
    pipeline: str,
    fixed: dict,
    axes: dict[str, list],
    dataset: str | Path,
    policy: str = "union",
    max_dist: float | None = None,
    method: str = "exact",
    workers: int | None = None,
    limit: int | None = None,
    progress=None,
) -> tuple[list[SweepCombo], SweepCombo]:
    """Evaluate every grid combination; returns (all combos, best).

    The best combo maximises pooled F1; on ties the earlier combo in
    grid order wins, so results are reproducible.
    """
    if not axes:
        raise ValueError("sweep needs at least one grid axis")
    combos = []
    best: SweepCombo | None = None
    for values in sweep_grid(axes):
        options = dict(fixed)
        options.update(values)
        result = evaluate_dataset(
            pipeline, options, dataset, policy=policy, max_dist=max_dist,
            method=method, workers=workers, limit=limit,
        )
        combo = SweepCombo(values=values, result=result)
        combos.append(combo)
        if best is None or result.pooled.f1 > best.result.pooled.f1:
            best = combo
        if progress is not None:
            progress(values, result.pooled)
    assert best is not None
    return combos, best


# --- report emission ----------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_scores_csv(path: Path, result: DatasetResult) -> None:
    """Per-image rows: id, every resolved parameter, counts, P/R/F1."""
    param_names = sorted(result.params)
    lines = []
    header = ["image_id", *param_names, "tp", "fp", "fn", "precision", "recall", "f1"]
    lines.append(",".join(header))
    for row in result.rows:
        s = row.score
        cells = [row.image_id]
        cells += [str(result.params[k]) for k in param_names]
        cells += [str(row.tp), str(row.fp), str(row.fn), _fmt(s.precision), _fmt(s.recall), _fmt(s.f1)]
        lines.append(",".join(cells))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_scores_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_summary_md(path: Path, result: DatasetResult, title: str = "Benchmark run") -> None:
    tp, fp, fn = result.totals
    pooled = result.pooled
    by_f1 = sorted(result.rows, key=lambda r: (r.score.f1, r.image_id))
    lines = [
        f"# {title}",
        "",
        "## Configuration",
        "",
    ]
    for key in sorted(result.params):
        lines.append(f"- {key} = {result.params[key]}")
    lines += [
        f"- policy = {result.policy}",
        f"- matcher = {result.method}",
        f"- max_dist = {'auto (0.0075 x diagonal)' if result.max_dist is None else result.max_dist}",
        f"- images = {len(result.rows)}",
        "",
        "## Pooled result",
        "",
        "| tp | fp | fn | precision | recall | F1 |",
        "|---:|---:|---:|----------:|-------:|---:|",
        f"| {tp} | {fp} | {fn} | {_fmt(pooled.precision)} | {_fmt(pooled.recall)} | {_fmt(pooled.f1)} |",
        "",
    ]
    if by_f1:
        worst = by_f1[0]
        best = by_f1[-1]
        lines += [
            "## Extremes",
            "",
            f"- best image: {best.image_id} (F1 {_fmt(best.score.f1)})",
            f"- worst image: {worst.image_id} (F1 {_fmt(worst.score.f1)})",
            "",
        ]
    _atomic_write_text(path, "\n".join(lines))


def write_run_report(outdir: str | Path, result: DatasetResult, figures: bool = True) -> Path:
    """Emit scores.csv, summary.md and a score figure into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_scores_csv(outdir / "scores.csv", result)
    write_summary_md(outdir / "summary.md", result)
    if figures:
        from .plots import save_run_figure

        save_run_figure(result, outdir / "scores.png")
    return outdir


def write_sweep_csv(path: Path, pipeline: str, combos: list[SweepCombo]) -> None:
    """One row per grid combination with pooled counts and scores."""
    axis_names = sorted(combos[0].values) if combos else []
    lines = [",".join(["pipeline", *axis_names, "tp", "fp", "fn", "precision", "recall", "f1"])]
    for combo in combos:
        tp, fp, fn = combo.result.totals
        pooled = combo.result.pooled
        cells = [pipeline]
        cells += [str(combo.values[a]) for a in axis_names]
        cells += [str(tp), str(fp), str(fn), _fmt(pooled.precision), _fmt(pooled.recall), _fmt(pooled.f1)]
        lines.append(",".join(cells))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_sweep_report(
    outdir: str | Path, pipeline: str, combos: list[SweepCombo], best: SweepCombo,
    figures: bool = True,
) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(outdir / "sweep.csv", pipeline, combos)
    lines = [
        "# Parameter sweep",
        "",
        f"- pipeline = {pipeline}",
        f"- combinations = {len(combos)}",
        "",
        "## Best combination (pooled F1)",
        "",
    ]
    for key in sorted(best.values):
        lines.append(f"- {key} = {best.values[key]}")
    pooled = best.result.pooled
    lines += [
        "",
        f"F1 = {_fmt(pooled.f1)} (precision {_fmt(pooled.precision)}, recall {_fmt(pooled.recall)})",
        "",
    ]
    _atomic_write_text(outdir / "summary.md", "\n".join(lines))
    if figures:
        from .plots import save_sweep_figure

        save_sweep_figure(combos, outdir / "sweep.png")
    return outdir


def compare_runs(dir_a: str | Path, dir_b: str | Path) -> list[dict]:
    """Join two runs' scores.csv by image id and report F1 deltas."""
    rows_a = {r["image_id"]: r for r in read_scores_csv(Path(dir_a) / "scores.csv")}
    rows_b = {r["image_id"]: r for r in read_scores_csv(Path(dir_b) / "scores.csv")}
    shared = sorted(set(rows_a) & set(rows_b))
    if not shared:
        raise ValueError("runs share no image ids")
    out = []
    for image_id in shared:
        f1_a = float(rows_a[image_id]["f1"])
        f1_b = float(rows_b[image_id]["f1"])
        out.append(
            {"image_id": image_id, "f1_a": f1_a, "f1_b": f1_b, "delta": f1_b - f1_a}
        )
    return out
