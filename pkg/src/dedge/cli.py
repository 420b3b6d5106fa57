"""Command line interface.

Subcommands:

* ``detect``   -- run a pipeline on one image, write edge map + sidecar
* ``kernels``  -- list catalog kernels or dump one as a TSV grid
* ``bench``    -- ``run``, ``sweep`` and ``compare`` benchmark verbs
* ``sweep``    -- alias for ``bench sweep``
* ``compare``  -- alias for ``bench compare``

Exit codes: 0 success, 2 usage or parameter validation, 1 runtime
failure (missing files, malformed datasets).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bench, imgproc, kernels
from .pipelines import PIPELINE_IDS, ParameterError, build_runner

# Soft ranges covering the parameter regions the pipelines were tuned
# over; values outside them are refused unless --unsafe-params is given.
_ADVISORY_RANGES: dict[str, tuple[float, float]] = {
    "sigma": (0.2, 3.5),
    "threshold": (5, 245),
    "low": (70, 150),
    "high": (90, 200),
    "b": (0.5, 0.95),
    "window": (5, 9),
    "zc_ratio": (0.5, 0.9),
    "thinning_factor": (0.0, 0.9),
    "laplace_threshold": (0, 245),
    "zc_delta": (30, 90),
    "gauss_size": (3, 9),
    "grad_thr": (10, 150),
    "anchor_thr": (5, 60),
    "scan_interval": (1, 5),
    "dilation": (0, 3),
    "size": (3, 7),
}

# (flag, option key, type) for every pipeline parameter reachable from the CLI
_PARAM_FLAGS = (
    ("--operator", "operator", str),
    ("--size", "size", int),
    ("--dilate", "dilation", int),
    ("--mode", "magnitude_mode", str),
    ("--sigma", "sigma", float),
    ("--threshold", "threshold", float),
    ("--low", "low", float),
    ("--high", "high", float),
    ("--variant", "variant", str),
    ("--zc-delta", "zc_delta", float),
    ("--b", "b", float),
    ("--window", "window", int),
    ("--zc-ratio", "zc_ratio", float),
    ("--thinning-factor", "thinning_factor", float),
    ("--laplace-threshold", "laplace_threshold", float),
    ("--gauss-size", "gauss_size", int),
    ("--grad-thr", "grad_thr", float),
    ("--anchor-thr", "anchor_thr", float),
    ("--scan-interval", "scan_interval", int),
    ("--response", "response", str),
)


class ConfigError(ValueError):
    """A config file line cannot be parsed."""


def parse_scalar(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_config(path: str | Path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment, blanks ignored.

    ``grid.<param>`` keys hold comma-separated sweep values.
    """
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key.startswith("grid."):
            out.setdefault("grid", {})[key[5:]] = [parse_scalar(v) for v in value.split(",")]
        else:
            out[key] = parse_scalar(value)
    return out


def check_advisory_ranges(options: dict, unsafe: bool) -> None:
    if unsafe:
        return
    for key, value in options.items():
        bounds = _ADVISORY_RANGES.get(key)
        if bounds is None or not isinstance(value, (int, float)):
            continue
        lo, hi = bounds
        if not lo <= value <= hi:
            raise ParameterError(
                f"{key} = {value} is outside the tuned range [{lo}, {hi}]"
                " (pass --unsafe-params to run anyway)"
            )


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline parameters")
    for flag, key, typ in _PARAM_FLAGS:
        group.add_argument(flag, dest=f"opt_{key}", type=typ, default=None, metavar=key.upper())
    parser.add_argument("--unsafe-params", action="store_true",
                        help="accept parameter values outside the tuned ranges")
    parser.add_argument("--config", type=Path, default=None,
                        help="flat key=value config file; explicit flags win")


def _collect_options(args: argparse.Namespace) -> tuple[str | None, dict]:
    options: dict = {}
    pipeline = None
    if args.config is not None:
        cfg = parse_config(args.config)
        cfg.pop("grid", None)
        pipeline = cfg.pop("pipeline", None)
        for key in ("dataset", "output", "policy", "matcher", "max_dist", "workers", "limit"):
            cfg.pop(key, None)
        options.update(cfg)
    for _, key, _typ in _PARAM_FLAGS:
        value = getattr(args, f"opt_{key}")
        if value is not None:
            options[key] = value
    if getattr(args, "pipeline", None):
        pipeline = args.pipeline
    return pipeline, options


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_image_atomic(path: Path, writer) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", suffix=path.suffix)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sidecar_text(resolved: dict) -> str:
    lines = [f"{key} = {resolved[key]}" for key in sorted(resolved)]
    return "\n".join(lines) + "\n"


# --- subcommand handlers ------------------------------------------------------


def cmd_detect(args: argparse.Namespace) -> int:
    pipeline, options = _collect_options(args)
    if not pipeline:
        raise ParameterError("no pipeline given (flag --pipeline or config key)")
    check_advisory_ranges(options, args.unsafe_params)
    runner, resolved = build_runner(pipeline, options)
    image = imgproc.read_image(args.input)
    edges = runner(image)
    out = args.output or Path(args.input).with_suffix(".edges.png")
    out = Path(out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    _write_image_atomic(out, lambda tmp: imgproc.write_edge_map(tmp, edges))
    sidecar = out.with_suffix(".txt")
    _atomic_write_bytes(sidecar, _sidecar_text(resolved).encode())
    if args.dump_response is not None:
        plane = _response_plane(pipeline, options, image)
        imgproc.write_response_plane(args.dump_response, plane)
    print(f"wrote {out} ({int(np.count_nonzero(edges))} edge pixels), params in {sidecar}")
    return 0


def _response_plane(pipeline: str, options: dict, image: np.ndarray) -> np.ndarray:
    """Pre-threshold response plane for the pipelines that have one."""
    from . import operators, pipelines, postprocess

    _, resolved = build_runner(pipeline, options)
    gray = imgproc.to_grayscale(image)
    if pipeline in ("first-order", "compass", "frei-chen"):
        blurred = imgproc.gaussian_blur(gray, resolved["sigma"])
        if pipeline == "first-order":
            k = kernels.dilate(kernels.catalog_get(resolved["operator"], resolved["size"]),
                               resolved["dilation"])
            return operators.gradient_orthogonal(blurred, k, resolved["magnitude_mode"]).magnitude
        if pipeline == "compass":
            k = kernels.dilate(kernels.catalog_get(resolved["operator"], resolved["size"]),
                               resolved["dilation"])
            return operators.compass_gradient(blurred, k).magnitude
        fc = operators.frei_chen(blurred, resolved["dilation"])
        return (fc.edge if resolved["response"] == "edge" else fc.line) * 255.0
    if pipeline == "laplace":
        return operators.laplace(gray, variant=resolved["variant"], size=resolved["size"],
                                 dilation=resolved["dilation"])
    if pipeline == "log":
        return operators.log_response(gray, resolved["sigma"], variant=resolved["variant"],
                                      dilation=resolved["dilation"], form="factored")
    if pipeline == "marr-hildreth":
        return operators.log_response(gray, resolved["sigma"], variant=resolved["variant"],
                                      dilation=resolved["dilation"], form="composite")
    if pipeline == "canny":
        blurred = imgproc.gaussian_blur(gray, resolved["sigma"])
        k = kernels.dilate(kernels.catalog_get(resolved["operator"], resolved["size"]),
                           resolved["dilation"])
        g = operators.gradient_orthogonal(blurred, k, "exact")
        return postprocess.non_max_suppression(g)
    raise ParameterError(f"response dump is not available for pipeline {pipeline!r}")


def _format_coeff(v: float) -> str:
    return str(int(v)) if v == int(v) else repr(float(v))


def cmd_kernels(args: argparse.Namespace) -> int:
    if args.kernels_cmd == "list":
        for name in kernels.catalog_names():
            sizes = ", ".join(f"{s}x{s}" for s in kernels.catalog_sizes(name))
            k = kernels.catalog_get(name, kernels.catalog_sizes(name)[0])
            print(f"{name}\t{k.family}\t{sizes}")
        return 0
    k = kernels.catalog_get(args.name, args.size)
    if args.dilate:
        k = kernels.dilate(k, args.dilate)
    for row in k.coeffs:
        print("\t".join(_format_coeff(v) for v in row))
    return 0


def _bench_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", type=Path, default=None, help="dataset root directory")
    parser.add_argument("--output", type=Path, default=None, help="report directory")
    parser.add_argument("--policy", choices=("union", "best_annotator"), default=None)
    parser.add_argument("--matcher", choices=("exact", "greedy"), default=None)
    parser.add_argument("--max-dist", type=float, default=None,
                        help="matching radius in pixels (default: 0.0075 x diagonal)")
    parser.add_argument("--workers", type=int, default=None,
                        help=f"parallel image evaluations (default ${bench.WORKERS_ENV} or 1)")
    parser.add_argument("--limit", type=int, default=None, help="evaluate only the first N images")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def cmd_bench_run(args: argparse.Namespace) -> int:
    pipeline, options = _collect_options(args)
    if not pipeline:
        raise ParameterError("no pipeline given (flag --pipeline or config key)")
    check_advisory_ranges(options, args.unsafe_params)
    cfg = parse_config(args.config) if args.config else {}
    dataset = args.dataset or cfg.get("dataset")
    if not dataset:
        raise ParameterError("no dataset given (flag --dataset or config key)")
    output = args.output or cfg.get("output") or "results/run"
    result = bench.evaluate_dataset(
        pipeline,
        options,
        dataset,
        policy=args.policy or cfg.get("policy", "union"),
        max_dist=args.max_dist if args.max_dist is not None else cfg.get("max_dist"),
        method=args.matcher or cfg.get("matcher", "exact"),
        workers=args.workers if args.workers is not None else cfg.get("workers"),
        limit=args.limit if args.limit is not None else cfg.get("limit"),
    )
    outdir = bench.write_run_report(output, result, figures=not args.no_figures)
    pooled = result.pooled
    tp, fp, fn = result.totals
    print(f"{len(result.rows)} images  tp={tp} fp={fp} fn={fn}")
    print(f"precision={pooled.precision:.6f} recall={pooled.recall:.6f} f1={pooled.f1:.6f}")
    print(f"report in {outdir}")
    return 0


def cmd_bench_sweep(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    pipeline = args.pipeline or cfg.pop("pipeline", None)
    if not pipeline:
        raise ParameterError("no pipeline given (flag --pipeline or config key)")
    axes = cfg.pop("grid", None)
    if not axes:
        raise ParameterError("sweep config needs at least one grid.<param> axis")
    dataset = args.dataset or cfg.pop("dataset", None)
    if not dataset:
        raise ParameterError("no dataset given (flag --dataset or config key)")
    output = args.output or cfg.pop("output", None) or "results/sweep"
    policy = args.policy or cfg.pop("policy", "union")
    matcher = args.matcher or cfg.pop("matcher", "exact")
    max_dist = args.max_dist if args.max_dist is not None else cfg.pop("max_dist", None)
    workers = args.workers if args.workers is not None else cfg.pop("workers", None)
    limit = args.limit if args.limit is not None else cfg.pop("limit", None)
    fixed = cfg  # remaining keys are fixed pipeline options
    for values in (fixed, *(({name: v} for name in axes for v in axes[name]))):
        check_advisory_ranges(values, args.unsafe_params)
    combos, best = bench.run_sweep(
        pipeline, fixed, axes, dataset,
        policy=policy, max_dist=max_dist, method=matcher, workers=workers, limit=limit,
        progress=lambda values, pooled: print(
            "  " + " ".join(f"{k}={v}" for k, v in sorted(values.items()))
            + f"  f1={pooled.f1:.6f}"
        ),
    )
    outdir = bench.write_sweep_report(output, pipeline, combos, best, figures=not args.no_figures)
    best_desc = " ".join(f"{k}={v}" for k, v in sorted(best.values.items()))
    print(f"best: {best_desc}  f1={best.result.pooled.f1:.6f}")
    print(f"report in {outdir}")
    return 0


def cmd_bench_compare(args: argparse.Namespace) -> int:
    rows = bench.compare_runs(args.run_a, args.run_b)
    print(f"{'image_id':<20} {'f1_a':>10} {'f1_b':>10} {'delta':>10}")
    for row in rows:
        print(f"{row['image_id']:<20} {row['f1_a']:>10.6f} {row['f1_b']:>10.6f} {row['delta']:>+10.6f}")
    mean_delta = sum(r["delta"] for r in rows) / len(rows)
    print(f"{'mean':<20} {'':>10} {'':>10} {mean_delta:>+10.6f}")
    if args.output is not None:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        lines = ["image_id,f1_a,f1_b,delta"]
        lines += [
            f"{r['image_id']},{r['f1_a']:.6f},{r['f1_b']:.6f},{r['delta']:.6f}" for r in rows
        ]
        _atomic_write_bytes(outdir / "comparison.csv", ("\n".join(lines) + "\n").encode())
        if not args.no_figures:
            from .plots import save_compare_figure

            save_compare_figure(rows, outdir / "comparison.png")
        print(f"report in {outdir}")
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dedge",
        description="Edge detection with dilated classical kernels, plus benchmarking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="run one pipeline on one image")
    p_detect.add_argument("input", type=Path, help="input image (png/jpg/ppm/pgm)")
    p_detect.add_argument("-o", "--output", type=Path, default=None, help="edge map path (.png/.pgm)")
    p_detect.add_argument("--pipeline", choices=PIPELINE_IDS, default=None)
    p_detect.add_argument("--dump-response", type=Path, default=None,
                          help="also write the raw response plane (.tif or .txt)")
    _add_param_flags(p_detect)
    p_detect.set_defaults(func=cmd_detect)

    p_kernels = sub.add_parser("kernels", help="inspect the kernel catalog")
    k_sub = p_kernels.add_subparsers(dest="kernels_cmd", required=True)
    k_list = k_sub.add_parser("list", help="list catalog kernels")
    k_list.set_defaults(func=cmd_kernels)
    k_dump = k_sub.add_parser("dump", help="print one kernel as a TSV grid")
    k_dump.add_argument("name")
    k_dump.add_argument("size", type=int)
    k_dump.add_argument("--dilate", type=int, default=0)
    k_dump.set_defaults(func=cmd_kernels)

    p_bench = sub.add_parser("bench", help="benchmark verbs")
    b_sub = p_bench.add_subparsers(dest="bench_cmd", required=True)

    b_run = b_sub.add_parser("run", help="evaluate one configuration over a dataset")
    b_run.add_argument("--pipeline", choices=PIPELINE_IDS, default=None)
    _bench_common(b_run)
    _add_param_flags(b_run)
    b_run.set_defaults(func=cmd_bench_run)

    def add_sweep(sp):
        sp.add_argument("--pipeline", choices=PIPELINE_IDS, default=None)
        sp.add_argument("--config", type=Path, required=True,
                        help="sweep config with grid.<param> axes")
        sp.add_argument("--unsafe-params", action="store_true")
        _bench_common(sp)
        sp.set_defaults(func=cmd_bench_sweep)

    add_sweep(b_sub.add_parser("sweep", help="grid search over parameters"))
    add_sweep(sub.add_parser("sweep", help="alias for 'bench sweep'"))

    def add_compare(sp):
        sp.add_argument("run_a", type=Path)
        sp.add_argument("run_b", type=Path)
        sp.add_argument("-o", "--output", type=Path, default=None)
        sp.add_argument("--no-figures", action="store_true")
        sp.set_defaults(func=cmd_bench_compare)

    add_compare(b_sub.add_parser("compare", help="diff two run reports"))
    add_compare(sub.add_parser("compare", help="alias for 'bench compare'"))

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, kernels.UnknownKernelError, kernels.UnsupportedSizeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (bench.DatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
