"""Command-line interface.

Subcommands: binarize, baseline, evaluate, export-patches, stats, split.
Defaults reproduce the reference protocol, so a bare ``inkstone binarize``
runs the standard two-stage pipeline.

Option precedence is flag > --config file > built-in default. Exit codes:
0 ok, 2 usage, 3 I/O, 4 model, 5 data contract.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as ds
from . import metrics as mx
from .backends import MODEL_PATH_ENV, Polarity, SauvolaParams, load_backend, otsu_binarize, sauvola_binarize
from .errors import InferenceError, InkstoneError, ModelLoadError, UnmatchedPair
from .inference import InferenceConfig, run_pipeline
from .patching import DilationConfig, SamplingConfig
from .raster import load_gray, load_mask, save_gray, save_mask

EXIT_IO = 3
EXIT_MODEL = 4
EXIT_DATA = 5


def _fail(exc: BaseException) -> "NoReturn":  # noqa: F821 - doc only
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    if isinstance(exc, (ModelLoadError, InferenceError)):
        sys.exit(EXIT_MODEL)
    if isinstance(exc, InkstoneError):
        sys.exit(EXIT_DATA)
    sys.exit(EXIT_IO)


def _merged(ctx: click.Context, config_file: str | None, **flags):
    """Apply flag > config-file > default precedence to option values."""
    values = dict(flags)
    if config_file:
        with open(config_file) as fh:
            file_values = json.load(fh)
        for key, value in file_values.items():
            if key not in values:
                raise click.UsageError(f"unknown config key: {key}")
            src = ctx.get_parameter_source(key)
            if src is not None and src.name != "COMMANDLINE":
                values[key] = value
    return values


def _parse_scales(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).split(",") if v.strip())


def _sampling_options(fn):
    opts = [
        click.option("--r-base", "r_base", default=0.5, show_default=True,
                     help="Foreground patches per valid character component."),
        click.option("--n-min", default=10, show_default=True,
                     help="Minimum foreground patches per image."),
        click.option("--n-max", default=250, show_default=True,
                     help="Maximum foreground patches per image."),
        click.option("--n-bg-max", default=75, show_default=True,
                     help="Background patch budget for an all-background image."),
        click.option("--k-min", default=4.0, show_default=True,
                     help="Smallest patch side multiplier (side = k * mean char height)."),
        click.option("--k-max", default=12.0, show_default=True,
                     help="Largest patch side multiplier."),
        click.option("--q1-fence", default=1.5, show_default=True,
                     help="Lower IQR fence factor for valid components."),
        click.option("--q2-fence", default=1.5, show_default=True,
                     help="Upper IQR fence factor for valid components."),
        click.option("--out-side", default=512, show_default=True,
                     help="Square side patches are resized to."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _dilation_options(fn):
    fn = click.option("--s2", default=0.9, show_default=True,
                      help="Width scale of the stage-1 region-dilation kernel.")(fn)
    fn = click.option("--s1", default=0.3, show_default=True,
                      help="Height scale of the stage-1 region-dilation kernel.")(fn)
    return fn


@click.group()
def main():
    """Binarization pipeline for degraded stone inscriptions."""


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Output mask PNG ({0,255}, 255 = text).")
@click.option("--backend", "backend_sel", default="otsu", show_default=True,
              help="Patch binarizer: otsu, sauvola, oracle, model[:path] "
                   f"(path defaults to ${MODEL_PATH_ENV}).")
@click.option("--gt", type=click.Path(exists=True, dir_okay=False),
              help="Ground-truth mask, required by the oracle backend.")
@click.option("--overlay", type=click.Path(dir_okay=False),
              help="Also write the input with predicted text tinted red.")
@click.option("--debug-dir", type=click.Path(file_okay=False),
              help="Write stage artifacts coarse.png / pseudo.png / final.png.")
@click.option("--scales", default="256,384,512,768", show_default=True,
              help="Stage-1 sliding-window scales, comma separated.")
@click.option("--stride-fraction", default=0.5, show_default=True,
              help="Stage-1 stride as a fraction of the scale.")
@click.option("--threshold", default=0.5, show_default=True,
              help="Probability threshold for text.")
@click.option("--refine-k", default=8.0, show_default=True,
              help="Stage-2 window side multiplier over the mean char height.")
@click.option("--refine-overlap", default=0.5, show_default=True,
              help="Stage-2 tiling overlap fraction.")
@click.option("--polarity", type=click.Choice(["dark", "light"]), default="dark",
              show_default=True, help="Whether text images darker or lighter than stone.")
@click.option("--sauvola-window", default=25, show_default=True,
              help="Sauvola window side (odd).")
@click.option("--sauvola-k", default=0.2, show_default=True, help="Sauvola sensitivity.")
@click.option("--sauvola-r", default=128.0, show_default=True,
              help="Sauvola dynamic-range constant.")
@click.option("--workers", type=int, default=lambda: os.cpu_count() or 1,
              help="Prediction worker threads. [default: available parallelism]")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON file with option values (flags still win).")
@_dilation_options
@click.pass_context
def binarize(ctx, input_path, output, backend_sel, gt, overlay, debug_dir,
             config_file, workers, **flags):
    """Run the two-stage pipeline on one image."""
    v = _merged(ctx, config_file, **flags)
    try:
        img = load_gray(input_path)
        gt_mask = load_mask(gt) if gt else None
        backend = load_backend(
            backend_sel, gt=gt_mask,
            sauvola=SauvolaParams(window=v["sauvola_window"], k=v["sauvola_k"],
                                  r=v["sauvola_r"]),
            polarity=v["polarity"],
        )
        cfg = InferenceConfig(
            scales=_parse_scales(v["scales"]),
            stride_fraction=v["stride_fraction"],
            threshold=v["threshold"],
            refine_k=v["refine_k"],
            refine_overlap=v["refine_overlap"],
        )
        result = run_pipeline(img, backend, cfg,
                              DilationConfig(s1=v["s1"], s2=v["s2"]),
                              workers=workers)
        save_mask(result.b_final, output)
        if overlay:
            save_overlay(img, result.b_final, overlay)
        if debug_dir:
            dest = Path(debug_dir)
            dest.mkdir(parents=True, exist_ok=True)
            save_gray(np.rint(result.p_coarse * 255.0).astype(np.uint8),
                      dest / "coarse.png")
            save_mask(result.b_pseudo, dest / "pseudo.png")
            save_mask(result.b_final, dest / "final.png")
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


def save_overlay(img, mask, path):
    from PIL import Image

    rgb = np.stack([img, img, img], axis=-1).astype(np.float64)
    tint = np.array([255.0, 0.0, 0.0])
    rgb[mask] = 0.5 * rgb[mask] + 0.5 * tint
    Image.fromarray(np.rint(rgb).astype(np.uint8), mode="RGB").save(path)


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(["otsu", "sauvola"]), required=True,
              help="Classical full-image algorithm (no patching).")
@click.option("--polarity", type=click.Choice(["dark", "light"]), default="dark",
              show_default=True)
@click.option("--sauvola-window", default=25, show_default=True)
@click.option("--sauvola-k", default=0.2, show_default=True)
@click.option("--sauvola-r", default=128.0, show_default=True)
def baseline(input_path, output, method, polarity, sauvola_window, sauvola_k, sauvola_r):
    """Classical single-pass binarization over the whole image."""
    try:
        img = load_gray(input_path)
        if method == "otsu":
            prob = otsu_binarize(img, polarity)
        else:
            prob = sauvola_binarize(
                img, SauvolaParams(window=sauvola_window, k=sauvola_k, r=sauvola_r),
                polarity)
        save_mask(prob > 0.5, output)
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--pred-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gt-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--csv-out", required=True, type=click.Path(dir_okay=False),
              help="Per-image CSV: image_id,psnr,fm,fps,drd.")
@click.option("--json-out", type=click.Path(dir_okay=False),
              help="JSON summary with metric means.")
def evaluate(pred_dir, gt_dir, csv_out, json_out):
    """Score predicted masks against ground truth, paired by file stem."""
    try:
        pred_files = {p.stem: p for p in sorted(Path(pred_dir).glob("*.png"))}
        gt_files = {p.stem: p for p in sorted(Path(gt_dir).glob("*.png"))}
        missing = sorted(set(pred_files) ^ set(gt_files))
        if missing:
            raise UnmatchedPair(f"unpaired stems: {', '.join(missing)}")
        if not pred_files:
            raise UnmatchedPair("no .png pairs found")
        rows = []
        for stem in sorted(pred_files):
            report = mx.evaluate_pair(load_mask(pred_files[stem]),
                                      load_mask(gt_files[stem]))
            rows.append((stem, report))
        mx.write_csv(rows, csv_out)
        if json_out:
            mean = mx.write_summary(rows, json_out)
        else:
            mean = mx.mean_report([r for _, r in rows])
        click.echo(f"n={len(rows)} psnr={mean.psnr:.2f} fm={mean.fm:.2f} "
                   f"fps={mean.f_ps:.2f} drd={mean.drd:.2f}")
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("export-patches")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True, help="Global sampling seed.")
@click.option("--split-only", type=click.Choice(["train", "test"]),
              help="Restrict to one side of the manifest split.")
@click.option("--workers", type=int, default=lambda: os.cpu_count() or 1,
              help="Parallel image workers. [default: available parallelism]")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON file with option values (flags still win).")
@_sampling_options
@_dilation_options
@click.pass_context
def export_patches(ctx, manifest_path, out_dir, seed, split_only, workers,
                   config_file, **flags):
    """Sample and write training patches for every manifest entry."""
    v = _merged(ctx, config_file, seed=seed, **flags)
    try:
        manifest = ds.load_manifest(manifest_path)
        entries = None
        if split_only == "train":
            entries = manifest.train_entries()
        elif split_only == "test":
            entries = manifest.test_entries()
        sampling = SamplingConfig(
            r_base=v["r_base"], n_min=v["n_min"], n_max=v["n_max"],
            n_bg_max=v["n_bg_max"], k_min=v["k_min"], k_max=v["k_max"],
            q1_fence=v["q1_fence"], q2_fence=v["q2_fence"],
            out_side=v["out_side"], rng_seed=v["seed"],
        )
        summary = ds.export_patches(
            manifest, sampling, DilationConfig(s1=v["s1"], s2=v["s2"]),
            out_dir, workers=workers, entries=entries)
        for image_id, (n_fg, n_bg) in sorted(summary.per_image.items()):
            click.echo(f"{image_id}: {n_fg} foreground, {n_bg} background")
        for image_id in summary.skipped:
            click.echo(f"{image_id}: skipped (empty mask)", err=True)
        click.echo(f"total: {summary.total_patches} patches")
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--json-out", type=click.Path(dir_okay=False),
              help="Write per-image stats and corpus ranges as JSON.")
def stats(manifest_path, json_out):
    """Corpus statistics: components per image, dimensions, aspect ratios."""
    try:
        corpus = ds.compute_stats(ds.load_manifest(manifest_path))
        ranges = corpus.ranges()
        for name, (lo, hi) in ranges.items():
            click.echo(f"{name}: min {lo:g} max {hi:g}")
        if json_out:
            payload = {
                "per_image": [
                    {"image_id": s.image_id, "components": s.n_components,
                     "width": s.width, "height": s.height, "aspect": s.aspect}
                    for s in corpus.per_image
                ],
                "ranges": {k: list(v) for k, v in ranges.items()},
            }
            with open(json_out, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("split")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Manifest copy with the split filled in.")
@click.option("--train-fraction", default=0.85, show_default=True)
@click.option("--seed", default=0, show_default=True)
def split_cmd(manifest_path, output, train_fraction, seed):
    """Assign a seeded, tag-stratified train/test split."""
    try:
        manifest = ds.split(ds.load_manifest(manifest_path), train_fraction, seed)
        ds.save_manifest(manifest, output)
        n_train = sum(1 for v in manifest.split.values() if v == "train")
        click.echo(f"train {n_train} / test {len(manifest.split) - n_train}")
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
