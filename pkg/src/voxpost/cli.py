"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Logging level comes from VOXPOST_LOG={error,warn,info,debug}.
"""
from __future__ import annotations

import json
import logging
import os
import sys

import click

from . import aggregate, degrade as degrade_mod, filters, intensity, metrics, ranking
from .errors import VoxpostError
from .pipeline import PipelineConfig, run_pipeline
from .volume_io import read_mask, read_volume, write_volume

log = logging.getLogger("voxpost")

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = _LEVELS.get(os.environ.get("VOXPOST_LOG", "warn").lower(),
                        logging.WARNING)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_weights(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise click.UsageError(f"--weights must be comma-separated numbers, got {text!r}")


@click.group()
def cli():
    """Post-processing toolkit for ensembled volumetric predictions."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Pipeline config JSON.")
@click.option("--jobs", default=1, show_default=True, help="Parallel cases.")
@click.option("--strict", is_flag=True, help="Fail the run on any case error.")
@click.option("--seed", type=int, default=None, help="Override config seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Override config output directory.")
@click.option("--no-figures", is_flag=True, help="Skip report figure rendering.")
def run(config_path, jobs, strict, seed, out_dir, no_figures):
    """Run the configured post-processing pipeline over a dataset."""
    cfg = PipelineConfig.from_file(config_path)
    if seed is not None:
        cfg.seed = seed
    if out_dir is not None:
        cfg.output_dir = out_dir
    summary = run_pipeline(cfg, jobs=jobs, strict=strict, figures=not no_figures)
    click.echo(json.dumps(summary, indent=2))
    if summary["failures"]:
        sys.exit(2)


@cli.command()
@click.option("--inputs", multiple=True, required=True, type=click.Path(exists=True),
              help="Prediction volume (repeatable).")
@click.option("--mode", default="mean", show_default=True,
              type=click.Choice(list(aggregate.MODES)))
@click.option("--weights", default=None, help="Comma-separated weights (mean only).")
@click.option("--out", "out_path", required=True, type=click.Path())
def ensemble(inputs, mode, weights, out_path):
    """Voxel-wise fusion of two or more aligned volumes."""
    vols = [read_volume(p) for p in inputs]
    agg = aggregate.AggregationMode(mode=mode, weights=_parse_weights(weights))
    write_volume(aggregate.ensemble(vols, agg), out_path)
    click.echo(out_path)


@cli.command("filter")
@click.option("--inputs", required=True, type=click.Path(exists=True))
@click.option("--median-k", type=int, default=None, help="Odd median kernel size.")
@click.option("--gaussian-sigma", type=float, default=None, help="Gaussian sigma (voxels).")
@click.option("--out", "out_path", required=True, type=click.Path())
def filter_cmd(inputs, median_k, gaussian_sigma, out_path):
    """Apply the median filter and/or Gaussian smoothing (median first)."""
    if median_k is None and gaussian_sigma is None:
        raise click.UsageError("provide --median-k and/or --gaussian-sigma")
    v = read_volume(inputs)
    if median_k is not None:
        v = filters.median_filter(v, median_k)
    if gaussian_sigma is not None:
        v = filters.gaussian_smooth(v, gaussian_sigma)
    write_volume(v, out_path)
    click.echo(out_path)


@cli.command()
@click.option("--inputs", required=True, type=click.Path(exists=True))
@click.option("--ref", required=True, type=click.Path(exists=True),
              help="Reference volume.")
@click.option("--roi", default="mask", show_default=True,
              type=click.Choice(["mask", "volume"]))
@click.option("--mask", "mask_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def histmatch(inputs, ref, roi, mask_path, out_path):
    """Match a volume's ROI intensity distribution to a reference."""
    if roi == "mask" and mask_path is None:
        raise click.UsageError("--roi mask requires --mask")
    src = read_volume(inputs)
    ref_v = read_volume(ref)
    m = read_mask(mask_path) if mask_path else None
    write_volume(intensity.histogram_match(src, ref_v, m, roi=roi), out_path)
    click.echo(out_path)


@cli.command()
@click.option("--inputs", required=True, type=click.Path(exists=True),
              help="Synthesized volume.")
@click.option("--voided", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def composite(inputs, voided, mask_path, out_path):
    """Paste synthesized voxels into the voided scan inside the mask."""
    import numpy as np
    pred = read_volume(inputs)
    base = read_volume(voided)
    m = read_mask(mask_path)
    out = base.with_data(np.where(m.bool, pred.data, base.data))
    write_volume(out, out_path)
    click.echo(out_path)


@cli.command()
@click.option("--pred", required=True, type=click.Path(exists=True))
@click.option("--gt", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--case-id", default="case")
@click.option("--method-id", default="method")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the JSON report here instead of stdout.")
def evaluate(pred, gt, mask_path, case_id, method_id, out_path):
    """MSE/PSNR/SSIM of a prediction against ground truth over the mask."""
    report = metrics.evaluate_case(
        read_volume(pred), read_volume(gt), read_mask(mask_path),
        case_id=case_id, method_id=method_id)
    text = report.to_json()
    if out_path:
        with open(out_path, "w") as f:
            f.write(text + "\n")
    click.echo(text)


@cli.command()
@click.option("--reports", required=True, type=click.Path(exists=True),
              help="MetricReport JSON-lines file.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output CSV path.")
@click.option("--figures", "fig_dir", type=click.Path(), default=None,
              help="Also render report figures into this directory.")
def rank(reports, out_path, fig_dir):
    """Rank-then-average scoring over a complete report grid."""
    reps = metrics.read_reports_jsonl(reports)
    table = ranking.rank_methods(reps)
    ranking.export_ranks(table, out_path)
    if fig_dir:
        from . import report as report_mod
        for p in report_mod.render_report_figures(reps, table, fig_dir):
            click.echo(str(p))
    click.echo(out_path)


@cli.command()
@click.option("--inputs", required=True, type=click.Path(exists=True),
              help="Dataset root with per-case directories.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sigma-min", type=float, default=0.5, show_default=True)
@click.option("--sigma-max", type=float, default=1.5, show_default=True)
@click.option("--draws", type=int, default=1, show_default=True,
              help="Degraded volumes per case.")
def degrade(inputs, out_dir, seed, sigma_min, sigma_max, draws):
    """Generate seeded blur-degraded training pairs from healthy regions."""
    spec = degrade_mod.DegradeSpec(sigma_min=sigma_min, sigma_max=sigma_max,
                                   seed=seed, per_case_draws=draws)
    manifest = degrade_mod.degrade_dataset(inputs, out_dir, spec)
    click.echo(json.dumps({"cases": len(manifest),
                           "manifest": str(os.path.join(out_dir, "manifest.json"))}))


def main(argv=None):
    _setup_logging()
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except VoxpostError as e:
        log.error("%s", e)
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except Exception as e:  # pragma: no cover - internal failure path
        click.echo(f"internal error: {e}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
