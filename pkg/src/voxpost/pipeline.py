"""Declarative post-processing pipeline: ensemble -> filters -> histogram
match -> composite, with optional evaluation and ranking over the results.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import aggregate, filters, intensity, metrics, ranking
from .errors import ConfigError, EmptyDataset, LayoutError, NonFiniteVoxel, VoxpostError
from .volume_io import Mask, Volume, check_congruent, read_mask, read_volume, write_volume

log = logging.getLogger(__name__)

PIPELINE_METHOD_ID = "pipeline"

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["steps", "io"],
    "properties": {
        "steps": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "minProperties": 1,
                "maxProperties": 1,
                "properties": {
                    "ensemble": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "mode": {"enum": list(aggregate.MODES)},
                            "weights": {"type": "array",
                                        "items": {"type": "number"}},
                        },
                    },
                    "median": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"k": {"type": "integer", "minimum": 1}},
                    },
                    "gaussian": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"sigma": {"type": "number", "minimum": 0}},
                    },
                    "histmatch": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "reference": {"type": "string"},
                            "roi": {"enum": ["mask", "volume"]},
                        },
                    },
                    "composite": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {},
                    },
                },
            },
        },
        "io": {
            "type": "object",
            "additionalProperties": False,
            "required": ["input_dir", "output_dir", "prediction_dirs"],
            "properties": {
                "input_dir": {"type": "string"},
                "output_dir": {"type": "string"},
                "prediction_dirs": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "string"},
                },
            },
        },
        "evaluation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "gt_dir": {"type": "string"},
            },
        },
        "seed": {"type": "integer"},
    },
}


@dataclass
class PipelineConfig:
    steps: list[dict]
    input_dir: str
    output_dir: str
    prediction_dirs: list[str]
    eval_enabled: bool = False
    gt_dir: str | None = None
    seed: int | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as e:
            raise ConfigError(f"invalid pipeline config: {e.message}") from e
        ev = doc.get("evaluation", {})
        return cls(
            steps=doc["steps"],
            input_dir=doc["io"]["input_dir"],
            output_dir=doc["io"]["output_dir"],
            prediction_dirs=doc["io"]["prediction_dirs"],
            eval_enabled=bool(ev.get("enabled", False)),
            gt_dir=ev.get("gt_dir"),
            seed=doc.get("seed"),
        )

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot parse config {path}: {e}") from e
        return cls.from_dict(doc)


def default_steps(reference_method: str) -> list[dict]:
    """The best-ranked configuration: two-model geometric-mean ensemble,
    light Gaussian smoothing, histogram match to the first method, composite.
    The median filter stays off for two-model ensembles."""
    return [
        {"ensemble": {"mode": "geomean"}},
        {"gaussian": {"sigma": 0.5}},
        {"histmatch": {"reference": reference_method, "roi": "mask"}},
        {"composite": {}},
    ]


@dataclass
class CaseRecord:
    case_id: str
    voided: Path
    mask: Path
    predictions: dict[str, Path]
    gt: Path | None = None


def _find_with_ext(directory: Path, stem: str) -> Path | None:
    for ext in (".nii.gz", ".nii"):
        p = directory / (stem + ext)
        if p.exists():
            return p
    return None


def discover_cases(cfg: PipelineConfig, strict: bool = False) -> list[CaseRecord]:
    """One CaseRecord per case present in input_dir and all prediction dirs."""
    input_dir = Path(cfg.input_dir)
    if not input_dir.is_dir():
        raise LayoutError(f"input_dir {input_dir} does not exist")
    pred_dirs = [Path(d) for d in cfg.prediction_dirs]
    for d in pred_dirs:
        if not d.is_dir():
            raise LayoutError(f"prediction dir {d} does not exist")
    method_ids = [d.name for d in pred_dirs]
    if len(set(method_ids)) != len(method_ids):
        raise ConfigError(f"prediction dir basenames must be unique: {method_ids}")

    records = []
    for case_dir in sorted(d for d in input_dir.iterdir() if d.is_dir()):
        cid = case_dir.name
        voided = _find_with_ext(case_dir, f"{cid}-t1n-voided")
        mask = _find_with_ext(case_dir, f"{cid}-mask")
        if voided is None or mask is None:
            msg = f"case {cid}: missing voided scan or mask"
            if strict:
                raise LayoutError(msg)
            log.warning("%s; skipping", msg)
            continue
        preds = {}
        missing = []
        for mid, d in zip(method_ids, pred_dirs):
            p = _find_with_ext(d, cid)
            if p is None:
                missing.append(mid)
            else:
                preds[mid] = p
        if missing:
            msg = f"case {cid}: missing prediction(s) from {missing}"
            if strict:
                raise LayoutError(msg)
            log.warning("%s; skipping", msg)
            continue
        gt = None
        if cfg.gt_dir:
            gt = _find_with_ext(Path(cfg.gt_dir), f"{cid}-t1n")
        records.append(CaseRecord(cid, voided, mask, preds, gt))

    if not records:
        raise EmptyDataset(f"no complete cases found under {input_dir}")
    return records


def _resolve_reference(ref: str, preds: dict[str, Volume]) -> Volume:
    if ref in preds:
        return preds[ref]
    p = Path(ref)
    if p.exists():
        return read_volume(p)
    raise ConfigError(f"histmatch reference {ref!r} is neither a method id nor a file")


def process_case(record: CaseRecord, cfg: PipelineConfig) -> Volume:
    """Execute the configured steps for one case; returns the final volume.

    A composite against the voided input is always enforced at the end so
    out-of-mask voxels pass through bit-exact.
    """
    voided = read_volume(record.voided)
    mask = read_mask(record.mask)
    check_congruent(voided, mask)
    preds = {mid: read_volume(p) for mid, p in record.predictions.items()}
    for mid, v in preds.items():
        if v.dims != voided.dims:
            raise VoxpostError(
                f"case {record.case_id}: prediction {mid} dims {v.dims} != {voided.dims}")

    order = list(record.predictions)  # prediction_dirs order
    current = preds[order[0]]

    for step in cfg.steps:
        (name, args), = step.items()
        if name == "ensemble":
            mode = aggregate.AggregationMode(
                mode=args.get("mode", "mean"), weights=args.get("weights"))
            current = aggregate.ensemble([preds[m] for m in order], mode)
        elif name == "median":
            current = filters.median_filter(current, args.get("k", 3))
        elif name == "gaussian":
            current = filters.gaussian_smooth(current, args.get("sigma", 0.5))
        elif name == "histmatch":
            ref = _resolve_reference(args.get("reference", order[0]), preds)
            roi = args.get("roi", "mask")
            current = intensity.histogram_match(
                current, ref, mask if roi == "mask" else None, roi=roi)
        elif name == "composite":
            current = voided.with_data(
                np.where(mask.bool, current.data, voided.data))
        else:  # unreachable after schema validation
            raise ConfigError(f"unknown step {name!r}")

    # enforce the compositing guarantee even if no composite step was given
    final = voided.with_data(np.where(mask.bool, current.data, voided.data))
    if not np.all(np.isfinite(final.data)):
        raise NonFiniteVoxel(f"case {record.case_id}: pipeline produced non-finite voxels")
    return final


def run_pipeline(cfg: PipelineConfig, jobs: int = 1, strict: bool = False,
                 figures: bool = True) -> dict:
    """Run all cases (optionally in parallel), then evaluate and rank."""
    records = discover_cases(cfg, strict=strict)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results: dict[str, Path] = {}
    failures: dict[str, str] = {}

    def _one(record: CaseRecord):
        out_path = out_dir / f"{record.case_id}-inpainted.nii.gz"
        final = process_case(record, cfg)
        write_volume(final, out_path, compress=True)
        return record.case_id, out_path

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_one, r): r for r in records}
            for fut, rec in futures.items():
                try:
                    cid, p = fut.result()
                    results[cid] = p
                except VoxpostError as e:
                    if strict:
                        raise
                    failures[rec.case_id] = str(e)
                    log.error("case %s failed: %s", rec.case_id, e)
    else:
        for rec in records:
            try:
                cid, p = _one(rec)
                results[cid] = p
            except VoxpostError as e:
                if strict:
                    raise
                failures[rec.case_id] = str(e)
                log.error("case %s failed: %s", rec.case_id, e)

    summary = {
        "cases": sorted(results),
        "outputs": {c: str(results[c]) for c in sorted(results)},
        "failures": failures,
    }

    if cfg.eval_enabled:
        reports = _evaluate(records, results, cfg)
        reports_path = out_dir / "reports.jsonl"
        metrics.write_reports_jsonl(reports, reports_path)
        table = ranking.rank_methods(reports)
        ranks_path = out_dir / "ranks.csv"
        ranking.export_ranks(table, ranks_path)
        summary["reports"] = str(reports_path)
        summary["ranks"] = str(ranks_path)
        summary["scores"] = dict(table.sorted_methods())
        if figures:
            from . import report
            fig_dir = out_dir / "figures"
            summary["figures"] = [
                str(p) for p in report.render_report_figures(reports, table, fig_dir)]
    return summary


def _evaluate(records, results, cfg: PipelineConfig) -> list[metrics.MetricReport]:
    reports = []
    for rec in sorted(records, key=lambda r: r.case_id):
        if rec.case_id not in results:
            continue
        if rec.gt is None:
            raise LayoutError(f"case {rec.case_id}: evaluation enabled but no gt found")
        gt = read_volume(rec.gt)
        mask = read_mask(rec.mask)
        candidates = {mid: read_volume(p) for mid, p in rec.predictions.items()}
        candidates[PIPELINE_METHOD_ID] = read_volume(results[rec.case_id])
        for mid in sorted(candidates):
            reports.append(metrics.evaluate_case(
                candidates[mid], gt, mask, case_id=rec.case_id, method_id=mid))
    return reports
