"""Rank-then-average scoring across methods: lower score is better.

For every (case, metric) cell the methods are ranked 1..M (ties get the
average of the tied positions); a method's score is its mean rank over all
cells. Higher-is-better metrics (PSNR, SSIM) are ranked descending.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DuplicateReport, IncompleteGrid, IoFailure
from .metrics import MetricReport

METRICS = ("mse", "psnr", "ssim")
_ASCENDING = {"mse": True, "psnr": False, "ssim": False}


@dataclass
class RankTable:
    methods: list[str]
    cases: list[str]
    scores: dict[str, float]
    ranks: np.ndarray  # shape (n_cases, len(METRICS), n_methods)

    def sorted_methods(self) -> list[tuple[str, float]]:
        return sorted(self.scores.items(), key=lambda kv: (kv[1], kv[0]))


def rank_methods(reports: list[MetricReport]) -> RankTable:
    """Score a complete (case x method) grid of metric reports."""
    methods: list[str] = []
    cases: list[str] = []
    grid: dict[tuple[str, str], MetricReport] = {}
    for r in reports:
        key = (r.case_id, r.method_id)
        if key in grid:
            raise DuplicateReport(f"duplicate report for case={key[0]} method={key[1]}")
        grid[key] = r
        if r.method_id not in methods:
            methods.append(r.method_id)
        if r.case_id not in cases:
            cases.append(r.case_id)

    if len(methods) < 2:
        raise IncompleteGrid(f"need >= 2 methods, got {len(methods)}")
    for c in cases:
        for m in methods:
            if (c, m) not in grid:
                raise IncompleteGrid(f"missing report for case={c} method={m}")

    ranks = np.zeros((len(cases), len(METRICS), len(methods)), dtype=np.float64)
    for ci, c in enumerate(cases):
        for mi, metric in enumerate(METRICS):
            vals = np.array([getattr(grid[(c, m)], metric) for m in methods],
                            dtype=np.float64)
            # rankdata is ascending = rank 1 for smallest; negate for
            # higher-is-better metrics (inf PSNR then ranks best).
            ranks[ci, mi, :] = rankdata(vals if _ASCENDING[metric] else -vals,
                                        method="average")

    scores = {m: float(ranks[:, :, i].mean()) for i, m in enumerate(methods)}
    return RankTable(methods=methods, cases=cases, scores=scores, ranks=ranks)


def export_ranks(table: RankTable, path) -> None:
    """CSV 'method,score' sorted by score, ties broken by method id."""
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["method", "score"])
            for method, score in table.sorted_methods():
                writer.writerow([method, f"{score:.10g}"])
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
