"""Map evaluation: pixel metrics and Monte Carlo A* planning agreement."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .core import BinaryLayer, erode

SQRT2 = math.sqrt(2.0)
_MOVES = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


class InvalidStart(ValueError):
    pass


class EmptyFreeSpace(RuntimeError):
    pass


def pixel_metrics(pred: BinaryLayer, truth: BinaryLayer) -> dict:
    """Confusion counts and metrics with traversable as the positive class."""
    pred.spec.check_same(truth.spec)
    p, t = pred.data, truth.data
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    fn = int(np.sum(~p & t))
    tn = int(np.sum(~p & ~t))
    total = tp + fp + fn + tn
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "tp": tp, "fp": fp, "fn": fn, "tn": tn,
        "accuracy": (tp + tn) / total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


def inflate(layer: BinaryLayer, robot_radius: float) -> BinaryLayer:
    """Shrink free space by the robot disc (cells outside the map are blocked)."""
    if robot_radius < 0:
        raise ValueError("robot radius must be >= 0")
    return erode(layer, robot_radius / layer.spec.resolution)


def _astar_counts(free: np.ndarray, start, goal):
    """Shortest 8-connected path as (straight moves, diagonal moves), or None."""
    w, h = free.shape
    si, sj = start
    gi, gj = goal
    if not (0 <= gi < w and 0 <= gj < h) or not free[gi, gj]:
        return None
    if (si, sj) == (gi, gj):
        return (0, 0)

    def heur(i, j):
        di, dj = abs(i - gi), abs(j - gj)
        return (max(di, dj) - min(di, dj)) + SQRT2 * min(di, dj)

    best = {(si, sj): (0.0, 0, 0)}
    heap = [(heur(si, sj), si, sj)]
    closed = set()
    free_rows = free.tolist()
    while heap:
        f, i, j = heapq.heappop(heap)
        if (i, j) in closed:
            continue
        if (i, j) == (gi, gj):
            _, ns, nd = best[(i, j)]
            return (ns, nd)
        closed.add((i, j))
        _, ns, nd = best[(i, j)]
        for di, dj in _MOVES:
            ni, nj = i + di, j + dj
            if not (0 <= ni < w and 0 <= nj < h) or not free_rows[ni][nj] or (ni, nj) in closed:
                continue
            diag = di != 0 and dj != 0
            cs, cd = (ns, nd + 1) if diag else (ns + 1, nd)
            g = cs + SQRT2 * cd
            old = best.get((ni, nj))
            if old is None or g < old[0]:
                best[(ni, nj)] = (g, cs, cd)
                heapq.heappush(heap, (g + heur(ni, nj), ni, nj))
    return None


def astar(layer: BinaryLayer, start, goal) -> float | None:
    """Exact shortest path length in meters on the true-set, or None if unreachable."""
    si, sj = start
    free = layer.data
    if not (0 <= si < free.shape[0] and 0 <= sj < free.shape[1]) or not free[si, sj]:
        raise InvalidStart(f"start {tuple(start)} is not free")
    counts = _astar_counts(free, (si, sj), tuple(goal))
    if counts is None:
        return None
    ns, nd = counts
    return layer.spec.resolution * (ns + SQRT2 * nd)


@dataclass
class ValidationReport:
    n: int
    seed: int
    robot_radius: float
    pixel: dict
    gt_success: int = 0
    matched_success: int = 0
    gt_failure: int = 0
    matched_failure: int = 0
    causes: dict = field(default_factory=lambda: {"goal": 0, "start": 0, "connectivity": 0})
    overlengths: list = field(default_factory=list)
    tuples: list = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.matched_success / self.gt_success if self.gt_success else 1.0

    @property
    def failure_rate(self) -> float:
        return self.matched_failure / self.gt_failure if self.gt_failure else 1.0

    @property
    def mean_overlength(self) -> float:
        return float(np.mean(self.overlengths)) if self.overlengths else 0.0

    @property
    def max_overlength(self) -> float:
        return float(np.max(self.overlengths)) if self.overlengths else 0.0

    def histogram(self, bin_width: float = 0.25) -> list[tuple[float, int]]:
        if not self.overlengths:
            return []
        vals = np.asarray(self.overlengths)
        # tiny negative float noise belongs to the zero bin
        k = np.floor(np.round(vals / bin_width, 9)).astype(int)
        lo, hi = min(k.min(), 0), k.max()
        counts = np.bincount(k - lo, minlength=hi - lo + 1)
        return [((lo + b) * bin_width, int(c)) for b, c in enumerate(counts)]

    def table(self) -> str:
        px = self.pixel
        lines = [
            f"tuples                 {self.n}",
            f"seed                   {self.seed}",
            f"robot radius [m]       {self.robot_radius:.3f}",
            f"pixel accuracy         {px['accuracy']:.4f}",
            f"pixel precision        {px['precision']:.4f}",
            f"pixel recall           {px['recall']:.4f}",
            f"pixel f1               {px['f1']:.4f}",
            f"gt successes           {self.gt_success}",
            f"matched successes      {self.matched_success} ({100 * self.success_rate:.2f}%)",
            f"gt failures            {self.gt_failure}",
            f"matched failures       {self.matched_failure} ({100 * self.failure_rate:.2f}%)",
            f"mismatch: goal         {self.causes['goal']}",
            f"mismatch: start        {self.causes['start']}",
            f"mismatch: connectivity {self.causes['connectivity']}",
            f"mean overlength [m]    {self.mean_overlength:.4f}",
            f"max overlength [m]     {self.max_overlength:.4f}",
        ]
        return "\n".join(lines) + "\n"


def _labels8(free: np.ndarray) -> np.ndarray:
    labels, _ = ndimage.label(free, structure=np.ones((3, 3), dtype=bool))
    return labels


def _plan(layer: BinaryLayer, labels: np.ndarray, start, goal):
    """A* guarded by a component check; None when unreachable or start blocked."""
    if not layer.data[start]:
        return None
    if not layer.data[goal] or labels[start] != labels[goal]:
        return None
    return astar(layer, start, goal)


def monte_carlo(pred: BinaryLayer, truth: BinaryLayer, n: int = 1000, seed: int = 0,
                robot_radius: float = 0.3) -> ValidationReport:
    """Random start-goal planning on both maps after inflation.

    Starts are uniform over the inflated truth free space; goals are uniform
    over the whole grid.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pred.spec.check_same(truth.spec)
    report = ValidationReport(n, seed, robot_radius, pixel_metrics(pred, truth))
    p_inf, t_inf = inflate(pred, robot_radius), inflate(truth, robot_radius)
    free_t = np.argwhere(t_inf.data)
    if len(free_t) == 0:
        raise EmptyFreeSpace("ground truth has no free cell after inflation")
    p_lab, t_lab = _labels8(p_inf.data), _labels8(t_inf.data)
    rng = np.random.default_rng(seed)
    starts = free_t[rng.integers(0, len(free_t), size=n)]
    goals = np.column_stack([
        rng.integers(0, truth.spec.width, size=n),
        rng.integers(0, truth.spec.height, size=n),
    ])
    for k in range(n):
        s = (int(starts[k, 0]), int(starts[k, 1]))
        g = (int(goals[k, 0]), int(goals[k, 1]))
        lt = _plan(t_inf, t_lab, s, g)
        lp = _plan(p_inf, p_lab, s, g)
        cause = ""
        if lt is not None and lp is not None:
            outcome = "matched_success"
            report.gt_success += 1
            report.matched_success += 1
            report.overlengths.append(lp - lt)
        elif lt is None and lp is None:
            outcome = "matched_failure"
            report.gt_failure += 1
            report.matched_failure += 1
        else:
            if lt is not None:
                outcome = "missed_success"
                report.gt_success += 1
            else:
                outcome = "false_success"
                report.gt_failure += 1
            if p_inf.data[g] != t_inf.data[g]:
                cause = "goal"
            elif p_inf.data[s] != t_inf.data[s]:
                cause = "start"
            else:
                cause = "connectivity"
            report.causes[cause] += 1
        report.tuples.append((k, s[0], s[1], g[0], g[1], lt, lp, outcome, cause))
    return report


def write_report(report: ValidationReport, out_dir, bin_width: float = 0.25):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.table())
    fmt = lambda v: "" if v is None else f"{v:.6f}"
    rows = ["index,start_i,start_j,goal_i,goal_j,gt_length,pred_length,outcome,cause"]
    for k, si, sj, gi, gj, lt, lp, outcome, cause in report.tuples:
        rows.append(f"{k},{si},{sj},{gi},{gj},{fmt(lt)},{fmt(lp)},{outcome},{cause}")
    (out / "tuples.csv").write_text("\n".join(rows) + "\n")
    hist = ["bin_start_m,count"] + [f"{b:.4f},{c}" for b, c in report.histogram(bin_width)]
    (out / "overlength_hist.csv").write_text("\n".join(hist) + "\n")
