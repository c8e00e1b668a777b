"""Parameter-plane scans, boundary refinement and triple-point location."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import meanfield
from .bogoliubov import diagonalize
from .criticality import locate_critical_coupling, sr_form
from .errors import BisectionAmbiguous, NoIntersection, RabiZigzagError, UnclassifiedPhase
from .meanfield import Displacements, MinimizeOptions
from .model import ModelParams
from .observables import CurrentReport, classify, currents

__all__ = [
    "AXES",
    "Axis",
    "GridSpec",
    "CellRecord",
    "BoundaryPoint",
    "PhaseDiagram",
    "params_at",
    "evaluate_cell",
    "scan",
    "refine_boundary",
    "locate_triple_point",
    "current_sweep",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

AXES = ("g1", "j1_over_j2", "theta")
CSV_COLUMNS = ("axis1", "axis2", "label", "E_g", "max_alpha_sq", "I_O", "I_E", "I_C", "I_T", "min_eps")

BISECT_STEPS = 12
ORDER_INTERVAL = 1e-6
JUMP_FRACTION = 0.1
CURRENT_FLOOR = 1e-8


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.name not in AXES:
            raise ValueError(f"axis name must be one of {AXES}, got {self.name!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("axis range must be finite")
        if self.n < 1:
            raise ValueError("axis needs at least one point")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class GridSpec:
    axis1: Axis
    axis2: Axis
    template: ModelParams = field(default_factory=ModelParams)

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ValueError("the two axes must differ")

    def transposed(self) -> "GridSpec":
        return GridSpec(self.axis2, self.axis1, self.template)

    def params(self, v1: float, v2: float) -> ModelParams:
        return params_at(params_at(self.template, self.axis1.name, v1), self.axis2.name, v2)


def params_at(template: ModelParams, name: str, value: float) -> ModelParams:
    if name == "g1":
        return template.replace(g1=float(value))
    if name == "j1_over_j2":
        return template.with_ratio(float(value))
    if name == "theta":
        return template.replace(theta=float(value))
    raise ValueError(f"unknown axis {name!r}")


@dataclass
class CellRecord:
    index: tuple[int, int]
    values: tuple[float, float]
    label: str
    energy: float = math.nan
    max_alpha_sq: float = math.nan
    currents: CurrentReport | None = None
    min_eps: float = math.nan
    seed_id: str = ""
    error: str | None = None
    note: str | None = None
    displacements: Displacements | None = field(default=None, repr=False)

    @property
    def max_alpha(self) -> float:
        return math.sqrt(self.max_alpha_sq) if self.max_alpha_sq >= 0 else math.nan

    def csv_row(self) -> list:
        c = self.currents
        cur = [c.i_odd, c.i_even, c.i_chiral, c.i_total] if c is not None else [math.nan] * 4
        return [self.values[0], self.values[1], self.label, self.energy, self.max_alpha_sq, *cur, self.min_eps]

    def as_dict(self) -> dict:
        out = dict(zip(CSV_COLUMNS, self.csv_row()))
        out["index"] = list(self.index)
        out["seed_id"] = self.seed_id
        out["error"] = self.error
        out["note"] = self.note
        return out


@dataclass(frozen=True)
class BoundaryPoint:
    values: tuple[float, float]
    labels: tuple[str, str]
    order: str
    bracket: tuple[tuple[float, float], tuple[float, float]]
    jump_alpha: float
    jump_chiral: float
    scale_alpha: float
    scale_chiral: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class PhaseDiagram:
    spec: GridSpec
    cells: list[list[CellRecord]]
    boundaries: list[BoundaryPoint] = field(default_factory=list)
    special_points: dict = field(default_factory=dict)

    def labels(self) -> np.ndarray:
        return np.array([[c.label for c in row] for row in self.cells], dtype=object)

    def iter_cells(self):
        for row in self.cells:
            yield from row

    def error_fraction(self) -> float:
        cells = list(self.iter_cells())
        return sum(c.error is not None for c in cells) / len(cells)

    def polylines(self) -> list[dict]:
        groups: dict[tuple[str, str, str], list] = {}
        for b in self.boundaries:
            key = (*sorted(b.labels), b.order)
            groups.setdefault(key, []).append(list(b.values))
        return [
            {"labels": [k[0], k[1]], "order": k[2], "points": sorted(pts)}
            for k, pts in sorted(groups.items())
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for cell in self.iter_cells():
            w.writerow([_fmt(v) for v in cell.csv_row()])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "grid": {
                "axis1": asdict(self.spec.axis1),
                "axis2": asdict(self.spec.axis2),
                "template": asdict(self.spec.template),
            },
            "columns": list(CSV_COLUMNS),
            "cells": [c.as_dict() for c in self.iter_cells()],
            "boundaries": [b.as_dict() for b in self.boundaries],
            "polylines": self.polylines(),
            "special_points": self.special_points,
        }
        return json.dumps(doc, indent=2, sort_keys=True, default=_json_default, allow_nan=True)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return "%.17g" % v


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def evaluate_cell(params: ModelParams, options: MinimizeOptions | None = None,
                  warm: list[tuple[str, Displacements]] | None = None,
                  index=(0, 0), values=(0.0, 0.0)) -> CellRecord:
    """Minimize, classify and diagonalize at one parameter point.

    Errors are captured in the record instead of propagating.
    """
    try:
        sol = meanfield.minimize(params, options, extra_seeds=warm)
    except RabiZigzagError as exc:
        return CellRecord(index, values, type(exc).__name__, error=str(exc))
    d = sol.displacements
    c = currents(d)
    rec = CellRecord(index, values, "", sol.energy, float(np.max(d.photon_numbers)), c,
                     seed_id=sol.seed_id, displacements=d)
    try:
        rec.label = classify(params, d, c).label
    except UnclassifiedPhase as exc:
        # a legitimate outcome of the taxonomy, not a numerical failure
        rec.label, rec.note = type(exc).__name__, str(exc)
    except RabiZigzagError as exc:
        rec.label, rec.error = type(exc).__name__, str(exc)
    try:
        rec.min_eps = diagonalize(sr_form(params, d).form).gap
    except RabiZigzagError as exc:
        rec.error = rec.error or f"{type(exc).__name__}: {exc}"
    return rec


def _scan_row(args):
    spec, j, options = args
    v2 = float(spec.axis2.values()[j])
    row, prev = [], None
    for i, v1 in enumerate(spec.axis1.values()):
        warm = [("warm[left]", prev)] if prev is not None else None
        cell = evaluate_cell(spec.params(float(v1), v2), options, warm, (i, j), (float(v1), v2))
        prev = cell.displacements
        row.append(cell)
    return row


def scan(spec: GridSpec, options: MinimizeOptions | None = None, workers: int = 1,
         refine: bool = False) -> PhaseDiagram:
    """Evaluate every grid cell; ``cells[j][i]`` sits at ``(axis1[i], axis2[j])``.

    With one worker each cell is warm-started from its left and lower
    neighbours; with several, rows run concurrently and only the left
    neighbour is used. The full seed list is always kept.
    """
    opts = options or MinimizeOptions()
    v1s, v2s = spec.axis1.values(), spec.axis2.values()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_scan_row, [(spec, j, opts) for j in range(len(v2s))]))
    else:
        cells = []
        for j, v2 in enumerate(v2s):
            row = []
            for i, v1 in enumerate(v1s):
                warm = []
                if i > 0 and row[i - 1].displacements is not None:
                    warm.append(("warm[left]", row[i - 1].displacements))
                if j > 0 and cells[j - 1][i].displacements is not None:
                    warm.append(("warm[below]", cells[j - 1][i].displacements))
                row.append(evaluate_cell(spec.params(float(v1), float(v2)), opts, warm or None,
                                         (i, j), (float(v1), float(v2))))
            cells.append(row)
    diagram = PhaseDiagram(spec, cells)
    if refine:
        _refine_all(diagram, opts)
    return diagram


def _refine_all(diagram: PhaseDiagram, options: MinimizeOptions) -> None:
    cells = diagram.cells
    pairs = []
    for j, row in enumerate(cells):
        for i, cell in enumerate(row):
            if i + 1 < len(row):
                pairs.append((cell, row[i + 1]))
            if j + 1 < len(cells):
                pairs.append((cell, cells[j + 1][i]))
    for a, b in pairs:
        if a.error or b.error or a.label == b.label:
            continue
        try:
            diagram.boundaries.append(refine_boundary(diagram.spec, a, b, options=options))
        except BisectionAmbiguous as exc:
            diagram.special_points.setdefault("ambiguous", []).append(
                {"cells": [list(a.index), list(b.index)], "interval": list(exc.interval)})
    crit = {}
    for bp in diagram.boundaries:
        key = {("MSR", "OCSR"): "theta_c1", ("FSR", "OCSR"): "theta_c1",
               ("ECSR", "MSR"): "theta_c2", ("ECSR", "FSR"): "theta_c2"}.get(tuple(sorted(bp.labels)))
        if key is None:
            continue
        if diagram.spec.axis1.name == "theta":
            crit.setdefault(key, []).append({"theta": bp.values[0], diagram.spec.axis2.name: bp.values[1]})
        elif diagram.spec.axis2.name == "theta":
            crit.setdefault(key, []).append({"theta": bp.values[1], diagram.spec.axis1.name: bp.values[0]})
    diagram.special_points.update(crit)


def refine_boundary(spec: GridSpec, a: CellRecord, b: CellRecord, steps: int = BISECT_STEPS,
                    options: MinimizeOptions | None = None,
                    order_interval: float = ORDER_INTERVAL) -> BoundaryPoint:
    """Bisect the segment between two adjacent cells on the label change.

    After ``steps`` halvings the bracket is narrowed further to
    ``order_interval`` (parameter units) and the transition is tagged
    first-order when max|α| or I_C differs across it by more than 10% of the
    larger value found in the two original cells.
    """
    if a.label == b.label:
        raise ValueError("cells carry the same label")
    p0, p1 = np.array(a.values, dtype=float), np.array(b.values, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    if length == 0:
        raise ValueError("cells coincide")
    warm = [(f"warm[{c.label}]", c.displacements) for c in (a, b) if c.displacements is not None]

    def probe(t):
        v = p0 + t * (p1 - p0)
        return evaluate_cell(spec.params(*v), options, warm, values=(float(v[0]), float(v[1])))

    lo, hi = 0.0, 1.0
    lo_cell, hi_cell = a, b
    n_iter = 0
    while n_iter < steps or (hi - lo) * length > order_interval:
        mid = 0.5 * (lo + hi)
        cell = probe(mid)
        if cell.label == a.label:
            lo, lo_cell = mid, cell
        elif cell.label == b.label:
            hi, hi_cell = mid, cell
        else:
            v_lo, v_hi = p0 + lo * (p1 - p0), p0 + hi * (p1 - p0)
            raise BisectionAmbiguous(
                f"label {cell.label} between {a.label} and {b.label}",
                (tuple(v_lo.tolist()), tuple(v_hi.tolist())),
            )
        n_iter += 1
    jump_alpha = abs(lo_cell.max_alpha - hi_cell.max_alpha)
    ic = [abs(c.currents.i_chiral) if c.currents else 0.0 for c in (a, b)]
    jump_chiral = abs(_chiral(lo_cell) - _chiral(hi_cell))
    scale_alpha = max(a.max_alpha, b.max_alpha)
    scale_chiral = max(ic)
    # currents at rounding level (both sides current-free) carry no order information
    first = (jump_alpha > JUMP_FRACTION * scale_alpha
             or jump_chiral > max(JUMP_FRACTION * scale_chiral, CURRENT_FLOOR))
    v = p0 + 0.5 * (lo + hi) * (p1 - p0)
    v_lo, v_hi = p0 + lo * (p1 - p0), p0 + hi * (p1 - p0)
    return BoundaryPoint(
        (float(v[0]), float(v[1])), (a.label, b.label), "first" if first else "second",
        (tuple(v_lo.tolist()), tuple(v_hi.tolist())),
        float(jump_alpha), float(jump_chiral), float(scale_alpha), float(scale_chiral),
    )


def _chiral(cell: CellRecord) -> float:
    return cell.currents.i_chiral if cell.currents is not None else 0.0


def _frontier_point(template: ModelParams, ratio: float, dg: float,
                    options: MinimizeOptions | None) -> tuple[float, str]:
    p = template.with_ratio(ratio)
    gc = locate_critical_coupling(p)
    cell = evaluate_cell(p.replace(g1=gc + dg), options)
    return gc, cell.label


def _branch_crossing(msr: list[tuple[float, float]], fsr: list[tuple[float, float]], degree: int) -> float:
    msr = sorted(msr)[-(degree + 1):]
    fsr = sorted(fsr)[: degree + 1]
    if len(msr) < degree + 1 or len(fsr) < degree + 1:
        raise NoIntersection("not enough frontier points on one of the branches")
    cm = np.polyfit(*zip(*msr), degree)
    cf = np.polyfit(*zip(*fsr), degree)
    lo, hi = msr[0][0], fsr[-1][0]

    def diff(r):
        return np.polyval(cm, r) - np.polyval(cf, r)

    if diff(lo) * diff(hi) > 0:
        raise NoIntersection(f"NP-MSR and NP-FSR fits do not cross in [{lo:.6g}, {hi:.6g}]")
    return float(brentq(diff, lo, hi, xtol=1e-14))


def locate_triple_point(template: ModelParams, ratio_range: tuple[float, float] = (0.02, 1.0),
                        n_coarse: int = 25, dg: float = 1e-4, refine_halfwidth: float = 0.01,
                        options: MinimizeOptions | None = None) -> float:
    """Ratio J1/J2 where the NP-MSR and NP-FSR frontier branches meet.

    Frontier couplings come from gap-closure bisection; each point is
    assigned to a branch by the phase found just above it. Cubic fits of the
    branches are intersected, then the fit is redone on points clustered
    around the first estimate.
    """
    if abs(template.theta - math.pi / 2) > 1e-12:
        raise ValueError("triple point search expects theta = pi/2")

    def sample(ratios):
        msr, fsr = [], []
        for r in ratios:
            gc, label = _frontier_point(template, float(r), dg, options)
            if label == "MSR":
                msr.append((float(r), gc))
            elif label == "FSR":
                fsr.append((float(r), gc))
        return msr, fsr

    msr, fsr = sample(np.linspace(*ratio_range, n_coarse))
    if not msr or not fsr:
        raise NoIntersection("frontier does not show both MSR and FSR branches in range")
    if max(r for r, _ in msr) > min(r for r, _ in fsr):
        raise NoIntersection("MSR and FSR frontier points interleave")
    est = _branch_crossing(msr, fsr, degree=min(3, len(msr) - 1, len(fsr) - 1))
    offsets = refine_halfwidth * np.array([-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0])
    msr2, fsr2 = sample(est + offsets)
    try:
        return _branch_crossing(msr + msr2, fsr + fsr2, degree=3)
    except NoIntersection:
        log.warning("refined triple-point fit failed; keeping coarse estimate %.6g", est)
        return est


def current_sweep(template: ModelParams, ratios, thetas, options: MinimizeOptions | None = None,
                  workers: int = 1) -> list[CellRecord]:
    """Mean-field currents along J1/J2 for each flux; rows ordered by (θ, ratio)."""
    out = []
    jobs = [(template.replace(theta=float(th)), [float(r) for r in ratios], options) for th in thetas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(job) for job in jobs]
    for row in rows:
        out.extend(row)
    return out


def _sweep_row(args):
    template, ratios, options = args
    row, prev = [], None
    for i, r in enumerate(ratios):
        warm = [("warm[left]", prev)] if prev is not None else None
        cell = evaluate_cell(template.with_ratio(r), options, warm, (i, 0), (r, template.theta))
        prev = cell.displacements
        row.append(cell)
    return row
