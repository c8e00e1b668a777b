"""Command-line front end: ``rabizz <command> --config FILE [--out DIR]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 resource limit (Fock-space dimension cap, unwritable output).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import criticality, ed, scan
from .bogoliubov import diagonalize
from .config import RunConfig, load, resolve
from .errors import ConfigError, DimensionCap, RabiZigzagError
from .meanfield import MinimizeOptions
from .model import analytic_bands, critical_coupling, momentum_form, momentum_grid, triple_point

log = logging.getLogger("rabizigzag")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_RESOURCE = 0, 2, 3, 4
MAX_ERROR_FRACTION = 0.01


class NumericalFailure(RabiZigzagError):
    """A command finished but its results fail the numerical health check."""

    def __init__(self, message: str, files: dict | None = None):
        super().__init__(message)
        self.files = files or {}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _options(cfg: RunConfig) -> MinimizeOptions:
    return MinimizeOptions(tol_grad=cfg.get("tol_grad"), n_random=cfg["n_random"], rng_seed=cfg["seed"])


def cmd_bands(cfg: RunConfig) -> dict[str, str]:
    p = cfg.model()
    exact = abs(p.theta - math.pi / 2) <= 1e-12
    header = ["k", "eps_plus", "eps_minus", "freq_plus", "freq_minus"]
    if exact:
        header += ["analytic_plus", "analytic_minus", "deviation"]
    rows = []
    for k in momentum_grid(p.n_cavities):
        spec = diagonalize(momentum_form(p, k))
        if not spec.stable:
            raise NumericalFailure(f"momentum block at k={k:.6g} is dynamically unstable")
        freq = spec.epsilons[:2]
        row = [k, freq[0] / 2, freq[1] / 2, freq[0], freq[1]]
        if exact:
            plus, minus = analytic_bands(p, k)
            dev = max(abs(freq[0] / 2 - plus), abs(freq[1] / 2 - minus))
            row += [plus, minus, dev]
        rows.append(row)
    return {"bands.csv": _csv(header, rows)}


def _grid(cfg: RunConfig) -> scan.GridSpec:
    cfg.require("axis1", "axis1_min", "axis1_max", "axis1_n", "axis2", "axis2_min", "axis2_max", "axis2_n")
    try:
        axes = [scan.Axis(cfg[f"axis{i}"], cfg[f"axis{i}_min"], cfg[f"axis{i}_max"], cfg[f"axis{i}_n"])
                for i in (1, 2)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    placeholder = {}
    for ax in axes:
        if ax.name == "j1_over_j2":
            placeholder.update(j1_over_j2=ax.lo, j1=None)
        else:
            placeholder[ax.name] = ax.lo
    try:
        return scan.GridSpec(axes[0], axes[1], cfg.model(**placeholder))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_scan(cfg: RunConfig) -> dict[str, str]:
    diagram = scan.scan(_grid(cfg), _options(cfg), workers=cfg["workers"], refine=cfg["refine"])
    out = {"phase_diagram.csv": diagram.to_csv(), "phase_diagram.json": diagram.to_json() + "\n"}
    frac = diagram.error_fraction()
    if frac > MAX_ERROR_FRACTION:
        raise NumericalFailure(f"{100 * frac:.1f}% of cells failed", out)
    return out


def cmd_currents(cfg: RunConfig) -> dict[str, str]:
    cfg.require("g1")
    template = cfg.model(theta=0.0, j1_over_j2=cfg["ratio_min"], j1=None)
    ratios = np.linspace(cfg["ratio_min"], cfg["ratio_max"], cfg["ratio_n"])
    cells = scan.current_sweep(template, ratios, cfg["thetas"], _options(cfg), workers=cfg["workers"])
    rows = []
    for c in cells:
        cur = c.currents
        vals = [cur.i_odd, cur.i_even, cur.i_chiral, cur.i_total] if cur else [math.nan] * 4
        rows.append([c.values[1], c.values[0], c.label, *vals, c.energy])
    out = {"currents.csv": _csv(["theta", "j1_over_j2", "label", "I_O", "I_E", "I_C", "I_T", "E_g"], rows)}
    frac = sum(c.error is not None for c in cells) / len(cells)
    if frac > MAX_ERROR_FRACTION:
        raise NumericalFailure(f"{100 * frac:.1f}% of sweep points failed", out)
    return out


def cmd_exponents(cfg: RunConfig) -> dict[str, str]:
    p = cfg.model(g1=cfg.get("g1", 0.0))
    sides = ("below", "above") if cfg["side"] == "both" else (cfg["side"],)
    if any(s not in ("below", "above") for s in sides):
        raise ConfigError("side must be below, above or both")
    window = (cfg["window_min"], cfg["window_max"])
    g_crit, spec_c = criticality.spectrum_at_criticality(p)
    n_close = criticality.closing_modes(spec_c, cfg["closing_threshold"])
    gc = criticality.locate_critical_coupling(p)
    opts = _options(cfg)
    rows, fits = [], []
    for side in sides:
        for mode in cfg["modes"]:
            fit = criticality.fit_exponent(p, side, window, mode, cfg["n_points"], opts, g1c=gc)
            rows.append([side, mode, fit.g1c_est, fit.gamma, fit.residual, window[0], window[1], len(fit.distances)])
            fits.append({"side": side, "mode_index": mode, "gamma": fit.gamma, "residual": fit.residual,
                         "g1c": fit.g1c_est, "window": list(window),
                         "distances": fit.distances, "energies": fit.energies})
    doc = {"closing_modes": n_close, "closing_threshold": cfg["closing_threshold"],
           "g1c": gc, "g1c_stable_edge": g_crit, "lowest_at_g1c": spec_c.ascending()[:6], "fits": fits}
    header = ["side", "mode_index", "g1c", "gamma", "residual", "window_min", "window_max", "n_used"]
    return {"exponents.csv": _csv(header, rows), "exponents.json": _json(doc)}


def cmd_ed(cfg: RunConfig) -> dict[str, bytes | str]:
    cfg.require("n_max")
    p = cfg.model()
    fock = ed.FockConfig(cfg["n_max"], cfg["solver"], cfg["ed_tol"], cfg["dim_cap"])
    report, vec = ed.ground_state(p, fock, return_vector=True)
    cutoffs = cfg.get("n_max_list") or list(range(cfg["n_max"] + 1))
    table = ed.cutoff_sweep(p, fock, cutoffs)
    rows = [[r.n_max, r.dimension, r.energy, r.delta, r.max_photons, r.converged] for r in table]
    monotone = all(r.delta is None or r.delta <= 1e-9 * max(1.0, abs(r.energy)) for r in table)
    doc = json.loads(report.to_json())
    doc["variational_monotone"] = monotone
    out: dict[str, bytes | str] = {
        "ed_report.json": _json(doc),
        "ed_sweep.csv": _csv(["n_max", "dimension", "energy", "delta", "max_photons", "converged"], rows),
    }
    if cfg["dump_vector"]:
        buf = io.BytesIO()
        ed.write_vector(buf, vec, p.n_cavities, fock.n_max)
        out["ground_vector.bin"] = buf.getvalue()
    return out


def cmd_triple_point(cfg: RunConfig) -> dict[str, str]:
    theta = cfg.get("theta", math.pi / 2)
    if abs(theta - math.pi / 2) > 1e-12:
        raise ConfigError("triple-point requires theta = pi/2")
    p = cfg.model(theta=math.pi / 2, g1=cfg.get("g1", 0.0), j1_over_j2=cfg["ratio_min"], j1=None)
    r = scan.locate_triple_point(p, (max(cfg["ratio_min"], 1e-6), cfg["ratio_max"]),
                                 n_coarse=cfg["n_coarse"], options=_options(cfg))
    q = p.with_ratio(r)
    doc = {"ratio": r, "closed_form": triple_point(p),
           "g1c_k0": critical_coupling(q, 0.0), "g1c_k_soft": critical_coupling(q, 2 * math.pi / p.n_cavities)}
    return {"triple_point.json": _json(doc)}


COMMANDS = {
    "bands": cmd_bands,
    "scan": cmd_scan,
    "currents": cmd_currents,
    "exponents": cmd_exponents,
    "ed": cmd_ed,
    "triple-point": cmd_triple_point,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rabizz", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="key = value configuration file")
        sp.add_argument("--out", help="output directory (overrides the 'out' key)")
        sp.add_argument("--workers", type=int, help="worker processes for grid/sweep points")
        sp.add_argument("--seed", type=int, help="random seed for the multi-start minimizer")
    return parser


def _write(out_dir: Path, files: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        path = out_dir / name
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            path.write_text(content, encoding="utf-8", newline="\n")


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        flags = {"out": args.out, "workers": args.workers, "seed": args.seed}
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg = resolve(args.command, load(args.config), flags)
        if cfg["workers"] < 1:
            raise ConfigError("workers must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(cfg["out"])
    try:
        _write(out_dir, {"resolved.conf": cfg.echo()})
        files = COMMANDS[args.command](cfg)
        _write(out_dir, files)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DimensionCap, OSError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalFailure as exc:
        _write(out_dir, exc.files)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RabiZigzagError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
