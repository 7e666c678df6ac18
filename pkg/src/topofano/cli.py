"""Command-line front end.

Exit codes: 0 ok, 2 usage / invalid parameters, 3 calibration failure,
4 I/O failure, 5 oracle check failed.  TOPOFANO_THREADS sets the number of
worker threads used by sweeps.
"""
from __future__ import annotations

import argparse
import copy
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import em, oracle, quantization, spectrum
from .errors import CalibrationError, OracleFailure, ParameterError, SingularityError, TopoFanoError
from .model import (
    FINE_STRUCTURE,
    Convention,
    Environment,
    HybridConfig,
    Reservoirs,
    calibrate_material,
    preset_paper,
)

log = logging.getLogger("topofano")

EXIT_OK, EXIT_USAGE, EXIT_CALIBRATION, EXIT_IO, EXIT_ORACLE = 0, 2, 3, 4, 5

FIG_DISTANCES = [7.0, 8.0, 9.0, 10.0]
FIG_ALPHA_MULTIPLES = [1.0, 11.0, 95.0]
FIG_SWEEP_OMEGA_A = 2.7


class UsageError(Exception):
    pass


# -- configuration -------------------------------------------------------------

def _merge_strict(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ParameterError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge_strict(base[key], value, where)
        else:
            out[key] = value
    return out


def load_run_config(args: argparse.Namespace, omega_a_default: float | None = None) -> tuple[HybridConfig, Reservoirs]:
    """Preset, then the --config JSON document, then command-line overrides; validated at the end."""
    cfg, res = preset_paper()
    doc = {"config": cfg.to_dict(), "reservoirs": res.to_dict()}
    user: dict = {}
    if getattr(args, "config", None):
        try:
            user = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(user, dict):
            raise ParameterError("config document must be a JSON object")
        doc = _merge_strict(doc, user)
    c, r = doc["config"], doc["reservoirs"]
    if omega_a_default is not None and "omega_a_eV" not in user.get("config", {}).get("qd", {}):
        c["qd"]["omega_a_eV"] = omega_a_default
    if getattr(args, "omega_a", None) is not None:
        c["qd"]["omega_a_eV"] = args.omega_a
    if getattr(args, "r", None) is not None:
        c["r_nm"] = args.r
    if getattr(args, "orientation", None) is not None:
        c["orientation"] = args.orientation
    if getattr(args, "alpha_tilde", None) is not None:
        c["ti"]["alpha_tilde"] = args.alpha_tilde
    return HybridConfig.from_dict(c), Reservoirs.from_dict(r)


def _parse_floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc
    if not vals:
        raise UsageError("empty value list")
    return vals


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"expected lo:hi:n, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if not (hi > lo and n >= 2):
        raise UsageError(f"invalid range {text!r}")
    return np.linspace(lo, hi, n)


def _parse_grid_spec(text: str) -> list[tuple[float, float, int]]:
    axes = text.split(",")
    if len(axes) != 3:
        raise UsageError("grid spec must be x0:x1:nx,y0:y1:ny,z0:z1:nz")
    out = []
    for ax in axes:
        p = ax.split(":")
        if len(p) != 3:
            raise UsageError(f"bad axis spec {ax!r}")
        out.append((float(p[0]), float(p[1]), int(p[2])))
        if out[-1][2] < 1:
            raise UsageError("axis point count must be >= 1")
    return out


# -- output helpers ------------------------------------------------------------

def _write_text(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _series_csv(series: spectrum.SpectrumSeries) -> str:
    buf = io.StringIO()
    series.to_csv(buf)
    return buf.getvalue()


GNUPLOT_SPECTRUM = """set xlabel "hbar omega (eV)"
set ylabel "sigma (normalized)"
set datafile separator ","
set key autotitle columnhead
plot {plots}
"""

GNUPLOT_MAP = """set xlabel "hbar omega (eV)"
set ylabel "g (eV)"
set datafile separator ","
set view map
set pm3d map
splot "{csv}" using 1:2:3 with pm3d notitle
"""


def gnuplot_lines(files: Sequence[str], titles: Sequence[str]) -> str:
    plots = ", \\\n     ".join(f'"{f}" using 1:2 with lines title "{t}"' for f, t in zip(files, titles))
    return GNUPLOT_SPECTRUM.format(plots=plots)


# -- subcommands ---------------------------------------------------------------

def cmd_calibrate(args: argparse.Namespace) -> int:
    alpha = args.alpha_tilde if args.alpha_tilde is not None else args.alpha_multiple * FINE_STRUCTURE
    env = Environment(args.epsilon2)
    ti = calibrate_material(args.epsilon1_static, args.hbar_omega, env, alpha, Convention(args.convention))
    out = ti.to_dict()
    out["hbar_Omega_eV"] = em.mode_energy(ti, env)
    out["convention"] = Convention(args.convention).value
    _write_text(args.out, _json(out))
    return EXIT_OK


def cmd_couple(args: argparse.Namespace) -> int:
    cfg, _ = load_run_config(args)
    _write_text(args.out, _json(quantization.coupling_report(cfg)))
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    cfg, res = load_run_config(args)
    grid = _parse_range(args.grid) if args.grid else None
    series = spectrum.spectrum_series(grid, cfg, res, g_override=args.g)
    feats = spectrum.find_features(series)
    report = {"g_eV": series.params["g_eV"], "hbar_Omega_eV": cfg.hbar_Omega, **feats.to_dict()}
    if args.format == "json":
        doc = {"omega_eV": series.omega_grid.tolist(), "sigma_norm": series.sigma.tolist(), "features": report}
        _write_text(args.out, _json(doc))
        return EXIT_OK
    _write_text(args.out, _series_csv(series))
    if args.out is not None:
        _write_text(args.out.with_suffix(".features.json"), _json(report))
        if args.gnuplot:
            _write_text(args.out.with_suffix(".gp"), gnuplot_lines([args.out.name], ["sigma"]))
    elif not args.quiet:
        sys.stderr.write(_json(report))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    out_dir: Path = args.out_dir
    kind = args.kind
    if kind == "coupling":
        cfg, res = load_run_config(args)
        g_grid = np.array(_parse_floats(args.values)) if args.values is not None else np.linspace(0.0, 0.15, 61)
        Om = cfg.hbar_Omega
        w = _parse_range(args.grid) if args.grid else np.linspace(Om - 0.15, Om + 0.15, 2000)
        M = spectrum.sweep_coupling(g_grid, w, cfg, res, normalize=args.normalize)
        out_dir.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        spectrum.write_map_csv(buf, g_grid, w, M)
        (out_dir / "coupling_map.csv").write_text(buf.getvalue())
        index = {"kind": kind, "files": ["coupling_map.csv"], "g_eV": g_grid.tolist(),
                 "normalize": args.normalize, "hbar_omega_a_eV": cfg.qd.omega_a}
        if args.gnuplot:
            (out_dir / "coupling_map.gp").write_text(GNUPLOT_MAP.format(csv="coupling_map.csv"))
        (out_dir / "index.json").write_text(_json(index))
        return EXIT_OK

    cfg, res = load_run_config(args, omega_a_default=None if args.omega_a is not None else FIG_SWEEP_OMEGA_A)
    grid = _parse_range(args.grid) if args.grid else None
    if kind == "distance":
        values = _parse_floats(args.values) if args.values is not None else FIG_DISTANCES
        points = spectrum.sweep_distance(values, cfg, res, grid)
        name = lambda v: f"distance_r{v:g}nm.csv"
        trend = spectrum.prominence_trend(points)
    else:
        mult = _parse_floats(args.values) if args.values is not None else FIG_ALPHA_MULTIPLES
        points = spectrum.sweep_alpha([m * FINE_STRUCTURE for m in mult], cfg, res, grid)
        name = lambda v: f"alpha_{v / FINE_STRUCTURE:g}alpha.csv"
        trend = {"hbar_Omega_eV": [p.hbar_Omega for p in points]}
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for p in points:
        fname = name(p.value)
        (out_dir / fname).write_text(_series_csv(p.series))
        entries.append({"value": p.value, "file": fname, "g_eV": p.g, "hbar_Omega_eV": p.hbar_Omega,
                        "features": p.features.to_dict()})
    index = {"kind": kind, "orientation": cfg.orientation.value, "hbar_omega_a_eV": cfg.qd.omega_a,
             "entries": entries, "trend": trend}
    (out_dir / "index.json").write_text(_json(index))
    if args.gnuplot:
        titles = [f"r = {e['value']:g} nm" if kind == "distance" else f"alpha~ = {e['value'] / FINE_STRUCTURE:g} alpha"
                  for e in entries]
        (out_dir / f"{kind}.gp").write_text(gnuplot_lines([e["file"] for e in entries], titles))
    return EXIT_OK


def cmd_fields(args: argparse.Namespace) -> int:
    cfg, _ = load_run_config(args)
    pts = em.grid_points(_parse_grid_spec(args.grid_spec))
    E, B = em.field_map(pts, cfg.ti, cfg.env, cfg.R, args.axis, omega=args.omega, t=args.time)
    buf = io.StringIO()
    em.write_field_csv(buf, pts, E, B)
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace) -> int:
    cfg, res = load_run_config(args)
    band = _parse_floats(args.band)
    if len(band) != 2:
        raise UsageError("--band takes lo,hi")
    g = quantization.coupling_strength(cfg).g
    report = oracle.oracle_check(cfg, res, g, N=args.n_modes, epsilon=args.epsilon, band=(band[0], band[1]),
                                 threshold=args.threshold, points=args.points,
                                 matched_broadening=not args.real_axis)
    _write_text(args.out, _json(report))
    return EXIT_OK if report["pass"] else EXIT_ORACLE


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON parameter document (strict keys)")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--format", choices=["csv", "json"], default="csv")

    system = argparse.ArgumentParser(add_help=False)
    system.add_argument("--omega-a", type=float, help="QD transition energy (eV)")
    system.add_argument("--r", type=float, help="TI-QD center distance (nm)")
    system.add_argument("--orientation", choices=["LC", "TC"])
    system.add_argument("--alpha-tilde", type=float, help="magnetoelectric polarizability (absolute)")

    p = argparse.ArgumentParser(prog="topofano", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", parents=[common], help="fit omega_R, omega_e to eps1(0) and hbar*Omega")
    c.add_argument("--epsilon1-static", type=float, default=4.0)
    c.add_argument("--hbar-omega", type=float, default=2.0)
    c.add_argument("--epsilon2", type=float, default=1.5)
    c.add_argument("--alpha-tilde", type=float)
    c.add_argument("--alpha-multiple", type=float, default=1.0)
    c.add_argument("--convention", choices=[v.value for v in Convention], default=Convention.AS_PRINTED.value)
    c.add_argument("--out", type=Path)
    c.set_defaults(func=cmd_calibrate)

    c = sub.add_parser("couple", parents=[common, system], help="coupling strength and mode volume")
    c.add_argument("--out", type=Path)
    c.set_defaults(func=cmd_couple)

    c = sub.add_parser("spectrum", parents=[common, system], help="absorption spectrum and Fano features")
    c.add_argument("--grid", help="lo:hi:n in eV (default: adaptive)")
    c.add_argument("--g", type=float, help="override the coupling strength (eV)")
    c.add_argument("--out", type=Path)
    c.add_argument("--gnuplot", action="store_true")
    c.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("sweep", parents=[common, system], help="distance, alpha or coupling sweeps")
    c.add_argument("kind", choices=["distance", "alpha", "coupling"])
    c.add_argument("--values", help="comma list: r (nm), alpha multiples, or g (eV)")
    c.add_argument("--grid", help="lo:hi:n in eV")
    c.add_argument("--normalize", choices=["column", "global"], default="column")
    c.add_argument("--out-dir", type=Path, default=Path("."))
    c.add_argument("--gnuplot", action="store_true")
    c.set_defaults(func=cmd_sweep)

    c = sub.add_parser("fields", parents=[common, system], help="classical field map CSV")
    c.add_argument("--grid-spec", required=True, help="x0:x1:nx,y0:y1:ny,z0:z1:nz in nm")
    when = c.add_mutually_exclusive_group(required=True)
    when.add_argument("--omega", type=float, help="frequency-domain map at this energy (eV)")
    when.add_argument("--time", type=float, help="impulse response at this time (fs)")
    c.add_argument("--axis", choices=["x", "y", "z"], default="z")
    c.add_argument("--out", type=Path)
    c.set_defaults(func=cmd_fields)

    c = sub.add_parser("oracle-check", parents=[common, system], help="closed form vs discretized bath")
    c.add_argument("--n-modes", type=int, default=20_000)
    c.add_argument("--epsilon", type=float, default=1e-5)
    c.add_argument("--band", default="1.5,2.5")
    c.add_argument("--threshold", type=float, default=1e-3)
    c.add_argument("--points", type=int, default=200)
    c.add_argument("--real-axis", action="store_true", help="compare against the unbroadened closed form")
    c.add_argument("--out", type=Path)
    c.set_defaults(func=cmd_oracle_check)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    if args.quiet:
        import warnings
        warnings.simplefilter("ignore")
    try:
        return args.func(args)
    except CalibrationError as exc:
        log.error("calibration failed: %s", exc)
        return EXIT_CALIBRATION
    except OracleFailure as exc:
        log.error("oracle failure: %s", exc)
        return EXIT_ORACLE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (UsageError, ParameterError, SingularityError, TopoFanoError, ValueError, KeyError) as exc:
        log.error("error: %s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
