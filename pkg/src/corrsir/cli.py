"""Command-line front end: ``corrsir analyze|validate|sweep``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation gate failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .mgf import CapacityError, DegenerateModelError, MatchingConfig, MatchingError
from .metrics import fit_report, ksd
from .montecarlo import SimConfig, SimulationError, empirical_cdf, simulate
from .numerics import ConvergenceError, FactorizationError
from .pipeline import Analysis, analyze_scene
from .scenario import (
    NetworkScene, PathLossModel, SceneError, UMA_PATHLOSS, hex_uma_scene, load_layout,
    scene_from_layout,
)
from .sir_se import SirDistribution, se_of_sir_db, sir_cdf, sir_db_pdf

log = logging.getLogger("corrsir")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_GATE = 0, 1, 2, 3
GRID_POINTS = 2001


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scene_source: dict[str, Any]
    matching: MatchingConfig = field(default_factory=MatchingConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    alpha: float = 0.1
    se_unit: str = "bits"
    output_dir: Path = Path(".")
    ksd_gate: float = 0.03
    bins: int = 200
    base_dir: Path = Path(".")

    def scene(self, **overrides) -> NetworkScene:
        src = dict(self.scene_source)
        if src.get("kind") == "hex-uma":
            params = {k: v for k, v in src.items() if k != "kind"}
            params.update(overrides)
            return hex_uma_scene(**params)
        layout = json.loads(json.dumps(src["layout"]))
        if "p_default" in overrides:
            for ap in layout["aps"]:
                ap["p"] = overrides["p_default"]
        if overrides.keys() - {"p_default"}:
            raise ConfigError(f"overrides {sorted(overrides)} need the builtin hex-uma scene")
        return scene_from_layout(layout)


def _section(data: dict, key: str) -> dict:
    sec = data.get(key, {}) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{key}' must be a mapping")
    return sec


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = load_layout(path)
    except SceneError as exc:
        raise ConfigError(str(exc)) from exc
    base = path.parent

    if "hex_uma" in data:
        h = _section(data, "hex_uma")
        ue = h.get("ue_polar", {"r_m": 25.0, "theta_deg": 0.0})
        pl = h.get("pathloss")
        src: dict[str, Any] = {
            "kind": "hex-uma",
            "isd_m": float(h.get("isd_m", 500.0)),
            "ue_polar": (float(ue.get("r_m", 25.0)), math.radians(float(ue.get("theta_deg", 0.0)))),
            "p_default": float(h.get("p_default", 0.5)),
            "shadow_sigma_db": float(h.get("shadow_sigma_db", 6.0)),
            "shadow_corr": float(h.get("shadow_corr", 0.5)),
            "m": float(h.get("m", 1.0)),
            "pathloss": PathLossModel(**pl) if pl else UMA_PATHLOSS,
        }
    elif "layout_file" in data:
        lpath = Path(data["layout_file"])
        if not lpath.is_absolute():
            lpath = base / lpath
        if not lpath.is_file():
            raise ConfigError(f"layout file not found: {lpath}")
        src = {"kind": "layout", "layout": load_layout(lpath)}
    elif "aps" in data:
        src = {"kind": "layout", "layout": {k: v for k, v in data.items()
                                            if k not in ("matching", "sim", "validate")}}
    else:
        raise ConfigError("config needs a 'hex_uma' section, a 'layout_file' or inline 'aps'")

    m = _section(data, "matching")
    if "s_points" in m:
        m["s_points"] = tuple(float(v) for v in m["s_points"])
    s = _section(data, "sim")
    v = _section(data, "validate")
    try:
        cfg = RunConfig(
            scene_source=src,
            matching=MatchingConfig(**m),
            sim=SimConfig(**s),
            alpha=float(data.get("alpha", 0.1)),
            se_unit=str(data.get("se_unit", "bits")),
            ksd_gate=float(v.get("ksd_gate", 0.03)),
            bins=int(v.get("bins", 200)),
            base_dir=base,
        )
    except TypeError as exc:
        raise ConfigError(f"unknown configuration key: {exc}") from exc
    return cfg


def _apply_cli(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    matching, sim = cfg.matching, cfg.sim
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
        matching = replace(matching, seed=args.seed)
    if args.samples is not None:
        sim = replace(sim, n_samples=args.samples)
    if args.quad_order is not None:
        matching = replace(matching, quad_order=args.quad_order)
    if args.mode is not None:
        sim = replace(sim, mode=args.mode)
    cfg = replace(cfg, matching=matching, sim=sim, output_dir=Path(args.out))
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.unit is not None:
        cfg.se_unit = args.unit
    if getattr(args, "ksd_gate", None) is not None:
        cfg.ksd_gate = args.ksd_gate
    if not 0.0 < cfg.alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {cfg.alpha}")
    if cfg.se_unit not in ("bits", "nats"):
        raise ConfigError(f"unit must be bits or nats, got {cfg.se_unit}")
    return cfg


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _strictly_increasing(x: np.ndarray, *cols: np.ndarray):
    keep = np.concatenate([[True], np.diff(x) > 0])
    return (x[keep],) + tuple(c[keep] for c in cols)


def sir_grid(dist: SirDistribution) -> tuple[np.ndarray, np.ndarray]:
    if dist.sigma_db == 0.0:
        x = np.array([dist.mu_db - 1.0, dist.mu_db, dist.mu_db + 1.0])
        return x, np.array([0.0, 1.0, 1.0])
    x = np.linspace(dist.mu_db - 5.0 * dist.sigma_db, dist.mu_db + 5.0 * dist.sigma_db, GRID_POINTS)
    return x, sir_cdf(dist, x)


def _analysis_payload(cfg: RunConfig, scene: NetworkScene, a: Analysis) -> dict:
    out = a.to_dict()
    out["scene_digest"] = scene.digest()
    out["config"] = {"quad_order": cfg.matching.quad_order, "s_points": list(cfg.matching.s_points),
                     "alpha": cfg.alpha, "unit": cfg.se_unit}
    out["version"] = __version__
    return out


def cmd_analyze(cfg: RunConfig, mu_offset_db: float = 0.0) -> tuple[int, Analysis]:
    scene = cfg.scene()
    a = analyze_scene(scene, cfg.matching, cfg.alpha, cfg.se_unit, mu_offset_db)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "analysis.json", _analysis_payload(cfg, scene, a))
    x, f = sir_grid(a.sir)
    _write_csv(out / "sir_cdf.csv", ["sir_db", "cdf"], zip(x, f))
    se, fse = _strictly_increasing(np.asarray(se_of_sir_db(x, cfg.se_unit)), f)
    _write_csv(out / "se_cdf.csv", [f"se_{cfg.se_unit}", "cdf"], zip(se, fse))
    if a.degenerate:
        log.warning("SIR is deterministic (point mass at %.3f dB)", a.sir.mu_db)
    return EXIT_OK, a


def cmd_validate(cfg: RunConfig, mu_offset_db: float = 0.0) -> tuple[int, dict]:
    _, a = cmd_analyze(cfg, mu_offset_db)
    scene = cfg.scene()
    samples = simulate(scene, cfg.sim)
    emp = empirical_cdf(samples)
    cdf = lambda x: sir_cdf(a.sir, x)  # noqa: E731
    if a.degenerate:
        fit = {"kld": None, "ksd": ksd(emp, cdf), "bins": cfg.bins, "support": None}
    else:
        fit = fit_report(emp, cdf, lambda x: sir_db_pdf(a.sir, x), bins=cfg.bins).to_dict()
    se = se_of_sir_db(emp.values, cfg.se_unit)
    passed = fit["ksd"] <= cfg.ksd_gate
    payload = {
        "fit": fit,
        "ksd_gate": cfg.ksd_gate,
        "passed": bool(passed),
        "n_samples": samples.n,
        "redraws": samples.redraws,
        "empty_first_draws": samples.empty_first_draws,
        "seed": cfg.sim.seed,
        "mode": cfg.sim.mode,
        "scene_digest": scene.digest(),
        "analytical": {"mu_sir_db": a.sir.mu_db, "sigma_sir_db": a.sir.sigma_db,
                       "mean_se": a.kpis.mean_se, "outage_se": a.kpis.outage_se},
        "simulated": {"mean_sir_db": emp.mean(), "std_sir_db": float(emp.values.std()),
                      "mean_se": float(se.mean()), "outage_se": float(np.quantile(se, cfg.alpha))},
        "unit": cfg.se_unit,
        "alpha": cfg.alpha,
    }
    out = cfg.output_dir
    _write_json(out / "validation.json", payload)
    lo, hi = emp.quantile([0.0005, 0.9995])
    grid = np.linspace(lo, hi, GRID_POINTS) if hi > lo else np.array([lo])
    _write_csv(out / "overlay.csv", ["sir_db", "empirical_cdf", "analytical_cdf"],
               zip(grid, emp(grid), sir_cdf(a.sir, grid)))
    return (EXIT_OK if passed else EXIT_GATE), payload


def _strictly_decreasing(v) -> bool:
    v = np.asarray(v, dtype=float)
    return bool(np.all(np.diff(v) < 0))


def cmd_sweep(cfg: RunConfig, axis: str, values: list[float], with_sim: bool = False) -> tuple[int, dict]:
    if not values:
        raise ConfigError("sweep needs at least one value")
    vals = np.unique(np.asarray(values, dtype=float))
    rows = []
    for v in vals:
        if axis == "ue_distance":
            if cfg.scene_source.get("kind") != "hex-uma":
                raise ConfigError("ue_distance sweeps need the builtin hex-uma scene")
            theta = cfg.scene_source["ue_polar"][1]
            scene = cfg.scene(ue_polar=(float(v), theta))
        elif axis == "activity":
            scene = cfg.scene(p_default=float(v))
        else:
            raise ConfigError(f"unknown sweep axis {axis!r}")
        a = analyze_scene(scene, cfg.matching, cfg.alpha, cfg.se_unit)
        row = {"value": float(v), "mu_sir_db": a.sir.mu_db, "sigma_sir_db": a.sir.sigma_db,
               "mean_se": a.kpis.mean_se, "outage_se": a.kpis.outage_se}
        if with_sim:
            s = simulate(scene, cfg.sim)
            se = se_of_sir_db(s.sir_db, cfg.se_unit)
            row.update(sim_mean_sir_db=float(s.sir_db.mean()), sim_mean_se=float(se.mean()),
                       sim_outage_se=float(np.quantile(se, cfg.alpha)))
        rows.append(row)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    header = [axis] + [k for k in rows[0] if k != "value"]
    _write_csv(out / "sweep.csv", header, ([r["value"]] + [r[k] for k in header[1:]] for r in rows))
    trends = {
        "mean_se_strictly_decreasing": _strictly_decreasing([r["mean_se"] for r in rows]),
        "outage_se_strictly_decreasing": _strictly_decreasing([r["outage_se"] for r in rows]),
        "mu_sir_strictly_decreasing": _strictly_decreasing([r["mu_sir_db"] for r in rows]),
    }
    payload = {"axis": axis, "rows": rows, "trends": trends, "unit": cfg.se_unit, "alpha": cfg.alpha}
    _write_json(out / "sweep.json", payload)
    for k, ok in trends.items():
        log.info("%s: %s", k, ok)
    return EXIT_OK, payload


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrsir", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML/JSON run configuration")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--quad-order", type=int, help="Gauss-Hermite order for MGF matching")
    common.add_argument("--alpha", type=float, help="outage percentile (default 0.1)")
    common.add_argument("--unit", choices=("bits", "nats"))
    common.add_argument("--mode", choices=("composite", "reduced"), help="Monte Carlo channel mode")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("analyze", parents=[common], help="analytical SIR/SE distribution")
    p_val = sub.add_parser("validate", parents=[common], help="compare analysis with Monte Carlo")
    p_val.add_argument("--ksd-gate", type=float)
    p_val.add_argument("--debug-mu-offset", type=float, default=0.0, help=argparse.SUPPRESS)
    p_sw = sub.add_parser("sweep", parents=[common], help="sweep UE distance or activity")
    p_sw.add_argument("--axis", required=True, choices=("ue_distance", "activity"))
    p_sw.add_argument("--values", required=True,
                      help="comma-separated values, e.g. 25,75,125,175,225")
    p_sw.add_argument("--simulate", action="store_true", help="add Monte Carlo columns")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _apply_cli(load_run_config(args.config), args)
        if args.command == "analyze":
            code, _ = cmd_analyze(cfg)
        elif args.command == "validate":
            code, payload = cmd_validate(cfg, args.debug_mu_offset)
            print(f"KSD={payload['fit']['ksd']:.4g} gate={cfg.ksd_gate} "
                  f"{'PASS' if payload['passed'] else 'FAIL'}")
        else:
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --values: {exc}") from exc
            code, payload = cmd_sweep(cfg, args.axis, values, args.simulate)
            for k, ok in payload["trends"].items():
                print(f"{k}: {ok}")
        return code
    except (ConfigError, SceneError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MatchingError, ConvergenceError, CapacityError, FactorizationError,
            DegenerateModelError, SimulationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
