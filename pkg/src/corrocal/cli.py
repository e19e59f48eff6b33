"""Command-line front end.

Every command reads an optional JSON run configuration; command-line flags
override it. Output files carry the tool version, a hash of the resolved
configuration and the seed, and contain no timestamps, so identical inputs
give byte-identical outputs.

Exit codes: 0 success, 1 I/O or file-format error, 2 domain or
configuration error, 3 numerical failure (including a failed sanity check).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__, bayes, fixtures, ingest, nn, predict, profile, sensitivity, temperature
from .errors import (
    BracketError,
    ConfigError,
    DataError,
    DegenerateError,
    DivergenceError,
    DomainError,
    FitError,
    FormatError,
    LinAlgError,
)
from .model import CriticalContent, GehlenParameters, ModelHyperparameters, depth_of_content

EXIT_OK, EXIT_IO, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3
SEED_ENV = "CORROCAL_SEED"


@dataclass
class RunConfig:
    """Resolved configuration of one command."""

    sensor_csv: str | None = None
    temperature_csv: str | None = None
    events_json: str | None = None
    profile_csvs: list[str] = field(default_factory=list)
    output_dir: str = "."
    concreting_date: str | None = None
    hyperparameters: ModelHyperparameters = field(default_factory=fixtures.hyperparameters)
    critical_content: CriticalContent = field(default_factory=fixtures.critical_content)
    temperature_model: temperature.CosineTemperatureModel = field(default_factory=fixtures.temperature_model)
    bounds: bayes.ParameterBounds = field(default_factory=bayes.ParameterBounds)
    bayes: bayes.BayesOptConfig = field(default_factory=bayes.BayesOptConfig)
    train: nn.TrainConfig = field(default_factory=nn.TrainConfig)
    n_base: int = 8192
    exclusions: dict[str, str] = field(default_factory=fixtures.bridge_exclusions)
    lead_time: float = ingest.DEFAULT_LEAD_TIME
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"paths", "hyperparameters", "critical_content", "temperature_model", "bounds", "bayes", "train",
                 "sensitivity", "exclusions", "lead_time_s", "seed", "concreting_date"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls()
        paths = d.get("paths", {})
        for key in ("sensor_csv", "temperature_csv", "events_json", "output_dir"):
            if key in paths:
                setattr(cfg, key, paths[key])
        cfg.profile_csvs = list(paths.get("profile_csvs", []))
        try:
            if "hyperparameters" in d:
                cfg.hyperparameters = ModelHyperparameters(**d["hyperparameters"])
            if "critical_content" in d:
                cfg.critical_content = CriticalContent(**d["critical_content"])
            if "temperature_model" in d:
                cfg.temperature_model = temperature.CosineTemperatureModel.from_dict(d["temperature_model"])
            if "bounds" in d:
                cfg.bounds = bayes.ParameterBounds.from_dict(d["bounds"])
            if "bayes" in d:
                b = dict(d["bayes"])
                for key in ("local_scales", "elite_scales"):
                    if key in b:
                        b[key] = tuple(b[key])
                cfg.bayes = bayes.BayesOptConfig(**b)
            if "train" in d:
                cfg.train = nn.TrainConfig(**d["train"])
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        cfg.n_base = int(d.get("sensitivity", {}).get("n_base", cfg.n_base))
        if "exclusions" in d:
            ex = d["exclusions"]
            cfg.exclusions = dict(ex) if isinstance(ex, dict) else {w: "excluded by configuration" for w in ex}
        cfg.lead_time = float(d.get("lead_time_s", cfg.lead_time))
        cfg.seed = int(d.get("seed", cfg.seed))
        cfg.concreting_date = d.get("concreting_date")
        return cfg

    def to_dict(self) -> dict:
        return {
            "paths": {
                "sensor_csv": self.sensor_csv,
                "temperature_csv": self.temperature_csv,
                "events_json": self.events_json,
                "profile_csvs": self.profile_csvs,
            },
            "hyperparameters": self.hyperparameters.__dict__,
            "critical_content": self.critical_content.__dict__,
            "temperature_model": self.temperature_model.to_dict(),
            "bounds": self.bounds.to_dict(),
            "bayes": self.bayes.to_dict(),
            "train": self.train.to_dict(),
            "sensitivity": {"n_base": self.n_base},
            "exclusions": self.exclusions,
            "lead_time_s": self.lead_time,
            "seed": self.seed,
            "concreting_date": self.concreting_date,
        }

    def with_seed(self, seed: int) -> "RunConfig":
        cfg = replace(self)
        cfg.seed = seed
        cfg.bayes = replace(self.bayes, seed=seed)
        cfg.train = replace(self.train, seed=seed)
        return cfg

    def config_hash(self) -> str:
        # the output directory does not change results, so it is left out
        text = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def meta(self, command: str) -> dict:
        return {"tool": "corrocal", "version": __version__, "command": command,
                "config_hash": self.config_hash(), "seed": self.seed}


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        path = Path(args.config)
        cfg = RunConfig.from_dict(json.loads(path.read_text()))
    seed = cfg.seed
    if os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    if args.seed is not None:
        seed = args.seed
    cfg = cfg.with_seed(seed)
    if args.out is not None:
        cfg.output_dir = args.out
    if getattr(args, "temperature_model", None):
        cfg.temperature_model = temperature.CosineTemperatureModel.from_dict(
            json.loads(Path(args.temperature_model).read_text())["temperature_model"]
        )
    return cfg


def _out(cfg: RunConfig, name: str) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _write_json(path: Path, text: str) -> None:
    path.write_text(text + "\n")
    print(f"wrote {path}")


def _csv_with_header(path: Path, writer, meta: dict) -> None:
    """Write a CSV via ``writer(path)`` and prefix one ``#`` metadata line."""
    writer(path)
    body = path.read_text()
    line = "# " + " ".join(f"{k}={meta[k]}" for k in ("tool", "version", "command", "config_hash", "seed"))
    path.write_text(line + "\n" + body)
    print(f"wrote {path}")


# commands ------------------------------------------------------------------


def cmd_fit_temperature(args, cfg: RunConfig) -> int:
    source = args.input or cfg.temperature_csv or str(fixtures.data_path("bridge_temperature.csv"))
    samples = temperature.read_temperature_csv(source)
    model = temperature.fit_cosine(samples, period_guess=args.period_guess)
    t = np.array([s.t for s in samples])
    y = np.array([s.temp for s in samples])
    rmse = float(np.sqrt(np.mean((model.evaluate(t) - y) ** 2)))
    payload = cfg.meta("fit-temperature")
    payload.update({"temperature_model": model.to_dict(), "report": {"n_samples": len(samples), "rmse_K": rmse,
                                                                     "bounds_K": list(model.bounds)}})
    _write_json(_out(cfg, "temperature_model.json"), json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_ingest(args, cfg: RunConfig) -> int:
    source = args.input or cfg.sensor_csv or str(fixtures.data_path("bridge_sensors.csv"))
    origin = datetime.fromisoformat(cfg.concreting_date) if cfg.concreting_date else None
    samples = ingest.read_sensor_csv(source, origin)
    jump = ingest.JumpConfig(factor=args.jump_factor, window=args.window)
    events = ingest.events_from_samples(samples, jump, cfg.lead_time)
    _, annotated = ingest.assemble_calibration_points(events, cfg.temperature_model, cfg.exclusions)
    meta = cfg.meta("ingest")
    meta["jump"] = {"factor": jump.factor, "window": jump.window}
    _write_json(_out(cfg, "events.json"), ingest.events_to_json(annotated, **meta))
    for e in annotated:
        flag = f"  excluded: {e.reason}" if e.excluded else ""
        print(f"{e.wire_id}: x={e.wire_depth:.4f} m onset={e.onset_time:.0f} s T={e.onset_temp:.2f} K{flag}")
    return EXIT_OK


def _calibration_points(args, cfg: RunConfig):
    if args.sanity:
        return fixtures.sanity_calibration_set().points
    if args.events or cfg.events_json:
        events = ingest.events_from_json(Path(args.events or cfg.events_json).read_text())
    else:
        events = fixtures.bridge_events()
    cs, _ = ingest.assemble_calibration_points(events, cfg.temperature_model, cfg.exclusions)
    return cs.points


def cmd_calibrate(args, cfg: RunConfig) -> int:
    points = _calibration_points(args, cfg)
    if args.points == "all":
        ks = list(range(1, len(points) + 1))
    else:
        k = int(args.points)
        if not 1 <= k <= len(points):
            raise ConfigError(f"--points must lie in 1..{len(points)}")
        ks = [k]
    hyper, c_crit = cfg.hyperparameters, cfg.critical_content.mean
    tag = "sanity_" if args.sanity else ""
    for k in ks:
        subset = points[:k]
        meta = cfg.meta("calibrate")
        meta.update(points=[p.__dict__ for p in subset], c_crit=c_crit, hyperparameters=hyper.__dict__,
                    temperature_model=cfg.temperature_model.to_dict())
        if args.method == "gehlen":
            meta["bayes"] = cfg.bayes.to_dict()
            meta["bounds"] = cfg.bounds.to_dict()
            result = bayes.calibrate(subset, cfg.bounds, cfg.bayes, hyper, c_crit)
            p = result.best_params
            print(f"k={k}: a={p.aging_exponent:.5f} D_t={p.d_t:.5e} b_e={p.b_e:.2f} "
                  f"MSE={result.mse:.3e} stop={result.stop_reason} n_eval={len(result.objective_trace)}")
            text = result.to_json(**meta)
        else:
            net = nn.train(subset, hyper, c_crit, cfg.train)
            content = nn.predicted_content(net, subset, hyper)
            meta["predicted_content"] = content.tolist()
            print(f"k={k}: loss={net.final_loss:.3e} m^2 epochs={net.epochs} converged={net.converged} "
                  f"C=[{', '.join(f'{c:.5f}' for c in content)}]")
            text = net.to_json(**meta)
        _write_json(_out(cfg, f"calibration_{tag}{args.method}_k{k}.json"), text)
    return EXIT_OK


def cmd_sensitivity(args, cfg: RunConfig) -> int:
    n_base = args.n_base or cfg.n_base
    meta = cfg.meta("sensitivity")
    if args.dummy:
        s1, st, var = sensitivity.analyze(sensitivity.dummy_model, n_base, 3, seed=cfg.seed)
        exact = sensitivity.dummy_model_moments()
        names = ("X1", "X2", "X3")
        payload = dict(meta)
        payload.update({
            "model": "dummy", "n_base": n_base, "names": list(names), "s1": s1.tolist(), "st": st.tolist(),
            "variance": var, "exact": {"variance": exact["variance"], "s1": exact["s1"].tolist()},
            "order_s1": [names[i] for i in np.argsort(-s1)], "order_st": [names[i] for i in np.argsort(-st)],
        })
        _write_json(_out(cfg, "sensitivity_dummy.json"), json.dumps(payload, indent=2, sort_keys=True))
        print("S1 " + " ".join(f"{n}={v:.4f}" for n, v in zip(names, s1)))
        print("ST " + " ".join(f"{n}={v:.4f}" for n, v in zip(names, st)))
        return EXIT_OK
    points = _calibration_points(args, cfg)
    config = sensitivity.SensitivityConfig(n_base, cfg.bounds, tuple(points), cfg.seed)
    result = sensitivity.run_analysis(config, cfg.hyperparameters)
    meta["config"] = config.to_dict()
    _write_json(_out(cfg, "sensitivity.json"), result.to_json(**meta))
    _csv_with_header(_out(cfg, "sensitivity.csv"), result.write_csv, meta)
    print("S1 " + " ".join(f"{n}={v:.4f}" for n, v in zip(result.names, result.s1)))
    print("ST " + " ".join(f"{n}={v:.4f}" for n, v in zip(result.names, result.st)))
    return EXIT_OK


def cmd_fit_profile(args, cfg: RunConfig) -> int:
    sources = args.input or cfg.profile_csvs
    if not sources:
        raise ConfigError("fit-profile needs --input CSV or paths.profile_csvs in the config")
    fits = []
    for src in sources:
        fit = profile.fit_profile(profile.read_profile_csv(src))
        fits.append({"profile": str(src), **fit.to_dict()})
        flag = " (at search bound)" if fit.at_bound else ""
        print(f"{src}: C_S={fit.c_s:.4f} kg/m3 D_eff={fit.d_eff:.4e} m2/s R2={fit.r_squared:.4f} "
              f"n_used={fit.n_used}{flag}")
    payload = cfg.meta("fit-profile")
    payload["fits"] = fits
    _write_json(_out(cfg, "profile_fits.json"), json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def load_model(path, hyper: ModelHyperparameters):
    """Rebuild a diffusion model from a calibration JSON."""
    d = json.loads(Path(path).read_text())
    kind = d.get("model")
    if kind == "gehlen":
        return predict.GehlenModel(GehlenParameters.from_dict(d["best_params"]), hyper)
    if kind == "nn":
        return predict.NetworkModel(nn.TrainedNetwork.from_dict(d))
    raise FormatError(f"{path}: unknown model kind {kind!r}")


def cmd_predict(args, cfg: RunConfig) -> int:
    hyper = cfg.hyperparameters
    if args.literature:
        r = fixtures.bridge_data()["rcm_literature"]
        model = predict.rcm_literature_model(r["d_rcm"], r["aging_exponent"], r["k_t"], r["b_e"], hyper)
    elif args.model:
        model = load_model(args.model, hyper)
    else:
        raise ConfigError("predict needs --model FILE or --literature")
    cc = cfg.critical_content
    mean = cc.mean if args.c_mean is None else args.c_mean
    c_crit = CriticalContent(mean, cc.lower if args.c_lower is None else args.c_lower,
                             cc.upper if args.c_upper is None else args.c_upper)
    if args.collapse:
        c_crit = CriticalContent(mean, mean, mean)
    temp_bounds = "nominal" if args.collapse or args.nominal_temperature else (
        tuple(args.temp_bounds) if args.temp_bounds else None)
    start_days = args.start_days if args.start_seconds is None else args.start_seconds / predict.SECONDS_PER_DAY
    grid = predict.default_time_grid(args.n_grid, start_days, args.stop_years)
    if args.start_seconds is not None:
        grid[0] = args.start_seconds
    band = predict.predict_band(model, hyper, c_crit, temp_bounds, grid, cfg.temperature_model)
    times, d_eff = predict.effective_diffusion_curve(model, grid, cfg.temperature_model, args.curve_temperature)
    meta = cfg.meta("predict")
    _csv_with_header(_out(cfg, f"band_{model.tag}.csv"), band.write_csv, meta)
    _csv_with_header(_out(cfg, f"d_eff_{model.tag}.csv"), lambda p: predict.write_diffusion_csv(p, times, d_eff), meta)
    if not args.model:
        return EXIT_OK
    d = json.loads(Path(args.model).read_text())
    pts = d.get("points", [])
    if pts:
        t = np.array([p["t"] for p in pts])
        x = np.array([p["x"] for p in pts])
        inside = band.contains(t, x)
        print(f"{int(inside.sum())}/{len(inside)} calibration points inside the band")
    return EXIT_OK


def sanity_checks(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Clean-data recovery and dummy-model checks; returns (name, passed, detail)."""
    hyper = fixtures.hyperparameters()
    true = fixtures.sanity_parameters()
    cs = fixtures.sanity_calibration_set()
    x, t, temp = cs.arrays
    out = []
    depths = depth_of_content(1.62, t, true, hyper, temp)
    err = float(np.max(np.abs(depths - x)))
    out.append(("forward depths within 1e-5 m", err <= 1e-5, f"max error {err:.2e} m"))

    result = bayes.calibrate(cs.points, config=replace(bayes.BayesOptConfig(), seed=seed), hyper=hyper)
    p = result.best_params
    ok = (abs(p.aging_exponent - true.aging_exponent) <= 0.02 and abs(p.d_t / true.d_t - 1) <= 0.05
          and abs(p.b_e / true.b_e - 1) <= 0.05)
    out.append(("optimizer recovers (a, D_t, b_e)", ok,
                f"a={p.aging_exponent:.5f} D_t={p.d_t:.5e} b_e={p.b_e:.2f}"))
    out.append(("stall stop before max_iter", result.stop_reason == "stalled",
                f"stop={result.stop_reason} after {len(result.objective_trace)} evaluations"))

    s1, st, _ = sensitivity.analyze(sensitivity.dummy_model, 8192, 3, seed=seed)
    order = lambda s: bool(s[2] > s[0] > s[1])
    out.append(("dummy model ordering X3 > X1 > X2", order(s1) and order(st),
                f"S1={np.round(s1, 4).tolist()} ST={np.round(st, 4).tolist()}"))
    out.append(("dummy model additive sum of S1", 0.9 <= s1.sum() <= 1.05, f"sum S1={s1.sum():.4f}"))
    return out


def cmd_sanity_check(args, cfg: RunConfig) -> int:
    results = sanity_checks(cfg.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrocal", description="Chloride corrosion calibration toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (default: config or current directory)")
    common.add_argument("--seed", type=int, help=f"seed; overrides config and ${SEED_ENV}")
    common.add_argument("--temperature-model", help="temperature model JSON written by fit-temperature")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-temperature", parents=[common], help="fit the cosine temperature model")
    p.add_argument("--input", help="temperature CSV (default: bundled series)")
    p.add_argument("--period-guess", type=float, default=temperature.SOLAR_YEAR)
    p.set_defaults(func=cmd_fit_temperature)

    p = sub.add_parser("ingest", parents=[common], help="detect wire failures in a resistance log")
    p.add_argument("--input", help="sensor CSV (default: bundled series)")
    p.add_argument("--jump-factor", type=float, default=ingest.JumpConfig.factor)
    p.add_argument("--window", type=int, default=ingest.JumpConfig.window)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("calibrate", parents=[common], help="calibrate the Gehlen model or the network")
    p.add_argument("--method", choices=("gehlen", "nn"), default="gehlen")
    p.add_argument("--points", default="4", help="number of calibration points or 'all' for k = 1..n")
    p.add_argument("--events", help="events JSON written by ingest (default: bundled events)")
    p.add_argument("--sanity", action="store_true", help="use the synthetic clean-data depths")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("fit-profile", parents=[common], help="regress C_S and D_eff from chloride profiles")
    p.add_argument("--input", nargs="+", help="profile CSVs, each with a JSON metadata sidecar")
    p.set_defaults(func=cmd_fit_profile)

    p = sub.add_parser("sensitivity", parents=[common], help="Sobol indices")
    p.add_argument("--dummy", action="store_true", help="analyze 2 X1^2 + X2 + 3 X3^3 instead")
    p.add_argument("--n-base", type=int, help="samples per matrix (power of two)")
    p.add_argument("--events", help="events JSON written by ingest (default: bundled events)")
    p.add_argument("--sanity", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("predict", parents=[common], help="time-depth band and diffusivity curve")
    p.add_argument("--model", help="calibration JSON written by calibrate")
    p.add_argument("--literature", action="store_true", help="use the RCM test with literature factors")
    p.add_argument("--c-mean", type=float)
    p.add_argument("--c-lower", type=float)
    p.add_argument("--c-upper", type=float)
    p.add_argument("--temp-bounds", type=float, nargs=2, metavar=("LO", "HI"), help="temperature extremes [K]")
    p.add_argument("--nominal-temperature", action="store_true", help="no temperature uncertainty")
    p.add_argument("--collapse", action="store_true", help="drop all uncertainty (zero-width band)")
    p.add_argument("--n-grid", type=int, default=200)
    p.add_argument("--start-days", type=float, default=30.0)
    p.add_argument("--stop-years", type=float, default=20.0)
    p.add_argument("--start-seconds", type=float, help="first grid age [s]; overrides --start-days")
    p.add_argument("--curve-temperature", type=float, help="fixed temperature [K] for the diffusivity curve")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sanity-check", parents=[common], help="clean-data recovery and dummy Sobol checks")
    p.set_defaults(func=cmd_sanity_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except (OSError, FormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    # LinAlgError is a ValueError, so numerical failures are matched first
    except (DivergenceError, DegenerateError, LinAlgError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DataError, DomainError, FitError, BracketError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
