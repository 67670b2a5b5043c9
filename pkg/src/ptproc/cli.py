"""Command-line front end.

Subcommands: estimate, benchmark, oracle, sample.  Every run is described
by a JSON config assembled from defaults, an optional --config file, and
command-line flags (flags win).  The fully resolved config is echoed into
the output, and re-running from that echo reproduces the numbers; the only
output fields that vary between runs with the same (config, seed) are wall
clocks and everything derived from them.

Exit codes: 0 success, 2 malformed config, 3 engine failure (no CFTP
coalescence within the horizon cap, or an oracle tail bound above its
tolerance).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
from pathlib import Path

from .ais import AisConfig
from .cftp import CftpHorizonError, cftp_sample
from .geometry import PointPattern, Window
from .harness import (
    ENGINES,
    BenchmarkCase,
    benchmark,
    estimate,
    rows_to_csv,
    run_metadata,
)
from .mh import MhConfig, mh_run
from .models import PointCount, model_from_spec, statistic_from_spec
from .oracle import OracleSpec, TailBoundError, brute_force_expectation
from .poisson import sample_poisson
from .rng import SeedTree

__all__ = ["main"]


class ConfigError(ValueError):
    pass


_DEFAULT_WINDOW = {"lower": [-0.5, -0.5], "upper": [0.5, 0.5]}

_AIS_DEFAULTS = {
    "n1": 500,
    "n_t": 100,
    "rho0": None,
    "m_rho": 1e-10,
    "M_rho": 1e10,
    "eta1": None,
    "eta2": 0.01,
    "eps": None,
    "alpha": None,
    "max_steps": 10**6,
}
_MH_DEFAULTS = {"p_birth": 0.5, "burn_in": 3000, "thin": 200, "initial_rho": None}
_CFTP_DEFAULTS = {"t_max": 20}


def _defaults(command: str) -> dict:
    base = {
        "command": command,
        "window": copy.deepcopy(_DEFAULT_WINDOW),
        "seed": 0,
        "threads": None,
    }
    if command == "estimate":
        base.update(
            model=None,
            statistic={"kind": "papangelou_origin"},
            engine="ais",
            target_rel_se=0.05,
            ais=dict(_AIS_DEFAULTS),
            mh=dict(_MH_DEFAULTS),
            cftp=dict(_CFTP_DEFAULTS),
            min_samples=10,
            max_samples=10**6,
        )
    elif command == "benchmark":
        base.update(
            preset=None,
            cases=None,
            target_rel_se=0.05,
            ais=dict(_AIS_DEFAULTS),
            mh=dict(_MH_DEFAULTS),
            cftp=dict(_CFTP_DEFAULTS),
            max_samples=10**6,
        )
    elif command == "oracle":
        base.update(
            preset=None,
            model=None,
            statistic={"kind": "point_count"},
            n_max=12,
            mc_points=10**6,
            tail_tol=1e-6,
            batches=100,
        )
    elif command == "sample":
        base.update(
            engine="poisson",
            model=None,
            rho=None,
            reps=1,
            mh=dict(_MH_DEFAULTS),
            cftp=dict(_CFTP_DEFAULTS),
        )
    return base


def _merge_file(config: dict, path: str) -> None:
    try:
        with open(path, encoding="utf8") as fh:
            loaded = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError("config file must hold a JSON object")
    for key, value in loaded.items():
        if key == "command":
            continue
        if key not in config:
            raise ConfigError(f"unknown config field {key!r}")
        if isinstance(config[key], dict) and isinstance(value, dict):
            sub = config[key]
            for k2, v2 in value.items():
                if k2 not in sub:
                    raise ConfigError(f"unknown config field {key}.{k2!r}")
                sub[k2] = v2
        else:
            config[key] = value


# flag destination -> path inside the config dict
_FLAG_PATHS = {
    "engine": ("engine",),
    "seed": ("seed",),
    "threads": ("threads",),
    "target_rel_se": ("target_rel_se",),
    "beta": ("model", "beta"),
    "gamma": ("model", "gamma"),
    "r": ("model", "r"),
    "alpha": ("model", "alpha"),
    "band": ("statistic", "band"),
    "n1": ("ais", "n1"),
    "nt": ("ais", "n_t"),
    "rho0": ("ais", "rho0"),
    "eta1": ("ais", "eta1"),
    "eta2": ("ais", "eta2"),
    "eps": ("ais", "eps"),
    "conf_alpha": ("ais", "alpha"),
    "max_steps": ("ais", "max_steps"),
    "p_birth": ("mh", "p_birth"),
    "burn_in": ("mh", "burn_in"),
    "thin": ("mh", "thin"),
    "initial_rho": ("mh", "initial_rho"),
    "t_max": ("cftp", "t_max"),
    "min_samples": ("min_samples",),
    "max_samples": ("max_samples",),
    "preset": ("preset",),
    "n_max": ("n_max",),
    "mc_points": ("mc_points",),
    "tail_tol": ("tail_tol",),
    "batches": ("batches",),
    "rho": ("rho",),
    "reps": ("reps",),
}


def _apply_flags(config: dict, args: argparse.Namespace) -> None:
    if getattr(args, "model", None) is not None:
        if config.get("model") is None:
            config["model"] = {}
        config["model"]["kind"] = args.model
    if getattr(args, "stat", None) is not None:
        config["statistic"] = {"kind": args.stat.replace("-", "_")}
    if getattr(args, "window", None) is not None:
        lo, hi = args.window
        config["window"] = {"lower": [lo, lo], "upper": [hi, hi]}
    for dest, path in _FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        node = config
        for key in path[:-1]:
            if node.get(key) is None:
                node[key] = {}
            node = node[key]
        node[path[-1]] = value
    if getattr(args, "band", None) is not None:
        config["statistic"]["band"] = args.band


def _resolve_threads(config: dict) -> int:
    threads = config.get("threads")
    if threads is None:
        env = os.environ.get("PTPROC_THREADS")
        if env is not None:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ConfigError(f"PTPROC_THREADS must be an integer, got {env!r}") from exc
        else:
            threads = 1
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {threads!r}")
    config["threads"] = threads
    return threads


def _check_seed(config: dict) -> int:
    seed = config.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return seed


def _window_from(config: dict) -> Window:
    w = config.get("window")
    if not isinstance(w, dict) or set(w) != {"lower", "upper"}:
        raise ConfigError("window must be an object with 'lower' and 'upper'")
    try:
        return Window(w["lower"], w["upper"])
    except ValueError as exc:
        raise ConfigError(f"bad window: {exc}") from exc


def _model_from(config: dict, window: Window):
    spec = config.get("model")
    if spec is None:
        raise ConfigError("a model is required (set --model and its parameters)")
    try:
        return model_from_spec(spec, window)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _statistic_from(config: dict, model):
    try:
        return statistic_from_spec(config["statistic"], model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _ais_cfg(config: dict) -> AisConfig:
    try:
        return AisConfig(**config["ais"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad ais config: {exc}") from exc


def _mh_cfg(config: dict) -> MhConfig:
    try:
        return MhConfig(**config["mh"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad mh config: {exc}") from exc


def _t_max(config: dict) -> int:
    t_max = config["cftp"].get("t_max")
    if not isinstance(t_max, int) or isinstance(t_max, bool) or t_max < 0:
        raise ConfigError(f"cftp.t_max must be a non-negative integer, got {t_max!r}")
    return t_max


def _json_out(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf8")
    else:
        sys.stdout.write(text)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf8", newline="") as fh:
        fh.write(text)


def _pattern_csv(x: PointPattern) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d = x.window.dim
    writer.writerow(["x", "y"] if d == 2 else [f"x{i}" for i in range(d)])
    for row in x.coords:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


# -- subcommands -------------------------------------------------------------


def _cmd_estimate(args: argparse.Namespace) -> int:
    config = _defaults("estimate")
    if args.config:
        _merge_file(config, args.config)
    _apply_flags(config, args)
    seed = _check_seed(config)
    _resolve_threads(config)
    window = _window_from(config)
    model = _model_from(config, window)
    stat = _statistic_from(config, model)
    engine = config.get("engine")
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}, got {engine!r}")
    target = config.get("target_rel_se")
    if not isinstance(target, (int, float)) or not target > 0:
        raise ConfigError(f"target_rel_se must be positive, got {target!r}")
    if args.trace and not args.out:
        raise ConfigError("--trace requires --out to name the trace file")
    ais_cfg = _ais_cfg(config)
    mh_cfg = _mh_cfg(config)
    t_max = _t_max(config)

    trace: list | None = [] if (args.trace and engine == "ais") else None
    report = estimate(
        engine,
        model,
        stat,
        float(target),
        SeedTree(seed),
        ais_cfg=ais_cfg,
        mh_cfg=mh_cfg,
        t_max=t_max,
        min_samples=config["min_samples"],
        max_samples=config["max_samples"],
        trace=trace,
    )
    _json_out({"config": config, "report": report.to_dict()}, args.out)
    if trace is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "rho_hat", "mu_hat", "sigma2_hat", "n_total"])
        for row in trace:
            writer.writerow(
                [row.t, repr(row.rho_hat), repr(row.mu_hat), repr(row.sigma2_hat), row.n_total]
            )
        _write_text(str(Path(args.out).with_suffix(".trace.csv")), buf.getvalue())
    return 0


def _reference_grid_cases(window: Window) -> list[BenchmarkCase]:
    cases = []
    for gamma in (0.4, 0.6, 0.8):
        model = model_from_spec(
            {"kind": "strauss", "beta": 50.0, "gamma": gamma, "r": 0.1}, window
        )
        cases.append(BenchmarkCase(model, statistic_from_spec({"kind": "papangelou_origin"}, model)))
    for gamma in (0.4, 0.8):
        model = model_from_spec(
            {"kind": "inhom_strauss", "beta": 50.0, "gamma": gamma, "r": 0.1, "alpha": 1.0},
            window,
        )
        cases.append(
            BenchmarkCase(model, statistic_from_spec({"kind": "boundary_count", "band": 0.49}, model))
        )
    return cases


def _cmd_benchmark(args: argparse.Namespace) -> int:
    config = _defaults("benchmark")
    if args.config:
        _merge_file(config, args.config)
    _apply_flags(config, args)
    seed = _check_seed(config)
    threads = _resolve_threads(config)
    window = _window_from(config)
    target = config.get("target_rel_se")
    if not isinstance(target, (int, float)) or not target > 0:
        raise ConfigError(f"target_rel_se must be positive, got {target!r}")

    if config.get("preset") is not None:
        if config["preset"] != "reference-grid":
            raise ConfigError(f"unknown benchmark preset {config['preset']!r}")
        cases = _reference_grid_cases(window)
    elif config.get("cases"):
        cases = []
        for i, entry in enumerate(config["cases"]):
            if not isinstance(entry, dict) or "model" not in entry:
                raise ConfigError(f"case {i} must be an object with a 'model'")
            unknown = set(entry) - {"model", "statistic", "engines"}
            if unknown:
                raise ConfigError(f"case {i} has unknown field(s) {sorted(unknown)}")
            try:
                model = model_from_spec(entry["model"], window)
                stat = statistic_from_spec(
                    entry.get("statistic", {"kind": "papangelou_origin"}), model
                )
                engines = tuple(entry.get("engines", ENGINES))
                cases.append(BenchmarkCase(model, stat, engines))
            except ValueError as exc:
                raise ConfigError(f"case {i}: {exc}") from exc
    else:
        raise ConfigError("benchmark needs a preset or a non-empty 'cases' list")

    rows = benchmark(
        cases,
        float(target),
        SeedTree(seed),
        threads=threads,
        ais_cfg=_ais_cfg(config),
        mh_cfg=_mh_cfg(config),
        t_max=_t_max(config),
        max_samples=config["max_samples"],
    )
    text = rows_to_csv(rows)
    if args.out:
        _write_text(args.out, text)
        _json_out(
            {"config": config, "metadata": run_metadata()},
            str(Path(args.out).with_suffix(".meta.json")),
        )
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    config = _defaults("oracle")
    if args.config:
        _merge_file(config, args.config)
    _apply_flags(config, args)
    if config.get("preset") is not None:
        if config["preset"] != "tiny-strauss":
            raise ConfigError(f"unknown oracle preset {config['preset']!r}")
        config["window"] = {"lower": [0.0, 0.0], "upper": [0.2, 0.2]}
        config["model"] = {"kind": "strauss", "beta": 50.0, "gamma": 0.5, "r": 0.1}
        config["statistic"] = {"kind": "point_count"}
        config["n_max"] = 13
        _apply_flags(config, args)  # flags still win over the preset
    seed = _check_seed(config)
    window = _window_from(config)
    model = _model_from(config, window)
    stat = _statistic_from(config, model)
    try:
        spec = OracleSpec(
            n_max=config["n_max"],
            mc_points=config["mc_points"],
            tail_tol=config["tail_tol"],
            batches=config["batches"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad oracle config: {exc}") from exc
    result = brute_force_expectation(model, stat, spec, SeedTree(seed))
    payload = {
        "config": config,
        "result": {
            "mu": result.mu,
            "mc_se": result.mc_se,
            "tail_bound": result.tail_bound,
            "n_max": result.n_max,
            "mc_points": result.mc_points,
            "count_distribution": list(result.count_distribution()),
        },
    }
    _json_out(payload, args.out)
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    config = _defaults("sample")
    if args.config:
        _merge_file(config, args.config)
    _apply_flags(config, args)
    seed = _check_seed(config)
    window = _window_from(config)
    engine = config.get("engine")
    if engine not in ("poisson", "mh", "cftp"):
        raise ConfigError(f"sample engine must be poisson, mh or cftp, got {engine!r}")
    reps = config.get("reps")
    if not isinstance(reps, int) or isinstance(reps, bool) or reps < 1:
        raise ConfigError(f"reps must be a positive integer, got {reps!r}")
    if reps > 1 and not args.out:
        raise ConfigError("multiple replications need --out (a directory)")
    if args.trace and engine != "mh":
        raise ConfigError("--trace applies to the mh sampler only")
    if args.trace and not args.out:
        raise ConfigError("--trace requires --out")

    tree = SeedTree(seed).child("sample")
    patterns: list[PointPattern] = []
    trace_counts: list[int] | None = [] if args.trace else None
    if engine == "poisson":
        rho = config.get("rho")
        if not isinstance(rho, (int, float)) or not rho > 0:
            raise ConfigError(f"poisson sampling needs a positive rho, got {rho!r}")
        for i in range(reps):
            patterns.append(sample_poisson(window, float(rho), tree.child(i).generator()))
    elif engine == "mh":
        model = _model_from(config, window)
        collected: list[PointPattern] = []
        mh_run(
            model,
            PointCount(),
            _mh_cfg(config),
            max(reps, 2),
            tree.generator(),
            trace_counts=trace_counts,
            collect_patterns=collected,
        )
        patterns = collected[:reps]
    else:
        model = _model_from(config, window)
        t_max = _t_max(config)
        for i in range(reps):
            patterns.append(cftp_sample(model, tree.child(i).generator(), t_max=t_max))

    if not args.out:
        sys.stdout.write(_pattern_csv(patterns[0]))
    elif reps == 1 and args.out.endswith(".csv"):
        _write_text(args.out, _pattern_csv(patterns[0]))
    else:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for i, x in enumerate(patterns, start=1):
            _write_text(str(outdir / f"sample_{i:05d}.csv"), _pattern_csv(x))
    if trace_counts is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "n"])
        for i, n in enumerate(trace_counts, start=1):
            writer.writerow([i, n])
        base = Path(args.out)
        trace_path = base.with_suffix(".trace.csv") if base.suffix == ".csv" else base / "trace.csv"
        if not base.suffix == ".csv":
            base.mkdir(parents=True, exist_ok=True)
        _write_text(str(trace_path), buf.getvalue())
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptproc",
        description="Expectation estimation for locally stable point processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--seed", type=int, help="master seed (64-bit unsigned)")
        p.add_argument("--threads", type=int, help="worker cap (env PTPROC_THREADS as fallback)")
        p.add_argument("--out", help="output path")
        p.add_argument("--trace", action="store_true", help="write a per-step trace CSV")

    def add_model_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", choices=["strauss", "inhom_strauss"])
        p.add_argument("--beta", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--r", type=float)
        p.add_argument("--alpha", type=float, help="taper strength of the inhomogeneous model")
        p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"),
                       help="square window bounds (both coordinates)")

    def add_stat_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--stat",
            choices=["papangelou-origin", "boundary-count", "point-count",
                     "papangelou_origin", "boundary_count", "point_count"],
        )
        p.add_argument("--band", type=float)

    p_est = sub.add_parser("estimate", help="estimate E[K] with one engine")
    add_shared(p_est)
    add_model_flags(p_est)
    add_stat_flags(p_est)
    p_est.add_argument("--engine", choices=list(ENGINES))
    p_est.add_argument("--target-rel-se", dest="target_rel_se", type=float)
    p_est.add_argument("--n1", type=int)
    p_est.add_argument("--nt", type=int)
    p_est.add_argument("--rho0", type=float)
    p_est.add_argument("--eta1", type=float)
    p_est.add_argument("--eta2", type=float)
    p_est.add_argument("--eps", type=float)
    p_est.add_argument("--conf-alpha", dest="conf_alpha", type=float)
    p_est.add_argument("--max-steps", dest="max_steps", type=int)
    p_est.add_argument("--p-birth", dest="p_birth", type=float)
    p_est.add_argument("--burn-in", dest="burn_in", type=int)
    p_est.add_argument("--thin", type=int)
    p_est.add_argument("--initial-rho", dest="initial_rho", type=float)
    p_est.add_argument("--t-max", dest="t_max", type=int)
    p_est.add_argument("--min-samples", dest="min_samples", type=int)
    p_est.add_argument("--max-samples", dest="max_samples", type=int)

    p_bench = sub.add_parser("benchmark", help="time-variance comparison grid")
    add_shared(p_bench)
    p_bench.add_argument("--preset", choices=["reference-grid"])
    p_bench.add_argument("--target-rel-se", dest="target_rel_se", type=float)
    p_bench.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p_bench.add_argument("--max-samples", dest="max_samples", type=int)

    p_oracle = sub.add_parser("oracle", help="brute-force series reference value")
    add_shared(p_oracle)
    add_model_flags(p_oracle)
    add_stat_flags(p_oracle)
    p_oracle.add_argument("--preset", choices=["tiny-strauss"])
    p_oracle.add_argument("--n-max", dest="n_max", type=int)
    p_oracle.add_argument("--mc-points", dest="mc_points", type=int)
    p_oracle.add_argument("--tail-tol", dest="tail_tol", type=float)
    p_oracle.add_argument("--batches", type=int)

    p_sample = sub.add_parser("sample", help="draw raw patterns")
    add_shared(p_sample)
    add_model_flags(p_sample)
    p_sample.add_argument("--engine", choices=["poisson", "mh", "cftp"])
    p_sample.add_argument("--rho", type=float, help="intensity for poisson sampling")
    p_sample.add_argument("--reps", type=int)
    p_sample.add_argument("--burn-in", dest="burn_in", type=int)
    p_sample.add_argument("--thin", type=int)
    p_sample.add_argument("--initial-rho", dest="initial_rho", type=float)
    p_sample.add_argument("--p-birth", dest="p_birth", type=float)
    p_sample.add_argument("--t-max", dest="t_max", type=int)

    return parser


_COMMANDS = {
    "estimate": _cmd_estimate,
    "benchmark": _cmd_benchmark,
    "oracle": _cmd_oracle,
    "sample": _cmd_sample,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CftpHorizonError, TailBoundError) as exc:
        print(f"engine failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
