"""Command line entry point: ``drivenfock {run,sweep,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DrivenFockError, InvalidParameterError, NumericalError
from .fock import Params, vacuum_state
from .generators import Mode, build_h_generator, build_k_generator
from .observables import CENSUS_THRESHOLD, TimeSeries, excited_census, peak_summary, time_average
from .propagator import StepControl, TruncationPolicy, propagate
from .verification import run_all

log = logging.getLogger("drivenfock")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

# floor for the highest level written to the run CSV
CSV_LEVEL_FLOOR = 1e-12


@dataclass
class RunConfig:
    mode: str = "both"
    epsilon: float = 5.0
    hbar_bar: float = 0.4
    rho: float = 6.25
    tau_end: float = 20.0
    sample_every: float = 0.01
    method: str = "rk45"
    dt: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_step: float = 0.05
    dim: int = 64
    tail_guard: float = 1e-16
    growth_factor: float = 2.0
    max_dim: int = 4096
    threshold: float = CENSUS_THRESHOLD
    printed_coefficients: bool = False
    out: str = "drivenfock_out"
    format: str = "csv"
    workers: int = 0

    def validate(self):
        if self.mode not in ("k", "h", "both"):
            raise InvalidParameterError(f"mode must be k, h or both, got {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise InvalidParameterError(f"format must be csv or json, got {self.format!r}")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidParameterError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not self.tau_end > 0:
            raise InvalidParameterError(f"tau_end must be > 0, got {self.tau_end}")
        if not self.sample_every > 0:
            raise InvalidParameterError(f"sample_every must be > 0, got {self.sample_every}")
        if self.workers < 0:
            raise InvalidParameterError("workers must be >= 0")
        # constructing these runs their own invariant checks
        self.params()
        self.step_control()
        self.truncation()
        return self

    def modes(self) -> list[str]:
        return ["k", "h"] if self.mode == "both" else [self.mode]

    def params(self, epsilon: float | None = None) -> Params:
        eps = self.epsilon if epsilon is None else epsilon
        return Params(float(eps), float(self.hbar_bar), float(self.rho))

    def step_control(self) -> StepControl:
        return StepControl(
            self.method, self.dt, self.rel_tol, self.abs_tol, max(self.max_step, self.dt)
        )

    def truncation(self) -> TruncationPolicy:
        return TruncationPolicy(self.dim, self.tail_guard, self.growth_factor, self.max_dim)


@dataclass
class SweepConfig(RunConfig):
    epsilons: list = field(default_factory=lambda: [float(e) for e in range(11)])
    check_sampling: bool = False

    def validate(self):
        super().validate()
        if len(set(self.epsilons)) != len(self.epsilons):
            raise InvalidParameterError("sweep epsilon values must be distinct")
        if any(e < 0 for e in self.epsilons):
            raise InvalidParameterError("sweep epsilon values must be non-negative")
        for e in self.epsilons:
            self.params(e)
        return self


def simulate(cfg: RunConfig, mode: str, epsilon: float | None = None, sample_every=None) -> TimeSeries:
    params = cfg.params(epsilon)
    if Mode.parse(mode) is Mode.K:
        gen = build_k_generator(params, printed_coefficients=cfg.printed_coefficients)
    else:
        gen = build_h_generator(params)
    series = propagate(
        gen,
        vacuum_state(cfg.dim),
        cfg.tau_end,
        cfg.step_control(),
        cfg.truncation(),
        sample_every or cfg.sample_every,
    )
    series.meta["defaults_note"] = (
        "tau_end, sample_every and truncation settings are artifact choices, not taken from the source figures"
    )
    return series


def summarize(series: TimeSeries, threshold: float) -> dict:
    census = excited_census(series, threshold)
    p0_peak, p0_tau = peak_summary(series, 0, tau_min=series.taus[0])
    p1_peak, p1_tau = peak_summary(series, 1)
    return {
        "mode": series.meta["mode"],
        "epsilon": series.meta["params"]["epsilon"],
        "p0_peak_after_start": p0_peak,
        "p0_peak_tau_after_start": p0_tau,
        "p1_peak": p1_peak,
        "p1_peak_tau": p1_tau,
        "census": census.max_involved,
        "census_tau": census.tau_at_max,
        "threshold": threshold,
        "x2_time_average": time_average(series),
        "x2_max": float(np.max(series.x2)),
        "norm_drift_max": series.stats["norm_drift_max"],
        "norm_drift_final": series.stats["norm_drift_final"],
        "leakage_max_tail": series.stats["max_tail"],
        "max_dim": series.stats["max_dim"],
        "n_steps": series.stats["n_steps"],
        "n_rejected": series.stats["n_rejected"],
        "runtime_s": series.stats["runtime_s"],
    }


def _provenance(cfg) -> dict:
    return {"drivenfock_version": __version__, "config": asdict(cfg)}


def _fmt(x) -> str:
    return format(float(x), ".15g")


def write_series_csv(path: Path, series: TimeSeries, cfg: RunConfig):
    top = max(series.highest_level(CSV_LEVEL_FLOOR), 0)
    cols = ["tau", "norm2", "x2"] + [f"p{n}" for n in range(top + 1)]
    meta = {**_provenance(cfg), "series_meta": series.meta, "stats": series.stats}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True, default=str) + "\n")
        fh.write(",".join(cols) + "\n")
        for i, tau in enumerate(series.taus):
            row = [tau, series.norm2[i], series.x2[i], *series.probs[i, : top + 1]]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_series_json(path: Path, series: TimeSeries, cfg: RunConfig):
    top = max(series.highest_level(CSV_LEVEL_FLOOR), 0)
    doc = {
        **_provenance(cfg),
        "series_meta": series.meta,
        "stats": series.stats,
        "tau": series.taus.tolist(),
        "norm2": series.norm2.tolist(),
        "x2": series.x2.tolist(),
        "probs": series.probs[:, : top + 1].tolist(),
    }
    path.write_text(json.dumps(doc, default=str), encoding="utf-8")


def _out_stem(cfg) -> Path:
    stem = Path(cfg.out)
    if stem.parent and not stem.parent.exists():
        stem.parent.mkdir(parents=True, exist_ok=True)
    return stem


def cmd_run(cfg: RunConfig) -> int:
    stem = _out_stem(cfg)
    summary = {**_provenance(cfg), "runs": {}, "status": "ok"}
    results = {}
    for mode in cfg.modes():
        try:
            series = simulate(cfg, mode)
        except NumericalError as exc:
            summary["status"] = "partial"
            summary["error"] = {"mode": mode, "message": str(exc)}
            _write_json(stem.with_name(stem.name + "_summary.json"), summary)
            log.error("%s-mode run failed: %s", mode, exc)
            return EXIT_NUMERICAL
        results[mode] = series
        ext = cfg.format
        path = stem.with_name(f"{stem.name}_{mode}.{ext}")
        (write_series_csv if ext == "csv" else write_series_json)(path, series, cfg)
        summary["runs"][mode] = summarize(series, cfg.threshold)
        log.info("wrote %s", path)
    if len(results) == 2:
        k, h = summary["runs"]["k"], summary["runs"]["h"]
        summary["comparison"] = {
            "p0_peak_tau_k": k["p0_peak_tau_after_start"],
            "p0_peak_tau_h": h["p0_peak_tau_after_start"],
            "p0_peak_times_differ": abs(k["p0_peak_tau_after_start"] - h["p0_peak_tau_after_start"])
            > cfg.sample_every,
            "x2_mean_ratio_h_over_k": h["x2_time_average"] / k["x2_time_average"],
            "census_k": k["census"],
            "census_h": h["census"],
        }
    path = stem.with_name(stem.name + "_summary.json")
    _write_json(path, summary)
    print(json.dumps(summary.get("comparison", summary["runs"]), indent=2, default=str))
    return EXIT_OK


def _write_json(path: Path, doc: dict):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str), encoding="utf-8")


def _sweep_point(args):
    cfg, mode, eps = args
    series = simulate(cfg, mode, eps)
    census = excited_census(series, cfg.threshold)
    row = {
        "epsilon": eps,
        "mode": mode,
        "max_involved": census.max_involved,
        "tau_at_max": census.tau_at_max,
        "max_dim": series.stats["max_dim"],
        "norm_drift_max": series.stats["norm_drift_max"],
    }
    if cfg.check_sampling:
        fine = simulate(cfg, mode, eps, sample_every=cfg.sample_every / 2)
        row["max_involved_half_dt"] = excited_census(fine, cfg.threshold).max_involved
    return row


def cmd_sweep(cfg: SweepConfig) -> int:
    stem = _out_stem(cfg)
    jobs = [(cfg, mode, float(e)) for e in cfg.epsilons for mode in cfg.modes()]
    workers = cfg.workers or os.cpu_count() or 1
    try:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
                rows = list(pool.map(_sweep_point, jobs))
        else:
            rows = [_sweep_point(j) for j in jobs]
    except NumericalError as exc:
        log.error("sweep failed: %s", exc)
        return EXIT_NUMERICAL
    rows.sort(key=lambda r: (r["epsilon"], r["mode"]))
    if cfg.format == "csv":
        path = stem.with_name(stem.name + "_sweep.csv")
        cols = list(rows[0])
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("# " + json.dumps(_provenance(cfg), sort_keys=True, default=str) + "\n")
            fh.write(",".join(cols) + "\n")
            for r in rows:
                fh.write(",".join(r["mode"] if c == "mode" else _fmt(r[c]) for c in cols) + "\n")
    else:
        path = stem.with_name(stem.name + "_sweep.json")
        _write_json(path, {**_provenance(cfg), "rows": rows})
    for r in rows:
        print(f"eps={r['epsilon']:g} mode={r['mode']} max_involved={r['max_involved']}")
    return EXIT_OK


def cmd_verify(quick: bool = False, mutation: float | None = None) -> int:
    checks, elapsed = run_all(quick=quick, mutation=mutation)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed in {elapsed:.1f}s")
    return EXIT_VERIFY if failed else EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--mode", choices=["k", "h", "both"], default=S)
    p.add_argument("--epsilon", type=float, default=S)
    p.add_argument("--hbar-bar", dest="hbar_bar", type=float, default=S, help="default 0.4")
    p.add_argument("--rho", type=float, default=S, help="default 6.25")
    p.add_argument("--tau-end", dest="tau_end", type=float, default=S, help="default 20")
    p.add_argument("--sample-every", dest="sample_every", type=float, default=S, help="default 0.01")
    p.add_argument("--dim", type=int, default=S, help="initial basis size, default 64")
    p.add_argument("--max-dim", dest="max_dim", type=int, default=S)
    p.add_argument("--method", choices=["rk4", "rk45"], default=S)
    p.add_argument("--dt", type=float, default=S, help="rk4 step / rk45 first step")
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=S, help="default 1e-10")
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=S, help="default 1e-14")
    p.add_argument("--threshold", type=float, default=S, help="census cutoff, default 1e-4")
    p.add_argument("--printed-coefficients", dest="printed_coefficients", action="store_true", default=S)
    p.add_argument("--config", type=Path, help="flat JSON file with config field names")
    p.add_argument("--out", default=S, help="output path stem")
    p.add_argument("--format", choices=["csv", "json"], default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="drivenfock", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_run_flags(sub.add_parser("run", help="propagate one or both quantizations"))
    sw = sub.add_parser("sweep", help="excited-state census over epsilon")
    _add_run_flags(sw)
    sw.add_argument("--epsilons", type=float, nargs="+", default=argparse.SUPPRESS)
    sw.add_argument("--check-sampling", dest="check_sampling", action="store_true", default=argparse.SUPPRESS)
    ver = sub.add_parser("verify", help="run the oracle verification suites")
    ver.add_argument("--quick", action="store_true")
    ver.add_argument("--inject-mutation", dest="mutation", type=float, default=None, help=argparse.SUPPRESS)
    ver.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(cls, ns: argparse.Namespace):
    """Defaults, then the JSON file, then explicit flags."""
    values = {}
    if getattr(ns, "config", None):
        try:
            doc = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameterError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise InvalidParameterError("config file must hold a JSON object")
        values.update(doc)
    names = {f.name for f in fields(cls)}
    values.update({k: v for k, v in vars(ns).items() if k in names})
    unknown = set(values) - names
    if unknown:
        raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
    try:
        return replace(cls(), **values).validate()
    except InvalidParameterError:
        raise
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(str(exc)) from exc


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits on bad flags, --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if ns.command == "verify":
            return cmd_verify(quick=ns.quick, mutation=ns.mutation)
        if ns.command == "run":
            return cmd_run(load_config(RunConfig, ns))
        return cmd_sweep(load_config(SweepConfig, ns))
    except InvalidParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DrivenFockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
