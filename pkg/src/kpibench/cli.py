"""Command-line front end: run benchmarks, reproduce figure grids, export circuits, verify reports."""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable

from . import clv, ghz, qec, shor
from .circuit import emit_qasm
from .noise import NoiseModel, NoiseScheme, scheme_to_model
from .report import BenchmarkReport, ReportError, read_report, verify_report, write_csv, write_report
from .statevector import MAX_QUBITS, CapacityError
from .stats import expectation_sigma

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_INTERNAL = 0, 2, 3, 4
OUT_ENV = "KPIBENCH_OUT"
BENCHMARKS = ("clv", "ghz", "shor", "qec")

DEFAULT_SHOTS = {"clv": clv.MIN_SHOTS, "ghz": ghz.DEFAULT_SHOTS, "shor": shor.DEFAULT_SHOTS, "qec": 1_000_000}
DEFAULT_RANGE = {"clv": (2, 64), "ghz": (2, 64), "shor": (3, 5)}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config.{path}: {message}")
        self.path = path


@dataclass
class RunConfig:
    benchmark: str | None = None
    preset: str | None = None
    seed: int | None = None
    scheme: str = "custom"
    p: float | None = None
    p1q: float = 0.0
    p2q: float = 0.0
    pinit: float = 0.0
    pm: float = 0.0
    pidle: float = 0.0
    pres: float = 0.0
    shots: int | None = None
    n_min: int | None = None
    n_max: int | None = None
    search: str = "linear-up"
    aggregate: str = "mean"
    d: int = 3
    dfe: bool = False
    workers: int = 1
    out: str | None = None

    _TYPES = {"benchmark": str, "preset": str, "seed": int, "scheme": str, "p": float, "p1q": float,
              "p2q": float, "pinit": float, "pm": float, "pidle": float, "pres": float, "shots": int,
              "n_min": int, "n_max": int, "search": str, "aggregate": str, "d": int, "dfe": bool,
              "workers": int, "out": str}

    @classmethod
    def from_sources(cls, file_values: dict[str, Any], flag_values: dict[str, Any]) -> "RunConfig":
        merged: dict[str, Any] = {}
        for source in (file_values, flag_values):
            for key, value in source.items():
                if value is None:
                    continue
                if key not in cls._TYPES:
                    raise ConfigError(key, "unknown field")
                merged[key] = cls._coerce(key, value)
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    @classmethod
    def _coerce(cls, key: str, value: Any) -> Any:
        want = cls._TYPES[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if want is int and isinstance(value, bool) or not isinstance(value, want):
            raise ConfigError(key, f"expected {want.__name__}, got {type(value).__name__}")
        return value

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("seed", "a seed is required")
        if self.seed < 0:
            raise ConfigError("seed", "must be non-negative")
        if self.preset is None and self.benchmark not in BENCHMARKS:
            raise ConfigError("benchmark", f"must be one of {', '.join(BENCHMARKS)}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError("preset", f"must be one of {', '.join(PRESETS)}")
        if self.scheme not in {s.value for s in NoiseScheme}:
            raise ConfigError("scheme", "must be sd6, si1000 or custom")
        if self.scheme != "custom" and self.p is None:
            raise ConfigError("p", f"scheme {self.scheme} needs --p")
        if self.scheme == "custom" and self.p is not None:
            raise ConfigError("p", "the custom scheme takes explicit rates (--p1q, --p2q, ...)")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots", "must be positive")
        if self.benchmark == "clv" and self.shots is not None and self.shots < clv.MIN_SHOTS:
            raise ConfigError("shots", f"the Clifford Volume protocol needs at least {clv.MIN_SHOTS}")
        if self.search not in ("linear-up", "binary"):
            raise ConfigError("search", "must be linear-up or binary")
        if self.aggregate not in ("mean", "rms"):
            raise ConfigError("aggregate", "must be mean or rms")
        if self.d < 3 or self.d % 2 == 0:
            raise ConfigError("d", "code distance must be odd and >= 3")
        if self.workers < 1:
            raise ConfigError("workers", "must be at least 1")
        try:
            self.model()
        except ValueError as exc:
            raise ConfigError("p" if self.scheme != "custom" else "p2q", str(exc)) from None
        if self.benchmark in DEFAULT_RANGE:
            lo, hi = self.range()
            if lo < 2 or hi < lo:
                raise ConfigError("n_max", f"invalid range [{lo}, {hi}]")

    def model(self) -> NoiseModel:
        if self.scheme == "custom":
            return NoiseModel(self.p1q, self.p2q, self.pinit, self.pm, self.pidle, self.pres)
        return scheme_to_model(self.scheme, self.p)

    def range(self) -> tuple[int, int]:
        lo, hi = DEFAULT_RANGE[self.benchmark]
        return (self.n_min if self.n_min is not None else lo, self.n_max if self.n_max is not None else hi)

    def shot_count(self, benchmark: str) -> int:
        return self.shots if self.shots is not None else DEFAULT_SHOTS[benchmark]

    def recorded(self) -> dict[str, Any]:
        """The fields that determine results (output path and worker count do not)."""
        doc = {f.name: getattr(self, f.name) for f in fields(self) if not f.name.startswith("_")}
        doc.pop("out")
        doc.pop("workers")
        doc["noise"] = self.model().to_dict()
        return doc


# ------------------------------------------------------------------ running

def _clv_rows(result: clv.ClvSearch, model: NoiseModel) -> list[dict[str, Any]]:
    rows = []
    for t, v in zip(result.trials, result.verdicts):
        s, d = clv.worst_case(t)
        rows.append({"n": t.n, "trial": t.trial, "p_2q": model.p_2q, "p_meas": model.p_meas,
                     "worst_stabilizer": s, "worst_stabilizer_sigma": expectation_sigma(s, t.shots),
                     "worst_destabilizer": d, "worst_destabilizer_sigma": expectation_sigma(d, t.shots),
                     "passed": v.passed})
    return rows


CLV_COLUMNS = ["n", "trial", "p_2q", "p_meas", "worst_stabilizer", "worst_stabilizer_sigma",
               "worst_destabilizer", "worst_destabilizer_sigma", "passed"]
GHZ_COLUMNS = ["p_2q", "p_meas", "n", "f_min", "sigma_f", "passed"]
SHOR_COLUMNS = ["n", "shots", "successes", "q_s", "sigma", "eta", "passed"]
QEC_COLUMNS = ["scheme", "p", "kind", "d", "infidelity", "sigma"]


def _ghz_rows(result: ghz.GhzSearch, model: NoiseModel) -> list[dict[str, Any]]:
    return [{"p_2q": model.p_2q, "p_meas": model.p_meas, "n": t.n, "f_min": t.f_min, "sigma_f": t.sigma_f,
             "passed": t.passed} for t in result.trials]


def _qec_rows(res: qec.QecResult) -> list[dict[str, Any]]:
    fp, fl = res.q.physical, res.q.logical
    base = {"scheme": res.scheme, "p": res.p if res.p is not None else ""}
    return [{**base, "kind": "physical", "d": 0, "infidelity": 1 - fp.value, "sigma": fp.sigma},
            {**base, "kind": "logical", "d": res.logical.d, "infidelity": 1 - fl.value, "sigma": fl.sigma}]


def run_benchmark(cfg: RunConfig, out: Path, log: Callable[[str], None]) -> BenchmarkReport:
    model = cfg.model()
    report = BenchmarkReport(cfg.seed, cfg.recorded())
    name = cfg.benchmark
    shots = cfg.shot_count(name)
    if name == "clv":
        lo, hi = cfg.range()
        res = clv.clv_score(model, shots, cfg.seed, cfg.search, lo, hi, cfg.workers, cfg.aggregate,
                            progress=lambda n, ok: log(f"clv N={n}: {'pass' if ok else 'fail'}"))
        report.sections["clv"] = clv.section(res, shots, lo, hi)
        write_csv(out / "clv.csv", CLV_COLUMNS, _clv_rows(res, model))
    elif name == "ghz":
        lo, hi = cfg.range()
        res = ghz.ghz_score(model, shots, cfg.seed, lo, hi,
                            progress=lambda n, ok: log(f"ghz N={n}: {'pass' if ok else 'fail'}"))
        dfe = None
        if cfg.dfe and res.score is not None:
            dfe = ghz.dfe_ghz(res.score, 0.05, 0.05, model, cfg.seed)
        report.sections["ghz"] = ghz.section(res, shots, lo, hi, dfe)
        write_csv(out / "ghz.csv", GHZ_COLUMNS, _ghz_rows(res, model))
    elif name == "shor":
        lo, hi = cfg.range()
        widest = shor.PeriodInstance.default(hi)
        if widest.num_qubits > MAX_QUBITS:  # fail before spending time on the smaller n
            raise CapacityError(f"n = {hi} needs {widest.num_qubits} qubits; the statevector cap is {MAX_QUBITS}")
        res = shor.shor_score(model, shots, cfg.seed, hi, lo,
                              progress=lambda n, ok: log(f"shor n={n}: {'pass' if ok else 'fail'}"))
        report.sections["shor"] = shor.section(res, shots, model, hi)
        write_csv(out / "shor.csv", SHOR_COLUMNS, [
            {"n": t.instance.n, "shots": t.shots, "successes": t.successes, "q_s": t.q_s, "sigma": t.sigma,
             "eta": t.eta, "passed": t.passed} for t in res.trials])
    else:
        log(f"qec d={cfg.d}: {shots} shots per basis")
        res = qec.run_qec(model, cfg.d, shots, cfg.seed, cfg.scheme, cfg.p)
        report.sections["qec"] = qec.section(res)
        write_csv(out / "qec.csv", QEC_COLUMNS, _qec_rows(res))
    return report


# ------------------------------------------------------------------ presets

@dataclass(frozen=True)
class Preset:
    description: str
    run: Callable[[RunConfig, Path, Callable[[str], None]], BenchmarkReport]


def _fig1(cfg, out, log):
    model = NoiseModel(p_2q=1e-3, p_meas=1e-2)
    shots = cfg.shots or clv.MIN_SHOTS
    ns = list(range(2, 65))
    res = clv.clv_sweep(model, shots, cfg.seed, ns, cfg.workers, cfg.aggregate)
    write_csv(out / "fig1.csv", CLV_COLUMNS, _clv_rows(res, model))
    report = BenchmarkReport(cfg.seed, {**cfg.recorded(), "grid": {"n": ns}, "noise": model.to_dict()})
    report.sections["clv"] = clv.section(res, shots, ns[0], ns[-1])
    return report


FIG2_P2Q = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
FIG2_PM = [1e-3, 3e-3, 1e-2, 3e-2]


def _fig2(cfg, out, log):
    shots = cfg.shots or clv.MIN_SHOTS
    rows = []
    for p2 in FIG2_P2Q:
        for pm in FIG2_PM:
            res = clv.clv_score(NoiseModel(p_2q=p2, p_meas=pm), shots, cfg.seed, "linear-up", 2, 64, cfg.workers,
                                cfg.aggregate)
            log(f"fig2 p2q={p2:g} pm={pm:g}: score {res.score}")
            rows.append({"p_2q": p2, "p_meas": pm, "score": "" if res.score is None else res.score,
                         "capped": res.capped})
    write_csv(out / "fig2.csv", ["p_2q", "p_meas", "score", "capped"], rows)
    return BenchmarkReport(cfg.seed, {**cfg.recorded(), "grid": {"p_2q": FIG2_P2Q, "p_meas": FIG2_PM}})


FIG3_PAIRS = [(1e-3, 1e-2), (1e-3, 1e-3), (3e-4, 3e-3), (1e-4, 1e-3)]
GHZ_GRID_P2Q = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
GHZ_GRID_PM = [1e-3, 3e-3, 1e-2, 3e-2]


def _fig3(cfg, out, log):
    shots = cfg.shots or ghz.DEFAULT_SHOTS
    rows, grid = [], []
    for p2, pm in FIG3_PAIRS:
        res = ghz.ghz_score(NoiseModel(p_2q=p2, p_meas=pm), shots, cfg.seed, 2, 64)
        log(f"fig3 p2q={p2:g} pm={pm:g}: score {res.score}")
        rows.extend(_ghz_rows(res, NoiseModel(p_2q=p2, p_meas=pm)))
    for p2 in GHZ_GRID_P2Q:
        for pm in GHZ_GRID_PM:
            res = ghz.ghz_score(NoiseModel(p_2q=p2, p_meas=pm), shots, cfg.seed, 2, 64)
            grid.append({"p_2q": p2, "p_meas": pm, "score": "" if res.score is None else res.score})
    write_csv(out / "fig3.csv", GHZ_COLUMNS, rows)
    write_csv(out / "ghz_grid.csv", ["p_2q", "p_meas", "score"], grid)
    return BenchmarkReport(cfg.seed, {**cfg.recorded(), "grid": {"pairs": [list(p) for p in FIG3_PAIRS],
                                                                 "p_2q": GHZ_GRID_P2Q, "p_meas": GHZ_GRID_PM}})


FIG4_P2Q = [1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
FIG4_PM = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1]


def _fig4(cfg, out, log):
    rows = []
    for p2 in FIG4_P2Q:
        for pm in FIG4_PM:
            s = shor.analytic_score_estimate(p2, pm)
            rows.append({"p_2q": p2, "p_meas": pm, "analytic_score": "" if s is None else s})
    write_csv(out / "fig4.csv", ["p_2q", "p_meas", "analytic_score"], rows)
    return BenchmarkReport(cfg.seed, {**cfg.recorded(), "grid": {"p_2q": FIG4_P2Q, "p_meas": FIG4_PM}})


FIG5_P = [3e-4, 5e-4, 1e-3, 2e-3, 3e-3, 5e-3]
FIG5_D = [3, 5]
PRESET_QEC_SHOTS = 100_000


def _fig5(cfg, out, log):
    shots = cfg.shots or PRESET_QEC_SHOTS
    rows = []
    for scheme in ("sd6", "si1000"):
        for p in FIG5_P:
            model = scheme_to_model(scheme, p)
            phys = qec.physical_bell_tally(model, shots, cfg.seed)
            fp = qec.bell_fidelity_from_tally(phys)
            rows.append({"scheme": scheme, "p": p, "kind": "physical", "d": 0, "infidelity": 1 - fp.value,
                         "sigma": fp.sigma})
            for d in FIG5_D:
                fl = qec.bell_fidelity_from_tally(qec.logical_bell_tally(d, model, shots, cfg.seed).tally)
                log(f"fig5 {scheme} p={p:g} d={d}: infidelity {1 - fl.value:.3g}")
                rows.append({"scheme": scheme, "p": p, "kind": "logical", "d": d, "infidelity": 1 - fl.value,
                             "sigma": fl.sigma})
    write_csv(out / "fig5.csv", QEC_COLUMNS, rows)
    return BenchmarkReport(cfg.seed, {**cfg.recorded(), "grid": {"p": FIG5_P, "d": FIG5_D}})


FIG6_P2Q = [3e-4, 5e-4, 1e-3, 2e-3, 3e-3]
FIG6_PM = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2]
FIG6_D = 5


def _fig6(cfg, out, log):
    shots = cfg.shots or PRESET_QEC_SHOTS
    base = scheme_to_model("si1000", 1e-3)
    rows = []
    for p2 in FIG6_P2Q:
        for pm in FIG6_PM:
            model = base.replace(p_2q=p2, p_meas=pm)
            res = qec.run_qec(model, FIG6_D, shots, cfg.seed)
            log(f"fig6 p2q={p2:g} pm={pm:g}: Q {res.q.value}")
            rows.append({"p_2q": p2, "p_meas": pm, "d": FIG6_D, "q": "" if res.q.unbounded else res.q.value,
                         "q_sigma": "" if res.q.unbounded else res.q.sigma})
    write_csv(out / "fig6.csv", ["p_2q", "p_meas", "d", "q", "q_sigma"], rows)
    return BenchmarkReport(cfg.seed, {**cfg.recorded(), "grid": {"p_2q": FIG6_P2Q, "p_meas": FIG6_PM, "d": FIG6_D}})


PRESETS: dict[str, Preset] = {
    "fig1": Preset("CLV worst-case expectations vs N at p_2q=1e-3, p_m=1e-2", _fig1),
    "fig2": Preset("CLV score over a (p_2q, p_m) grid", _fig2),
    "fig3": Preset("GHZ F_min vs N for four noise pairs, plus the GHZ score grid", _fig3),
    "fig4": Preset("analytic Shor score estimate over a (p_2q, p_m) grid", _fig4),
    "fig5": Preset("physical and logical Bell infidelity vs p for SD6 and SI1000, d in {3, 5}", _fig5),
    "fig6": Preset("Q at d=5 over a (p_2q, p_m) grid around SI1000 p=1e-3", _fig6),
}


# ------------------------------------------------------------------- export

def export_circuits(benchmark: str, out: Path, seed: int, n: int | None, d: int) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}
    if benchmark == "clv":
        n = n or 4
        for m, (tab, stabs, destabs) in enumerate(clv.draw_cliffords(n, seed)):
            prep = clv.preparation_circuit(clv.synthesize_clifford_circuit(tab))
            files[f"clv_n{n}_c{m}.qasm"] = emit_qasm(prep)
            for kind, group in (("stab", stabs), ("destab", destabs)):
                for k, p in enumerate(group):
                    files[f"clv_n{n}_c{m}_{kind}{k}.qasm"] = emit_qasm(prep.then(clv.measurement_layer(p)))
    elif benchmark == "ghz":
        n = n or 8
        files[f"ghz_n{n}.qasm"] = emit_qasm(ghz.build_ghz_circuit(n))
        for basis in ("x", "z"):
            files[f"ghz_n{n}_{basis}.qasm"] = emit_qasm(ghz.setting_circuit(n, basis))
    elif benchmark == "shor":
        n = n or 3
        files[f"shor_n{n}.qasm"] = emit_qasm(shor.build_period_circuit(shor.PeriodInstance.default(n)))
    else:
        layout = qec.SurgeryLayout(d)
        for key, (final, perfect) in {"X": ("X", False), "Z": ("Z", False), "YX": ("X", True),
                                      "YZ": ("Z", True)}.items():
            exp = qec.build_surgery_experiment(layout, final, perfect)
            files[f"qec_d{d}_{key}.qasm"] = emit_qasm(exp.circuit) + qec.detector_comments(exp)
    paths = []
    for name, text in sorted(files.items()):
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


# ---------------------------------------------------------------------- CLI

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("benchmark", nargs="?", choices=BENCHMARKS)
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("--preset", help="figure reproduction grid: " + ", ".join(PRESETS))
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--scheme", help="sd6, si1000 or custom (default)")
    p.add_argument("--p", type=float, help="single error parameter for sd6/si1000")
    for flag, text in (("p1q", "single-qubit gate"), ("p2q", "two-qubit gate"), ("pinit", "initialization"),
                       ("pm", "readout"), ("pidle", "idle"), ("pres", "resonator idle")):
        p.add_argument(f"--{flag}", type=float, help=f"custom scheme: {text} error rate")
    p.add_argument("--shots", type=int)
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--search", choices=("linear-up", "binary"))
    p.add_argument("--aggregate", choices=("mean", "rms"), help="CLV averaged-criterion sigma")
    p.add_argument("--d", type=int, help="code distance for qec")
    p.add_argument("--dfe", action="store_true", default=None, help="add a direct fidelity estimate (ghz)")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./kpibench-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpibench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("run", help="run a benchmark or a figure preset"))
    ex = sub.add_parser("export", help="write the benchmark's circuits as OpenQASM 2.0")
    ex.add_argument("benchmark", choices=BENCHMARKS)
    ex.add_argument("--seed", type=int, default=None)
    ex.add_argument("--n", type=int)
    ex.add_argument("--d", type=int, default=3)
    ex.add_argument("--out", help="output directory")
    ver = sub.add_parser("verify", help="recompute every verdict of a report")
    ver.add_argument("report")
    sub.add_parser("presets", help="list the figure presets")
    return parser


def _output_dir(value: str | None) -> Path:
    return Path(value or os.environ.get(OUT_ENV) or "kpibench-out")


def _cmd_run(args: argparse.Namespace) -> int:
    file_values: dict[str, Any] = {}
    if args.config:
        try:
            file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("file", str(exc)) from None
        if not isinstance(file_values, dict):
            raise ConfigError("file", "top level must be an object")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    cfg = RunConfig.from_sources(file_values, flags)
    out = _output_dir(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    def log(msg: str) -> None:
        print(msg, file=sys.stderr)

    report = PRESETS[cfg.preset].run(cfg, out, log) if cfg.preset else run_benchmark(cfg, out, log)
    write_report(report, out / "report.json")
    for name, sec in sorted(report.sections.items()):
        score = sec.get("score")
        if isinstance(score, dict):
            score = score.get("q")
        print(f"{name}: score {score}")
    print(f"report written to {out / 'report.json'}")
    return EXIT_OK


def _cmd_export(args: argparse.Namespace) -> int:
    if args.benchmark == "clv" and args.seed is None:
        raise ConfigError("seed", "a seed is required to draw the Cliffords")
    if args.d < 3 or args.d % 2 == 0:
        raise ConfigError("d", "code distance must be odd and >= 3")
    if args.n is not None and args.n < 2:
        raise ConfigError("n", "must be at least 2")
    paths = export_circuits(args.benchmark, _output_dir(args.out), args.seed or 0, args.n, args.d)
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    report = read_report(args.report)
    problems = verify_report(report)
    for msg in problems:
        print(f"FAIL {msg}")
    if problems:
        return 1
    print(f"PASS {args.report}: {', '.join(sorted(report.sections)) or 'no sections'}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "export":
            return _cmd_export(args)
        if args.command == "verify":
            return _cmd_verify(args)
        for name, preset in PRESETS.items():
            print(f"{name}  {preset.description}")
        return EXIT_OK
    except (ConfigError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except Exception:  # noqa: BLE001 - report, then map to the internal-error code
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
