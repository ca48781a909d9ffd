"""Command line: ``sqc generate | solve | report``.

Errors are reported on one stderr line, ``error: <CODE>: <message>``, with
exit status 2.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annealer import hubo_to_qubo
from .model import (
    BRUTE_FORCE_MAX_SPINS,
    CapacityError,
    HuboInstance,
    ParseError,
    brute_force_ground,
    dumps_instance,
    generate_sidon_instance,
    heavy_hex_156,
    load_instance,
    random_coupling_map,
)
from .orchestrator import (
    RESULT_SCHEMA_VERSION,
    AnnealerBackend,
    BfDcqoConfig,
    DigitalBackend,
    RunResult,
    Stage,
    StageError,
    run_sqc,
)

TOPOLOGIES = ("heavy-hex-156", "random-graph")
# Annotation only: digital sampling rate and annealing time per shot.
DIGITAL_SHOT_SECONDS = 1e-4
ANNEAL_SHOT_SECONDS = 90e-6
EXACT_AUTO_MAX_SPINS = 20

DEFAULT_STAGES = {
    "annealer-large": {"kind": "annealer", "shots": "3000", "ls_sweeps": "3", "ls_top_k": "3000"},
    "annealer-low": {"kind": "annealer", "shots": "300", "ls_sweeps": "1", "ls_top_k": "1"},
    "bf-dcqo": {"kind": "bf-dcqo", "iterations": "10", "shots": "1000"},
    "bf-dcqo-warm": {"kind": "bf-dcqo", "iterations": "1", "shots": "1000"},
}
DEFAULT_APPROACHES = {
    "qa-large": ["annealer-large"],
    "bf-dcqo": ["bf-dcqo"],
    "qa-low": ["annealer-low"],
    "sqc": ["annealer-low", "bf-dcqo-warm"],
}
MODES = {
    "standalone-annealer": ["qa-large"],
    "standalone-annealer-low": ["qa-low"],
    "standalone-bf-dcqo": ["bf-dcqo"],
    "sqc": ["sqc"],
    "table1": ["qa-large", "bf-dcqo", "qa-low", "sqc"],
}
_BFDCQO_KEYS = {
    "iterations": int, "shots": int, "cvar_alpha": float, "ls_sweeps": int, "ls_top_k": int,
    "total_time": float, "n_trot": int, "mode": str, "bias_function": str,
    "bias_scale": float, "transfer": str,
}
_ANNEALER_KEYS = {"sweeps": int, "t_hot": float, "t_cold": float}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    config_path: str
    seed: int
    output_dir: str
    artifacts: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def make_instance(topology: str, seed: int, n: int | None = None, edge_prob: float = 0.25) -> HuboInstance:
    if topology == "heavy-hex-156":
        cmap = heavy_hex_156()
    elif topology == "random-graph":
        if not n or n < 1:
            raise CliError("E_USAGE", "random-graph needs --n >= 1")
        cmap = random_coupling_map(n, edge_prob, seed)
    else:
        raise CliError("E_USAGE", f"unknown topology {topology!r}; choose from {', '.join(TOPOLOGIES)}")
    return generate_sidon_instance(cmap, seed)


def cmd_generate(args) -> int:
    inst = make_instance(args.topology, args.seed, args.n, args.edge_prob)
    text = dumps_instance(inst)
    if args.out:
        Path(args.out).write_text(text)
        counts = inst.order_counts()
        print(f"wrote {args.out}: {inst.num_spins} spins, terms by order {dict(sorted(counts.items()))}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def _read_config(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise CliError("E_IO", f"config file {path} not found") from None
    except configparser.ParsingError as exc:
        lineno, text = exc.errors[0]
        raise CliError("E_CONFIG", f"{path}: line {lineno}: cannot parse {text.strip()!r}") from None
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f"line {lineno}: " if lineno else ""
        raise CliError("E_CONFIG", f"{path}: {where}{exc.message}".replace("\n", " ")) from None
    return parser


def _typed(section: str, key: str, raw: str, kind):
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered not in ("yes", "no", "true", "false", "1", "0"):
                raise ValueError(raw)
            return lowered in ("yes", "true", "1")
        return kind(raw)
    except ValueError:
        raise CliError("E_CONFIG", f"[{section}] {key}: cannot read {raw!r} as {kind.__name__}") from None


def _load_instance_section(cfg: configparser.ConfigParser, base: Path) -> HuboInstance:
    if not cfg.has_section("instance"):
        raise CliError("E_CONFIG", "missing [instance] section")
    sec = cfg["instance"]
    if "file" in sec:
        try:
            return load_instance(base / sec["file"])
        except FileNotFoundError:
            raise CliError("E_IO", f"instance file {sec['file']} not found") from None
        except ParseError as exc:
            raise CliError("E_PARSE", f"{sec['file']}: {exc}") from None
    topology = sec.get("topology", "random-graph")
    n = _typed("instance", "n", sec["n"], int) if "n" in sec else None
    edge_prob = _typed("instance", "edge_prob", sec.get("edge_prob", "0.25"), float)
    seed = _typed("instance", "seed", sec.get("seed", "0"), int)
    return make_instance(topology, seed, n, edge_prob)


def _stage_settings(cfg: configparser.ConfigParser, name: str) -> dict[str, str]:
    settings = dict(DEFAULT_STAGES.get(name, {}))
    section = f"stage.{name}"
    if cfg.has_section(section):
        settings.update(cfg[section])
    if not settings:
        raise CliError("E_CONFIG", f"stage {name!r} is not defined (add a [{section}] section)")
    return settings


def build_stage(name: str, settings: dict[str, str], seed: int) -> Stage:
    section = f"stage.{name}"
    kind = settings.get("kind")
    if kind not in ("annealer", "bf-dcqo"):
        raise CliError("E_CONFIG", f"[{section}] kind must be 'annealer' or 'bf-dcqo', got {kind!r}")
    allowed = dict(_BFDCQO_KEYS)
    if kind == "annealer":
        allowed.update(_ANNEALER_KEYS, use_qubo=bool)
    cfg_kwargs, backend_kwargs = {}, {}
    for key, raw in settings.items():
        if key == "kind":
            continue
        if key not in allowed:
            raise CliError("E_CONFIG", f"[{section}] unknown key {key!r}")
        value = _typed(section, key, raw, allowed[key])
        if key in _ANNEALER_KEYS or key == "use_qubo":
            backend_kwargs[key] = value
        else:
            cfg_kwargs[key] = value
    if kind == "annealer":
        cfg_kwargs["iterations"] = 1
    try:
        config = BfDcqoConfig(seed=seed, **cfg_kwargs)
    except ValueError as exc:
        raise CliError("E_CONFIG", f"[{section}] {exc}") from None
    if kind == "annealer":
        backend = AnnealerBackend(**backend_kwargs)
    else:
        backend = DigitalBackend(config.total_time, config.n_trot, config.mode)
    return Stage(name, kind, backend, config)


def resolve_approaches(cfg: configparser.ConfigParser) -> dict[str, list[str]]:
    run = cfg["run"] if cfg.has_section("run") else {}
    if "approaches" in run:
        names = [a.strip() for a in run["approaches"].split(",") if a.strip()]
    else:
        mode = run.get("mode", "sqc")
        if mode not in MODES:
            raise CliError("E_CONFIG", f"[run] mode must be one of {', '.join(MODES)}, got {mode!r}")
        names = MODES[mode]
    out = {}
    for name in names:
        section = f"approach.{name}"
        if cfg.has_section(section):
            out[name] = [s.strip() for s in cfg[section].get("stages", "").split(",") if s.strip()]
        elif name in DEFAULT_APPROACHES:
            out[name] = DEFAULT_APPROACHES[name]
        else:
            raise CliError("E_CONFIG", f"approach {name!r} is not defined (add [{section}])")
        if not out[name]:
            raise CliError("E_CONFIG", f"approach {name!r} has no stages")
    return out


def estimated_runtime(result: dict) -> float:
    total = 0.0
    for st in result["stages"]:
        rate = ANNEAL_SHOT_SECONDS if st["kind"] == "annealer" else DIGITAL_SHOT_SECONDS
        total += st["shots"] * rate
    return total


SUMMARY_COLUMNS = ["approach", "shots", "est_runtime_s", "ar", "best_ar", "best_energy", "qubits", "best_in"]
_BEST_RULES = {"shots": min, "ar": max, "best_ar": max, "best_energy": min}


def summary_rows(results: list[dict]) -> list[dict]:
    rows = []
    for res in results:
        if res.get("version") != RESULT_SCHEMA_VERSION:
            raise CliError("E_SCHEMA", f"result schema version {res.get('version')} != {RESULT_SCHEMA_VERSION}")
        tot = res.get("totals")
        if not tot:
            raise CliError("E_SCHEMA", f"result {res.get('name')!r} has no totals")
        rows.append({
            "approach": res["name"],
            "shots": tot["shots"],
            "est_runtime_s": round(estimated_runtime(res), 6),
            "ar": tot["ar"],
            "best_ar": tot["best_ar"],
            "best_energy": tot["best_energy"],
            "qubits": res.get("qubits", f"{res['num_spins']}"),
        })
    for row in rows:
        marks = []
        for col, pick in _BEST_RULES.items():
            values = [r[col] for r in rows if r[col] is not None]
            if values and row[col] is not None and row[col] == pick(values):
                marks.append(col)
        row["best_in"] = ";".join(marks)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def rows_to_text(rows: list[dict]) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.4f}"
        return "-" if v is None else str(v)

    cells = [SUMMARY_COLUMNS] + [[fmt(r[c]) for c in SUMMARY_COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(SUMMARY_COLUMNS))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def histogram_csv(results: dict[str, RunResult], bins: int) -> str:
    finals = {name: r.stages[-1].samples for name, r in results.items()}
    lo = min(float(s.energies.min()) for s in finals.values())
    hi = max(float(s.energies.max()) for s in finals.values())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["approach", "bin_low", "bin_high", "count"])
    for name, s in finals.items():
        counts, _ = np.histogram(s.energies, bins=edges, weights=s.counts)
        for a, b, c in zip(edges, edges[1:], counts):
            writer.writerow([name, repr(float(a)), repr(float(b)), int(c)])
    return buf.getvalue()


def solve(config_path: str, seed: int | None = None, out: str | None = None) -> RunManifest:
    cfg = _read_config(config_path)
    base = Path(config_path).resolve().parent
    run = cfg["run"] if cfg.has_section("run") else {}
    run_seed = seed if seed is not None else _typed("run", "seed", run.get("seed", "0"), int)
    out_dir = Path(out or run.get("out", "sqc-out"))
    bins = _typed("run", "histogram_bins", run.get("histogram_bins", "30"), int)
    exact = run.get("exact", "auto").strip().lower()
    if exact not in ("auto", "yes", "no"):
        raise CliError("E_CONFIG", "[run] exact must be auto, yes or no")

    instance = _load_instance_section(cfg, base)
    approaches = resolve_approaches(cfg)
    e0 = None
    if exact == "yes" or (exact == "auto" and instance.num_spins <= EXACT_AUTO_MAX_SPINS):
        if instance.num_spins > BRUTE_FORCE_MAX_SPINS:
            raise CliError("E_CAPACITY", f"exact reference limited to {BRUTE_FORCE_MAX_SPINS} spins")
        _, e0 = brute_force_ground(instance)

    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(str(config_path), run_seed, str(out_dir))

    def emit(name: str, text: str):
        (out_dir / name).write_text(text)
        manifest.artifacts.append(name)

    emit("instance.txt", dumps_instance(instance))
    results: dict[str, RunResult] = {}
    payloads = []
    for approach, stage_names in approaches.items():
        stages, qubits = [], []
        for i, sname in enumerate(stage_names):
            settings = _stage_settings(cfg, sname)
            stage = build_stage(sname, settings, run_seed + 1000 * i)
            stages.append(stage)
            use_qubo = getattr(stage.backend, "use_qubo", False)
            qubits.append(hubo_to_qubo(instance).num_vars if use_qubo else instance.num_spins)
        try:
            result = run_sqc(instance, stages, e0=e0, name=approach)
        except StageError as exc:
            code = "E_CAPACITY" if isinstance(exc.__cause__, CapacityError) else "E_STAGE"
            raise CliError(code, f"approach {approach!r}: {exc}") from None
        except CapacityError as exc:
            raise CliError("E_CAPACITY", str(exc)) from None
        results[approach] = result
        payload = result.to_dict()
        payload["qubits"] = "/".join(str(q) for q in qubits)
        payloads.append(payload)
        emit(f"result_{approach}.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
        emit(f"samples_{approach}.csv", result.stages[-1].samples.to_csv())
    emit("histogram.csv", histogram_csv(results, bins))
    rows = summary_rows(payloads)
    emit("summary.csv", rows_to_csv(rows))
    manifest.artifacts.append("manifest.json")
    (out_dir / "manifest.json").write_text(manifest.to_json())
    sys.stdout.write(rows_to_text(rows))
    return manifest


def cmd_solve(args) -> int:
    solve(args.config, args.seed, args.out)
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def report(paths: list[str], fmt: str = "text") -> str:
    results = []
    for p in paths:
        try:
            results.append(json.loads(Path(p).read_text()))
        except FileNotFoundError:
            raise CliError("E_IO", f"result file {p} not found") from None
        except json.JSONDecodeError as exc:
            raise CliError("E_PARSE", f"{p}: {exc}") from None
    rows = summary_rows(results)
    return rows_to_csv(rows) if fmt == "csv" else rows_to_text(rows)


def cmd_report(args) -> int:
    text = report(args.results, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("E_USAGE", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqc", description="Sequential solver chains for higher-order Ising problems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a Sidon-coupling instance file")
    gen.add_argument("--topology", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n", type=int)
    gen.add_argument("--edge-prob", type=float, default=0.25)
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_generate)

    sol = sub.add_parser("solve", help="run the approaches configured in an INI file")
    sol.add_argument("--config", required=True)
    sol.add_argument("--seed", type=int)
    sol.add_argument("--out")
    sol.set_defaults(func=cmd_solve)

    rep = sub.add_parser("report", help="merge result JSON files into one table")
    rep.add_argument("results", nargs="+")
    rep.add_argument("--format", choices=("text", "csv"), default="text")
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"error: E_CAPACITY: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
