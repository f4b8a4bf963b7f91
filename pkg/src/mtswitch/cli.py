"""Command-line front end: generate problems, run learners, sweep grids, report.

Configuration is an INI file with these sections (unknown keys are errors)::

    [run]      algorithm (experts | mw | specialist-oracle | matmw | ogd), seed
    [problem]  lengths (comma list), k, m, n, p, noise, dim, radius
    [params]   eta, C_hat, gamma, XK2_hat, k_hat, m_hat, width
    [sweep]    section.key = v1 v2 ...   (whitespace-separated grid values)
    [output]   dir

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 bound
violation under ``--assert-bounds``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .core import ComparatorSequence, ParameterError, TaskSchedule
from .genbench import PlantedProblem, evaluate, gen_biclustered_labels, gen_expert_problem, gen_linear_stream
from .harness import ALGORITHMS, PROBLEM_KIND, Overrides, run_algorithm

FORMAT = "mtswitch-problem"
FORMAT_VERSION = 1
CSV_COLUMNS = ("trial", "task", "local_time", "y", "ybar_or_vdotl", "expected_loss", "comparator_loss", "cum_regret")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_BOUND = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _opt(kind):
    return lambda text: None if text.strip().lower() in ("", "none") else kind(text)


# (parser, default); a default of REQUIRED means the key must be present
REQUIRED = object()
SCHEMA = {
    "run": {"algorithm": (str, REQUIRED), "seed": (int, 0)},
    "problem": {
        "lengths": (_int_list, REQUIRED),
        "k": (int, REQUIRED),
        "m": (int, REQUIRED),
        "n": (_opt(int), None),
        "p": (_opt(int), None),
        "noise": (float, 0.0),
        "dim": (int, 5),
        "radius": (float, 10.0),
    },
    "params": {
        "eta": (_opt(float), None),
        "C_hat": (_opt(float), None),
        "gamma": (_opt(float), None),
        "XK2_hat": (_opt(float), None),
        "k_hat": (_opt(int), None),
        "m_hat": (_opt(int), None),
        "width": (float, 1.0),
    },
    "output": {"dir": (str, "out")},
}


@dataclass
class ExperimentConfig:
    algorithm: str
    seed: int
    problem: dict
    params: dict
    out_dir: str = "out"
    sweep: list = field(default_factory=list)

    def overrides(self) -> Overrides:
        return Overrides(**self.params)

    def echo(self) -> dict:
        return {"algorithm": self.algorithm, "seed": self.seed, "problem": dict(self.problem),
                "params": dict(self.params)}


def _parse_value(section: str, key: str, text: str):
    parser, _ = SCHEMA[section][key]
    try:
        return parser(text)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {text!r} ({exc})") from None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    values = {}
    for section in cp.sections():
        if section != "sweep" and section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
    for section, keys in SCHEMA.items():
        given = dict(cp[section]) if cp.has_section(section) else {}
        unknown = sorted(set(given) - set(keys))
        if unknown:
            raise ConfigError(f"{source}: unknown key {section}.{unknown[0]}")
        out = {}
        for key, (_, default) in keys.items():
            if key in given:
                out[key] = _parse_value(section, key, given[key])
            elif default is REQUIRED:
                raise ConfigError(f"{source}: missing required key {section}.{key}")
            else:
                out[key] = default
        values[section] = out

    sweep = []
    if cp.has_section("sweep"):
        for dotted, text in cp["sweep"].items():
            section, _, key = dotted.partition(".")
            if section not in ("problem", "params") or key not in SCHEMA[section]:
                raise ConfigError(f"{source}: sweep key {dotted} must name a problem.* or params.* key")
            grid = [_parse_value(section, key, v) for v in text.split()]
            if not grid:
                raise ConfigError(f"{source}: sweep key {dotted} has no values")
            sweep.append((section, key, grid))

    cfg = ExperimentConfig(values["run"]["algorithm"], values["run"]["seed"], values["problem"],
                           values["params"], values["output"]["dir"], sweep)
    validate(cfg, source)
    return cfg


def validate(cfg: ExperimentConfig, source: str = "<config>") -> None:
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"{source}: run.algorithm must be one of {', '.join(ALGORITHMS)}")
    kind = PROBLEM_KIND[cfg.algorithm]
    if kind == "experts" and cfg.problem["n"] is None:
        raise ConfigError(f"{source}: missing required key problem.n for {cfg.algorithm}")
    if kind == "matrix" and cfg.problem["p"] is None:
        raise ConfigError(f"{source}: missing required key problem.p for {cfg.algorithm}")
    if kind == "linear" and len(cfg.problem["lengths"]) != 1:
        raise ConfigError(f"{source}: ogd runs a single task; problem.lengths must have one entry")
    if cfg.seed < 0:
        raise ConfigError(f"{source}: run.seed must be non-negative")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def _streams(seed: int):
    problem_seq, learner_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(problem_seq), np.random.default_rng(learner_seq)


def build_problem(cfg: ExperimentConfig, rng) -> PlantedProblem:
    pr = cfg.problem
    kind = PROBLEM_KIND[cfg.algorithm]
    if kind == "experts":
        return gen_expert_problem(pr["n"], pr["lengths"], pr["k"], pr["m"], pr["noise"], rng)
    if kind == "matrix":
        return gen_biclustered_labels(pr["p"], pr["m"], pr["lengths"], rng, k=pr["k"], dim=pr["dim"])
    return gen_linear_stream(pr["lengths"][0], pr["dim"], pr["k"], rng, radius=pr["radius"], m=pr["m"])


def _arr(a):
    return None if a is None else np.asarray(a).tolist()


def problem_to_dict(problem: PlantedProblem) -> dict:
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": problem.kind,
        "s": problem.schedule.s,
        "tasks": list(problem.schedule.tasks),
        "comparator": [list(seq) for seq in problem.comparator.modes],
        "k": problem.k,
        "m": problem.m,
        "labels": _arr(problem.labels),
        "losses": _arr(problem.losses),
        "expert_of_mode": _arr(problem.expert_of_mode),
        "instances": _arr(problem.instances),
        "U_star": _arr(problem.U_star),
        "points": _arr(problem.points),
    }


def problem_from_dict(d: dict) -> PlantedProblem:
    if d.get("format") != FORMAT:
        raise ConfigError("not a problem file")
    if d.get("version") != FORMAT_VERSION:
        raise ConfigError(f"problem file version {d.get('version')} is not supported")
    schedule = TaskSchedule(tuple(d["tasks"]), d["s"])
    comparator = ComparatorSequence(tuple(tuple(seq) for seq in d["comparator"]))

    def arr(key, dtype):
        return None if d.get(key) is None else np.asarray(d[key], dtype=dtype)

    C = None
    if d["kind"] == "matrix":
        C = np.zeros((schedule.T, d["m"]), dtype=int)
        C[np.arange(schedule.T), comparator.global_sequence(schedule)] = 1
    instances = arr("instances", float if d["kind"] == "linear" else np.int64)
    U_star = arr("U_star", float if d["kind"] == "linear" else np.int64)
    return PlantedProblem(
        d["kind"], schedule, comparator, d["k"], d["m"], arr("labels", np.int64),
        losses=arr("losses", float), expert_of_mode=arr("expert_of_mode", np.int64),
        instances=instances, U_star=U_star, C=C, points=arr("points", float),
    )


def dumps_problem(problem: PlantedProblem) -> str:
    return json.dumps(problem_to_dict(problem), sort_keys=True, separators=(",", ":")) + "\n"


def load_problem(path: str | Path) -> PlantedProblem:
    path = Path(path)
    try:
        return problem_from_dict(json.loads(path.read_text()))
    except (KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: malformed problem file ({exc})") from None


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def trace_csv(ledger) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in ledger.rows():
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def execute(cfg: ExperimentConfig, problem: PlantedProblem | None = None):
    """Run one configured experiment; returns ``(ledger, summary)``."""
    problem_rng, learner_rng = _streams(cfg.seed)
    if problem is None:
        problem = build_problem(cfg, problem_rng)
    start = time.perf_counter()
    result = run_algorithm(cfg.algorithm, problem, cfg.overrides(), learner_rng)
    runtime = time.perf_counter() - start
    report = evaluate(result.ledger)
    summary = {
        "algorithm": cfg.algorithm,
        "backend": _backend.BACKEND,
        "T": problem.T,
        "regret": report.regret,
        "bound": report.bound,
        "within_bound": report.within_bound,
        "mistakes": report.mistakes,
        "runtime_s": runtime,
        "parameters": result.params,
        "config": cfg.echo(),
    }
    return result.ledger, summary


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from None


def _apply_cli(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    validate(cfg)
    return cfg


def cmd_generate(args) -> int:
    cfg = _apply_cli(load_config(args.config), args)
    problem = build_problem(cfg, _streams(cfg.seed)[0])
    path = Path(cfg.out_dir) / "problem.json"
    _write(path, dumps_problem(problem))
    print(f"wrote {path} ({problem.kind}, T={problem.T}, k={problem.k}, m={problem.m})")
    return EXIT_OK


def _summary_line(s: dict) -> str:
    flag = "ok" if s["within_bound"] else "VIOLATED"
    return (f"{s['algorithm']}: T={s['T']} regret={s['regret']:.4f} bound={s['bound']:.4f} "
            f"[{flag}] mistakes={s['mistakes']} runtime={s['runtime_s']:.3f}s")


def cmd_run(args) -> int:
    cfg = _apply_cli(load_config(args.config), args)
    problem = load_problem(args.problem) if args.problem else None
    try:
        ledger, summary = execute(cfg, problem)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(cfg.out_dir)
    _write(out / "trace.csv", trace_csv(ledger))
    _write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(_summary_line(summary))
    if args.assert_bounds and not summary["within_bound"]:
        return EXIT_BOUND
    return EXIT_OK


def sweep_points(cfg: ExperimentConfig):
    if not cfg.sweep:
        raise ConfigError("sweep needs a non-empty [sweep] section")
    names = [f"{sec}.{key}" for sec, key, _ in cfg.sweep]
    for combo in itertools.product(*(grid for _, _, grid in cfg.sweep)):
        point = ExperimentConfig(cfg.algorithm, cfg.seed, dict(cfg.problem), dict(cfg.params), cfg.out_dir)
        for (sec, key, _), value in zip(cfg.sweep, combo):
            getattr(point, sec)[key] = value
        validate(point)
        yield dict(zip(names, combo)), point


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    points = list(sweep_points(cfg))

    def one(item):
        coords, point = item
        try:
            _, summary = execute(point)
        except ParameterError as exc:
            raise ConfigError(f"grid point {coords}: {exc}") from None
        return {**coords, **{k: summary[k] for k in ("regret", "bound", "within_bound", "mistakes")}}

    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves grid order regardless of completion order
        return list(pool.map(one, points))


def cmd_sweep(args) -> int:
    cfg = _apply_cli(load_config(args.config), args)
    rows = run_sweep(cfg, args.workers)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["index", *[k for k in rows[0] if k not in ("regret", "bound", "within_bound", "mistakes")],
              "regret", "bound", "within_bound", "mistakes"]
    writer.writerow(header)
    for i, row in enumerate(rows):
        writer.writerow([i, *[_fmt(row[h]) for h in header[1:]]])
    out = Path(cfg.out_dir)
    _write(out / "sweep.csv", buf.getvalue())
    rate = sum(r["within_bound"] for r in rows) / len(rows)
    _write(out / "sweep.json", json.dumps({"rows": rows, "satisfaction_rate": rate,
                                           "config": cfg.echo()}, indent=2, sort_keys=True) + "\n")
    print(f"{len(rows)} grid points, bound satisfied on {rate:.1%}")
    if args.assert_bounds and rate < 1.0:
        return EXIT_BOUND
    return EXIT_OK


def cmd_report(args) -> int:
    out = Path(args.out or "out")
    found = False
    summary = out / "summary.json"
    if summary.exists():
        found = True
        print(_summary_line(json.loads(summary.read_text())))
    sweep = out / "sweep.json"
    if sweep.exists():
        found = True
        data = json.loads(sweep.read_text())
        print(f"{'point':>5}  {'regret':>12}  {'bound':>12}  ok")
        for i, row in enumerate(data["rows"]):
            print(f"{i:>5}  {row['regret']:>12.4f}  {row['bound']:>12.4f}  {'yes' if row['within_bound'] else 'NO'}")
        print(f"bound satisfied on {data['satisfaction_rate']:.1%} of grid points")
    if not found:
        raise OSError(f"{out}: no summary.json or sweep.json to report")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtswitch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="INI experiment config")
            p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        return p

    common(sub.add_parser("generate", help="write a planted problem file")).set_defaults(func=cmd_generate)
    run = common(sub.add_parser("run", help="run one learner and write its trace"))
    run.add_argument("--problem", help="problem file from 'generate'; generated inline if omitted")
    run.add_argument("--assert-bounds", action="store_true", help="exit 3 if the regret bound is violated")
    run.set_defaults(func=cmd_run)
    sweep = common(sub.add_parser("sweep", help="run every point of the [sweep] grid"))
    sweep.add_argument("--workers", type=int, default=None, help="thread count (default: executor default)")
    sweep.add_argument("--assert-bounds", action="store_true", help="exit 3 if any grid point violates its bound")
    sweep.set_defaults(func=cmd_sweep)
    common(sub.add_parser("report", help="summarise results in an output directory"),
           config=False).set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
