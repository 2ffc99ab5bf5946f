"""Command-line entry point.

Settings resolve in this order: command-line flag, then the ``--config``
JSON file, then the built-in default. The config file may hold the
sections ``sim`` (with optional nested ``apf`` and ``deflection``),
``dbgen``, ``eval`` and ``analyzer``.

Exit codes: 0 success, 1 usage, I/O or validation error, 2 safety
violation (a collision, or a drone placed inside an obstacle).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bundled_database_path, bundled_scenario_dir
from .dbgen import GenerationError, ScoreWeights, SearchConfig, generate_database
from .perception import (
    LIGHTING_PRESETS,
    PerceptionNoise,
    RemoteAnalyzerError,
    analyze_ground_truth,
    analyze_noisy,
    remote_analyze,
)
from .planner import PenetrationError
from .plot import render_svg, write_svg
from .retrieval import DatabaseError, RangeViolation, build_database, load_database, retrieve_with_distance, save_database
from .scene import DescriptionParseError, Lighting, Scenario, ScenarioError, load_scenario, load_scenario_dir, render_description
from .sim import SimConfig, SimulationError, metrics_dict, run, write_metrics_json, write_trajectory_csv

log = logging.getLogger("impedance_swarm")

EXIT_OK, EXIT_ERROR, EXIT_SAFETY = 0, 1, 2
ANALYZERS = ("ground-truth", "noisy", "remote")


class CliError(Exception):
    """A user-facing failure; the message is printed as-is."""


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with other input errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# -- configuration ------------------------------------------------------------


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    unknown = set(cfg) - {"sim", "apf", "deflection", "dbgen", "eval", "analyzer"}
    if unknown:
        raise CliError(f"config file {path}: unknown section(s) {sorted(unknown)}")
    return cfg


def pick(flag, section: dict, key: str, default):
    """CLI flag beats config file beats built-in default."""
    if flag is not None:
        return flag
    return section.get(key, default)


def sim_config(args, cfg: dict) -> SimConfig:
    sim = dict(cfg.get("sim", {}))
    for extra in ("apf", "deflection"):
        if extra in cfg:
            sim[extra] = {**sim.get(extra, {}), **cfg[extra]}
    if getattr(args, "seed", None) is not None:
        sim["seed"] = args.seed
    if getattr(args, "max_t", None) is not None:
        sim["max_t"] = args.max_t
    try:
        return SimConfig.from_dict(sim)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid sim configuration: {exc}") from None


# -- helpers ------------------------------------------------------------------


def _load_scenario(path: str) -> Scenario:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"scenario file not found: {p}")
    try:
        return load_scenario(p)
    except json.JSONDecodeError as exc:
        raise CliError(f"scenario file {p} is not valid JSON: {exc}") from None
    except ScenarioError as exc:
        raise CliError(f"invalid scenario {p}: {exc}") from None


def _load_db(path: str | None):
    p = Path(path) if path else bundled_database_path()
    if not p.is_file():
        raise CliError(f"database file not found: {p}")
    try:
        return load_database(p), p
    except json.JSONDecodeError as exc:
        raise CliError(f"database file {p} is not valid JSON: {exc}") from None
    except (DatabaseError, RangeViolation) as exc:
        raise CliError(f"invalid database {p}: {exc}") from None


def _analyze(scenario: Scenario, args, cfg: dict, seed: int) -> dict:
    """Run the chosen analyzer; returns description, exactness and wall time."""
    section = cfg.get("analyzer", {})
    kind = pick(args.analyzer, section, "kind", "ground-truth")
    if kind not in ANALYZERS:
        raise CliError(f"unknown analyzer {kind!r}; choose from {', '.join(ANALYZERS)}")
    t0 = time.perf_counter()
    if kind == "ground-truth":
        desc, exact = analyze_ground_truth(scenario), True
    elif kind == "noisy":
        lighting = pick(args.lighting, section, "lighting", scenario.lighting.value)
        noise = LIGHTING_PRESETS[Lighting(lighting)].with_seed(seed)
        outcome = analyze_noisy(scenario, noise)
        desc, exact = outcome.description, outcome.exact
    else:
        endpoint = pick(args.endpoint, section, "endpoint", None)
        if not endpoint:
            raise CliError("the remote analyzer needs --endpoint URL")
        timeout = float(pick(args.timeout, section, "timeout", 10.0))
        if args.image:
            try:
                image = Path(args.image).read_bytes()
            except OSError as exc:
                raise CliError(f"cannot read image {args.image}: {exc.strerror}") from None
        else:
            # without a camera frame, send the rendered top-down view of the scene
            image = render_svg(scenario).encode()
        try:
            desc = remote_analyze(endpoint, image, timeout=timeout)
        except RemoteAnalyzerError as exc:
            raise CliError(f"remote analyzer failed: {exc}") from None
        except DescriptionParseError as exc:
            raise CliError(f"remote analyzer returned an unparseable description: {exc}") from None
        exact = desc.same_semantics(analyze_ground_truth(scenario))
    return {"analyzer": kind, "description": desc, "exact": exact, "latency_s": time.perf_counter() - t0}


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, allow_nan=False))
    else:
        print(human)


def _profile_line(p) -> str:
    return f"m={p.m:.4g} k={p.k:.4g} d={p.d:.4g} F={p.F:.4g} c={p.c:.4g} v_max={p.v_max:g}"


# -- commands -----------------------------------------------------------------


@dataclass
class RunReport:
    scenario: str
    analyzer: str
    description: str
    exact_detection: bool
    record_id: int
    record_kind: str
    distance: float
    profile: dict
    metrics: dict
    outputs: dict = field(default_factory=dict)


def cmd_run(args, cfg: dict) -> int:
    scenario = _load_scenario(args.scenario)
    db, _ = _load_db(args.db)
    sim_cfg = sim_config(args, cfg)
    analysis = _analyze(scenario, args, cfg, sim_cfg.seed)
    text = render_description(analysis["description"])
    record, dist = retrieve_with_distance(text, db)
    log.info("retrieved record %d (%s) at distance %.4f", record.id, record.dominant_kind.value, dist)
    try:
        result = run(scenario, record.profile, sim_cfg)
    except PenetrationError as exc:
        print(f"error: safety violation in {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_SAFETY
    except SimulationError as exc:
        raise CliError(f"simulation failed: {exc}") from None

    out_dir = Path(args.out or Path("runs") / (scenario.name or "scenario"))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {"trajectory": out_dir / "trajectory.csv", "metrics": out_dir / "metrics.json", "plot": out_dir / "plot.svg"}
        write_trajectory_csv(result.trajectories, paths["trajectory"])
        write_metrics_json(result, paths["metrics"], {"scenario": scenario.name, "record_id": record.id, "distance": dist})
        write_svg(paths["plot"], scenario, result.trajectories, f"{scenario.name}: record {record.id} ({record.dominant_kind.value})")
    except OSError as exc:
        raise CliError(f"cannot write outputs to {out_dir}: {exc.strerror}") from None

    report = RunReport(
        scenario=scenario.name,
        analyzer=analysis["analyzer"],
        description=text,
        exact_detection=analysis["exact"],
        record_id=record.id,
        record_kind=record.dominant_kind.value,
        distance=dist,
        profile=asdict(record.profile),
        metrics=metrics_dict(result),
        outputs={k: str(v) for k, v in paths.items()},
    )
    m = result.metrics
    lines = [
        f"scenario     {report.scenario}",
        f"analyzer     {report.analyzer} (exact: {'yes' if report.exact_detection else 'no'})",
        "description  " + text.replace("\n", "\n             "),
        f"retrieved    record {record.id}, {record.dominant_kind.value} profile, distance {dist:.4f}",
        f"profile      {_profile_line(record.profile)}",
        f"max speed    {max(m.max_speed):.4f} m/s",
        f"clearance    {m.min_obstacle_clearance:.4f} m",
        f"collisions   {m.collisions}",
        f"goal reached {'no' if m.goal_reach_time is None else f'{m.goal_reach_time:.2f} s'}",
    ]
    if result.local_minimum_escapes:
        lines.append(f"escapes      {', '.join(f'{t:.2f} s' for t in result.local_minimum_escapes)}")
    lines += [f"{k:<12} {v}" for k, v in report.outputs.items()]
    _emit(args, asdict(report), "\n".join(lines))
    if m.collisions:
        print(f"error: {m.collisions} collision(s) in {scenario.name}", file=sys.stderr)
        return EXIT_SAFETY
    return EXIT_OK


def trial_seed(seed: int, scenario_index: int, trial: int) -> int:
    # independent of evaluation order, so trials can be split across workers
    return int(np.random.SeedSequence([seed, scenario_index, trial]).generate_state(1)[0])


def evaluate(scenarios: list[Scenario], db, trials: int, noise: PerceptionNoise | None, seed: int) -> list[dict]:
    """Detection and retrieval rates per scenario under a perception noise model."""
    rows = []
    for i, s in enumerate(scenarios):
        truth = analyze_ground_truth(s)
        reference, _ = retrieve_with_distance(render_description(truth), db)
        exact = correct = success = 0
        latency = 0.0
        for j in range(trials):
            t0 = time.perf_counter()
            if noise is None:
                desc, ok = truth, True
            else:
                outcome = analyze_noisy(s, noise.with_seed(trial_seed(seed, i, j)))
                desc, ok = outcome.description, outcome.exact
            got, _ = retrieve_with_distance(render_description(desc), db)
            latency += time.perf_counter() - t0
            hit = got.id == reference.id
            exact += ok
            correct += hit
            success += ok and hit
        rows.append(
            {
                "scenario": s.name,
                "trials": trials,
                "exact_detection_rate": exact / trials,
                "retrieval_correct_rate": correct / trials,
                "success_rate": success / trials,
                "mean_latency_ms": 1000.0 * latency / trials,
            }
        )
    n = sum(r["trials"] for r in rows)
    total = {"scenario": "ALL", "trials": n}
    for key in ("exact_detection_rate", "retrieval_correct_rate", "success_rate", "mean_latency_ms"):
        total[key] = sum(r[key] * r["trials"] for r in rows) / n
    return rows + [total]


EVAL_COLUMNS = ("scenario", "trials", "exact_detection_rate", "retrieval_correct_rate", "success_rate", "mean_latency_ms")


def _scenario_inputs(paths: list[str] | None) -> list[Scenario]:
    if not paths:
        return [s for s in load_scenario_dir(bundled_scenario_dir()) if "_exp" in s.name]
    out = []
    for p in paths:
        if Path(p).is_dir():
            found = load_scenario_dir(p)
            if not found:
                raise CliError(f"no scenario files in {p}")
            out += found
        else:
            out.append(_load_scenario(p))
    return out


def cmd_eval(args, cfg: dict) -> int:
    section = cfg.get("eval", {})
    trials = int(pick(args.trials, section, "trials", 1000))
    if trials < 1:
        raise CliError("--trials must be at least 1")
    lighting = pick(args.lighting, section, "lighting", "optimal")
    seed = int(pick(args.seed, section, "seed", 0))
    try:
        scenarios = _scenario_inputs(args.scenarios)
    except ScenarioError as exc:
        raise CliError(f"invalid scenario: {exc}") from None
    db, _ = _load_db(args.db)
    noise = None if lighting == "none" else LIGHTING_PRESETS[Lighting(lighting)]
    rows = evaluate(scenarios, db, trials, noise, seed)

    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=EVAL_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: f"{v:.6f}" if isinstance(v, float) else v for k, v in r.items()})
    if args.out:
        try:
            Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc.strerror}") from None
    total = rows[-1]
    human = buf.getvalue().rstrip("\n") + (
        f"\n\nlighting {lighting}: success {total['success_rate']:.4f} over {total['trials']} trials"
        f" (exact {total['exact_detection_rate']:.4f}, retrieval {total['retrieval_correct_rate']:.4f})"
    )
    _emit(args, {"lighting": lighting, "seed": seed, "rows": rows}, human)
    return EXIT_OK


def cmd_retrieve(args, cfg: dict) -> int:
    db, _ = _load_db(args.db)
    if args.query is not None:
        text = args.query.replace("\\n", "\n")
    else:
        try:
            text = Path(args.query_file).read_text(encoding="utf-8") if args.query_file != "-" else sys.stdin.read()
        except OSError as exc:
            raise CliError(f"cannot read query file {args.query_file}: {exc.strerror}") from None
    text = text.strip("\n")
    record, dist = retrieve_with_distance(text, db)
    payload = {
        "id": record.id,
        "kind": record.dominant_kind.value,
        "distance": dist,
        "text": record.description_text,
        "profile": asdict(record.profile),
    }
    human = (
        f"record {record.id} ({record.dominant_kind.value}) distance {dist:.6f}\n"
        f"profile {_profile_line(record.profile)}\n{record.description_text}"
    )
    _emit(args, payload, human)
    return EXIT_OK


def cmd_dbgen(args, cfg: dict) -> int:
    section = cfg.get("dbgen", {})
    scen_dir = Path(pick(args.scenarios, section, "scenarios", str(bundled_scenario_dir())))
    if not scen_dir.is_dir():
        raise CliError(f"scenario directory not found: {scen_dir}")
    try:
        scenarios = load_scenario_dir(scen_dir)
    except ScenarioError as exc:
        raise CliError(f"invalid scenario in {scen_dir}: {exc}") from None
    if not scenarios:
        raise CliError(f"no scenario files in {scen_dir}")
    try:
        search = SearchConfig(
            samples=int(pick(args.samples, section, "samples", 200)),
            seed=int(pick(args.seed, section, "seed", 1)),
            weights=ScoreWeights(**section.get("weights", {})),
            sim=sim_config(argparse.Namespace(), cfg),
        )
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid dbgen configuration: {exc}") from None
    t0 = time.perf_counter()
    try:
        records = generate_database(scenarios, search)
    except GenerationError as exc:
        raise CliError(str(exc)) from None
    out = Path(args.out)
    try:
        save_database(build_database(records), out)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror}") from None
    elapsed = time.perf_counter() - t0
    payload = {"out": str(out), "records": len(records), "samples": search.samples, "seed": search.seed, "seconds": elapsed}
    _emit(args, payload, f"wrote {len(records)} records to {out} ({search.samples} samples each, seed {search.seed}, {elapsed:.1f} s)")
    return EXIT_OK


def cmd_describe(args, cfg: dict) -> int:
    scenario = _load_scenario(args.scenario)
    seed = int(pick(args.seed, cfg.get("sim", {}), "seed", 0))
    analysis = _analyze(scenario, args, cfg, seed)
    text = render_description(analysis["description"])
    payload = {"scenario": scenario.name, "analyzer": analysis["analyzer"], "exact": analysis["exact"], "description": text}
    _emit(args, payload, text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _add_analyzer_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("analyzer")
    g.add_argument("--analyzer", choices=ANALYZERS, default=None, help="scene analyzer (default: ground-truth)")
    g.add_argument("--lighting", choices=[x.value for x in Lighting], default=None, help="noise preset for --analyzer noisy (default: the scenario's own)")
    g.add_argument("--endpoint", default=None, help="URL of the remote analyzer service")
    g.add_argument("--image", default=None, help="image file sent to the remote analyzer (default: rendered top-down SVG)")
    g.add_argument("--timeout", type=float, default=None, help="remote analyzer timeout in seconds (default: 10)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, metavar="FILE", help="JSON config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, metavar="N", help="seed for simulation, noise and search")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output on stdout")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")

    ap = _Parser(prog="impedance-swarm", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter, parents=[common])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", parents=[common], help="describe, retrieve and simulate one scenario")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--db", default=None, help="database file (default: bundled)")
    p.add_argument("--out", default=None, metavar="DIR", help="output directory (default: runs/<scenario>)")
    p.add_argument("--max-t", type=float, default=None, help="simulation time limit in seconds")
    _add_analyzer_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", parents=[common], help="perception and retrieval accuracy under a lighting preset")
    p.add_argument("scenarios", nargs="*", help="scenario files or directories (default: the seven bundled experiments)")
    p.add_argument("--db", default=None, help="database file (default: bundled)")
    p.add_argument("--trials", type=int, default=None, help="noisy trials per scenario (default: 1000)")
    p.add_argument("--lighting", choices=[x.value for x in Lighting] + ["none"], default=None, help="noise preset (default: optimal)")
    p.add_argument("--out", default=None, metavar="CSV", help="write the table to this CSV file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("retrieve", parents=[common], help="nearest database record for a description")
    p.add_argument("--db", default=None, help="database file (default: bundled)")
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--query", help="description text; a literal \\n separates lines")
    q.add_argument("--query-file", help="file holding the description, or - for stdin")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("dbgen", parents=[common], help="build a database by random search over impedance profiles")
    p.add_argument("--scenarios", default=None, metavar="DIR", help="scenario directory (default: bundled)")
    p.add_argument("--samples", type=int, default=None, help="candidate profiles per scenario (default: 200)")
    p.add_argument("--out", required=True, help="database file to write")
    p.set_defaults(func=cmd_dbgen)

    p = sub.add_parser("describe", parents=[common], help="print the scene description of a scenario")
    p.add_argument("scenario", help="scenario JSON file")
    _add_analyzer_flags(p)
    p.set_defaults(func=cmd_describe)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("json", False), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "dbgen" else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ScenarioError, DatabaseError, RangeViolation, DescriptionParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
