"""Command line runner and benchmark harness.

    footplan list
    footplan run wall --penalty off --out-dir out
    footplan run dynamic-person --mode sim
    footplan compare 'turning-*' --base heuristic=distance --test heuristic=distance+angle
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .planner import PlanStatus, plan, plan_to_csv
from .render import write_svg
from .replan import log_to_csv, simulate
from .scenario import Scenario, ScenarioError, corpus, corpus_dir, load_scenario
from .worldmap import MapError, filter_chain

log = logging.getLogger("footplan")

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 2, 3


@dataclass(frozen=True)
class Variant:
    selection: str | None = None
    heuristic: str | None = None
    penalty: bool | None = None
    max_iter: int | None = None

    @classmethod
    def parse(cls, text: str) -> "Variant":
        """``key=value`` pairs separated by commas, e.g. ``heuristic=distance,penalty=off``."""
        kw = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, _, val = item.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key == "penalty":
                if val not in ("on", "off"):
                    raise ValueError("penalty must be on or off")
                kw[key] = val == "on"
            elif key == "max_iter":
                kw[key] = int(val)
            elif key in ("selection", "heuristic"):
                kw[key] = val
            else:
                raise ValueError(f"unknown variant key {key!r}")
        return cls(**kw)

    def apply(self, sc: Scenario):
        cfg = sc.planner
        if self.selection is not None:
            cfg = replace(cfg, selection=self.selection)
        if self.heuristic is not None:
            cfg = replace(cfg, heuristic=self.heuristic)
        if self.penalty is not None:
            cfg = replace(cfg, penalty=replace(cfg.penalty, enabled=self.penalty))
        if self.max_iter is not None:
            cfg = replace(cfg, max_iterations=self.max_iter)
        return cfg


def variant_label(cfg) -> str:
    return "{}_{}_pen-{}_it{}".format(
        cfg.selection, cfg.heuristic.replace("+", "-"), "on" if cfg.penalty.enabled else "off", cfg.max_iterations
    )


@dataclass
class RunReport:
    scenario: str
    variant: str
    mode: str
    status: str
    total_cost: float
    iterations: int
    expansions: int
    steps: int
    runtime: float
    plan_csv: str | None = None
    tick_csv: str | None = None
    svg: str | None = None

    @property
    def success(self) -> bool:
        return self.status == PlanStatus.SUCCESS.value

    def summary(self) -> str:
        return (f"{self.scenario} [{self.variant}, {self.mode}] {self.status}: cost={self.total_cost:.1f} J "
                f"iterations={self.iterations} expansions={self.expansions} steps={self.steps} "
                f"runtime={self.runtime:.2f}s")


def resolve_scenarios(arg: str) -> list[Path]:
    """A file path, a corpus name (``wall``), or a glob over either."""
    p = Path(arg)
    if p.is_file():
        return [p]
    if any(ch in arg for ch in "*?["):
        local = sorted(Path().glob(arg))
        if local:
            return local
        found = corpus(arg if arg.endswith(".scn") else arg + ".scn")
        if found:
            return found
    else:
        cand = corpus_dir() / (arg if arg.endswith(".scn") else arg + ".scn")
        if cand.is_file():
            return [cand]
    raise ScenarioError("no such scenario file or corpus entry", 0, arg)


def run_scenario(sc: Scenario, variant: Variant, mode: str = "plan", out_dir=None,
                 ellipses: bool = False) -> RunReport:
    cfg = variant.apply(sc)
    label = variant_label(cfg)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    stem = f"{sc.name}.{label}.{mode}"
    t0 = time.perf_counter()
    if mode == "plan":
        emap = filter_chain(sc.build_map(), sc.avg_radius)
        result = plan(sc.start, sc.swing, sc.goal, emap, sc.energy, sc.action_profile(), sc.feasibility, cfg)
        runtime = time.perf_counter() - t0
        report = RunReport(sc.name, label, mode, result.status.value, result.total_cost, result.iterations,
                           result.expansions, result.n_steps, runtime)
        steps = result.footsteps
        if out is not None:
            report.plan_csv = str(out / f"{stem}.csv")
            plan_to_csv(result, report.plan_csv)
    elif mode == "sim":
        sim = simulate(sc, cfg)
        runtime = time.perf_counter() - t0
        emap = sim.final_map
        status = PlanStatus.SUCCESS.value if sim.reached else "TickLimit"
        report = RunReport(sc.name, label, mode, status, sim.total_energy, sim.planner_iterations,
                           sim.planner_expansions, len(sim.log), runtime)
        steps = [sc.start] + sim.executed
        if out is not None:
            report.tick_csv = str(out / f"{stem}.ticks.csv")
            log_to_csv(sim.log, report.tick_csv)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if out is not None:
        report.svg = str(out / f"{stem}.svg")
        fc = sc.feasibility
        write_svg(report.svg, emap, steps, sc.goal, (fc.foot_length, fc.foot_width),
                  fc.body_half_width if ellipses else None, f"{sc.name} {label}")
        (out / f"{stem}.report.json").write_text(json.dumps(asdict(report), indent=2, default=str) + "\n")
    return report


COMPARE_FIELDS = ("scenario", "base_status", "test_status", "base_cost", "test_cost", "cost_delta_pct",
                  "base_iterations", "test_iterations", "iteration_delta_pct")


def _pct(new: float, old: float) -> float:
    if old == new:
        return 0.0
    return 100.0 * (new - old) / old if old else float("inf")


def compare_variants(scenarios: list[Scenario], base: Variant, test: Variant) -> list[dict]:
    """Per-scenario rows plus a final ``MEAN`` row of averaged values and deltas."""
    rows = []
    for sc in scenarios:
        a = run_scenario(sc, base)
        b = run_scenario(sc, test)
        rows.append({
            "scenario": sc.name, "base_status": a.status, "test_status": b.status,
            "base_cost": a.total_cost, "test_cost": b.total_cost,
            "cost_delta_pct": _pct(b.total_cost, a.total_cost),
            "base_iterations": a.iterations, "test_iterations": b.iterations,
            "iteration_delta_pct": _pct(b.iterations, a.iterations),
        })
    if rows:
        mean = {"scenario": "MEAN", "base_status": "", "test_status": ""}
        for k in COMPARE_FIELDS[3:]:
            mean[k] = statistics.fmean(r[k] for r in rows)
        rows.append(mean)
    return rows


def _cell(v) -> str:
    return f"{v:.2f}" if isinstance(v, float) else str(v)


def compare_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_FIELDS)
    for r in rows:
        w.writerow([_cell(r[k]) for k in COMPARE_FIELDS])
    return buf.getvalue()


def compare_table(rows: list[dict]) -> str:
    cells = [list(COMPARE_FIELDS)] + [[_cell(r[k]) for k in COMPARE_FIELDS] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(COMPARE_FIELDS))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="footplan", description="Energy-aware footstep planning runs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list the bundled scenarios")

    run = sub.add_parser("run", help="plan or simulate one scenario")
    run.add_argument("scenario")
    run.add_argument("--selection", choices=("min-cot", "farthest"))
    run.add_argument("--heuristic", choices=("distance", "distance+angle"))
    run.add_argument("--penalty", choices=("on", "off"))
    run.add_argument("--max-iter", type=int)
    run.add_argument("--mode", choices=("plan", "sim"), default="plan")
    run.add_argument("--seed", type=int, help="override the scenario terrain seed")
    run.add_argument("--out-dir", default="footplan-out")
    run.add_argument("--ellipses", action="store_true", help="draw body ellipses in the SVG")

    cmp_ = sub.add_parser("compare", help="compare two planner variants over a scenario set")
    cmp_.add_argument("scenarios", nargs="+")
    cmp_.add_argument("--base", default="", help="variant as key=value pairs, e.g. heuristic=distance")
    cmp_.add_argument("--test", default="", help="variant as key=value pairs")
    cmp_.add_argument("--out-dir", default="footplan-out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "list":
            for p in corpus():
                print(p.stem)
            return EXIT_OK
        if args.command == "run":
            if args.max_iter is not None and args.max_iter <= 0:
                raise ValueError("--max-iter must be positive")
            (path,) = resolve_scenarios(args.scenario)[:1]
            sc = load_scenario(path)
            if args.seed is not None:
                sc = replace(sc, seed=args.seed)
            variant = Variant(args.selection, args.heuristic,
                              None if args.penalty is None else args.penalty == "on", args.max_iter)
            report = run_scenario(sc, variant, args.mode, args.out_dir, args.ellipses)
            for written in (report.plan_csv, report.tick_csv, report.svg):
                if written:
                    log.info("wrote %s", written)
            print(report.summary())
            return EXIT_OK if report.success else EXIT_FAILED
        paths = [p for arg in args.scenarios for p in resolve_scenarios(arg)]
        scenarios = [load_scenario(p) for p in paths]
        rows = compare_variants(scenarios, Variant.parse(args.base), Variant.parse(args.test))
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.csv").write_text(compare_csv(rows))
        table = compare_table(rows)
        (out / "compare.txt").write_text(table)
        print(table, end="")
        return EXIT_OK
    except (ScenarioError, MapError, ValueError, OSError) as exc:
        print(f"footplan: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
