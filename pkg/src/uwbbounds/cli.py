"""Experiment driver: rate-bound sweeps over distance and duty cycle.

    uwbbounds run --config cfg.json [--preset paper|desk] [--seed S]
                  [--out results.csv] [--ratios-out ratios.csv]
    uwbbounds validate --config cfg.json
    uwbbounds oracle

Results go to one CSV with columns l_m, d_m, eta1, eta2, bound,
rate_bits_per_symbol, ci_halfwidth, samples, seed, wall_s; the fully
materialized config is written next to it as <out>.config.json. Output bytes
are a pure function of (config, seed): the wall_s column is fixed at 0.0 and
real timings go to stderr, and worker count (UWBBOUNDS_THREADS) cannot leak
into the numbers. Each sweep point gets its own derived seed, recorded in its
rows; the fixed channel draw comes from the base seed and is shared by the
whole sweep.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bounds import draw_h1, lower_bound, upper_bound
from .config import (PRESETS, ConfigError, SweepSpec, effective_config,
                     load_config, spec_from_mapping)
from .gaussian import oracle_J, overlap_J
from .model import ScenarioConfig, TapCovariance, build_tap_covariance

CSV_COLUMNS = ("l_m", "d_m", "eta1", "eta2", "bound", "rate_bits_per_symbol",
               "ci_halfwidth", "samples", "seed", "wall_s")


class EstimatorFailure(RuntimeError):
    """An estimator raised mid-sweep; partial results were saved."""


@dataclass(frozen=True)
class ResultRow:
    l_m: float
    d_m: float | None           # None for upper rows and interferer-free runs
    eta1: float
    eta2: float | None
    bound: str
    rate_bits_per_symbol: float
    ci_halfwidth: float
    samples: int
    seed: int
    wall_s: float = 0.0         # fixed; real timings go to stderr

    def csv_values(self) -> list[str]:
        blank = lambda x: "" if x is None else repr(float(x))  # noqa: E731
        return [blank(self.l_m), blank(self.d_m), blank(self.eta1), blank(self.eta2),
                self.bound, blank(self.rate_bits_per_symbol), blank(self.ci_halfwidth),
                str(self.samples), str(self.seed), blank(self.wall_s)]


def _apply_point(base: ScenarioConfig, assignment: dict[str, float]) -> ScenarioConfig:
    changes = {}
    if "l" in assignment:
        changes["link_distance_m"] = assignment["l"]
    if "d" in assignment:
        rest = base.interferer_distances_m[1:]
        changes["interferer_distances_m"] = (assignment["d"],) + rest
    if "eta1" in assignment:
        changes["duty_cycles"] = (assignment["eta1"],) + base.duty_cycles[1:]
    if "eta2" in assignment:
        duty = changes.get("duty_cycles", base.duty_cycles)
        changes["duty_cycles"] = (duty[0], assignment["eta2"]) + duty[2:]
    return replace(base, **changes) if changes else base


def sweep_points(spec: SweepSpec) -> list[ScenarioConfig]:
    """Cross product of the swept values, lexicographic in declaration order."""
    variables = list(spec.sweep)
    return [_apply_point(spec.base, dict(zip(variables, combo)))
            for combo in itertools.product(*(spec.sweep[v] for v in variables))]


def _point_seed(base_seed: int, kind: int, index: int) -> int:
    words = np.random.SeedSequence((base_seed, kind, index)).generate_state(1, dtype=np.uint64)
    return int(words[0])


def _make_row(scenario: ScenarioConfig, estimate, seed: int) -> ResultRow:
    has_interferer = scenario.num_nodes >= 2
    return ResultRow(
        l_m=scenario.link_distance_m,
        d_m=scenario.interferer_distances_m[0] if has_interferer and estimate.kind == "lower" else None,
        eta1=scenario.duty_cycles[0],
        eta2=scenario.duty_cycles[1] if has_interferer and estimate.kind == "lower" else None,
        bound=estimate.kind,
        rate_bits_per_symbol=estimate.rate,
        ci_halfwidth=estimate.ci_halfwidth,
        samples=estimate.samples_used,
        seed=seed)


def _write_csv(path, rows: list[ResultRow]) -> None:
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(",".join(row.csv_values()) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_result_csv(path) -> list[ResultRow]:
    lines = Path(path).read_text().splitlines()
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(ResultRow(
            l_m=float(parts[0]), d_m=float(parts[1]) if parts[1] else None,
            eta1=float(parts[2]), eta2=float(parts[3]) if parts[3] else None,
            bound=parts[4], rate_bits_per_symbol=float(parts[5]),
            ci_halfwidth=float(parts[6]), samples=int(parts[7]),
            seed=int(parts[8]), wall_s=float(parts[9])))
    return rows


def run_sweep(spec: SweepSpec, out_path) -> list[ResultRow]:
    """Evaluate the sweep, write the CSV and its effective-config sidecar.

    Lower rows come first in point order, then one upper row per distinct
    (l, eta1) since the upper bound reads nothing else. On estimator failure
    the finished rows land in <out>.partial and EstimatorFailure is raised.
    """
    out_path = Path(out_path)
    base_seed = spec.base.rng_seed
    out_path.with_name(out_path.name + ".config.json").write_text(
        json.dumps(effective_config(spec), indent=2) + "\n")
    points = sweep_points(spec)
    h1 = draw_h1(spec.base) if spec.base.h1_mode == "fixed-draw" else None
    rows: list[ResultRow] = []
    try:
        if spec.bounds in ("lower", "both"):
            for i, scenario in enumerate(points):
                seed = _point_seed(base_seed, 0, i)
                started = time.perf_counter()
                est = lower_bound(scenario, h1=h1, seed=seed)
                rows.append(_make_row(scenario, est, seed))
                print(f"[{i + 1}/{len(points)}] lower l={scenario.link_distance_m:g} "
                      f"d={scenario.interferer_distances_m[:1] or '-'} "
                      f"eta={scenario.duty_cycles} rate={est.rate:.6g} "
                      f"ci={est.ci_halfwidth:.2g} ({time.perf_counter() - started:.1f}s)",
                      file=sys.stderr)
        if spec.bounds in ("upper", "both"):
            groups: list[ScenarioConfig] = []
            seen = set()
            for scenario in points:
                key = (scenario.link_distance_m, scenario.duty_cycles[0])
                if key not in seen:
                    seen.add(key)
                    groups.append(scenario)
            for g, scenario in enumerate(groups):
                seed = _point_seed(base_seed, 1, g)
                started = time.perf_counter()
                est = upper_bound(scenario, h1=h1, seed=seed)
                rows.append(_make_row(scenario, est, seed))
                print(f"[upper {g + 1}/{len(groups)}] l={scenario.link_distance_m:g} "
                      f"eta1={scenario.duty_cycles[0]:g} rate={est.rate:.6g} "
                      f"ci={est.ci_halfwidth:.2g} ({time.perf_counter() - started:.1f}s)",
                      file=sys.stderr)
    except Exception as err:
        partial = out_path.with_name(out_path.name + ".partial")
        _write_csv(partial, rows)
        raise EstimatorFailure(f"sweep aborted after {len(rows)} rows: {err}") from err
    _write_csv(out_path, rows)
    return rows


def figure_ratios(rows: list[ResultRow], reference_distance: float = 100.0):
    """Lower-bound rows with a rate / rate(d = reference) column per
    (l, eta1, eta2) group: the interference penalty relative to a far node."""
    lower = [r for r in rows if r.bound == "lower" and r.d_m is not None]
    reference = {}
    for r in lower:
        if r.d_m == reference_distance:
            reference[(r.l_m, r.eta1, r.eta2)] = r.rate_bits_per_symbol
    out = []
    for r in lower:
        key = (r.l_m, r.eta1, r.eta2)
        if key not in reference:
            raise ValueError(f"no row at reference distance {reference_distance} m "
                             f"for group l={r.l_m}, eta1={r.eta1}, eta2={r.eta2}")
        out.append((r, r.rate_bits_per_symbol / reference[key]))
    return out


def _write_ratios(path, pairs) -> None:
    lines = [",".join(CSV_COLUMNS[:7]) + ",rate_ratio"]
    for row, ratio in pairs:
        lines.append(",".join(row.csv_values()[:7]) + f",{ratio!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _oracle_suite(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Small standalone cross-validation of the closed-form overlap."""
    checks = []
    t1 = TapCovariance(np.array([[1.0]]))
    est = oracle_J([[1.0]], [[1.0]], np.array([0.7]), np.array([1.3]), t1, 1.0)
    want = 1.0 / np.sqrt(4.0 * np.pi)
    checks.append(("analytic self-overlap, quadrature",
                   abs(est.value / want - 1.0) < 1e-8,
                   f"value {est.value:.10f}, analytic {want:.10f}"))

    rng = np.random.default_rng(seed)
    for trial in range(3):
        v = (rng.random((2, 2)) < 0.6).astype(float)
        w = (rng.random((2, 2)) < 0.6).astype(float)
        h1 = rng.standard_normal(1) * 0.8
        a = 0.4 + rng.random(2)
        t = TapCovariance(np.array([[0.3 + 0.5 * rng.random()]]))
        s2 = 0.6 + rng.random()
        cf = overlap_J(v, w, h1, a, t, s2)
        est = oracle_J(v, w, h1, a, t, s2)
        rel = abs(np.exp(cf - est.log_value) - 1.0)
        checks.append((f"two-node grid quadrature #{trial + 1}", rel < 1e-4,
                       f"relative gap {rel:.2e}"))
    for trial in range(3):
        t = build_tap_covariance(2, 0.8, 3)
        v = (rng.random((3, 2)) < 0.6).astype(float)
        w = (rng.random((3, 2)) < 0.6).astype(float)
        h1 = rng.standard_normal(2) * 0.7
        a = 0.4 + rng.random(3)
        s2 = 0.6 + rng.random()
        cf = overlap_J(v, w, h1, a, t, s2)
        est = oracle_J(v, w, h1, a, t, s2, mode="mc", rng=np.random.default_rng(seed + trial))
        gap = abs(cf - est.log_value)
        checks.append((f"three-node sampling #{trial + 1}", gap < 3.0 * est.se_log,
                       f"|log gap| {gap:.4f} vs 3 se {3.0 * est.se_log:.4f}"))
    return checks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uwbbounds",
        description="Monte-Carlo achievable-rate bounds for impulse-radio links "
                    "under impulsive interference")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="evaluate a sweep and write CSV results")
    run_p.add_argument("--config", help="JSON config path (defaults apply if omitted)")
    run_p.add_argument("--preset", choices=sorted(PRESETS), help="named base profile")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--out", default="results.csv", help="output CSV path")
    run_p.add_argument("--ratios-out", help="also write rate/rate(reference) table")
    run_p.add_argument("--reference-distance", type=float, default=100.0)

    val_p = sub.add_parser("validate", help="check a config and print it materialized")
    val_p.add_argument("--config", required=True)
    val_p.add_argument("--preset", choices=sorted(PRESETS))

    orc_p = sub.add_parser("oracle", help="cross-check the closed-form overlap "
                                          "against brute-force integration")
    orc_p.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            spec = load_config(args.config, preset=args.preset)
            print(json.dumps(effective_config(spec), indent=2))
            return 0
        if args.command == "oracle":
            checks = _oracle_suite(args.seed)
            for name, ok, detail in checks:
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
            return 0 if all(ok for _, ok, _ in checks) else 1
        # run
        if args.config is not None:
            spec = load_config(args.config, preset=args.preset)
        else:
            spec = spec_from_mapping({}, preset=args.preset)
        if args.seed is not None:
            spec = SweepSpec(base=replace(spec.base, rng_seed=args.seed),
                             sweep=spec.sweep, bounds=spec.bounds)
        rows = run_sweep(spec, args.out)
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
        if args.ratios_out:
            _write_ratios(args.ratios_out, figure_ratios(rows, args.reference_distance))
            print(f"wrote ratios to {args.ratios_out}", file=sys.stderr)
        return 0
    except ConfigError as err:
        print(f"config error [{err.code}]: {err}", file=sys.stderr)
        return 2
    except EstimatorFailure as err:
        print(f"estimator failure: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
