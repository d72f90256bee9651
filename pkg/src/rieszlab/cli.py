"""Batch experiment runner.

Reads a flat key=value (or JSON) config describing one experiment, runs it
through the library, and writes three artifacts next to each other: a JSON
summary, a CSV detail table, and a PNG figure.  Runs are fully
deterministic given the config (seed included): identical configs produce
byte-identical artifacts.

Exit codes: 0 when every check in the experiment passed, 1 when the
experiment ran but a check failed, 2 on config errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import plots
from .averaging import WeightScheme, WindowSchedule
from .blocks import block_delta, find_block
from .catalog import (
    CatalogFunction,
    SFamilyElement,
    characteristic_vector,
    function_family_registry,
    parse_function_spec,
    vdc_transform,
)
from .differences import DeltaPolynomial, delta, floor_sequence
from .equidist import (
    KroneckerGroup,
    SlopedSubgroup,
    TorusCharacter,
    TorusSequence,
    as_exact_real,
    haar_integral,
    torus_character_psi,
    wd_report,
)
from .errors import SpecStringError
from .recurrence import (
    khintchine_tail,
    multiple_return_set,
    poly_delta_return_set,
    single_return_set,
)
from .systems import (
    named_constant_registry,
    parse_set_spec,
    parse_system_spec,
    system_registry,
)

EXPERIMENT_KINDS = ("weyl", "recurrence", "blocks", "pet", "khintchine", "haar")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    return str(value)


def write_csv(path: Path, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row.get(k, "")) for k in fieldnames])


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=_fmt)
        fh.write("\n")


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    raw: dict
    name: str

    def get(self, key: str, default=None):
        return self.raw.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.raw:
            raise ConfigError(f"missing required config key {key!r}")
        return self.raw[key]

    def get_int(self, key: str, default: Optional[int] = None) -> int:
        value = self.raw.get(key, default)
        if value is None:
            raise ConfigError(f"missing required config key {key!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r} must be an integer, got {value!r}")

    def get_float(self, key: str, default: Optional[float] = None) -> float:
        value = self.raw.get(key, default)
        if value is None:
            raise ConfigError(f"missing required config key {key!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r} must be a number, got {value!r}")


def load_config(path: Path, seed_override: Optional[int]) -> ExperimentConfig:
    text = path.read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON config: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
        raw = {str(k): v for k, v in raw.items()}
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            raw[key.strip()] = value.strip()
    if seed_override is not None:
        raw["seed"] = seed_override
    raw.setdefault("seed", 0)
    name = str(raw.get("output", path.stem))
    return ExperimentConfig(raw=raw, name=name)


def _parse_function(config: ExperimentConfig) -> CatalogFunction:
    return parse_function_spec(config.require("function"))


def _parse_int_list(text: str, field: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(";") if str(x).strip()]
    except ValueError as exc:
        raise ConfigError(f"config key {field!r}: {exc}")


def _schedule(config: ExperimentConfig, W: WeightScheme) -> WindowSchedule:
    n0 = config.get_int("schedule_n0", 4096)
    count = config.get_int("schedule_count", 6)
    rho = config.get_float("schedule_rho", 2.0)
    seed = config.get_int("seed", 0)
    return WindowSchedule.geometric(W, n0=n0, count=count, rho=rho, seed=seed)


# ---------------------------------------------------------------------------
# experiment runners; each returns (passed, summary_dict, csv_fields, csv_rows, plot_fn)


def run_weyl(config: ExperimentConfig, outdir: Path):
    f = _parse_function(config)
    level = config.get_int("level", f.declared_level)
    W = WeightScheme.from_function(f, level)
    schedule = _schedule(config, W)
    taus = _parse_int_list(config.get("taus", "1"), "taus")
    characters = [TorusCharacter((t,)) for t in taus]
    tol = config.get("tolerance")
    tol = float(tol) if tol is not None else None

    if config.get("alpha") is not None:
        try:
            alpha = as_exact_real(str(config.get("alpha")))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"config key 'alpha': {exc}")
        K = KroneckerGroup((alpha,))
        g = floor_sequence(f)
        alpha_f = float(alpha)

        if isinstance(alpha, Fraction):
            num, den = alpha.numerator, alpha.denominator

            def values_fn(ns):
                gv = g.values(ns)
                return ((gv.astype(object) * num) % den).astype(np.float64) / den
        else:

            def values_fn(ns):
                return np.mod(g.values(ns).astype(np.float64) * alpha_f, 1.0)

        x = TorusSequence(values_fn, 1, domain_start=f.domain_start, label="alpha*floor(f)")
        expected = [K.character_expectation((t,)) for t in taus]
        mode = "floor"
    else:
        coeffs = [Fraction(c) for c in str(config.get("coeffs", "1")).split(";")]
        if len(coeffs) < level + 1:
            coeffs += [Fraction(0)] * (level + 1 - len(coeffs))
        elem = SFamilyElement(f, tuple(coeffs[: level + 1]))
        seq = elem.as_sequence()
        x = TorusSequence.from_real_sequence(seq, label="combination mod 1")
        expected = [1.0 if t == 0 else 0.0 for t in taus]
        mode = "fraction"

    report = wd_report(x, W, characters, schedule, expected, tol=tol)
    rows = report.to_rows()
    summary = {
        "experiment": "weyl",
        "mode": mode,
        "function": f.spec_string(),
        "level": level,
        "windows": [list(w) for w in schedule.windows],
        "characters": rows,
        "passed": report.all_pass,
    }

    def plot(path):
        plots.plot_character_report(rows, f"character deviations: {f.label}", path)

    fields = [
        "character", "expected", "estimate_re", "estimate_im",
        "span", "deviation", "tolerance", "pass",
    ]
    return report.all_pass, summary, fields, rows, plot


def run_recurrence(config: ExperimentConfig, outdir: Path):
    f = _parse_function(config)
    system = parse_system_spec(config.require("system"))
    A = parse_set_spec(config.require("set"))
    horizon = config.get_int("horizon")
    level = config.get_int("level", f.declared_level)
    seed = config.get_int("seed", 0)
    kwargs = dict(level=level, seed=seed)
    if config.get("run_target") is not None:
        kwargs["run_target"] = config.get_int("run_target")
    if config.get("syndetic_l") is not None:
        kwargs["syndetic_l"] = config.get_float("syndetic_l")

    if config.get("polys") is not None:
        polys = []
        for chunk in str(config.get("polys")).split(";"):
            coeffs = tuple(int(c) for c in chunk.split(",") if c.strip())
            polys.append(DeltaPolynomial(coeffs))
        report = poly_delta_return_set(system, A, f, polys, horizon, **kwargs)
    elif config.get("k") is not None:
        report = multiple_return_set(system, A, f, config.get_int("k"), horizon, **kwargs)
    else:
        epsilon = config.get_float("epsilon")
        report = single_return_set(system, A, f, epsilon, horizon, **kwargs)

    passed = (
        not report.no_witness
        and report.thickness.passed
        and (report.syndeticity is None or report.syndeticity.passed)
    )
    summary = {
        "experiment": "recurrence",
        "function": f.spec_string(),
        "system": config.require("system"),
        "set": config.require("set"),
        "passed": passed,
        **report.summary(),
    }
    ns = np.arange(max(1, f.domain_start), horizon + 1, dtype=np.int64)
    member_set = set(
        int(x) for x in (report.members.members if report.members.members is not None else [])
    )
    columns = report.shift_columns
    rows = [
        {
            "n": int(n),
            "shifts": [int(col[i]) for col in columns],
            "measure": float(report.measures[i]),
            "member": int(n) in member_set,
        }
        for i, n in enumerate(ns)
    ]

    threshold = (report.measure_floor - report.epsilon) if report.epsilon else 0.0

    def plot(path):
        plots.plot_membership(
            ns, report.measures, threshold,
            f"return-set measures: {f.label}", path,
        )

    return passed, summary, ["n", "shifts", "measure", "member"], rows, plot


def run_blocks(config: ExperimentConfig, outdir: Path):
    f = _parse_function(config)
    level = config.get_int("level", f.declared_level)
    N = config.get_int("N", 5)
    horizon = config.get_int("horizon", 10**6)
    delta_threshold = block_delta(level, N)
    witness = find_block(f, N, delta_threshold, horizon, level=level)
    passed = witness is not None
    summary = {
        "experiment": "blocks",
        "function": f.spec_string(),
        "level": level,
        "N": N,
        "horizon": horizon,
        "delta": float(delta_threshold),
        "witness": witness.to_dict() if witness else None,
        "passed": passed,
    }
    rows = []
    if witness:
        from .differences import delta_integer

        g = floor_sequence(f)
        dg = delta_integer(g, level)
        for n in range(N + 1):
            rows.append(
                {
                    "n": witness.a + n,
                    "block_offset": n,
                    "difference_value": dg(witness.a + n),
                }
            )

    def plot(path):
        center = witness.a if witness else min(horizon, 1000)
        lo = max(f.domain_start, center - 200)
        ns = np.arange(lo, center + 200, dtype=np.int64)
        fracs = [np.mod(delta(f, i).values(ns), 1.0) for i in range(level + 1)]
        plots.plot_block_neighbourhood(
            ns, fracs, float(delta_threshold), center,
            f"threshold neighbourhood: {f.label}", path,
        )

    return passed, summary, ["n", "block_offset", "difference_value"], rows, plot


def run_pet(config: ExperimentConfig, outdir: Path):
    f = _parse_function(config)
    level = f.declared_level
    trials = config.get_int("families", 100)
    max_size = config.get_int("size", 6)
    rng = np.random.default_rng(config.get_int("seed", 0))
    rows = []
    befores, afters = [], []
    all_decreased = True
    for trial in range(trials):
        size = int(rng.integers(1, max_size + 1))
        family = []
        for _ in range(size):
            while True:
                coeffs = [
                    Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 6)))
                    for _ in range(level + 1)
                ]
                if any(coeffs):
                    break
            family.append(SFamilyElement(f, tuple(coeffs)))
        m = int(rng.integers(1, 4))
        min_degree = min(e.degree for e in family)
        pivot = next(i for i, e in enumerate(family) if e.degree == min_degree)
        before = characteristic_vector(family)
        transformed = vdc_transform(family, pivot, m)
        after = characteristic_vector(transformed)
        decreased = after < before
        all_decreased &= decreased
        befores.append(before.counts)
        afters.append(after.counts)
        rows.append(
            {
                "trial": trial,
                "size": size,
                "m": m,
                "pivot": pivot,
                "before": list(before.counts),
                "after": list(after.counts),
                "decreased": decreased,
            }
        )
    summary = {
        "experiment": "pet",
        "function": f.spec_string(),
        "families": trials,
        "passed": all_decreased,
    }

    def plot(path):
        plots.plot_vector_decrease(
            befores, afters, f"class counts before/after transform: {f.label}", path
        )

    return all_decreased, summary, ["trial", "size", "m", "pivot", "before", "after", "decreased"], rows, plot


def run_khintchine(config: ExperimentConfig, outdir: Path):
    f = _parse_function(config)
    system = parse_system_spec(config.require("system"))
    A = parse_set_spec(config.require("set"))
    level = config.get_int("level", f.declared_level)
    tolerance = config.get_float("tolerance", 0.01)
    W = WeightScheme.from_function(f, level)
    schedule = _schedule(config, W)
    report = khintchine_tail(system, A, f, schedule, tolerance=tolerance, level=level)
    summary = {
        "experiment": "khintchine",
        "function": f.spec_string(),
        "system": config.require("system"),
        "set": config.require("set"),
        "passed": report.bound_met,
        **report.summary(),
    }
    rows = report.uw.to_rows()

    def plot(path):
        plots.plot_window_series(
            report.uw.spans,
            [complex(e).real for e in report.uw.estimates],
            f"window means of the return measure: {f.label}",
            path,
            hline=report.mu_squared,
            hline_label="mu(A)^2",
        )

    return report.bound_met, summary, ["M", "N", "span", "estimate_re", "estimate_im"], rows, plot


def run_haar(config: ExperimentConfig, outdir: Path):
    alpha_text = str(config.require("alpha"))
    try:
        alpha = as_exact_real(alpha_text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"config key 'alpha': {exc}")
    H = SlopedSubgroup(alpha)
    tau_max = config.get_int("tau_max", 5)
    resolution = config.get_int("resolution", 10**5)
    tolerance = config.get_float("tolerance", 1e-6)
    rows = []
    passed = True
    for tau_x in range(-tau_max, tau_max + 1):
        for tau_y in range(-tau_max, tau_max + 1):
            value = haar_integral(H, torus_character_psi(tau_x, tau_y), resolution)
            expected = H.character_integral(tau_x, tau_y)
            err = abs(value - expected)
            ok = err <= tolerance
            passed &= ok
            rows.append(
                {
                    "tau_x": tau_x,
                    "tau_y": tau_y,
                    "expected": expected,
                    "integral_re": value.real,
                    "integral_im": value.imag,
                    "abs_error": err,
                    "pass": ok,
                }
            )
    summary = {
        "experiment": "haar",
        "alpha": alpha_text,
        "tau_max": tau_max,
        "resolution": resolution,
        "tolerance": tolerance,
        "passed": passed,
    }

    def plot(path):
        plots.plot_haar_values(rows, f"character integrals on slope {alpha_text}", path)

    fields = ["tau_x", "tau_y", "expected", "integral_re", "integral_im", "abs_error", "pass"]
    return passed, summary, fields, rows, plot


RUNNERS: dict[str, Callable] = {
    "weyl": run_weyl,
    "recurrence": run_recurrence,
    "blocks": run_blocks,
    "pet": run_pet,
    "khintchine": run_khintchine,
    "haar": run_haar,
}


def run_experiment(config_path: Path, outdir: Path, seed_override=None, echo_json=False) -> int:
    try:
        config = load_config(config_path, seed_override)
        kind = str(config.require("experiment"))
        if kind not in RUNNERS:
            raise ConfigError(
                f"config key 'experiment' must be one of {EXPERIMENT_KINDS}, got {kind!r}"
            )
        passed, summary, fields, rows, plot = RUNNERS[kind](config, outdir)
    except (ConfigError, SpecStringError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {"config": {k: str(v) for k, v in sorted(config.raw.items())}, **summary}
    write_json(outdir / f"{config.name}_summary.json", summary)
    write_csv(outdir / f"{config.name}_detail.csv", fields, rows)
    plot(outdir / f"{config.name}.png")
    if echo_json:
        print(json.dumps(summary, sort_keys=True, default=_fmt))
    else:
        status = "PASS" if passed else "FAIL"
        print(f"{config.name}: {status} -> {outdir / (config.name + '_summary.json')}")
    return 0 if passed else 1


def cmd_list_catalog(as_json: bool) -> int:
    entries = []
    for item in function_family_registry():
        entries.append({"kind": "function", **item})
    for item in system_registry():
        entries.append({"kind": "system", **item})
    for item in named_constant_registry():
        entries.append(
            {
                "kind": "constant",
                "name": item["name"],
                "params": [],
                "constraints": f"value={item['value']!r}",
            }
        )
    entries.sort(key=lambda e: (e["kind"], e["name"]))
    if as_json:
        print(json.dumps(entries, sort_keys=True))
    else:
        for e in entries:
            params = ",".join(e["params"]) if e["params"] else "-"
            print(f"{e['kind']:9s} {e['name']:12s} params: {params:12s} {e['constraints']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rieszlab",
        description="batch experiments over difference calculus, weighted averaging, "
        "equidistribution and recurrence",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment config")
    runp.add_argument("--config", required=True, type=Path, help="config file (key=value or JSON)")
    runp.add_argument("--out", type=Path, default=Path("."), help="artifact output directory")
    runp.add_argument("--seed", type=int, default=None, help="override the config seed")
    runp.add_argument("--json", action="store_true", help="echo the JSON summary to stdout")
    listp = sub.add_parser("list-catalog", help="list function families, systems, constants")
    listp.add_argument("--json", action="store_true", help="machine-readable output")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-catalog":
        return cmd_list_catalog(args.json)
    if not args.config.exists():
        print(f"config error: no such file {args.config}", file=sys.stderr)
        return 2
    return run_experiment(args.config, args.out, seed_override=args.seed, echo_json=args.json)


if __name__ == "__main__":
    sys.exit(main())
