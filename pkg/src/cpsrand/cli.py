"""Command-line experiment runner.

Every subcommand reads its parameters from ``--config`` (JSON) and from
its own flags (flags win), writes CSV/JSON artifacts into ``--out`` and
prints a one-line summary.  Identical inputs give byte-identical files.

Exit codes: 0 success, 2 invalid input, 3 budget exhausted.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from . import dynamics as dyn
from . import randomness as rnd
from .errors import BudgetExhausted, CpsError
from .exact_core import as_rational, format_rational
from .isomorphism import CdfIsomorphism, binary_decode, binary_expand
from .measures import find_zero_measure_point, prokhorov
from .spaces import CANTOR, INTERVAL, ApproxPoint, Space, cylinder_open
from .specs import (
    finite_measure_from_spec,
    measure_from_spec,
    observable_from_spec,
    point_from_spec,
    rational_list,
    system_from_spec,
)

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3
DEFAULTS = {"precision": 20, "budget": 64, "seed": 0, "jobs": 1}


class ConfigError(ValueError):
    pass


# -- artifact helpers -----------------------------------------------------------------

def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def q(x) -> str:
    return format_rational(x)


def parallel_map(fn: Callable, items: Sequence, jobs: int) -> List:
    """``map`` over items, in item order, optionally across processes."""
    if jobs <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- subcommands ----------------------------------------------------------------------

def run_birkhoff(cfg: dict, out: Path) -> str:
    sys_ = system_from_spec(cfg.get("system", "shift"), cfg.get("params"))
    f = observable_from_spec(cfg.get("observable", {"cylinder": "1"}))
    x = point_from_spec(cfg.get("point_spec", {"pseudorandom": 1 << 16}), sys_.space, cfg["seed"])
    if sys_.exact:
        sched = cfg.get("schedule", {})
        schedule = dyn.make_schedule(as_rational(sched.get("alpha", "1/2")),
                                     as_rational(sched["beta"]) if "beta" in sched else None)
        report = dyn.typicality_experiment(sys_, x, f, schedule, int(cfg.get("max_i", 40)),
                                           dense_upto=int(cfg.get("dense_upto", 64)),
                                           extra=[int(n) for n in cfg.get("extra_n", [])])
        write_csv(out / "birkhoff.csv", ["n", "S_n_over_n", "mean", "abs_dev", "on_schedule"],
                  [r.csv() for r in report.rows])
        last = report.rows[-1]
        write_json(out / "birkhoff.json", {
            "mean": q(report.mean), "window_start": report.window_start,
            "window_min": q(report.window_min), "window_max": q(report.window_max),
            "oscillation": q(report.oscillation), "last_n": last.n, "last_average": q(last.average)})
        return f"n={last.n} S_n/n={float(last.average):.6f} oscillation={float(report.oscillation):.4f}"
    steps = [int(n) for n in cfg.get("n_values", [10, 100])]
    rows = []
    for n in steps:
        enc = dyn.birkhoff_average(sys_, f, x, n, bits=int(cfg.get("bits", cfg["precision"] * 16)))
        rows.append([n, q(enc.lo), q(enc.hi)])
    write_csv(out / "birkhoff.csv", ["n", "S_n_over_n_lower", "S_n_over_n_upper"], rows)
    return f"{len(rows)} enclosures written"


def _correlation_row(args):
    system, params, E, F, n = args
    val = dyn.correlation(system_from_spec(system, params), observable_from_spec(E), observable_from_spec(F), n)
    if isinstance(val, dyn.Enclosure):
        return [n, q(val.lo), q(val.hi)]
    return [n, q(val), q(val)]


def run_correlation(cfg: dict, out: Path) -> str:
    system, params = cfg.get("system", "shift"), cfg.get("params")
    E, F = cfg.get("E", {"cylinder": "0"}), cfg.get("F", {"cylinder": "1"})
    lo, hi = cfg.get("n_range", [0, 12])
    rows = parallel_map(_correlation_row, [(system, params, E, F, n) for n in range(int(lo), int(hi) + 1)],
                        cfg["jobs"])
    write_csv(out / "correlation.csv", ["n", "C_n_lower", "C_n_upper"], rows)
    zero_from = next((r[0] for r in rows if all(s[1] == s[2] == "0/1" for s in rows if s[0] >= r[0])), None)
    return f"{len(rows)} lags; exactly zero from n={zero_from}"


def _deviation_row(args):
    system, params, f, delta, n = args
    sys_, obs = system_from_spec(system, params), observable_from_spec(f)
    d = as_rational(delta)
    exact = dyn.deviation_measure(sys_, obs, d, n, "exact")
    cheb = dyn.deviation_measure(sys_, obs, d, n, "chebyshev")
    return [n, q(d), q(exact), q(cheb), "true" if exact <= cheb else "false"]


def run_deviation(cfg: dict, out: Path) -> str:
    system, params = cfg.get("system", "shift"), cfg.get("params")
    f = cfg.get("observable", {"cylinder": "1"})
    deltas = cfg.get("deltas", ["3/5"])
    ns = [int(n) for n in cfg.get("n_values", range(1, 17))]
    items = [(system, params, f, d, n) for d in deltas for n in ns]
    rows = parallel_map(_deviation_row, items, cfg["jobs"])
    write_csv(out / "deviation.csv", ["n", "delta", "exact", "chebyshev", "dominated"], rows)
    return f"{len(rows)} rows; all dominated: {all(r[4] == 'true' for r in rows)}"


def run_prokhorov(cfg: dict, out: Path) -> str:
    data = cfg.get("measures")
    if data is None and "measures_file" in cfg:
        data = json.loads(Path(cfg["measures_file"]).read_text())
    if not data or len(data) != 2:
        raise ConfigError("prokhorov needs two measures ('measures' or 'measures_file')")
    space = Space(cfg.get("space", "interval"))
    mu, nu = (finite_measure_from_spec(m, space) for m in data)
    d = prokhorov(mu, nu)
    write_json(out / "prokhorov.json", {"mu": mu.to_json(), "nu": nu.to_json(), "distance": q(d)})
    return q(d)


def run_zero_point(cfg: dict, out: Path) -> str:
    mu = measure_from_spec(cfg.get("measure", "lebesgue"))
    a, b = rational_list(cfg.get("interval", ["0", "1"]))
    depth = int(cfg.get("depth", 20))
    x, trace = find_zero_measure_point(mu, (a, b), depth, cfg["budget"])
    write_csv(out / "zero_point.csv", ["k", "a", "b", "upper_bound"],
              [[r["k"], r["a"], r["b"], r["upper_bound"]] for r in trace.rows()])
    value = x(cfg["precision"])
    write_json(out / "zero_point.json", {"precision": cfg["precision"], "point": q(value),
                                         "trace_valid": trace.check(), "depth": depth})
    return f"point ~ {float(value):.10f} (trace valid: {trace.check()})"


def run_convert_test(cfg: dict, out: Path) -> str:
    name = cfg.get("test", "halving-intervals")
    source = rnd.builtin_test(name)
    if not isinstance(source, rnd.BCTest):
        raise ConfigError(f"{name} is not a Borel-Cantelli test")
    converted = rnd.strong_bc_to_schnorr(source) if isinstance(source, rnd.StrongBCTest) else rnd.bc_to_ml(source)
    levels = [int(k) for k in cfg.get("levels", [1, 2, 3, 4])]
    stage = int(cfg.get("stage", (1 << (max(levels) + source.c)) + 2))
    data = rnd.describe_test(converted, levels, stage, cfg["precision"])
    data["c"] = source.c
    data["source"] = name
    write_json(out / "test.json", data)
    ok = all(as_rational(e["mass_upper"]) < as_rational(e["bound"]) for e in data["levels"])
    return f"{converted.name}: levels {levels} certified below 2^-k: {ok}"


def run_verify(cfg: dict, out: Path) -> str:
    test = rnd.builtin_test(cfg.get("test", "zeros-cylinders"))
    x = point_from_spec(cfg.get("point", "0" if test.space is INTERVAL else ""), test.space, cfg["seed"])
    upto = int(cfg.get("upto", 10))
    report = rnd.verify_failure(x, test, upto, cfg["budget"])
    write_json(out / "certificates.json", report.to_json())
    return f"{len(report.certificates)} certified, uncertified levels {report.uncertified}"


def run_construct(cfg: dict, out: Path) -> str:
    block = cfg.get("block", "01")
    upto = int(cfg.get("upto", 20))
    test = rnd.MLTest(f"cylinders({block})", CANTOR, lambda n: cylinder_open(block * n),
                      measure_from_spec("fair-coin"))
    point = rnd.construct_failing_point(rnd.WitnessedTest(test, rnd.cylinder_witnesses(block)), upto)
    report = rnd.verify_failure(point, test, upto, cfg["budget"])
    write_json(out / "construct.json", {"block": block, "prefix": point.prefix(cfg["precision"]),
                                        "verification": report.to_json()})
    return f"prefix {point.prefix(min(cfg['precision'], 32))}; fails levels 1..{upto}: {not report.partial}"


def run_isomorphism(cfg: dict, out: Path) -> str:
    mode = cfg.get("mode", "cdf")
    n = cfg["precision"]
    xs = rational_list(cfg.get("points", ["1/3", "2/3", "1/5"]))
    if mode == "cdf":
        iso = CdfIsomorphism(measure_from_spec(cfg.get("measure", "piecewise")), cfg["budget"])
        rows = []
        for x in xs:
            y = iso.forward(x)
            back = iso.inverse(y, cfg["budget"])
            rows.append([q(x), q(y(n)), q(back(n))])
        write_csv(out / "isomorphism.csv", ["x", "F_x", "G_F_x"], rows)
        return f"{len(rows)} points mapped at precision {n}"
    if mode == "expand":
        rows = [[q(x), binary_expand(x, n, cfg["budget"])] for x in xs]
        rows = [[r[0], r[1], q(binary_decode(ApproxPoint.from_word(r[1]))(n - 1))] for r in rows]
        write_csv(out / "isomorphism.csv", ["x", "bits", "decoded"], rows)
        return f"{len(rows)} points expanded to {n} bits"
    raise ConfigError("mode is 'cdf' or 'expand'")


COMMANDS: Dict[str, Callable[[dict, Path], str]] = {
    "birkhoff": run_birkhoff,
    "correlation": run_correlation,
    "deviation": run_deviation,
    "prokhorov": run_prokhorov,
    "zero-point": run_zero_point,
    "convert-test": run_convert_test,
    "verify": run_verify,
    "construct": run_construct,
    "isomorphism": run_isomorphism,
}

# flag name -> (config key, parser)
_FLAGS = {
    "system": ("system", str), "observable": ("observable", json.loads), "point": ("point_spec", json.loads),
    "test": ("test", str), "measure": ("measure", json.loads), "delta": ("deltas", lambda s: s.split(",")),
    "n": ("n_values", lambda s: [int(v) for v in s.split(",")]), "max-i": ("max_i", int),
    "levels": ("levels", lambda s: [int(v) for v in s.split(",")]), "measures-file": ("measures_file", str),
    "upto": ("upto", int), "mode": ("mode", str), "block": ("block", str),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with subcommand parameters")
    common.add_argument("--out", type=Path, default=Path("out"), help="artifact directory")
    common.add_argument("--precision", type=int, help=f"default {DEFAULTS['precision']}")
    common.add_argument("--budget", type=int, help=f"stage/precision budget, default {DEFAULTS['budget']}")
    common.add_argument("--seed", type=int, help="seed for pseudorandom points, default 0")
    common.add_argument("--jobs", type=int, help="worker processes for parameter grids, default 1")
    parser = argparse.ArgumentParser(prog="cpsrand", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        for flag in _FLAGS:
            p.add_argument(f"--{flag}", dest=flag.replace("-", "_"), default=None)
    return parser


def load_config(args) -> dict:
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for flag, (key, parse) in _FLAGS.items():
        raw = getattr(args, flag.replace("-", "_"))
        if raw is not None:
            try:
                cfg[key] = parse(raw)
            except (ValueError, json.JSONDecodeError) as exc:
                raise ConfigError(f"bad value for --{flag}: {raw!r}") from exc
    for key, default in DEFAULTS.items():
        val = getattr(args, key)
        cfg[key] = int(cfg.get(key, default)) if val is None else val
        if cfg[key] < 0 or (key == "jobs" and cfg[key] < 1):
            raise ConfigError(f"{key} out of range")
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](cfg, args.out)
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (CpsError, ValueError, KeyError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
