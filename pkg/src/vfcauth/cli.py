"""``vfcauth`` command line: simulate, attack, bench, ledger inspect.

Exit codes: 0 success, 1 invariant or attack failure, 2 usage/config/IO error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from vfcauth import bench
from vfcauth.ledger import EXPORT_MAGIC, Chain, LedgerError, validate_chain
from vfcauth.simnet import checks
from vfcauth.simnet.adversary import AdversaryError, load_script
from vfcauth.simnet.config import ConfigError, ScenarioConfig
from vfcauth.simnet.trace import EventTrace
from vfcauth.simnet.world import SimulationError, build_world, chain_from_trace

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"vfcauth: {msg}", file=sys.stderr)


def _load_config(path: str, seed: int | None) -> ScenarioConfig:
    cfg = ScenarioConfig.load(path)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def _write_outputs(world, trace_out: str | None, chain_out: str | None) -> None:
    if trace_out:
        world.trace.write(trace_out)
    if chain_out:
        # every peer holds the same prefix; export the longest copy
        longest = max((wp.state.chain for wp in world.wps), key=len)
        Path(chain_out).write_bytes(longest.to_bytes())


def _print_problems(problems: list[str]) -> None:
    for p in problems:
        print(f"FAIL {p}")


def cmd_simulate(config_path: str, t_end: int, trace_out: str | None = None,
                 chain_out: str | None = None, seed: int | None = None) -> int:
    cfg = _load_config(config_path, seed)
    world = build_world(cfg)
    world.run_until(t_end)
    _write_outputs(world, trace_out, chain_out)
    report = checks.honest_run(world)
    ops = bench.measured_vs_model(world.trace)
    report.problems.extend(ops.divergent)
    n_ok = len(ops.successes)
    print(f"simulated {t_end} ms: {n_ok} successful auths, "
          f"{max(wp.state.height for wp in world.wps)} blocks, {len(world.trace)} trace events")
    if not report.ok:
        _print_problems(report.problems)
        return EXIT_FAIL
    print("all honest-run invariants hold")
    return EXIT_OK


def cmd_attack(config_path: str, script_path: str, t_end: int, trace_out: str | None = None,
               weaken: bool = False, seed: int | None = None) -> int:
    cfg = _load_config(config_path, seed)
    if weaken:
        cfg = dataclasses.replace(cfg, window_ms=None, replay_cache=False)
    actions = load_script(script_path)
    world = build_world(cfg, actions)
    world.run_until(t_end)
    _write_outputs(world, trace_out, None)
    report = checks.attack_run(world)
    rejected = sum(1 for e in world.trace
                   if e.get("adversarial") and e["outcome"] not in checks.ACCEPTING
                   and e["event"] not in ("recv", "send"))
    print(f"{len(actions)} scripted action(s); {rejected} adversarial message(s) rejected")
    if not report.ok:
        _print_problems(report.problems)
        return EXIT_FAIL
    print("every scripted attack was rejected")
    return EXIT_OK


def parse_range(text: str) -> list[int]:
    """``"1..50"``, ``"10..100:10"`` (inclusive, with step) or ``"1,2,5"``."""
    try:
        if ".." in text:
            lo, rest = text.split("..", 1)
            hi, _, step = rest.partition(":")
            values = list(range(int(lo), int(hi) + 1, int(step or 1)))
        else:
            values = [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}: {exc}") from exc
    if not values:
        raise UsageError(f"range {text!r} is empty")
    return values


def cmd_bench(vary: str, values: list[int], k: int, out_csv: str | None,
              auths_per_vehicle: int = 1, vehicles: int = 1) -> int:
    model = bench.CostModel(k=k)
    report = bench.sweep(model, vary, values, auths_per_vehicle=auths_per_vehicle, vehicles=vehicles)
    text = report.to_csv()
    if out_csv:
        Path(out_csv).write_text(text)
        print(f"wrote {len(report.rows)} rows to {out_csv}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_chain(path: Path) -> Chain:
    data = path.read_bytes()
    if data.startswith(EXPORT_MAGIC):
        return Chain.from_bytes(data)
    try:
        return chain_from_trace(EventTrace.read(path))
    except (ValueError, KeyError) as exc:
        raise LedgerError(f"{path}: neither a ledger export nor a simulation trace ({exc})") from exc


def cmd_ledger_inspect(path: str) -> int:
    try:
        chain = _load_chain(Path(path))
    except LedgerError as exc:
        print(json.dumps({"verdict": "corrupt", "first_bad_height": exc.height, "error": str(exc)},
                         indent=2, sort_keys=True))
        return EXIT_FAIL
    bad = validate_chain(chain)
    dump = chain.to_json()
    dump["verdict"] = "ok" if bad is None else "invalid"
    dump["first_bad_height"] = bad
    print(json.dumps(dump, indent=2, sort_keys=True))
    return EXIT_OK if bad is None else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vfcauth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and check honest-run invariants")
    s.add_argument("config", help="scenario YAML file")
    s.add_argument("--t-end", type=int, default=10_000, help="simulated ms to run (default 10000)")
    s.add_argument("--trace-out", help="write the event trace (JSON lines) here")
    s.add_argument("--chain-out", help="write the committed ledger export here")
    s.add_argument("--seed", type=int, help="override the config seed")

    a = sub.add_parser("attack", help="run a scenario with an adversary script")
    a.add_argument("config", help="scenario YAML file")
    a.add_argument("script", help="adversary script YAML file")
    a.add_argument("--t-end", type=int, default=10_000)
    a.add_argument("--trace-out")
    a.add_argument("--seed", type=int)
    a.add_argument("--weaken", action="store_true",
                   help="disable the freshness window and replay cache (negative control)")

    b = sub.add_parser("bench", help="write an overhead sweep as CSV")
    b.add_argument("--vary", choices=[v.value for v in bench.Vary], required=True)
    b.add_argument("--range", dest="values", required=True, help='e.g. "1..50" or "10..100:10"')
    b.add_argument("--k", type=int, default=1, help="baseline SM count for vehicle sweeps")
    b.add_argument("--auths-per-vehicle", type=int, default=1)
    b.add_argument("--vehicles", type=int, default=1, help="vehicles in an SM sweep")
    b.add_argument("--out", help="CSV path (default stdout)")

    l = sub.add_parser("ledger", help="ledger tools")
    lsub = l.add_subparsers(dest="ledger_command", required=True)
    li = lsub.add_parser("inspect", help="dump and validate a ledger export or a trace")
    li.add_argument("path")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.t_end, args.trace_out, args.chain_out, args.seed)
        if args.command == "attack":
            return cmd_attack(args.config, args.script, args.t_end, args.trace_out, args.weaken,
                              args.seed)
        if args.command == "bench":
            return cmd_bench(args.vary, parse_range(args.values), args.k, args.out,
                             args.auths_per_vehicle, args.vehicles)
        return cmd_ledger_inspect(args.path)
    except (ConfigError, AdversaryError, UsageError, SimulationError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _err(f"{exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
