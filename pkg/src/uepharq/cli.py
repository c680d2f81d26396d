"""Command line entry point: ``uepharq {distance,search-scrambler,simulate,selftest}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import gf2, selftest
from .cc import ConvCodeSpec, to_unit_memory
from .prune import distance_profile, free_distance, search_scrambler
from .sim import SimConfig, apply_overrides, emit_csv, parse_config, run_monte_carlo, write_csv

log = logging.getLogger("uepharq")


def parse_code_spec(text: str, memory: int | None = None):
    """Octal list (``15,17``) or a ``key = value`` file with generators/memory/scrambler.

    Returns ``(spec, scrambler or None)``.
    """
    path = Path(text)
    scrambler = None
    if path.is_file():
        values = {}
        for raw in path.read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                key, _, val = line.partition("=")
                values[key.strip().lower()] = val.strip()
        if "generators" not in values:
            raise ValueError(f"{path}: missing 'generators'")
        mem = int(values["memory"]) if "memory" in values else memory
        spec = ConvCodeSpec.from_octal(values["generators"], mem)
        if "scrambler" in values:
            scrambler = gf2.parse_matrix(values["scrambler"], spec.memory)
        return spec, scrambler
    return ConvCodeSpec.from_octal(text, memory), scrambler


def _fmt_d(d) -> str:
    return "unbounded" if d == float("inf") else str(int(d))


def _cmd_distance(args) -> int:
    spec, scrambler = parse_code_spec(args.code, args.memory)
    if args.scrambler:
        scrambler = gf2.parse_matrix(args.scrambler, spec.memory)
    if args.prune is not None:
        d = free_distance(to_unit_memory(spec, scrambler), args.prune)
        levels = [(args.prune, d)]
        scr = to_unit_memory(spec, scrambler).scrambler
    else:
        prof = distance_profile(spec, scrambler)
        levels = list(enumerate(prof.distances))
        scr = prof.scrambler
    _print_profile(spec, scr, levels, args.csv)
    return 0


def _print_profile(spec, scrambler, levels, as_csv: bool):
    if as_csv:
        print("code,scrambler,level,free_distance")
        for j, d in levels:
            print(f"\"{spec.octal()}\",{gf2.format_matrix(scrambler)},{j},{_fmt_d(d)}")
        return
    print(f"code {spec.octal()} (memory {spec.memory}), scrambler {gf2.format_matrix(scrambler)}")
    for j, d in levels:
        print(f"d_{j} = {_fmt_d(d)}")


def _cmd_search(args) -> int:
    spec, _ = parse_code_spec(args.code, args.memory)
    prof = search_scrambler(spec, args.objective)
    _print_profile(spec, prof.scrambler, list(enumerate(prof.distances)), args.csv)
    return 0


def _cmd_simulate(args) -> int:
    cfg = SimConfig()
    if args.config:
        cfg = parse_config(Path(args.config).read_text(), cfg)
    cfg = apply_overrides(cfg, {
        "seed": args.seed, "trials": args.trials, "snr_start": args.snr_start, "snr_stop": args.snr_stop,
        "snr_step": args.snr_step, "schemes": args.schemes, "max_retx": args.max_retx, "fading": args.fading,
        "out": args.out, "workers": args.workers, "chunk": args.chunk,
        "identical_fades": True if args.identical_fades else None,
    })
    log.info("schemes %s, SNR grid %s, %d trials", ",".join(cfg.schemes), cfg.snr_points_db, cfg.trials)
    cfg.validate()
    table = run_monte_carlo(cfg)
    if cfg.out:
        emit_csv(table, cfg.out)
        log.info("wrote %d rows to %s", len(table.rows), cfg.out)
    else:
        write_csv(table, sys.stdout)
    return 0


def _cmd_selftest(args) -> int:
    failed = 0
    for name, ok, detail in selftest.run(args.seed):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uepharq", description="UEP-HARQ with pruned convolutional codes")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("distance", help="free distances of a code and its pruned subcodes")
    d.add_argument("code", help="octal generators such as 15,17, or a code-spec file")
    d.add_argument("--memory", type=int)
    d.add_argument("--prune", type=int, metavar="J")
    d.add_argument("--scrambler", help="row-major bits, e.g. 100010001")
    d.add_argument("--csv", action="store_true")
    d.set_defaults(func=_cmd_distance)

    s = sub.add_parser("search-scrambler", help="exhaustive scrambler search")
    s.add_argument("code")
    s.add_argument("--memory", type=int)
    s.add_argument("--objective", type=int, required=True, metavar="J")
    s.add_argument("--csv", action="store_true")
    s.set_defaults(func=_cmd_search)

    m = sub.add_parser("simulate", help="Monte Carlo BLER/BER sweep")
    m.add_argument("--config")
    m.add_argument("--seed", type=int)
    m.add_argument("--trials", type=int)
    m.add_argument("--snr-start", type=float)
    m.add_argument("--snr-stop", type=float)
    m.add_argument("--snr-step", type=float)
    m.add_argument("--schemes", help="comma-separated, e.g. EEPH,UEPH_7,UEPH_6,SEPUEPH")
    m.add_argument("--max-retx", type=int)
    m.add_argument("--fading", choices=["block_rayleigh", "fixed"])
    m.add_argument("--identical-fades", action="store_true")
    m.add_argument("--workers", type=int)
    m.add_argument("--chunk", type=int)
    m.add_argument("--out")
    m.set_defaults(func=_cmd_simulate)

    t = sub.add_parser("selftest", help="oracle-equivalence and identity checks")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"uepharq: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
