"""Command-line entry point: design, simulate, sweep and table1."""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..codesign.alternating import SlotCountTooSmall, SolverConfig, alternate_minimize
from ..decoder import build_codebook, decode, merge_unresolved
from ..functab import constraint_pairs, enumerate_inputs, make_function
from ..macsim import ChannelModel, NoiseModel, simulate
from . import table1
from .artifact import dumps_design, read_design
from .experiment import ExperimentConfig, fill_budget, reference_sigma, run_sweep

DEFAULTS = {
    "function": "prod",
    "values": "0,1,2,3",
    "k": "4",
    "l": "2",
    "snr": "-5:5:35",
    "trials": "100",
    "seed": "0",
    "method": "rechcomp",
    "epsilon": "1e-2",
    "pmax": "",
    "mode": "multiset",
    "out": "",
    "tile_base_l": "",
    "channel": "ideal",
    "init": "bit-split",
}


def parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


def parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


def parse_snr(text: str) -> tuple[float, ...]:
    """``start:step:stop`` (stop included) or a comma list."""
    text = text.replace(" ", "")
    if ":" not in text:
        return parse_floats(text)
    parts = [float(p) for p in text.split(":")]
    if len(parts) != 3 or parts[1] == 0:
        raise ValueError(f"bad SNR range {text!r}; expected start:step:stop")
    start, step, stop = parts
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ValueError(f"empty SNR range {text!r}")
    return tuple(round(start + i * step, 12) for i in range(count))


def load_config(path) -> dict[str, str]:
    """Merge every section of a key = value file into one flat dict."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    merged: dict[str, str] = dict(parser.defaults())
    for section in parser.sections():
        merged.update({k: v for k, v in parser.items(section)})
    unknown = set(k.replace("-", "_") for k in merged) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"unknown config key(s) {sorted(unknown)}")
    return {k.replace("-", "_"): v for k, v in merged.items()}


def resolve(args: argparse.Namespace) -> dict[str, str]:
    """Defaults, then the config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        opts.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = str(value)
    return opts


def experiment_config(opts: dict[str, str]) -> ExperimentConfig:
    return ExperimentConfig(
        function=opts["function"],
        values=parse_floats(opts["values"]),
        K=int(opts["k"]),
        L_list=parse_ints(opts["l"]),
        snr_db=parse_snr(opts["snr"]),
        trials=int(opts["trials"]),
        seed=int(opts["seed"]),
        methods=tuple(m for m in opts["method"].replace(" ", "").split(",") if m),
        epsilon=float(opts["epsilon"]),
        p_max=float(opts["pmax"]) if opts["pmax"] else None,
        mode=opts["mode"],
        out=opts["out"] or None,
        tile_base_L=int(opts["tile_base_l"]) if opts["tile_base_l"] else None,
        channel=opts["channel"],
        init_strategy=opts["init"],
    )


def _problem(opts):
    func = make_function(opts["function"], parse_floats(opts["values"]), int(opts["k"]))
    enum = enumerate_inputs(func, opts["mode"] if func.symmetric else "full")
    return func, enum, constraint_pairs(enum, float(opts["epsilon"]))


def _solver(opts, L: int) -> SolverConfig:
    return SolverConfig(
        epsilon=float(opts["epsilon"]),
        p_max=float(opts["pmax"]) if opts["pmax"] else None,
        L=L,
        seed=int(opts["seed"]),
        init_strategy=opts["init"],
    )


def _emit(text: str, out: str) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_design(args) -> int:
    opts = resolve(args)
    _, enum, cons = _problem(opts)
    L = parse_ints(opts["l"])[0]
    try:
        result = alternate_minimize(enum, cons, _solver(opts, L))
    except SlotCountTooSmall as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    book = build_codebook(enum, result.x, result.C) if args.codebook else None
    meta = {"function": opts["function"], "values": list(parse_floats(opts["values"])),
            "mode": enum.mode, "seed": int(opts["seed"])}
    _emit(dumps_design(result, enum if args.codebook else None, book, meta), opts["out"])
    print(f"status={result.status} energy={result.energy:.6g} iterations={result.iterations_used}",
          file=sys.stderr)
    return 0 if result.feasible else 1


def cmd_simulate(args) -> int:
    opts = resolve(args)
    func, enum, cons = _problem(opts)
    if args.design:
        art = read_design(args.design)
        x, C, status = art.x, art.C, art.status
    else:
        L = parse_ints(opts["l"])[0]
        result = alternate_minimize(enum, cons, _solver(opts, L))
        x, C, status = result.x, result.C, result.status
    if C.shape[0] != enum.N:
        raise SystemExit("design does not match the function's K and Q")
    values = parse_floats(args.inputs)
    domain = func.domain_values[0]
    try:
        levels = np.array([domain.index(v) for v in values])
    except ValueError:
        raise SystemExit(f"inputs must come from the domain {domain}")
    if len(levels) != enum.K:
        raise SystemExit(f"expected {enum.K} inputs")
    p_max = float(opts["pmax"]) if opts["pmax"] else float(enum.N)
    x = fill_budget(x, C, p_max)
    book = build_codebook(enum, x, C)
    if status != "feasible":
        book = merge_unresolved(book, cons)
    sigma = 0.0 if args.snr is None else reference_sigma(p_max, args.snr)
    rng = np.random.default_rng(int(opts["seed"]))
    y = simulate(x, C, levels, enum.Q, ChannelModel(opts["channel"]), NoiseModel(sigma), rng)
    f_hat, _ = decode(y, book)
    report = {
        "inputs": list(values),
        "f": func(levels),
        "y": [[float(v.real), float(v.imag)] for v in np.atleast_1d(y)],
        "f_hat": f_hat,
        "sigma_z": sigma,
        "status": status,
    }
    print(json.dumps(report))
    return 0


def cmd_sweep(args) -> int:
    opts = resolve(args)
    cfg = experiment_config(opts)
    report = run_sweep(cfg)
    if cfg.out:
        csv_path, dat_path = report.write(cfg.out)
        print(f"wrote {csv_path} and {dat_path}", file=sys.stderr)
    else:
        sys.stdout.write(report.to_csv())
    return 0


def cmd_table1(args) -> int:
    rows = table1.reproduce()
    print(table1.format_table(rows))
    for point, outs in table1.uncoded_collisions().items():
        print(f"uncoded collision at {point}: outputs {sorted(outs)}")
    ok = all(r.matches for r in rows)
    print("table1: " + ("all rows match" if ok else "MISMATCH"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rechcomp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--function", choices=("sum", "prod", "max"))
    common.add_argument("--values", help="comma list of domain values shared by every node")
    common.add_argument("--k", type=int, help="number of nodes")
    common.add_argument("--q", type=int, help="number of levels (checked against --values)")
    common.add_argument("--l", help="slot count, or a comma list for sweep")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--pmax", type=float, help="per-slot power budget (default N)")
    common.add_argument("--seed", type=int)
    common.add_argument("--mode", choices=("full", "multiset"))
    common.add_argument("--channel", choices=("ideal", "rayleigh"))
    common.add_argument("--init", choices=("bit-split", "all-ones"), help="initial code")
    common.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("design", parents=[common], help="design x and C, write the artifact")
    p.add_argument("--codebook", action="store_true", help="also export the enumeration and codebook")
    p.set_defaults(run=cmd_design)

    p = sub.add_parser("simulate", parents=[common], help="send one input tuple and decode it")
    p.add_argument("--inputs", required=True, help="comma list of K node values")
    p.add_argument("--design", help="design artifact to use instead of designing on the fly")
    p.add_argument("--snr", type=float, help="SNR in dB (omit for a noiseless channel)")
    p.set_defaults(run=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo NMSE over SNR and L")
    p.add_argument("--snr", help="start:step:stop in dB, or a comma list")
    p.add_argument("--trials", type=int)
    p.add_argument("--method", help="comma list from rechcomp, channelcomp, aircomp")
    p.add_argument("--tile-base-l", dest="tile_base_l", type=int,
                   help="design at this L and repeat the pattern for larger L")
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("table1", help="reproduce the four-node QPSK product example")
    p.set_defaults(run=cmd_table1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "q", None) is not None:
        opts = resolve(args)
        if args.q != len(parse_floats(opts["values"])):
            parser.error("--q does not match the number of --values")
    try:
        return args.run(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
