"""
Command-line entry point.

    polargp simulate --config fig7.json --out fer.csv --plot
    polargp rate-region --config stuck.json
    polargp check-degraded --config bsc.json

Exit codes: 2 malformed config, 3 infeasible code or rate, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .channels import channel_from_config, check_degraded
from .construction import InfeasiblePlan
from .harness import (
    SCHEMA_VERSION,
    ConfigError,
    Experiment,
    ExperimentConfig,
    make_strategy,
    rows_to_csv,
    run_experiment,
)
from .region import BudgetExceeded, region_bcsi_common, region_bcsi_state, region_gp

EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 2, 3, 4

log = logging.getLogger("polargp")


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def _raw_config(args) -> dict:
    d = _read_json(args.config)
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    if d.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"config must carry schema: {SCHEMA_VERSION}")
    if "channel" not in d:
        raise ConfigError("config lacks a channel")
    return d


def _experiment_config(args) -> ExperimentConfig:
    d = _raw_config(args)
    if args.seed is not None:
        d["seed"] = args.seed
    return ExperimentConfig.from_dict(d)


def _channel(d: dict):
    try:
        return channel_from_config(d["channel"])
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad channel: {exc}") from None


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


# ------------------------------------------------------------ subcommands


def cmd_construct(args) -> None:
    cfg = _experiment_config(args)
    exp = Experiment(cfg)
    point = exp.feasible_point(args.rate_index)
    code = point.code
    out = {
        "config": cfg.to_dict(),
        "bits": list(point.bits),
        "profiles": {key: exp.cache[key].to_dict() for key in sorted(exp.cache) if hasattr(exp.cache[key], "z")},
        "sets": code.sets.to_dict(),
    }
    plan = getattr(code, "plan", None)
    if plan is not None and hasattr(plan, "summary"):
        out["plan"] = plan.summary()
    sets2 = getattr(code, "sets2", None)
    if sets2 is not None:
        out["sets2"] = sets2.to_dict()
    _emit(_dumps(out), args.out)


def cmd_encode(args) -> None:
    cfg = _experiment_config(args)
    exp = Experiment(cfg)
    frame = exp.encode_frame(exp.feasible_point(args.rate_index), args.trial)
    _emit(_dumps(frame), args.out)


def cmd_decode(args) -> None:
    cfg = _experiment_config(args)
    frame = _read_json(args.input)
    exp = Experiment(cfg)
    receiver = args.receiver if cfg.scheme.startswith("bcsi") else cfg.receiver
    try:
        result = exp.decode_frame(exp.feasible_point(args.rate_index), frame, receiver)
    except KeyError as exc:
        raise ConfigError(f"frame file lacks {exc}") from None
    _emit(_dumps(result), args.out)


def cmd_simulate(args) -> None:
    cfg = _experiment_config(args)
    rows = run_experiment(cfg, threads=args.threads)
    out = args.out if args.out is not None else cfg.output
    _emit(rows_to_csv(rows), out)
    if args.plot:
        if out is None or str(out) == "-":
            raise ConfigError("--plot needs a CSV path (--out or the config's output)")
        from .plotting import plot_fer_curves

        png = Path(out).with_suffix(".png")
        plot_fer_curves(rows, png, title=f"{cfg.scheme}, n={cfg.n}, k={cfg.k}")
        log.info("wrote %s", png)


def cmd_rate_region(args) -> None:
    d = _raw_config(args)
    ch = _channel(d)
    scheme = d.get("scheme", "bcsi-state")
    try:
        if scheme == "bcsi-common":
            p1 = float(d.get("input_p1", 0.5))
            r1, r2 = region_bcsi_common(ch, [1.0 - p1, p1])
            conditions = {}
        elif scheme == "gp":
            st = make_strategy(d.get("strategy"), ch)
            m = int(d.get("receiver", 1))
            r1 = r2 = region_gp(ch, m, st.p_v1_s, st.f[:, 0, :])
            conditions = {}
        elif scheme == "bcsi-state":
            st = make_strategy(d.get("strategy"), ch)
            corner = region_bcsi_state(ch, st)
            r1, r2, conditions = corner.r1, corner.r2, corner.conditions
        else:
            raise ConfigError(f"rate-region does not cover scheme {scheme!r}")
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad strategy: {exc}") from None
    text = f"r1,r2\n{r1:.12g},{r2:.12g}\n"
    _emit(text, args.out)
    if conditions:
        log.info("conditions: %s", conditions)
    if args.plot:
        if args.out is None or str(args.out) == "-":
            raise ConfigError("--plot needs an output path")
        from .plotting import plot_region_corner

        plot_region_corner(r1, r2, Path(args.out).with_suffix(".png"), title=ch.name)


def cmd_check_degraded(args) -> None:
    d = _raw_config(args)
    ch = _channel(d)
    witness = check_degraded(ch)
    out = {"channel": ch.name, "degraded": witness is not None}
    if witness is not None:
        out["witness"] = witness.to_dict()
    _emit(_dumps(out), args.out)


COMMANDS = {
    "construct": (cmd_construct, "estimate profiles and write the polar sets of one rate point"),
    "encode": (cmd_encode, "encode one trial and write the frame (with both channel outputs) as JSON"),
    "decode": (cmd_decode, "decode one receiver's output from a frame file"),
    "simulate": (cmd_simulate, "run the Monte Carlo experiment and write CSV"),
    "rate-region": (cmd_rate_region, "evaluate the achievable corner of a strategy"),
    "check-degraded": (cmd_check_degraded, "test whether receiver 2 is degraded with respect to receiver 1"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polargp", description="Polar codes for channels with state and broadcast side information")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="JSON config (schema: 1)")
        p.add_argument("--out", type=Path, default=None, help="output path (default stdout)")
        p.add_argument("--seed", default=None, help="master seed in hex, overriding the config")
        p.add_argument("--threads", type=int, default=1, help="rate points simulated in parallel")
        if name in ("construct", "encode", "decode"):
            p.add_argument("--rate-index", type=int, default=0, help="which rate point of the sweep")
        if name == "encode":
            p.add_argument("--trial", type=int, default=0)
        if name == "decode":
            p.add_argument("--input", required=True, type=Path, help="frame file written by encode")
            p.add_argument("--receiver", type=int, choices=(1, 2), default=1)
        if name in ("simulate", "rate-region"):
            p.add_argument("--plot", action="store_true", help="also write a PNG next to the output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    handler = COMMANDS[args.command][0]
    try:
        handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasiblePlan, BudgetExceeded) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IndexError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
