"""Command-line entry point: ``polarcm <command> [options]``.

Commands
--------
capacity     bit-level and constellation capacities of 2^m-PAM over an Es/N0 grid
unionbound   BLER union bounds of interleaver-1/-2/random over capacity instances
construct    reliabilities and the selected information set of one code
simulate     Monte Carlo BLER / spectral-efficiency sweeps of CPCM, MLC or BICM
rerun        repeat a run from its manifest

Settings are resolved in increasing precedence: built-in defaults, a config
file (``--config``), environment variables ``POLARCM_<NAME>`` and explicit
flags.  A config file holds one ``name = value`` pair per line, where
``name`` is a long option without the leading dashes (``-`` or ``_``
both accepted) and ``#`` starts a comment.

Every CSV starts with a comment line naming its schema version and, when
written to a file, the manifest (``<stem>.manifest.json``) that records the
command, resolved settings, seed, code version, timestamp and output paths.
Apart from the manifest timestamp, re-running a manifest reproduces its
outputs byte for byte.

Exit status: 0 on success, 2 on usage errors, 3 when the settings fail
validation.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .channels import (
    Principle,
    bit_level_capacities,
    constellation_capacity,
    make_constellation,
)
from .construction import (
    bec_evolve,
    error_prob_from_mean,
    ga_evolve,
    mean_for_capacity,
    select_info_set,
    table1_instances,
)
from .interleave import interleaver1, interleaver2, random_interleaver
from .sim import (
    STANDARD_RATES,
    PROFILES,
    SCHEMES,
    SimConfig,
    capacity_grid,
    k_for_rate,
    run_bler,
    shannon_bound,
    spectral_efficiency_sweep,
    union_bound_sweep,
)

SCHEMA_VERSION = 1
ENV_PREFIX = "POLARCM_"
EXIT_OK, EXIT_USAGE, EXIT_CONFIG = 0, 2, 3

log = logging.getLogger("polarcm")


class ConfigError(ValueError):
    """Settings that parse but cannot be used."""


# ------------------------------------------------------------ value parsers

def parse_grid(text: str) -> tuple:
    """``a:b:step`` (inclusive of ``b``), a comma list, or a single number."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be a:b:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ValueError(f"empty grid {text!r}")
        n = int(np.floor((b - a) / step + 1e-9)) + 1
        return tuple(round(a + k * step, 10) for k in range(n))
    values = tuple(float(v) for v in text.split(",") if v.strip())
    if not values:
        raise ValueError("empty grid")
    return values


def format_grid(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def parse_rates(text: str) -> tuple:
    return tuple(Fraction(v.strip()) for v in str(text).split(",") if v.strip())


def format_rates(values) -> str:
    return ",".join(str(Fraction(v)) for v in values)


def parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_int(text) -> int:
    return int(str(text), 0)


@dataclass(frozen=True)
class Opt:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    choices: Optional[tuple] = None
    fmt: Callable[[Any], str] = str
    flag: bool = False  # store_true on the command line

    def convert(self, raw):
        value = self.parse(raw)
        if self.choices is not None and value not in self.choices:
            raise ValueError(f"{self.name} must be one of {', '.join(map(str, self.choices))}")
        return value

    def dump(self, value):
        return None if value is None else self.fmt(value)


COMMON = [
    Opt("seed", parse_int, 1, "master seed"),
    Opt("out", str, None, "output CSV path (default: stdout, no manifest)"),
    Opt("threads", parse_int, os.cpu_count() or 1, "worker processes for Monte Carlo"),
]

OPTIONS = {
    "capacity": [
        Opt("m", parse_int, 2, "bits per PAM symbol"),
        Opt("labeling", str, "sp", "bit labeling", choices=("sp", "gray")),
        Opt("grid", parse_grid, parse_grid("-5:20:0.5"), "Es/N0 grid in dB, Es/N0 = 1/(2 sigma^2)",
            fmt=format_grid),
        Opt("nodes", parse_int, 64, "Gauss-Hermite nodes"),
    ],
    "unionbound": [
        Opt("m", parse_int, None, "channel types (default 2, or 4 with --table1)"),
        Opt("N", parse_int, 512, "code length"),
        Opt("channels", str, "awgn", "channel family", choices=("bec", "awgn")),
        Opt("table1", parse_bool, False, "use the twenty tabulated AWGN instances", flag=True),
        Opt("average", float, 0.7, "average capacity of the swept grid"),
        Opt("step", float, 0.05, "capacity grid step"),
        Opt("rate", Fraction, Fraction(1, 2), "code rate"),
        Opt("n_random", parse_int, 100, "random assignments per instance"),
    ],
    "construct": [
        Opt("N", parse_int, 8, "code length"),
        Opt("K", parse_int, None, "information bits (overrides --rate)"),
        Opt("rate", Fraction, Fraction(1, 2), "code rate"),
        Opt("channels", str, "bec", "channel family", choices=("bec", "awgn")),
        Opt("params", parse_floats, (0.5,), "per-type erasure probabilities (bec) or "
            "capacities (awgn), comma separated", fmt=lambda v: ",".join(map(repr, v))),
        Opt("assignment", str, "interleaver2", "channel-type assignment",
            choices=("interleaver2", "interleaver1", "random")),
    ],
    "simulate": [
        Opt("scheme", str, "cpcm", "coded modulation scheme", choices=SCHEMES),
        Opt("profile", str, "desk", "preset for N, L, target and stopping rule",
            choices=tuple(PROFILES)),
        Opt("m", parse_int, 2, "bits per PAM symbol"),
        Opt("N", parse_int, None, "code length (default from profile)"),
        Opt("L", parse_int, None, "CPCM codewords per frame (default from profile)"),
        Opt("rates", parse_rates, STANDARD_RATES, "candidate code rates", fmt=format_rates),
        Opt("grid", parse_grid, None, "Eb/N0 grid in dB (default depends on m)",
            fmt=format_grid),
        Opt("mode", str, "se", "se: best rate per Eb/N0; bler: every (rate, Eb/N0)",
            choices=("se", "bler")),
        Opt("bler_target", float, None, "target block error rate (default from profile)"),
        Opt("max_frames", parse_int, None, "codeword budget per point (default from profile)"),
        Opt("max_errors", parse_int, None, "error events per point (default from profile)"),
        Opt("labeling", str, None, "labeling (default sp, gray for BICM)",
            choices=("sp", "gray")),
        Opt("detector", str, "genie", "CPCM success detector", choices=("genie", "crc")),
        Opt("crc_r", parse_int, 16, "CRC length"),
        Opt("crc_poly", parse_int, 0x1021, "CRC polynomial without the leading term",
            fmt=hex),
        Opt("min_sum", parse_bool, False, "min-sum check nodes in SC", flag=True),
    ],
}

DEFAULT_EBN0_GRID = {1: "-2:8:1", 2: "0:10:1", 3: "2:14:1", 4: "4:18:1"}


def options_for(command: str) -> dict:
    return {o.name: o for o in COMMON + OPTIONS[command]}


# ------------------------------------------------------------ settings

def read_config_file(path) -> dict:
    """Parse a flat ``name = value`` file into raw strings."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected name = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_settings(command: str, explicit: dict, config_path=None, environ=None) -> dict:
    """Merge defaults, config file, environment and explicit flags."""
    opts = options_for(command)
    environ = os.environ if environ is None else environ
    settings = {name: o.default for name, o in opts.items()}
    layers = []
    if config_path is None:
        config_path = environ.get(ENV_PREFIX + "CONFIG")
    if config_path:
        layers.append((f"config file {config_path}", read_config_file(config_path)))
    env = {}
    for name in opts:
        key = ENV_PREFIX + name.upper()
        if key in environ:
            env[name] = environ[key]
    layers.append(("environment", env))
    for source, raw in layers:
        for key, value in raw.items():
            if key not in opts:
                raise ConfigError(f"{source}: unknown setting {key!r} for {command}")
            try:
                settings[key] = opts[key].convert(value)
            except (ValueError, ArithmeticError) as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}") from exc
    settings.update(explicit)
    return settings


def dump_settings(command: str, settings: dict) -> dict:
    opts = options_for(command)
    return {k: opts[k].dump(v) for k, v in settings.items() if k in opts}


def load_settings(command: str, dumped: dict) -> dict:
    opts = options_for(command)
    out = {}
    for k, v in dumped.items():
        if k not in opts:
            raise ConfigError(f"manifest: unknown setting {k!r} for {command}")
        out[k] = None if v is None else opts[k].convert(v)
    return out


# ------------------------------------------------------------ output

def manifest_path(out) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".manifest.json")


def render_csv(schema: str, header, rows, manifest_name: Optional[str]) -> str:
    buf = io.StringIO()
    line = f"# schema={schema}/{SCHEMA_VERSION}"
    if manifest_name:
        line += f" manifest={manifest_name}"
    buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r[h]) for h in header])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def emit(command: str, settings: dict, schema: str, header, rows) -> None:
    out = settings.get("out")
    if out is None:
        sys.stdout.write(render_csv(schema, header, rows, None))
        return
    out = Path(out)
    mpath = manifest_path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_csv(schema, header, rows, mpath.name))
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": dump_settings(command, settings),
        "seed": settings["seed"],
        "code_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [str(out)],
    }
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s and %s", out, mpath)


# ------------------------------------------------------------ commands

def sigma_from_esn0(esn0_db: float) -> float:
    """Noise std of real AWGN giving this Es/N0 for a unit-energy constellation."""
    return float(np.sqrt(0.5 * 10.0 ** (-esn0_db / 10.0)))


def cmd_capacity(s: dict) -> None:
    """Bit-level and constellation capacities over an Es/N0 grid."""
    const = make_constellation(s["m"], s["labeling"])
    rows = []
    for esn0 in s["grid"]:
        sigma = sigma_from_esn0(esn0)
        joint = constellation_capacity(const, sigma, nodes=s["nodes"])
        base = dict(esn0_db=esn0, labeling=s["labeling"], m=s["m"])
        for principle in Principle:
            caps = bit_level_capacities(const, sigma, principle, nodes=s["nodes"])
            for j, c in enumerate(caps, start=1):
                rows.append(dict(base, level=j, principle=principle.value, capacity=float(c)))
            rows.append(dict(base, level="sum", principle=principle.value,
                             capacity=float(np.sum(caps))))
        rows.append(dict(base, level="all", principle="constellation", capacity=joint))
    emit("capacity", s, "capacity",
         ["esn0_db", "m", "labeling", "principle", "level", "capacity"], rows)


def cmd_unionbound(s: dict) -> None:
    """Union bounds of interleaver-1/-2/random assignments."""
    if s["table1"]:
        if s["m"] not in (None, 4):
            raise ConfigError("the tabulated instances have four channel types; use m = 4")
        m, instances = 4, table1_instances()
    else:
        m = 2 if s["m"] is None else s["m"]
        if m < 1:
            raise ConfigError("m must be positive")
        instances = capacity_grid(m, s["average"], s["step"])
    if s["N"] < 2 or s["N"] & (s["N"] - 1):
        raise ConfigError("N must be a power of two")
    rows = union_bound_sweep(m, s["N"], instances, channel=s["channels"], R=s["rate"],
                             n_random=s["n_random"], seed=s["seed"])
    for r in rows:
        r["channels"] = s["channels"]
    emit("unionbound", s, "unionbound",
         ["instance", "capacities", "channels", "interleaver", "seed", "N", "N_s", "K",
          "bound"], rows)


def cmd_construct(s: dict) -> None:
    """Reliabilities and information set of one code."""
    N, params = s["N"], s["params"]
    m = len(params)
    if m == 0:
        raise ConfigError("need at least one channel parameter")
    K = s["K"] if s["K"] is not None else k_for_rate(N, s["rate"])
    if not 0 <= K <= N:
        raise ConfigError(f"K={K} out of range for N={N}")
    if s["assignment"] == "interleaver2":
        a = interleaver2(N, m)
    elif s["assignment"] == "interleaver1":
        a = interleaver1(N, m)
    else:
        a = random_interleaver(N, m, s["seed"])
    if s["channels"] == "bec":
        if any(not 0 <= z <= 1 for z in params):
            raise ConfigError("erasure probabilities must lie in [0, 1]")
        prof = bec_evolve(a, params)
        err = prof.per_position
    else:
        if any(not 0 <= c <= 1 for c in params):
            raise ConfigError("capacities must lie in [0, 1]")
        prof = ga_evolve(a, [mean_for_capacity(c) for c in params])
        err = error_prob_from_mean(prof.per_position)
    chosen = np.zeros(N, dtype=bool)
    chosen[select_info_set(prof, K)] = True
    leaf = a.assignment
    rows = [dict(position=i, channel_type=int(leaf[i]), metric=prof.metric.value,
                 reliability=float(prof.per_position[i]), error_metric=float(err[i]),
                 selected=bool(chosen[i])) for i in range(N)]
    emit("construct", s, "construct",
         ["position", "channel_type", "metric", "reliability", "error_metric", "selected"],
         rows)


def sim_config(s: dict) -> SimConfig:
    prof = PROFILES[s["profile"]]
    pick = {k: (s[k] if s[k] is not None else prof[k])
            for k in ("N", "L", "bler_target", "max_frames", "max_errors")}
    grid = s["grid"]
    if grid is None:
        grid = parse_grid(DEFAULT_EBN0_GRID.get(s["m"], "0:24:1"))
    return SimConfig(scheme=s["scheme"], m=s["m"], rate_set=s["rates"], ebn0_grid_db=grid,
                     seed=s["seed"], labeling=s["labeling"], detector=s["detector"],
                     crc_r=s["crc_r"], crc_poly=s["crc_poly"], exact=not s["min_sum"],
                     threads=s["threads"], **pick)


def cmd_simulate(s: dict) -> None:
    """Monte Carlo BLER and spectral-efficiency sweeps."""
    cfg = sim_config(s)
    if s["mode"] == "se":
        rows = spectral_efficiency_sweep(cfg)
    else:
        rows = [run_bler(cfg, R, e) for R in cfg.rate_set for e in cfg.ebn0_grid_db]
    out = []
    for r in rows:
        d = r.as_dict()
        d.update(scheme=cfg.scheme, m=cfg.m, N=cfg.N, labeling=cfg.labeling,
                 L=cfg.L if cfg.scheme == "cpcm" else "",
                 shannon_ebn0_db=float(shannon_bound(float(r.R_cm))))
        out.append(d)
    emit("simulate", s, "simulate",
         ["scheme", "m", "N", "L", "labeling", "ebn0_db", "R", "K", "R_cm", "bler",
          "codewords", "errors", "wilson_lo", "wilson_hi", "attempts_per_codeword", "sigma",
          "selected", "shannon_ebn0_db"], out)


COMMANDS = {
    "capacity": cmd_capacity,
    "unionbound": cmd_unionbound,
    "construct": cmd_construct,
    "simulate": cmd_simulate,
}


# ------------------------------------------------------------ parser

def _add_option(p: argparse.ArgumentParser, o: Opt) -> None:
    flag = "--" + o.name.replace("_", "-")
    if o.flag:
        p.add_argument(flag, dest=o.name, action="store_const", const=True,
                       default=argparse.SUPPRESS, help=o.help)
        return
    def convert(raw):
        return o.convert(raw)

    convert.__name__ = o.name
    text = o.help if o.default is None else f"{o.help} (default: {o.dump(o.default)})"
    p.add_argument(flag, dest=o.name, type=convert, default=argparse.SUPPRESS,
                   metavar=o.name.upper(), help=text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarcm", description="Polar coded modulation tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, help=(COMMANDS[name].__doc__ or name).strip())
        for o in COMMON + OPTIONS[name]:
            _add_option(p, o)
        p.add_argument("--config", default=None, help="flat name = value settings file")
        p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    p = sub.add_parser("rerun", help="Repeat a run recorded in a manifest.")
    p.add_argument("manifest", help="path of a *.manifest.json file")
    p.add_argument("--out", default=None, help="write somewhere else")
    p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    return parser


def _run(args) -> int:
    if args.command == "rerun":
        try:
            manifest = json.loads(Path(args.manifest).read_text())
            command = manifest["command"]
            settings = load_settings(command, manifest["config"])
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"unreadable manifest {args.manifest}: {exc}") from exc
        if args.out is not None:
            settings["out"] = args.out
        COMMANDS[command](settings)
        return EXIT_OK
    explicit = {k: v for k, v in vars(args).items()
                if k not in ("command", "config", "verbose")}
    settings = resolve_settings(args.command, explicit, args.config)
    COMMANDS[args.command](settings)
    return EXIT_OK


_NEGATIVE_VALUE = re.compile(r"^-\.?\d")


def attach_negative_values(argv):
    """Rewrite ``--opt -5:20:1`` as ``--opt=-5:20:1`` so argparse keeps the value."""
    out = []
    for tok in argv:
        if (out and _NEGATIVE_VALUE.match(tok) and out[-1].startswith("--")
                and "=" not in out[-1]):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(attach_negative_values(argv))
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return _run(args)
    except (ConfigError, ValueError) as exc:
        print(f"polarcm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
