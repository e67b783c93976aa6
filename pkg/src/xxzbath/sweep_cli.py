"""Command-line driver for parameter sweeps, figure data and self-checks.

    xxzbath ghz-dynamics --delta 0,2 --temperature 0.05 --time linspace:0:100:101
    xxzbath heatmap --out heat.csv --threads 4
    xxzbath verify --level fast

Grids accept a comma list ("0,0.5,inf"), "linspace:a:b:n" or
"logspace:a:b:n" (base 10).  Temperatures are T = 1/beta; "inf" means
beta = 0.  Every key of an INI --config file mirrors a long flag (dashes
or underscores); values from the command line win.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bethe_core import (BetheError, ChainSpec, DomainError, MagnonState, ResourceCapError,
                         state_energy, zero_momentum_pair_roots)
from .entanglement_measures import INF, cme_upper_bound_mixture, gme_ghz_block
from .ghz_distillation import distillable_rate, rate_table, stabilizer_populations
from .open_dynamics import (BathSpec, build_markov_generator, evolve_populations,
                            ghz_sector_evolve)

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_CAP = 0, 1, 2, 3
THREADS_ENV = "XXZBATH_THREADS"
MEASURES = ("gme_ghz", "distill_rate", "w_fraction", "cme_bound")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

def parse_grid(text: str, name: str) -> list:
    text = str(text).strip()
    try:
        if text.startswith(("linspace:", "logspace:")):
            kind, a, b, n = text.split(":")
            fn = np.linspace if kind == "linspace" else np.logspace
            vals = [float(x) for x in fn(float(a), float(b), int(n))]
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{name}: cannot parse grid '{text}'")
    if not vals:
        raise UsageError(f"{name}: grid is empty")
    if any(math.isnan(v) for v in vals):
        raise UsageError(f"{name}: NaN in grid")
    return vals


@dataclass(frozen=True)
class SweepConfig:
    delta_grid: list
    temperature_grid: list
    time_grid: list
    f: float = 0.01
    gamma: float = 1.0
    n: float = 10.0
    measures: tuple = MEASURES
    out: str | None = None
    format: str = "csv"
    seed: int = 0
    threads: int = 1
    time_unit: str = "gamma"

    def __post_init__(self):
        if not 0 < self.f < 1:
            raise UsageError("f: must lie in (0, 1)")
        if not self.gamma > 0:
            raise UsageError("gamma: must be positive")
        if not self.n > 0:
            raise UsageError("n: must be positive")
        if any(T <= 0 for T in self.temperature_grid):
            raise UsageError("temperature: T must be positive (use inf for beta = 0)")
        if any(t < 0 or math.isinf(t) for t in self.time_grid):
            raise UsageError("time: times must be finite and >= 0")
        if any(math.isinf(d) for d in self.delta_grid):
            raise UsageError("delta: values must be finite")
        if self.format not in ("csv", "json"):
            raise UsageError("format: must be csv or json")
        if self.time_unit not in ("gamma", "decay"):
            raise UsageError("time-unit: must be gamma or decay")
        if self.threads < 1:
            raise UsageError("threads: must be >= 1")
        bad = set(self.measures) - set(MEASURES)
        if bad:
            raise UsageError(f"measures: unknown {sorted(bad)}")

    def bath(self, T: float) -> BathSpec:
        return BathSpec(beta=0.0 if math.isinf(T) else 1.0 / T, gamma=self.gamma, f=self.f, n=self.n)

    def physical_time(self, t: float) -> float:
        """Grid times are in 1/gamma, or in 1/(pi gamma f n) with time_unit="decay"."""
        if self.time_unit == "decay":
            return t / (math.pi * self.gamma * self.f * self.n)
        return t

    def params(self, delta, T, t) -> dict:
        return {"delta": delta, "T": T, "t": self.physical_time(t),
                "f": self.f, "gamma": self.gamma, "n": self.n}


DEFAULTS = {
    "ghz-dynamics": {"delta": "0,2", "temperature": "0.05", "time": "linspace:0:100:101"},
    "w-dynamics": {"delta": "-4,0,2", "temperature": "0.05", "time": "linspace:0:100:101"},
    "heatmap": {"delta": "linspace:-4:2:40", "temperature": "logspace:-2:2:40", "time": "100"},
}
COMMON_DEFAULTS = {"f": "0.01", "gamma": "1", "n": "10", "format": "csv", "seed": "0",
                   "threads": "1", "measures": ",".join(MEASURES), "time-unit": "gamma"}


def _read_config_file(path, command):
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"config: cannot read {path}")
    merged = {}
    # [sweep] holds shared keys, a section named after the subcommand overrides them
    for sec in ("sweep", command):
        if cp.has_section(sec):
            merged.update({k.replace("_", "-"): v for k, v in cp.items(sec)})
    return merged


def resolve_settings(args, command) -> dict:
    """Hard defaults < config file < command line < environment (threads only)."""
    settings = dict(COMMON_DEFAULTS)
    settings.update(DEFAULTS.get(command, {}))
    if args.config:
        settings.update(_read_config_file(args.config, command))
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "command", "func"):
            settings[key.replace("_", "-")] = val
    if os.environ.get(THREADS_ENV):
        settings["threads"] = os.environ[THREADS_ENV]
    return settings


def build_sweep_config(settings) -> SweepConfig:
    try:
        return SweepConfig(
            delta_grid=parse_grid(settings["delta"], "delta"),
            temperature_grid=parse_grid(settings["temperature"], "temperature"),
            time_grid=parse_grid(settings["time"], "time"),
            f=float(settings["f"]), gamma=float(settings["gamma"]), n=float(settings["n"]),
            measures=tuple(m.strip() for m in str(settings["measures"]).split(",") if m.strip()),
            out=settings.get("out"), format=str(settings["format"]),
            seed=int(settings["seed"]), threads=int(settings["threads"]),
            time_unit=str(settings["time-unit"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"invalid setting: {exc}")


# --------------------------------------------------------------------------
# cell computations
# --------------------------------------------------------------------------

def ghz_cell(cfg: SweepConfig, delta, T, t) -> dict:
    s = ghz_sector_evolve(cfg.physical_time(t), cfg.bath(T), delta)
    if s.physical:
        eg = gme_ghz_block(s.u, s.v)
        ed = distillable_rate(s.u, s.v)[0]
    elif s.u <= 0:
        eg = ed = 0.0
    else:
        # printed u(t) dips below 2|v| at short times; no state to evaluate
        eg = ed = math.nan
    return {**cfg.params(delta, T, t), "u": s.u, "v": s.v, "E_G": eg, "E_D": ed,
            "physical": int(s.physical)}


def w_cell(cfg: SweepConfig, delta, T, t) -> dict:
    w = evolve_populations(cfg.physical_time(t), build_markov_generator(cfg.bath(T), delta))
    return {**cfg.params(delta, T, t), "w0": w.w0, "w1": w.w1, "w2p": w.w2p, "w2m": w.w2m,
            "cme_bound": cme_upper_bound_mixture(w, INF), "method": w.method}


def heatmap_cell(cfg: SweepConfig, delta, T, t) -> dict:
    row = cfg.params(delta, T, t)
    if {"gme_ghz", "distill_rate"} & set(cfg.measures):
        g = ghz_cell(cfg, delta, T, t)
        row.update(u=g["u"], v=g["v"], physical=g["physical"])
        if "gme_ghz" in cfg.measures:
            row["gme_ghz"] = g["E_G"]
        if "distill_rate" in cfg.measures:
            row["distill_rate"] = g["E_D"]
    if {"w_fraction", "cme_bound"} & set(cfg.measures):
        w = w_cell(cfg, delta, T, t)
        if "w_fraction" in cfg.measures:
            row.update(w0=w["w0"], w_fraction=w["w1"], w2p=w["w2p"], w2m=w["w2m"])
        if "cme_bound" in cfg.measures:
            row["cme_bound"] = w["cme_bound"]
    return row


def run_grid(cfg: SweepConfig, cell, cells) -> list:
    """Evaluate cells with a bounded pool; results come back in grid order."""
    job = lambda c: cell(cfg, *c)  # noqa: E731
    if cfg.threads == 1:
        return [job(c) for c in cells]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(job, cells))


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        return fmt(x) if not math.isfinite(float(x)) else float(fmt(x))
    if isinstance(x, (np.integer, bool, np.bool_)):
        return int(x)
    return x


def render(rows, fmt_name) -> str:
    if not rows:
        return ""
    cols = list(rows[0].keys())
    if fmt_name == "json":
        return json.dumps([{k: _json_value(r[k]) for k in cols} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    for r in rows:
        wr.writerow([fmt(r[k]) for k in cols])
    return buf.getvalue()


def write_matrix(path, rows, measure, deltas, temps, t):
    """gnuplot `matrix nonuniform` layout: first row deltas, first column T."""
    lookup = {(r["delta"], r["T"]): r[measure] for r in rows if r["t"] == t}
    if not lookup:
        raise UsageError(f"no rows at t={t} for the matrix file")
    lines = [f"# {measure} at t={fmt(t)}; rows: T (log axis), columns: delta"]
    lines.append(" ".join([str(len(deltas))] + [fmt(d) for d in deltas]))
    for T in temps:
        lines.append(" ".join([fmt(T)] + [fmt(lookup[(d, T)]) for d in deltas]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit(text, cfg: SweepConfig, rows, started, settings):
    if cfg.out is None:
        sys.stdout.write(text)
        return
    with open(cfg.out, "w", newline="") as fh:
        fh.write(text)
    cols = list(rows[0].keys()) if rows else []
    manifest = {
        "config": {k: str(v) for k, v in sorted(settings.items())},
        "version": __version__,
        "cell_checksums": [hashlib.sha256(",".join(fmt(r[c]) for c in cols).encode()).hexdigest()
                           for r in rows],
        "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "wall_time_s": time.perf_counter() - started,
    }
    with open(cfg.out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _grid_cells(cfg):
    return [(d, T, t) for d in cfg.delta_grid for T in cfg.temperature_grid for t in cfg.time_grid]


def cmd_ghz_dynamics(cfg: SweepConfig) -> list:
    return run_grid(cfg, ghz_cell, _grid_cells(cfg))


def cmd_w_dynamics(cfg: SweepConfig) -> list:
    return run_grid(cfg, w_cell, _grid_cells(cfg))


def cmd_heatmap(cfg: SweepConfig) -> list:
    return run_grid(cfg, heatmap_cell, _grid_cells(cfg))


def cmd_distill(u_grid, v_grid, r_max) -> list:
    rows = []
    for u in u_grid:
        for v in v_grid:
            try:
                best = distillable_rate(u, v, r_max)
            except DomainError as exc:
                raise UsageError(f"distill: {exc}")
            table = rate_table(u, v, r_max)
            for r, obj in enumerate(table):
                P0, P1 = stabilizer_populations(r, v)
                rows.append({"u": u, "v": v, "r": r, "probability": u ** (2 ** (r + 1) - 2),
                             "P0": P0, "P1": P1, "objective": obj, "rate": best[0],
                             "best": int(r == best[1])})
    return rows


def cmd_bethe_roots(N_list, delta_list) -> list:
    rows = []
    for N in N_list:
        for d in delta_list:
            chain = ChainSpec(int(N), d)
            for rs in zero_momentum_pair_roots(chain):
                rows.append({"N": chain.N, "delta": d, "kind": "scattering",
                             "I1": rs.quantum_numbers[0], "I2": rs.quantum_numbers[1],
                             "q": rs.roots[0], "eta": math.nan,
                             "energy": state_energy(MagnonState.scattering(chain, rs.roots[0])),
                             "residual": rs.residual})
            if d > 1:
                b = MagnonState.bound(chain)
                rows.append({"N": chain.N, "delta": d, "kind": "bound", "I1": 0, "I2": 0,
                             "q": 0.0, "eta": b.eta, "energy": state_energy(b),
                             "residual": 0.0})
    return rows


def cmd_verify(level: str = "fast") -> list:
    from .verification import run_checks
    return run_checks(level)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


GHZ_COLUMNS = "delta,T,t,f,gamma,n,u,v,E_G,E_D,physical (E_G/E_D are nan where u<2|v|)"
W_COLUMNS = "delta,T,t,f,gamma,n,w0,w1,w2p,w2m,cme_bound,method"
HEAT_COLUMNS = ("delta,T,t,f,gamma,n,u,v,physical,gme_ghz,distill_rate,w0,w_fraction,w2p,w2m,cme_bound; "
                "with --out, one gnuplot matrix file OUT.<measure>.dat per measure")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="INI file; keys mirror long options")
    g.add_argument("--out", help="output path (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (overridden by ${THREADS_ENV})")

    sweep = _Parser(add_help=False)
    s = sweep.add_argument_group("sweep options")
    s.add_argument("--delta", help="anisotropy grid")
    s.add_argument("--temperature", help="T = 1/beta grid; inf allowed")
    s.add_argument("--time", help="time grid (units of 1/gamma)")
    s.add_argument("--f", type=float, default=None, help="N/N_b (default 0.01)")
    s.add_argument("--gamma", type=float, default=None, help="bath decay rate (default 1)")
    s.add_argument("--n", type=float, default=None, help="bath filling factor (default 10)")
    s.add_argument("--measures", help=f"subset of {','.join(MEASURES)}")
    s.add_argument("--time-unit", choices=("gamma", "decay"), default=None,
                   help="grid times in 1/gamma (default) or in 1/(pi gamma f n)")

    p = _Parser(prog="xxzbath", description="XXZ chain in a spin bath: sweeps and checks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("ghz-dynamics", parents=[common, sweep], help="GHZ sector u, v, E_G, E_D",
                   description=f"Columns: {GHZ_COLUMNS}")
    sub.add_parser("w-dynamics", parents=[common, sweep], help="W sector populations",
                   description=f"Columns: {W_COLUMNS}")
    sub.add_parser("heatmap", parents=[common, sweep], help="long-time (delta, T) maps",
                   description=f"Columns: {HEAT_COLUMNS}")
    d = sub.add_parser("distill", parents=[common], help="per-round distillation objective",
                       description="Columns: u,v,r,probability,P0,P1,objective,rate,best")
    d.add_argument("--u", default=None, help="u grid (default 1)")
    d.add_argument("--v", default=None, help="v grid, real and >= 0 (default 0.4)")
    d.add_argument("--r-max", type=int, default=None)
    b = sub.add_parser("bethe-roots", parents=[common], help="zero-momentum two-magnon roots",
                       description="Columns: N,delta,kind,I1,I2,q,eta,energy,residual")
    b.add_argument("--N", default=None, help="chain lengths (default 10)")
    b.add_argument("--delta", default=None, help="anisotropies (default 0.5)")
    v = sub.add_parser("verify", parents=[common], help="run the self-check suite",
                       description="Columns: check,measured,tolerance,passed")
    v.add_argument("--level", choices=("fast", "full"), default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        settings = resolve_settings(args, args.command)
        cmd = args.command
        if cmd in ("ghz-dynamics", "w-dynamics", "heatmap"):
            cfg = build_sweep_config(settings)
            rows = {"ghz-dynamics": cmd_ghz_dynamics, "w-dynamics": cmd_w_dynamics,
                    "heatmap": cmd_heatmap}[cmd](cfg)
            emit(render(rows, cfg.format), cfg, rows, started, settings)
            if cmd == "heatmap" and cfg.out:
                t_last = cfg.physical_time(cfg.time_grid[-1])
                for m in cfg.measures:
                    write_matrix(f"{cfg.out}.{m}.dat", rows, m,
                                 cfg.delta_grid, cfg.temperature_grid, t_last)
            return EXIT_OK
        fmt_name = str(settings.get("format", "csv"))
        out = settings.get("out")
        if fmt_name not in ("csv", "json"):
            raise UsageError("format: must be csv or json")
        if cmd == "distill":
            rows = cmd_distill(parse_grid(settings.get("u", "1"), "u"),
                               parse_grid(settings.get("v", "0.4"), "v"),
                               int(settings.get("r-max", 30)))
        elif cmd == "bethe-roots":
            rows = cmd_bethe_roots([int(x) for x in parse_grid(settings.get("N", "10"), "N")],
                                   parse_grid(settings.get("delta", "0.5"), "delta"))
        else:
            rows = cmd_verify(str(settings.get("level", "fast")))
        cfg_like = SweepConfig([0.0], [1.0], [0.0], out=out, format=fmt_name)
        emit(render(rows, fmt_name), cfg_like, rows, started, settings)
        if cmd == "verify" and not all(r["passed"] for r in rows):
            return EXIT_VERIFY
        return EXIT_OK
    except UsageError as exc:
        print(f"xxzbath: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"xxzbath: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (DomainError, BetheError) as exc:
        print(f"xxzbath: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
