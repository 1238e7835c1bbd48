"""Command-line driver: exact series, protocol sweeps, sampling, diagnostics, figure recipes.

Every run writes a data table (CSV or JSON) and, when ``--out`` is given, a
``<out>.manifest.json`` holding the full configuration.  ``spinprobe rerun``
regenerates the table from a manifest alone.

Exit codes: 0 success, 2 configuration error, 3 numerical-contract violation.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .coupled import gamma_coefficients, slow_variation_metric
from .errors import ConfigError, ContractViolation, SpinProbeError
from .models import heisenberg_two_spin, initial_state, with_ancilla
from .oracle import exact_series
from .protocol import ANCILLA_OUTCOME_CONVENTION, ProtocolConfig, lambdas_for, sweep
from .sampling import SampleConfig, sampled_sweep
from .spin import HalfInt, as_spin, propagator

COUPLING_NAMES = {"heisenberg": "heisenberg", "zz": "ising_zz", "xx": "ising_xx"}
METHOD_NAMES = {"two-point": "two_point_lambda", "fourier": "fourier"}
COMMANDS = ("exact", "protocol", "sample", "diagnose")

EXIT_CONFIG = 2
EXIT_CONTRACT = 3


@dataclass(frozen=True)
class RunConfig:
    """Flat, JSON-serializable description of one run."""

    command: str = "protocol"
    l_values: tuple[str, ...] = ("8",)
    state: str = "uniform"
    coupling: str = "heisenberg"
    site: int = 0
    t1: float = 0.0
    t2_grid: str = "0:3:0.05"
    lambda_l: tuple[str, ...] = ("pi/2", "pi")
    ns: int = 1000
    repeats: int = 100
    seed: int = 20240601
    method: str = "two-point"
    refined_l: bool = True
    fmt: str = "csv"
    recipe: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.coupling not in COUPLING_NAMES:
            raise ConfigError(f"--coupling must be one of {sorted(COUPLING_NAMES)}")
        if self.method not in METHOD_NAMES:
            raise ConfigError(f"--method must be one of {sorted(METHOD_NAMES)}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if not self.l_values:
            raise ConfigError("need at least one --l value")
        object.__setattr__(self, "l_values", tuple(str(as_spin(x)) for x in self.l_values))
        object.__setattr__(self, "lambda_l", tuple(str(x) for x in self.lambda_l))
        parse_grid(self.t2_grid)
        [parse_lambda_l(x) for x in self.lambda_l]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["l_values"] = list(self.l_values)
        d["lambda_l"] = list(self.lambda_l)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("l_values", "lambda_l"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


RECIPES: dict[str, dict] = {
    "fig2-left": dict(command="protocol", l_values=("8",), state="uniform"),
    "fig2-right": dict(command="protocol", l_values=("8",), state="maxmag"),
    "fig3": dict(command="protocol", l_values=("4", "16"), state="ramp"),
    "fig4-left": dict(command="sample", l_values=("4",), state="uniform", ns=100, repeats=100),
    "fig4-right": dict(command="sample", l_values=("4",), state="uniform", ns=1000, repeats=100),
}
# parameters the recipes fill in from library defaults rather than published values
RECIPE_UNSTATED = ("t2_grid", "lambda_l", "seed")

_LAMBDA_RE = re.compile(r"^\s*(?P<num>[0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*(?P<den>[0-9.eE+]+))?\s*$")


def parse_lambda_l(text: str) -> float:
    """Parse a lam*l value: a float or a multiple of pi such as ``pi/2`` or ``3pi/4``."""
    m = _LAMBDA_RE.match(str(text))
    try:
        if m is None:
            return float(text)
        num = m.group("num")
        coeff = float(num) if num not in ("", "+", "-") else float(num + "1")
        den = float(m.group("den")) if m.group("den") else 1.0
        return coeff * math.pi / den
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse lambda*l value {text!r}") from None


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` with the stop value included."""
    try:
        start, stop, step = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise ConfigError(f"t2 grid must look like start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"bad t2 grid {text!r}: need step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def to_records(self) -> list[list]:
        return [[float(x) if isinstance(x, (float, np.floating)) else x for x in row] for row in self.rows]


def _benchmark(l: HalfInt, state: str):
    return heisenberg_two_spin(l, ancilla=False), initial_state(state, l)


def _lambda_columns(cfg: RunConfig, prefix: str) -> list[str]:
    return [f"{prefix}_ll{k}" for k in range(len(cfg.lambda_l))]


def cmd_exact(cfg: RunConfig) -> Table:
    t2 = parse_grid(cfg.t2_grid)
    table = Table(["l", "t2", "re_c", "im_c", "re_c_norm", "im_c_norm"])
    for ls in cfg.l_values:
        l = HalfInt.of(ls)
        h, psi = _benchmark(l, cfg.state)
        c = exact_series(psi, h, 0, 1, cfg.t1, t2)
        l2 = float(l) ** 2
        for t, v in zip(t2, c):
            table.rows.append([ls, float(t), v.real, v.imag, v.real / l2, v.imag / l2])
    return table


def _protocol_config(cfg: RunConfig, l: HalfInt) -> ProtocolConfig:
    h, psi = _benchmark(l, cfg.state)
    return ProtocolConfig(h, psi, 0, 1, cfg.t1, cfg.t1, 0.0, COUPLING_NAMES[cfg.coupling])


def _lams(cfg: RunConfig, l: HalfInt) -> list[float]:
    return lambdas_for([parse_lambda_l(x) for x in cfg.lambda_l], l)


def cmd_protocol(cfg: RunConfig) -> Table:
    t2 = parse_grid(cfg.t2_grid)
    cols = ["l", "t2", *_lambda_columns(cfg, "script_c"), "re_c", "im_c", "exact_re_c", "exact_im_c"]
    table = Table(cols)
    for ls in cfg.l_values:
        l = HalfInt.of(ls)
        pc = _protocol_config(cfg, l)
        res = sweep(pc, t2, _lams(cfg, l), METHOD_NAMES[cfg.method], cfg.refined_l)
        exact = exact_series(pc.initial_state, pc.hamiltonian, 0, 1, cfg.t1, t2)
        for a, t in enumerate(t2):
            table.rows.append([ls, float(t), *map(float, res.script_c[a]), float(res.re_c[a]), float(res.im_c[a]), exact[a].real, exact[a].imag])
    return table


def cmd_sample(cfg: RunConfig) -> Table:
    t2 = parse_grid(cfg.t2_grid)
    lam_cols = []
    for k in range(len(cfg.lambda_l)):
        lam_cols += [f"script_c_mean_ll{k}", f"script_c_std_ll{k}"]
    cols = ["l", "t2", *lam_cols, "re_c_mean", "re_c_std", "im_c_mean", "im_c_std", "exact_re_c", "exact_im_c"]
    table = Table(cols)
    scfg = SampleConfig(cfg.ns, cfg.repeats, cfg.seed)
    for ls in cfg.l_values:
        l = HalfInt.of(ls)
        pc = _protocol_config(cfg, l)
        res = sampled_sweep(pc, t2, _lams(cfg, l), scfg, METHOD_NAMES[cfg.method], cfg.refined_l)
        exact = exact_series(pc.initial_state, pc.hamiltonian, 0, 1, cfg.t1, t2)
        for a, t in enumerate(t2):
            r = res[a]
            per_lam = [v for e in r.script_c for v in (e.mean_c, e.std_c)]
            table.rows.append([ls, float(t), *per_lam, r.re_c.mean_c, r.re_c.std_c, r.im_c.mean_c, r.im_c.std_c, exact[a].real, exact[a].imag])
    return table


def cmd_diagnose(cfg: RunConfig) -> tuple[Table, dict]:
    """Gamma-block norms of psi(t1) x phi at ``cfg.site`` plus the slow-variation metrics."""
    table = Table(["l", "m", "norm_plus", "norm_minus"])
    report = {}
    for ls in cfg.l_values:
        l = HalfInt.of(ls)
        h, psi = _benchmark(l, cfg.state)
        psi.layout.check_site(cfg.site)
        psi_t1 = propagator(h).evolve_state(psi, cfg.t1)
        g = gamma_coefficients(with_ancilla(psi_t1), cfg.site)
        plus, minus = g.norms()
        for m, a, b in zip(g.m_values, plus, minus):
            table.rows.append([ls, str(m), float(a), float(b)])
        report[ls] = {
            "metric_full": slow_variation_metric(g),
            "metric_interior": slow_variation_metric(g, interior=True),
        }
    return table, report


def run(cfg: RunConfig) -> tuple[Table, dict]:
    if cfg.command == "exact":
        return cmd_exact(cfg), {}
    if cfg.command == "protocol":
        return cmd_protocol(cfg), {}
    if cfg.command == "sample":
        return cmd_sample(cfg), {}
    return cmd_diagnose(cfg)


def build_manifest(cfg: RunConfig, outputs: Sequence[str], report: dict) -> dict:
    manifest = {
        "tool": "spinprobe",
        "version": __version__,
        "config": cfg.to_dict(),
        "lambda_l_values": [parse_lambda_l(x) for x in cfg.lambda_l],
        "conventions": {
            "basis": "ascending m per site, ancilla last",
            "sites": "0-indexed; coupled site 0, measured site 1",
            "ancilla_outcome": ANCILLA_OUTCOME_CONVENTION,
            "ancilla_state": "(|-> + |+>)/sqrt(2)",
            "rng": "numpy Philox, SeedSequence(seed, spawn_key=(t2 index, lambda index, repeat))",
        },
        "outputs": list(outputs),
    }
    if cfg.recipe is not None:
        manifest["unstated_defaults"] = list(RECIPE_UNSTATED)
    if report:
        manifest["report"] = report
    return manifest


def render(table: Table, manifest: dict, fmt: str) -> str:
    if fmt == "csv":
        return table.to_csv()
    doc = {"manifest": manifest, "columns": table.columns, "rows": table.to_records()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def execute(cfg: RunConfig, out: str | None, stdout=None) -> dict:
    """Run, write the table (and manifest when ``out`` is set) and return the manifest."""
    stdout = stdout or sys.stdout
    table, report = run(cfg)
    outputs = [out] if out else []
    manifest = build_manifest(cfg, outputs, report)
    text = render(table, manifest, cfg.fmt)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        Path(f"{out}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    else:
        stdout.write(text)
    if report:
        print(json.dumps(report, indent=2, sort_keys=True), file=sys.stderr if not out else stdout)
    return manifest


_INI_KEYS = {
    "model": {"l": "l_values", "state": "state", "coupling": "coupling", "site": "site"},
    "protocol": {"t1": "t1", "t2_grid": "t2_grid", "lambda_l": "lambda_l", "method": "method", "refined_l": "refined_l"},
    "sampling": {"ns": "ns", "repeats": "repeats", "seed": "seed"},
    "output": {"format": "fmt"},
}
_INT_FIELDS = {"site", "ns", "repeats", "seed"}
_FLOAT_FIELDS = {"t1"}


def read_ini(path: str) -> dict:
    """Read a key/value configuration file with [model], [protocol], [sampling], [output] sections."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out: dict = {}
    for section in parser.sections():
        if section not in _INI_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _INI_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            name = _INI_KEYS[section][key]
            try:
                if name in ("l_values", "lambda_l"):
                    out[name] = tuple(x.strip() for x in raw.split(",") if x.strip())
                elif name == "refined_l":
                    out[name] = parser.getboolean(section, key)
                elif name in _INT_FIELDS:
                    out[name] = int(raw)
                elif name in _FLOAT_FIELDS:
                    out[name] = float(raw)
                else:
                    out[name] = raw.strip()
            except ValueError:
                raise ConfigError(f"bad value for {key} in [{section}]: {raw!r}") from None
    return out


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with [model], [protocol], [sampling], [output] sections")
    p.add_argument("--l", dest="l_values", action="append", help="spin quantum number (repeatable)")
    p.add_argument("--state", choices=["uniform", "maxmag", "ramp"])
    p.add_argument("--coupling", choices=sorted(COUPLING_NAMES))
    p.add_argument("--site", type=int, help="coupled site for diagnose (0-indexed)")
    p.add_argument("--t1", type=float)
    p.add_argument("--t2-grid", dest="t2_grid", help="start:stop:step, stop included")
    p.add_argument("--lambda-l", dest="lambda_l", action="append", help="lambda*l value, e.g. pi/2 (repeatable)")
    p.add_argument("--ns", type=int, help="sample size per repeat")
    p.add_argument("--repeats", type=int, help="number of repeats for error bars")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--method", choices=sorted(METHOD_NAMES))
    p.add_argument("--refined-l", dest="refined_l", action=argparse.BooleanOptionalAction, default=None,
                   help="use l + 1/2 in the extraction model (default on)")
    p.add_argument("--out", help="output path; a manifest is written next to it")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinprobe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)
    for name, help_ in (
        ("exact", "exact C(t1, t2) series"),
        ("protocol", "exact protocol statistics and extracted C"),
        ("sample", "finite-sample estimates with error bars"),
        ("diagnose", "gamma-coefficient table and slow-variation metric"),
    ):
        _add_common(sub.add_parser(name, help=help_))
    rp = sub.add_parser("recipe", help="figure reproduction with pinned parameters")
    rp.add_argument("name", choices=sorted(RECIPES))
    _add_common(rp)
    rr = sub.add_parser("rerun", help="regenerate outputs from a manifest")
    rr.add_argument("manifest")
    rr.add_argument("--out", help="write here instead of the manifest's recorded output")
    return parser


_FLAG_FIELDS = ("l_values", "state", "coupling", "site", "t1", "t2_grid", "lambda_l", "ns", "repeats", "seed", "method", "refined_l", "fmt")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge library defaults < recipe < INI file < explicit flags."""
    values: dict = {}
    if args.cmd == "recipe":
        values.update(RECIPES[args.name])
        values["recipe"] = args.name
    else:
        values["command"] = args.cmd
    if args.config:
        values.update(read_ini(args.config))
    for name in _FLAG_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = tuple(v) if isinstance(v, list) else v
    return RunConfig(**values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.cmd == "rerun":
            try:
                manifest = json.loads(Path(args.manifest).read_text())
                cfg = RunConfig.from_dict(manifest["config"])
            except (OSError, ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"cannot load manifest {args.manifest}: {exc}") from None
            outs = manifest.get("outputs") or [None]
            execute(cfg, args.out or outs[0])
        else:
            execute(config_from_args(args), args.out)
    except ContractViolation as exc:
        print(f"spinprobe: numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (SpinProbeError, ValueError) as exc:
        print(f"spinprobe: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
