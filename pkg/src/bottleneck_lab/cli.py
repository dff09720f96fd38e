"""Command-line front end.

    bottleneck-lab ib-curve --hamming 3 0.5 --grid 0:1.585:25 --out ib.csv
    bottleneck-lab pf-curve --tito 0.1 0.05 --with-oracle
    bottleneck-lab symmetry --tito 0.1 0.05

Exit status: 0 on success, 1 on bad input, 2 when a numerical solver did
not converge (partial output is still written).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import ib, oracle, pf
from .config import SolverConfig
from .curves import CurveRecord, append_record, format_curve, sort_records
from .prob import (
    ChannelError,
    ChannelMatrix,
    bms_channel,
    bsc,
    circulant_from_noise,
    entropy,
    hamming_channel,
    prob_vector,
    read_channel,
    read_prob_vector,
    tito_channel,
    uniform,
    unit_scale,
)
from .symmetry import SymmetryComplexityError, is_circulant

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2
COMMANDS = ("ib", "ib-curve", "pf", "pf-curve", "ceb", "oracle", "symmetry")
CURVE_POINTS = 25
# grid endpoints typed to a few decimals (1.585 for log2 3) are clipped, not rejected
GRID_SLACK = 1e-3
CHANNEL_KEYS = ("hamming", "tito", "bsc", "circulant", "bms", "matrix")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass(frozen=True)
class ChannelSpec:
    kind: str
    params: tuple

    def build(self) -> ChannelMatrix:
        k, p = self.kind, self.params
        if k == "hamming":
            n = _as_int(p[0], "hamming n")
            if n < 1:
                raise InputError("hamming n must be positive")
            return hamming_channel(n, _as_float(p[1]))
        if k == "tito":
            return tito_channel(_as_float(p[0]), _as_float(p[1]))
        if k == "bsc":
            return bsc(_as_float(p[0]))
        if k == "circulant":
            return circulant_from_noise(_float_list(p[0]))
        if k == "bms":
            return bms_channel(_float_list(p[0]))
        if k == "matrix":
            return read_channel(p[0])
        raise InputError(f"unknown channel kind {k!r}")

    def describe(self):
        return f"{self.kind} " + " ".join(str(x) for x in self.params)


@dataclass
class RunConfig:
    command: str
    channel: ChannelMatrix | None
    source: ChannelSpec | None
    input_law: np.ndarray | None = None
    c_grid: tuple = ()  # bits
    units: str = "bits"
    out: str | None = None
    json_path: str | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    with_oracle: bool = False
    cardinality: int | None = None
    problem: str = "ib"
    curve: str | None = None

    @property
    def q(self):
        return uniform(self.channel.input_dim) if self.input_law is None else self.input_law

    @property
    def uniform_input(self):
        return self.input_law is None or np.allclose(self.input_law, uniform(self.channel.input_dim), atol=1e-12)


# ------------------------------------------------------------------ parsing

def _as_float(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        raise InputError(f"malformed number {s!r}") from None


def _as_int(s, what="value"):
    try:
        return int(str(s))
    except ValueError:
        raise InputError(f"{what} must be an integer, got {s!r}") from None


def _float_list(s):
    if isinstance(s, (list, tuple)):
        return [_as_float(x) for x in s]
    return [_as_float(x) for x in str(s).replace(",", " ").split()]


def parse_grid(spec: str):
    """``start:stop:count`` (both ends included) or a comma-separated list."""
    spec = str(spec).strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise InputError(f"grid must be start:stop:count, got {spec!r}")
        a, b = _as_float(parts[0]), _as_float(parts[1])
        count = _as_int(parts[2], "grid count")
        if count < 1:
            raise InputError("grid count must be at least 1")
        return [a] if count == 1 else np.linspace(a, b, count).tolist()
    return _float_list(spec)


def _build_parser():
    common = _Parser(add_help=False)
    ch = common.add_argument_group("channel").add_mutually_exclusive_group()
    ch.add_argument("--hamming", nargs=2, metavar=("N", "ALPHA"), help="n-ary Hamming channel")
    ch.add_argument("--tito", nargs=2, metavar=("ALPHA", "BETA"), help="ternary circulant with noise (1-a-b, a, b)")
    ch.add_argument("--bsc", metavar="DELTA", help="binary symmetric channel")
    ch.add_argument("--circulant", metavar="Z", help="circulant channel from a noise vector z0,z1,...")
    ch.add_argument("--bms", metavar="Z", help="binary-input symmetric channel with column z0,z1,...")
    ch.add_argument("--matrix", metavar="PATH", help="channel file: 'm n' then m rows")
    common.add_argument("--input", metavar="Q", help="input law as q0,q1,... or a file (default uniform)")
    common.add_argument("--grid", help="C values as start:stop:count or a comma list")
    common.add_argument("--constraint", "-C", help="single constraint value")
    common.add_argument("--units", choices=("bits", "nats"), default="bits")
    common.add_argument("--nats", action="store_const", const="nats", dest="units", help="same as --units nats")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=64)
    common.add_argument("--max-iters", type=int, default=2000)
    common.add_argument("--grid-res", type=int, default=200)
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("--json", dest="json_path", help="JSON sidecar path ('-' for stdout)")
    common.add_argument("--config", help="TOML file supplying any of these flags")
    common.add_argument("--with-oracle", action="store_true", help="add oracle rows to pf-curve")
    common.add_argument("--cardinality", "-k", type=int, help="oracle test-channel alphabet size")
    common.add_argument("--problem", choices=("ib", "pf", "ceb"), default="ib")
    common.add_argument("--curve", help="CSV file the oracle appends its row to")

    parser = _Parser(prog="bottleneck-lab", description="Information Bottleneck and Privacy Funnel solvers")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    helps = {
        "ib": "IB value at one C",
        "ib-curve": "IB curve over a C grid",
        "pf": "funnel value at one C",
        "pf-curve": "funnel curve over a C grid",
        "ceb": "conditional entropy bound F(q, x)",
        "oracle": "brute-force optimiser",
        "symmetry": "symmetry group report",
    }
    subs = {c: sub.add_parser(c, parents=[common], help=helps[c]) for c in COMMANDS}
    return parser, subs


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"bad TOML in {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in data.items()}


def _apply_toml(ns, data, explicit):
    known = set(vars(ns))
    for key, value in data.items():
        dest = {"json": "json_path", "nats": "units"}.get(key, key)
        if key == "nats":
            value = "nats" if value else "bits"
        if dest not in known or dest in ("command", "config"):
            raise InputError(f"unknown config key {key!r}")
        if dest in explicit:
            continue
        if dest in CHANNEL_KEYS and any(k in explicit for k in CHANNEL_KEYS):
            continue
        if isinstance(value, list):
            # two-argument flags keep a list; vector-valued ones take a comma string
            value = [str(v) for v in value] if dest in ("hamming", "tito") else ",".join(str(v) for v in value)
        setattr(ns, dest, value)


def _explicit_dests(sub, argv):
    """Destinations named on the command line."""
    flags = {}
    for action in sub._actions:
        for opt in action.option_strings:
            flags[opt] = action.dest
    out = set()
    for tok in argv:
        name = tok.split("=", 1)[0]
        if name in flags:
            out.add(flags[name])
    return out


def _channel_spec(ns):
    given = [k for k in CHANNEL_KEYS if getattr(ns, k) is not None]
    if len(given) > 1:
        raise InputError(f"conflicting channel options: {', '.join('--' + k for k in given)}")
    if not given:
        return None
    k = given[0]
    v = getattr(ns, k)
    return ChannelSpec(k, tuple(v) if isinstance(v, (list, tuple)) else (v,))


def _read_input(spec, n):
    try:
        vals = read_prob_vector(spec) if _looks_like_path(spec) else prob_vector(_float_list(spec))
    except (OSError, ValueError) as exc:
        raise InputError(f"bad input law: {exc}") from None
    if vals.size != n:
        raise InputError(f"input law has {vals.size} entries, channel has {n} inputs")
    return vals


def _looks_like_path(s):
    return os.path.exists(str(s))


def parse_args(argv=None) -> RunConfig:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = _build_parser()
    ns = parser.parse_args(argv)
    explicit = _explicit_dests(subs[ns.command], argv[1:])
    if ns.config:
        _apply_toml(ns, _load_toml(ns.config), explicit)

    spec = _channel_spec(ns)
    try:
        channel = spec.build() if spec else None
    except (ChannelError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if channel is None:
        raise InputError("missing channel: give one of " + ", ".join("--" + k for k in CHANNEL_KEYS))
    q = _read_input(ns.input, channel.input_dim) if ns.input else None

    try:
        solver = SolverConfig(restarts=int(ns.restarts), max_iters=int(ns.max_iters), seed=int(ns.seed),
                              grid_res=int(ns.grid_res))
    except ValueError as exc:
        raise InputError(str(exc)) from None

    scale = unit_scale(ns.units)
    cfg = RunConfig(ns.command, channel, spec, q, (), ns.units, ns.out, ns.json_path, solver,
                    bool(ns.with_oracle), ns.cardinality, ns.problem, ns.curve)
    if ns.command != "symmetry":
        cfg.c_grid = tuple(c / scale for c in _grid_values(ns, cfg))
        top = _grid_max(cfg)
        bad = [c * scale for c in cfg.c_grid if c < -GRID_SLACK / scale or c > top + GRID_SLACK / scale]
        if bad:
            raise InputError(f"constraint values {bad} lie outside [0, {top * scale:.6g}] {ns.units}")
        cfg.c_grid = tuple(min(max(c, 0.0), top) for c in cfg.c_grid)
    return cfg


def _grid_max(cfg):
    return entropy(cfg.q)


def _grid_values(ns, cfg):
    if ns.grid is not None and ns.constraint is not None:
        raise InputError("give either --grid or --constraint, not both")
    if ns.constraint is not None:
        return [_as_float(ns.constraint)]
    if ns.grid is not None:
        return parse_grid(ns.grid)
    if ns.command.endswith("-curve"):
        top = _grid_max(cfg) * unit_scale(ns.units)
        return np.linspace(0.0, top, CURVE_POINTS).tolist()
    raise InputError(f"{ns.command} needs --constraint (or --grid)")


# ------------------------------------------------------------------ solving

def _ib_point(cfg: RunConfig, C):
    T, src = cfg.channel, cfg.source
    if src.kind == "hamming" and cfg.uniform_input:
        n, alpha = int(src.params[0]), float(src.params[1])
        R, ct = ib.hamming_ib_hull(n, alpha, C)
        sol = ib.hamming_ib(n, alpha, ct or C)
        share = C / ct if ct else None
        rec = CurveRecord(C, R, "hamming", {"beta": sol.beta, "share": share})
        side = {"C": C, "R": R, "beta": sol.beta, "noise_vector": sol.v.tolist(),
                "time_share_point": ct or None, "time_share_fraction": share}
        return rec, side
    z = is_circulant(T) if cfg.uniform_input else None
    if z is not None:
        sol = ib.reduced_ib(z, C, cfg.solver)
    else:
        sol = ib.ib_value(T, cfg.q, C, cfg.solver)
    rec = CurveRecord(C, sol.R, sol.method, {"beta": sol.beta, "lambda": sol.lam})
    side = {"C": C, "R": sol.R, "method": sol.method, "lambda": sol.lam,
            "noise_vector": None if sol.noise_vector is None else np.asarray(sol.noise_vector).tolist(),
            "test_channel": None if sol.test_channel is None else np.asarray(sol.test_channel).tolist()}
    return rec, side


def _oracle_rec(res, method="oracle"):
    return CurveRecord(res.target, res.value, method,
                       {"epsilon": None, "lambda_star": None, "converged": res.converged})


def _pf_points(cfg: RunConfig):
    T = cfg.channel
    recs, side, ok = [], {"points": []}, True
    touch = None
    if cfg.uniform_input and T.input_dim == T.output_dim:
        try:
            touch = pf.find_touch_point(T, cfg.solver)
        except ValueError:
            touch = None
    if touch is not None:
        side.update(lambda_star=touch.lambda_star, p_star=touch.p_star.tolist(), C_star=touch.C_star,
                    degenerate=touch.degenerate)
    use_bms = touch is None and cfg.uniform_input and pf._is_bms(T)
    k = cfg.cardinality or T.input_dim + 1
    for C in cfg.c_grid:
        if touch is not None and C <= touch.C_star + 1e-12:
            sol = pf.pf_value(T, C, cfg.solver, touch)
            recs.append(CurveRecord(C, sol.R, "linear",
                                    {"epsilon": sol.epsilon, "lambda_star": touch.lambda_star, "converged": True}))
            side["points"].append({"C": C, "R": sol.R, "method": "linear", "B": sol.B.tolist(),
                                   "w_weights": sol.w_weights.tolist(), "epsilon": sol.epsilon})
            if not cfg.with_oracle:
                continue
        elif use_bms:
            sol = pf.bec_pf(T, C)
            recs.append(CurveRecord(C, sol.R, "bms",
                                    {"epsilon": sol.epsilon, "lambda_star": sol.touch.lambda_star, "converged": True}))
            side["points"].append({"C": C, "R": sol.R, "method": "bms", "B": sol.B.tolist(),
                                   "w_weights": sol.w_weights.tolist(), "epsilon": sol.epsilon})
            if not cfg.with_oracle:
                continue
        res = oracle.pf_oracle(T, cfg.q, C, k, cfg.solver)
        ok &= res.converged
        recs.append(_oracle_rec(res))
        side["points"].append({"C": C, "R": res.value, "method": "oracle", "converged": res.converged,
                               "channel": res.channel.forward.tolist()})
    return recs, side, ok


def _ceb_points(cfg: RunConfig):
    recs, side = [], {"points": []}
    for x in cfg.c_grid:
        F, lam = ib.ceb_solve(cfg.channel, cfg.q, x, cfg.solver)
        recs.append(CurveRecord(x, F, "envelope", {"lambda": lam}))
        side["points"].append({"x": x, "F": F, "lambda": lam})
    return recs, side


def _oracle_run(cfg: RunConfig):
    T, n = cfg.channel, cfg.channel.input_dim
    if len(cfg.c_grid) != 1:
        raise InputError("oracle needs a single --constraint")
    C = cfg.c_grid[0]
    fn = {"ib": oracle.ib_oracle, "pf": oracle.pf_oracle, "ceb": oracle.ceb_oracle}[cfg.problem]
    k = cfg.cardinality or (n + 1 if cfg.problem == "pf" else n)
    return fn(T, cfg.q, C, k, cfg.solver)


# ------------------------------------------------------------------ output

def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_json(obj, path):
    if path:
        _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", path)


def _scaled(recs, scale):
    return [r.scaled(scale) for r in recs] if scale != 1.0 else recs


def symmetry_text(T: ChannelMatrix):
    g = T.symmetry
    rep = g.report()
    z = is_circulant(T)
    lines = [
        f"channel: {T.output_dim}x{T.input_dim}",
        f"group order: {rep['order']}",
        f"input group order: {rep['input_group_order']}",
        f"output group order: {rep['output_group_order']}",
        f"input symmetric (transitive): {rep['input_transitive']}",
        f"output transitive: {rep['output_transitive']}",
        "circulant: " + ("no" if z is None else "yes, z = (" + ", ".join(f"{v:.10g}" for v in z) + ")"),
        "generators:",
    ]
    lines += [f"  input {gen['input']}  output {gen['output']}" for gen in rep["generators"]]
    rep["circulant_noise"] = None if z is None else z.tolist()
    return "\n".join(lines) + "\n", rep


def run(cfg: RunConfig) -> int:
    scale = unit_scale(cfg.units)
    cmd = cfg.command
    if cmd == "symmetry":
        text, rep = symmetry_text(cfg.channel)
        sys.stdout.write(text)
        _emit_json(rep, cfg.json_path)
        return EXIT_OK

    if cmd == "oracle":
        res = _oracle_run(cfg)
        out = res.to_dict()
        out.update(units=cfg.units, value=res.value * scale, target=res.target * scale,
                   achieved_constraint=res.achieved_constraint * scale)
        _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", cfg.json_path or "-")
        if cfg.curve:
            rec = CurveRecord(res.target, res.value, f"oracle-{res.problem}",
                              {"achieved": res.achieved_constraint, "cardinality": res.channel.cardinality,
                               "converged": res.converged})
            append_record(cfg.curve, rec.scaled(scale, keys=("achieved",)))
        return EXIT_OK if res.converged else EXIT_NONCONVERGED

    ok = True
    names = ("C", "R")
    if cmd in ("ib", "ib-curve"):
        pairs = [_ib_point(cfg, C) for C in cfg.c_grid]
        recs = [r for r, _ in pairs]
        side = {"points": [s for _, s in pairs]}
    elif cmd in ("pf", "pf-curve"):
        recs, side, ok = _pf_points(cfg)
    elif cmd == "ceb":
        recs, side = _ceb_points(cfg)
        names = ("x", "F")
    else:  # pragma: no cover - argparse restricts the choices
        raise InputError(f"unknown command {cmd}")
    recs = sort_records(recs)
    _emit(format_curve(_scaled(recs, scale), names), cfg.out)
    side.update(units=cfg.units, channel=cfg.channel.entries.tolist(), source=cfg.source.describe())
    _emit_json(side, cfg.json_path)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
        return run(cfg)
    except InputError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (ChannelError, SymmetryComplexityError, pf.OutOfRegimeError, ValueError, OSError) as exc:
        print(f"bottleneck-lab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
