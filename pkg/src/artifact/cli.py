"""Command-line entry point: ``artifact <module> <command> [options]``.

Options come from three layers, flag > ``--config-file`` JSON > default.
Every output starts with the merged configuration, so a run can be
repeated from its own output.  Numbers are written with 15 significant
digits; JSON documents carry ``"schema": 1``.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _pool, detproc, gaf, sle, specfun, stochastic, validation
from .errors import ArtifactError, UsageError
from .rng import Seed
from .stochastic import TimeGrid

SCHEMA = 1

# name -> (type, default, help); shared by every command that lists the key
OPTIONS = {
    "seed": (str, "0", "master seed, or master:stream"),
    "threads": (int, None, "worker threads (default: available CPUs)"),
    "out": (str, "-", "output path, - for stdout"),
    "format": (str, None, "csv or json"),
    "figures": (str, None, "directory for PNG figures (needs matplotlib)"),
    # specfun
    "fn": (str, None, "function name"),
    "args": (str, "", "comma-separated arguments"),
    # simulate
    "beta": (float, 2.0, "Dyson beta"),
    "dim": (float, 3.0, "Bessel dimension D"),
    "n": (int, 2, "number of particles / curves"),
    "t_end": (float, 1.0, "final time"),
    "steps": (int, 1000, "time steps"),
    "paths": (int, 1, "number of paths"),
    "x0": (str, None, "start point(s), comma separated"),
    # detproc
    "config": (str, "-1,0,1", "point configuration xi, comma separated"),
    "times": (str, "1.0", "times, comma separated"),
    "x": (str, "-3,3,61", "x grid as lo,hi,count"),
    "points": (str, None, "points: t:x pairs (detproc) or complex numbers (gaf)"),
    "lambdas": (str, "0.1", "log(1 + chi) per time for the Fredholm test"),
    "interval": (str, "-1,1", "support of the test functions, lo,hi"),
    "nodes": (int, 40, "Gauss-Legendre nodes"),
    # gaf
    "domain": (str, "annulus", "disk or annulus"),
    "kind": (str, "szego", "szego or bergman"),
    "q": (float, 1 / 3, "inner radius q"),
    "r": (float, 1 / 3, "weight r"),
    "z": (str, "0.6", "complex point"),
    "w": (str, "0.5+0.1j", "complex point"),
    "trunc": (str, None, "truncation n_lo,n_hi (default: certified automatic)"),
    "samples": (int, 1, "number of GAF samples"),
    "window": (str, None, "radial window rho_lo,rho_hi (gaf) or x0,x1,y0,y1 (sle)"),
    "bins": (int, 8, "radial bins"),
    "method": (str, "grid", "zero finder: grid or companion"),
    # sle
    "kappa": (float, 2.0, "SLE parameter"),
    "kappas": (str, "2,3.9,4.1,6", "kappa list for phase-scan"),
    "theta": (float, 0.5, "coupling parameter theta"),
    "y0": (str, None, "driver start points, comma separated"),
    "t": (float, 0.5, "time"),
    "nquad": (int, 12, "quadrature nodes per side"),
    # validate
    "only": (str, None, "criteria subset, comma separated"),
    "timings": (bool, False, "include runtimes (breaks byte-identical reports)"),
}

GLOBAL = ("seed", "threads", "out", "format", "figures")

COMMANDS = {
    ("specfun", "eval"): ("fn", "args"),
    ("simulate", "bm"): ("t_end", "steps", "paths", "x0"),
    ("simulate", "bessel"): ("dim", "t_end", "steps", "paths", "x0"),
    ("simulate", "dyson"): ("beta", "n", "t_end", "steps", "paths", "x0"),
    ("simulate", "matrix-eigs"): ("n", "t_end", "steps", "paths", "x0"),
    ("detproc", "density"): ("config", "times", "x"),
    ("detproc", "corr"): ("config", "points"),
    ("detproc", "fredholm"): ("config", "times", "lambdas", "interval", "nodes"),
    ("gaf", "kernel"): ("domain", "kind", "q", "r", "z", "w"),
    ("gaf", "sample-zeros"): ("domain", "q", "r", "trunc", "samples", "window", "bins", "method"),
    ("gaf", "pdpp"): ("domain", "q", "r", "points"),
    ("gaf", "unfolded"): ("q", "r", "z", "w"),
    ("gaf", "identities"): (),
    ("sle", "trace"): ("kappa", "t_end", "steps", "paths"),
    ("sle", "multi-trace"): ("kappa", "n", "t_end", "steps", "paths", "y0"),
    ("sle", "phase-scan"): ("kappas", "n", "t_end", "steps", "paths"),
    ("sle", "coupling-test"): ("kappa", "n", "y0", "theta", "window", "times", "steps", "paths", "nquad"),
    ("sle", "dg-check"): ("kappa", "n", "y0", "t", "z", "w", "steps"),
    ("validate", "fast"): ("only", "timings"),
    ("validate", "full"): ("only", "timings"),
}

DEFAULT_FORMAT = {"simulate": "csv", "detproc": "json", "gaf": "json", "sle": "json",
                  "specfun": "csv", "validate": "json"}
CSV_FIRST = {("simulate", c) for c in ("bm", "bessel", "dyson", "matrix-eigs")} | {
    ("gaf", "sample-zeros"), ("sle", "trace"), ("sle", "multi-trace")}


@dataclass
class RunConfig:
    module: str
    command: str
    params: dict = field(default_factory=dict)

    @property
    def seed(self) -> Seed:
        return parse_seed(self.params["seed"])

    def echo(self) -> dict:
        return {"command": f"{self.module} {self.command}", **self.params}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add(p, key):
    typ, _, hlp = OPTIONS[key]
    flag = "--" + key.replace("_", "-")
    if typ is bool:
        p.add_argument(flag, dest=key, action="store_true", default=argparse.SUPPRESS, help=hlp)
    else:
        p.add_argument(flag, dest=key, type=typ, default=argparse.SUPPRESS, help=hlp)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="artifact", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=__version__)
    top.add_argument("--config-file", dest="config_file", default=argparse.SUPPRESS,
                     help="JSON file of option values")
    for key in GLOBAL:
        _add(top, key)
    mods = top.add_subparsers(dest="module", required=True, parser_class=_Parser)
    subs = {}
    for (mod, cmd), keys in COMMANDS.items():
        if mod not in subs:
            subs[mod] = mods.add_parser(mod).add_subparsers(dest="command", required=True,
                                                            parser_class=_Parser)
        p = subs[mod].add_parser(cmd)
        p.add_argument("--config-file", dest="config_file", default=argparse.SUPPRESS)
        for key in GLOBAL + keys:
            _add(p, key)
    return top


_NEGATIVE = re.compile(r"^-[\d.]")


def _glue_negative(argv):
    # "--x -1,1,3" would otherwise read the value as a flag
    out = []
    for tok in argv:
        if out and _NEGATIVE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def parse_config(argv, config_file: str | None = None) -> RunConfig:
    """Merge defaults, a JSON config file and command-line flags."""
    ns, extra = build_parser().parse_known_args(_glue_negative(list(argv)))
    if extra:
        raise UsageError(f"unknown option {extra[0]}")
    flags = vars(ns)
    mod, cmd = flags.pop("module"), flags.pop("command")
    path = flags.pop("config_file", config_file)
    allowed = GLOBAL + COMMANDS[(mod, cmd)]
    merged = {k: OPTIONS[k][1] for k in allowed}
    if path:
        with open(path) as fh:
            from_file = json.load(fh)
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        for k, v in from_file.items():
            key = k.replace("-", "_")
            if key not in allowed:
                raise UsageError(f"unknown key {k!r} in config file")
            typ = OPTIONS[key][0]
            try:
                merged[key] = None if v is None else typ(v)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {k!r} in config file") from exc
    merged.update(flags)
    if merged["format"] is None:
        merged["format"] = "csv" if (mod, cmd) in CSV_FIRST else DEFAULT_FORMAT[mod]
    if merged["format"] not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    return RunConfig(mod, cmd, merged)


def parse_seed(text) -> Seed:
    parts = str(text).split(":")
    try:
        return Seed(*(int(p) for p in parts))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad seed {text!r}") from exc


def _floats(text) -> list[float]:
    if text is None or str(text).strip() == "":
        return []
    try:
        return [float(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise UsageError(f"expected numbers, got {text!r}") from exc


def _complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"expected a complex number, got {text!r}") from exc


def _complexes(text) -> list[complex]:
    return [_complex(v) for v in str(text).split(",")] if text else []


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def num(x):
    """Round to 15 significant digits; NaN and infinities become None."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": num(x.real), "im": num(x.imag)}
    x = float(x)
    return float(f"{x:.15g}") if math.isfinite(x) else None


def clean(obj):
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (int, float, complex, np.number, np.bool_)):
        return num(obj)
    return obj


def json_doc(cfg: RunConfig, body: dict) -> str:
    return json.dumps({"schema": SCHEMA, "config": clean(cfg.echo()), **clean(body)}, indent=1) + "\n"


def fmt(x) -> str:
    x = float(x)
    return f"{x:.15g}" if math.isfinite(x) else "nan"


def csv_doc(cfg: RunConfig, header: str, blocks) -> str:
    """Rows of each block, blocks separated by one blank line."""
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(clean(cfg.echo()), sort_keys=True)}\n")
    buf.write(f"# schema: {SCHEMA}\n")
    buf.write(header + "\n")
    for i, blk in enumerate(blocks):
        if i:
            buf.write("\n")
        for row in blk:
            buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str):
    out = cfg.params["out"]
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _figure(cfg: RunConfig, name: str, draw):
    """Render one figure into --figures DIR when requested."""
    d = cfg.params.get("figures")
    if not d:
        return
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise UsageError("--figures needs matplotlib (pip install artifact[plot])") from exc
    os.makedirs(d, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(os.path.join(d, f"{cfg.module}_{cfg.command}_{name}.png"), dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

SPECFUN = {
    "hermite_poly": lambda a: specfun.hermite_poly(int(a[0]), a[1].real),
    "hermite_orthonormal": lambda a: specfun.hermite_orthonormal(int(a[0]), a[1].real),
    "modified_bessel_i": lambda a: specfun.modified_bessel_i(a[0].real, a[1].real),
    "qpochhammer": lambda a: specfun.qpochhammer(a[0], a[1].real, int(a[2].real) if len(a) > 2 else np.inf),
    "theta": lambda a: specfun.theta(a[0], a[1].real),
    "theta_prime_at_1": lambda a: specfun.theta_prime_at_1(a[0].real),
    "jordan_kronecker": lambda a: specfun.jordan_kronecker(a[0], a[1], a[2].real),
    "weierstrass_p": lambda a: specfun.weierstrass_p(a[0].real, a[1].real),
    "p_coeff": lambda a: specfun.p_coeff(a[0].real),
    "a_coeff": lambda a: specfun.a_coeff(a[0].real),
    "q0": lambda a: specfun.q0(a[0].real),
    "martingale_poly": lambda a: specfun.martingale_poly(int(a[0].real), a[1].real, a[2].real),
}


def cmd_specfun(cfg: RunConfig):
    p = cfg.params
    if p["fn"] not in SPECFUN:
        raise UsageError(f"--fn must be one of {', '.join(sorted(SPECFUN))}")
    args = _complexes(p["args"])
    try:
        val = complex(np.asarray(SPECFUN[p["fn"]](args)).item())
    except IndexError as exc:
        raise UsageError(f"too few --args for {p['fn']}") from exc
    if cfg.params["format"] == "csv":
        txt = fmt(val.real) if val.imag == 0 else f"{fmt(val.real)},{fmt(val.imag)}"
        return f"# config: {json.dumps(clean(cfg.echo()), sort_keys=True)}\nvalue\n{txt}\n"
    return json_doc(cfg, {"value": val.real if val.imag == 0 else val})


def cmd_simulate(cfg: RunConfig):
    p = cfg.params
    grid = TimeGrid(p["t_end"], p["steps"])
    seed = cfg.seed
    x0 = _floats(p["x0"])
    c = cfg.command
    if c == "bm":
        path = stochastic.sample_bm(grid, seed, x0[0] if x0 else 0.0, p["paths"])
        t, vals = path.times, path.values[:, :, None]
    elif c == "bessel":
        path = stochastic.sample_bessel(p["dim"], x0[0] if x0 else 1.0, grid, seed, p["paths"])
        t, vals = path.times, path.values[:, :, None]
    elif c == "dyson":
        start = x0 if x0 else [0.0] * p["n"]
        if len(start) != p["n"]:
            raise UsageError("--x0 needs --n entries")
        path = stochastic.sample_dyson(p["beta"], p["n"], start, grid, seed, p["paths"])
        t, vals = path.times, path.values
    else:
        start = x0 if x0 else [0.0] * p["n"]
        path = stochastic.sample_hermitian_bm_eigs(p["n"], start, grid, seed, p["paths"])
        t, vals = path.times, path.values
    summary = stochastic.ensemble_summary(path)
    _figure(cfg, "paths", lambda ax: [ax.plot(t, vals[k], lw=0.7) for k in range(min(vals.shape[0], 20))])
    if p["format"] == "json":
        return json_doc(cfg, summary)
    head = "t," + ",".join(f"p{i + 1}" for i in range(vals.shape[2]))
    blocks = (np.column_stack([t, vals[k]]) for k in range(vals.shape[0]))
    return csv_doc(cfg, head, blocks)


def _xi(text) -> detproc.PointConfiguration:
    pts = _floats(text)
    if not pts:
        raise UsageError("--config needs at least one point")
    return detproc.PointConfiguration.from_points(pts)


def cmd_detproc(cfg: RunConfig):
    p = cfg.params
    xi = _xi(p["config"])
    if cfg.command == "density":
        lo, hi, cnt = _floats(p["x"])
        x = np.linspace(lo, hi, int(cnt))
        kern = detproc.kernel_fn(xi)
        out = {"x": x, "times": _floats(p["times"]), "density": []}
        for t in out["times"]:
            out["density"].append([kern(t, xv, t, xv) for xv in x])
        _figure(cfg, "density", lambda ax: [ax.plot(x, d) for d in out["density"]])
        if p["format"] == "csv":
            rows = np.column_stack([x] + [np.asarray(d) for d in out["density"]])
            head = "x," + ",".join(f"t={fmt(t)}" for t in out["times"])
            return csv_doc(cfg, head, [rows])
        return json_doc(cfg, out)
    if cfg.command == "corr":
        if not p["points"]:
            raise UsageError("--points needs t:x pairs")
        pts = []
        for item in str(p["points"]).split(","):
            t, x = item.split(":")
            pts.append(detproc.SpaceTimePoint(float(t), float(x)))
        val = detproc.spatio_temporal_corr(xi, pts)
        return json_doc(cfg, {"points": [[q.t, q.x] for q in pts], "value": val})
    times = _floats(p["times"])
    lams = _floats(p["lambdas"])
    if len(lams) == 1:
        lams = lams * len(times)
    if len(lams) != len(times):
        raise UsageError("--lambdas needs one value per time")
    a, b = _floats(p["interval"])
    chis = [(lambda lam: (lambda x: np.full(np.shape(x), math.expm1(lam))))(lam) for lam in lams]
    val = detproc.fredholm_det(detproc.kernel_fn(xi), times, chis, (a, b), p["nodes"])
    return json_doc(cfg, {"times": times, "lambdas": lams, "interval": [a, b], "value": val})


def _window(text, default):
    w = _floats(text) if text else list(default)
    if len(w) != 2:
        raise UsageError("--window needs rho_lo,rho_hi")
    return tuple(w)


def cmd_gaf(cfg: RunConfig):
    p = cfg.params
    q, r = p.get("q"), p.get("r")
    disk = p.get("domain") == "disk"
    c = cfg.command
    if c == "kernel":
        z, w = _complex(p["z"]), _complex(p["w"])
        if disk:
            val = gaf.szego_disk_weighted(z, w, r) if p["kind"] == "szego" else gaf.bergman_disk(z, w)
        else:
            val = gaf.weighted_szego_annulus(z, w, q, r) if p["kind"] == "szego" else gaf.bergman_annulus(z, w, q)
        return json_doc(cfg, {"value": complex(val)})
    if c == "pdpp":
        pts = _complexes(p["points"])
        if not pts:
            raise UsageError("--points needs complex numbers")
        if len(pts) > 8:
            raise UsageError("correlations beyond 8 points are not offered")
        val = gaf.pdpp_corr_disk(pts, r) if disk else gaf.pdpp_corr(pts, q, r)
        return json_doc(cfg, {"points": pts, "value": val})
    if c == "unfolded":
        return json_doc(cfg, {"value": gaf.unfolded_2corr(_complex(p["z"]), _complex(p["w"]), q, r)})
    if c == "identities":
        rows = []
        for k in (3, 4, 5, 6, 7, 10):
            rows.extend(validation.run_criterion(k, cfg.seed))
        return json_doc(cfg, {"report": [row.as_dict() for row in rows]})
    domain = "disk" if disk else "annulus"
    window = _window(p["window"], (0.0, 0.8) if disk else (q + 0.05, 0.95))
    if p["format"] == "json":
        res = gaf.zero_density_mc(domain, cfg.seed, p["samples"], q, r, window, p["bins"], p["method"])
        return json_doc(cfg, res)
    trunc = tuple(int(v) for v in _floats(p["trunc"])) if p["trunc"] else None
    s = gaf.sample_gaf(domain, cfg.seed, p["samples"], q, r, window, trunc)
    blocks = []
    for i in range(p["samples"]):
        zs = gaf.find_zeros(s, i, method=p["method"])
        blocks.append(np.column_stack([zs.zeros.real, zs.zeros.imag, zs.residual_abs]))
    _figure(cfg, "zeros", lambda ax: [ax.plot(b[:, 0], b[:, 1], ".", ms=3) for b in blocks]
            + [ax.set_aspect("equal")])
    return csv_doc(cfg, "re,im,residual", blocks)


def _y0(p, n):
    y0 = _floats(p.get("y0"))
    if not y0:
        y0 = list(np.linspace(-1, 1, n)) if n > 1 else [0.0]
    if len(y0) != n:
        raise UsageError("--y0 needs --n entries")
    return y0


def cmd_sle(cfg: RunConfig):
    p = cfg.params
    c = cfg.command
    seed = cfg.seed
    if c == "trace":
        drv, tr = sle.sample_sle(p["kappa"], p["t_end"], p["steps"], seed, p["paths"])
        blocks = [np.column_stack([tr.times, tr.points[k].real, tr.points[k].imag]) for k in range(p["paths"])]
    elif c == "multi-trace":
        n = p["n"]
        grid = TimeGrid(p["t_end"], p["steps"])
        drv = sle.sample_dyson_driver(p["kappa"], n, _y0(p, n), grid, seed, p["paths"])
        tr = sle.multi_sle_trace(drv)
        blocks = [np.column_stack([tr.times, tr.points[k, i].real, tr.points[k, i].imag])
                  for k in range(p["paths"]) for i in range(n)]
    if c in ("trace", "multi-trace"):
        _figure(cfg, "curves", lambda ax: [ax.plot(b[:, 1], b[:, 2], lw=0.7) for b in blocks])
        if p["format"] == "json":
            return json_doc(cfg, {"curves": [{"t": b[:, 0], "re": b[:, 1], "im": b[:, 2]} for b in blocks]})
        return csv_doc(cfg, "t,re,im", blocks)
    if c == "phase-scan":
        out = {"kappa": [], "fraction": [], "traces": p["paths"], "t_burn": sle.T_BURN, "im_tol": sle.TOUCH_IM}
        # one Brownian sample scaled by sqrt(kappa) for every kappa, so the
        # comparison across kappa is not swamped by sampling noise
        for kap in _floats(p["kappas"]):
            res = sle.touch_fraction(kap, seed, p["paths"], p["t_end"], p["steps"], p["n"])
            out["kappa"].append(kap)
            out["fraction"].append(res["fraction"])
        return json_doc(cfg, out)
    if c == "coupling-test":
        n = p["n"]
        win = _floats(p["window"]) if p["window"] else list(validation.COUPLING_WINDOW)
        if len(win) != 4:
            raise UsageError("--window needs x0,x1,y0,y1 for the coupling test")
        quad = sle.WindowQuad(*win, n=p["nquad"])
        times = _floats(p["times"])
        spu = max(1, int(round(p["steps"] / max(times)))) if max(times) > 0 else p["steps"]
        res = sle.coupling_mc(p["kappa"], _y0(p, n), p["theta"], quad, times, seed, p["paths"], spu)
        return json_doc(cfg, {k: res[k] for k in ("t_list", "mean_re", "mean_im", "mc_se")}
                        | {"flows": res["flows"], "max_drift_z": validation.coupling_drift_z(res)})
    # dg-check
    n = p["n"]
    t = p["t"]
    grid = TimeGrid(t + 0.01, p["steps"])
    drv = (sle.sle_driver(p["kappa"], grid, seed) if n == 1
           else sle.sample_dyson_driver(p["kappa"], n, _y0(p, n), grid, seed))
    res = sle.dG_dt_check(drv, _complex(p["z"]), _complex(p["w"]), t)
    return json_doc(cfg, {"residual": res})


def cmd_validate(cfg: RunConfig):
    only = [int(v) for v in _floats(cfg.params["only"])] or None
    rows = validation.run_validate(cfg.command, cfg.seed, only)
    timings = bool(cfg.params["timings"])
    report = [r.as_dict(timings) for r in rows]
    failed = sum(not r.passed for r in rows)
    if cfg.params["format"] == "csv":
        head = "criterion,check,status,value,tolerance,op" + (",runtime" if timings else "")
        buf = io.StringIO()
        buf.write(f"# config: {json.dumps(clean(cfg.echo()), sort_keys=True)}\n{head}\n")
        for d in report:
            cells = [str(d["criterion"]), d["check"], d["status"], fmt(d["value"]), fmt(d["tolerance"]), d["op"]]
            if timings:
                cells.append(fmt(d["runtime"]))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue(), failed
    return json_doc(cfg, {"suite": cfg.command, "failed": failed, "report": report}), failed


HANDLERS = {"specfun": cmd_specfun, "simulate": cmd_simulate, "detproc": cmd_detproc,
            "gaf": cmd_gaf, "sle": cmd_sle}


def run(cfg: RunConfig) -> int:
    _pool.set_threads(cfg.params.get("threads"))
    if cfg.module == "validate":
        text, failed = cmd_validate(cfg)
        _emit(cfg, text)
        return 1 if failed else 0
    _emit(cfg, HANDLERS[cfg.module](cfg))
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as exc:
        sys.stderr.write(f"artifact: usage error: {exc}\n")
        return 2
    except ArtifactError as exc:
        sys.stderr.write(f"artifact: {type(exc).__name__}: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
