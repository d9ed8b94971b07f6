"""Command-line front end.

Each subcommand reads an optional JSON config (``--config``), lets flags
override its fields, validates everything before any computation, and
writes JSON/CSV/SVG artifacts under ``--out`` together with a
``manifest.json``. Without ``--out`` the main JSON result goes to stdout.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import os

_threads = os.environ.get("SPECLAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import hashlib  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import re  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from dataclasses import dataclass, field  # noqa: E402
from fractions import Fraction  # noqa: E402
from pathlib import Path  # noqa: E402
from typing import Optional  # noqa: E402

import numpy as np  # noqa: E402

__all__ = ["RunConfig", "ConfigError", "build_parser", "resolve_config", "run", "main"]


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


# ------------------------------------------------------------ value parsing

def parse_number(text) -> float:
    """Numbers such as ``0.5``, ``1/256``, ``2^-4`` or ``1e-3``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip()
    m = re.fullmatch(r"([+-]?\d+(?:\.\d+)?)\^([+-]?\d+(?:\.\d+)?)", s)
    if m:
        return float(m.group(1)) ** float(m.group(2))
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse number {text!r}") from None


def parse_schedule(text) -> list:
    """``2^-4..2^-10`` (powers of the same base), or a comma list, or a JSON list."""
    if isinstance(text, (list, tuple)):
        return [parse_number(x) for x in text]
    s = str(text).strip()
    m = re.fullmatch(r"(\d+(?:\.\d+)?)\^([+-]?\d+)\.\.(\d+(?:\.\d+)?)\^([+-]?\d+)", s)
    if m:
        base, k0, base2, k1 = float(m.group(1)), int(m.group(2)), float(m.group(3)), int(m.group(4))
        if base != base2:
            raise ConfigError(f"schedule {text!r} mixes bases")
        step = 1 if k1 >= k0 else -1
        return [base**k for k in range(k0, k1 + step, step)]
    return [parse_number(x) for x in s.split(",") if x.strip()]


def parse_curvature(text):
    """``const:VALUE`` (G constant) or ``B:VALUE`` (G = B^2)."""
    from .comparison import CurvatureBound

    s = str(text).strip()
    kind, _, val = s.partition(":")
    if kind == "const":
        return CurvatureBound.const(parse_number(val))
    if kind == "B":
        return CurvatureBound.from_B(parse_number(val))
    raise ConfigError(f"curvature spec {text!r}: expected const:VALUE or B:VALUE")


# ------------------------------------------------------------------ config

PATCHES = ("flat-disk", "flat-square", "flat-annulus", "hyperbolic-disk", "andrade",
           "labyrinth", "catenoid")

# field -> (type, default, help)
_COMMON = {
    "out": (str, None, "output directory"),
    "seed": (int, 0, "seed for randomized sampling"),
}
_PATCH = {
    "patch": (str, "flat-disk", f"one of {', '.join(PATCHES)}"),
    "R": ("num", 1.0, "flat disk radius"),
    "side": ("num", 1.0, "flat square side"),
    "r_in": ("num", 0.5, "annulus inner radius"),
    "eps": ("num", 0.01, "hyperbolic truncation"),
    "r1": ("num", 1.0, "Andrade r1"),
    "r2": ("num", math.sqrt(3.0), "Andrade r2"),
    "V": ("num", 4.0, "Andrade v extent"),
    "U": ("num", 1.0, "Andrade u half width"),
    "n": (int, 1, "labyrinth annulus index"),
    "rn": ("num", 1.0, "labyrinth annulus width"),
    "lab_eps": ("num", 0.0, "labyrinth surrogate slope"),
    "dx": ("num", 1 / 128, "grid spacing"),
}
SCHEMA = {
    "model": {"G": (str, "const:0", "curvature bound, const:G or B:value"),
              "tmax": ("num", 5.0, "integration length"),
              "step": ("num", 1e-3, "RK4 step"),
              "h2": (bool, False, "report the first zero of h'")},
    "subharmonic": {**_PATCH, "G": (str, "const:0", "curvature bound"),
                    "theta": ("num", 1.0, "exponent"), "a": ("num", 0.2, "inner radius"),
                    "Rmax": ("num", 2.0, "profile range")},
    "surface": {**_PATCH},
    "spectrum": {**_PATCH, "k": (int, 5, "number of eigenvalues"),
                 "tol": ("num", 1e-10, "residual tolerance"),
                 "export": (bool, False, "write Matrix Market stiffness and CSV mass")},
    "persson": {**_PATCH, "exhaustion": (str, "balls", "balls (|z| <= rho_l) or strip (|v| <= l)"),
                "levels": (str, "0,1,2,3,4,5,6", "exhaustion levels l"),
                "tol": ("num", 1e-10, "residual tolerance")},
    "barta": {**_PATCH, "tol": ("num", 1e-10, "residual tolerance")},
    "witness": {"R_D": ("num", 1.0, "radius of D and of the flat disk"),
                "r1": (str, "1/400,1/800,1/1600", "scales r1"),
                "dx": ("num", 1 / 256, "grid spacing")},
    "ballprop": {**_PATCH, "radius": ("num", 1.0, "intrinsic ball radius"),
                 "delta": ("num", 0.5, "inner ratio"),
                 "centers": (str, "0", "comma list of complex centers, e.g. 0,0.5+1j")},
    "hausdorff": {"set": (str, "segment", "segment, square, or a CSV point file"),
                  "points": (int, 100_000, "sample size"),
                  "gauge": (str, "square-log", "square, square-log, or power:p"),
                  "delta0": ("num", 0.25, "gauge validity radius"),
                  "deltas": (str, "2^-4..2^-10", "scale schedule"),
                  "strategy": (str, "grid", "grid or greedy")},
}


@dataclass
class RunConfig:
    """Validated configuration for one subcommand."""

    subcommand: str
    values: dict
    out: Optional[str] = None
    dry_run: bool = False
    seed: int = 0
    sources: dict = field(default_factory=dict)

    def canonical(self) -> str:
        return json.dumps({"subcommand": self.subcommand, "seed": self.seed, **self.values},
                          sort_keys=True, default=str)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def __getitem__(self, key):
        return self.values[key]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="speclab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, fields in SCHEMA.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--dry-run", action="store_true", help="validate and print the plan")
        for key, (typ, _, hlp) in {**_COMMON, **fields}.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, dest=key, action="store_const", const=True, default=None,
                                help=hlp)
            else:
                sp.add_argument(flag, dest=key, default=None, help=hlp)
    return p


def _coerce(key, typ, raw, where):
    try:
        if typ == "num":
            v = parse_number(raw)
            if not math.isfinite(v):
                raise ConfigError("not finite")
            return v
        if typ is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ConfigError("not an integer")
            return int(raw)
        if typ is bool:
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("1", "true", "yes"):
                return True
            if str(raw).lower() in ("0", "false", "no"):
                return False
            raise ConfigError("not a boolean")
        return str(raw)
    except (ConfigError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where} field {key!r}: {exc}") from None


_POSITIVE = {"R", "side", "r_in", "eps", "r1", "r2", "V", "U", "rn", "dx", "tmax", "step",
             "theta", "a", "Rmax", "tol", "radius", "delta", "R_D", "delta0", "points", "k", "n"}


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, the JSON config and flags; validate ranges."""
    name = ns.subcommand
    fields = {**_COMMON, **SCHEMA[name]}
    merged = {k: d for k, (_, d, _) in fields.items()}
    sources = {k: "default" for k in merged}
    if ns.config:
        path = Path(ns.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        doc = dict(doc)
        if doc.pop("subcommand", name) != name:
            raise ConfigError(f"{path}: field 'subcommand' does not match {name!r}")
        for key, raw in doc.items():
            if key not in fields:
                raise ConfigError(f"{path}: unknown field {key!r}")
            merged[key] = _coerce(key, fields[key][0], raw, str(path))
            sources[key] = "config"
    for key, (typ, _, _) in fields.items():
        raw = getattr(ns, key, None)
        if raw is not None:
            merged[key] = _coerce(key, typ, raw, "flag")
            sources[key] = "flag"
    for key, (typ, _, _) in fields.items():
        if (key in _POSITIVE and typ != str and merged.get(key) is not None
                and merged[key] <= 0):
            raise ConfigError(f"field {key!r} must be positive, got {merged[key]}")
    if "patch" in merged and merged["patch"] not in PATCHES:
        raise ConfigError(f"field 'patch': unknown patch {merged['patch']!r}")
    if "delta" in merged and not merged["delta"] < 1:
        raise ConfigError("field 'delta' must lie in (0, 1)")
    if name == "hausdorff":
        if merged["strategy"] not in ("grid", "greedy"):
            raise ConfigError("field 'strategy': expected grid or greedy")
        _gauge(merged)
        parse_schedule(merged["deltas"])
    if name in ("model", "subharmonic"):
        parse_curvature(merged["G"])
    if name == "persson":
        if merged["exhaustion"] not in ("balls", "strip"):
            raise ConfigError("field 'exhaustion': expected balls or strip")
        parse_schedule(merged["levels"])
    if name == "witness":
        parse_schedule(merged["r1"])
    out = merged.pop("out")
    seed = merged.pop("seed")
    return RunConfig(name, merged, out, bool(ns.dry_run), seed, sources)


# ---------------------------------------------------------------- builders

def make_patch(cfg: RunConfig):
    from . import surfaces as S

    v = cfg.values
    kind = v["patch"]
    if kind == "flat-disk":
        return S.flat_disk(v["R"])
    if kind == "flat-square":
        return S.flat_square(v["side"])
    if kind == "flat-annulus":
        return S.flat_annulus(v["r_in"], v["R"])
    if kind == "hyperbolic-disk":
        return S.hyperbolic_disk(v["eps"])
    if kind == "andrade":
        return S.andrade_surface(S.AndradeParams(v["r1"], v["r2"]), v["U"], v["V"])
    if kind == "labyrinth":
        return S.labyrinth_patch(S.LabyrinthParams(v["n"], v["rn"], epsilon=v["lab_eps"]))
    return S.catenoid_patch()


def _gauge(v):
    from .hausdorff import Gauge

    g = v["gauge"]
    if g == "square":
        return Gauge("square", v["delta0"])
    if g == "square-log":
        return Gauge("square_log", v["delta0"])
    if g.startswith("power:"):
        return Gauge("power", v["delta0"], exponent=parse_number(g.split(":", 1)[1]))
    raise ConfigError(f"field 'gauge': unknown gauge {g!r}")


class _Outputs:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out) if cfg.out else None
        self.files = []
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Optional[Path]:
        if self.dir is None:
            return None
        self.files.append(name)
        return self.dir / name

    def json(self, name: str, obj):
        text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
        p = self.path(name)
        if p is None:
            sys.stdout.write(text)
        else:
            p.write_text(text)

    def finish(self, started: float):
        if self.dir is None:
            return
        manifest = {"subcommand": self.cfg.subcommand, "config": json.loads(self.cfg.canonical()),
                    "config_hash": self.cfg.config_hash, "files": sorted(self.files)}
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        meta = {"started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
                "elapsed_s": round(time.time() - started, 3),
                "threads": os.environ.get("SPECLAB_THREADS")}
        (self.dir / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _plot(out: _Outputs, name, x, y, **kw):
    from .plotting import line_plot_svg

    p = out.path(name)
    if p is not None:
        line_plot_svg(x, y, p, **kw)


# ------------------------------------------------------------- subcommands

def cmd_model(cfg, out):
    from .comparison import mu, solve_h

    v = cfg.values
    model = solve_h(parse_curvature(v["G"]), v["tmax"], v["step"], h2_mode=v["h2"])
    p_h, p_dh = out.path("model_h.csv"), out.path("model_dh.csv")
    if p_h is not None:
        model.to_csv(p_h, p_dh)
    res = {"t_max": model.t_max, "step": model.step, "h_end": float(model.h[-1]),
           "dh_end": float(model.dh[-1]), "h2_failure": model.h2_failure,
           "mu_end": mu(model, model.t_max) if model.satisfies_h2 else None}
    out.json("model.json", res)


def cmd_subharmonic(cfg, out):
    from .comparison import solve_h
    from .subharmonic import build_barrier, sup_bound_certificate, verify_subharmonic

    v = cfg.values
    patch = make_patch(cfg)
    model = solve_h(parse_curvature(v["G"]), v["Rmax"])
    prof = build_barrier(model, v["theta"], v["a"], R=v["Rmax"])
    p = out.path("barrier.csv")
    if p is not None:
        prof.to_csv(p)
    rep = verify_subharmonic(patch, np.zeros(3), prof, v["dx"])
    cert = sup_bound_certificate(prof)
    out.json("subharmonic.json", {"report": json.loads(rep.to_json()),
                                  "sup_bound": prof.sup_bound, "regime": cert.regime,
                                  "ratio": cert.ratio})


def cmd_surface(cfg, out):
    patch = make_patch(cfg)
    table = patch.grid_table(cfg["dx"])
    p = out.path("grid.csv")
    if p is not None:
        cols = "u,v,lambda" + (",x,y,z" if table.shape[1] == 6 else "")
        np.savetxt(p, table, delimiter=",", header=cols, comments="", fmt="%.17g")
    lam = table[:, 2]
    out.json("surface.json", {"descriptor": patch.descriptor, "nodes": int(table.shape[0]),
                              "lambda_min": float(lam.min()), "lambda_max": float(lam.max()),
                              "metadata": {k: v for k, v in patch.metadata.items()}})


def cmd_spectrum(cfg, out):
    from .spectrum import discretize, smallest_eigs

    grid, problem = discretize(make_patch(cfg), cfg["dx"])
    res = smallest_eigs(problem, cfg["k"], cfg["tol"])
    if cfg["export"]:
        ps, pm = out.path("stiffness.mtx"), out.path("mass.csv")
        if ps is not None:
            problem.export(ps, pm)
    p = out.path("eigenvalues.csv")
    if p is not None:
        res.to_csv(p)
    _plot(out, "eigenvalues.svg", np.arange(1, res.eigenvalues.size + 1), res.eigenvalues,
          title="smallest eigenvalues", xlabel="index", ylabel="eigenvalue")
    doc = json.loads(res.to_json())
    doc["unknowns"] = problem.size
    out.json("spectrum.json", doc)


def _exhaustion(cfg, patch):
    from .spectrum import ball_region, strip_region

    levels = parse_schedule(cfg["levels"])
    if cfg["exhaustion"] == "strip":
        return levels, [strip_region(l) for l in levels]
    (u0, u1), _ = patch.u_range, patch.v_range
    rad = patch.metadata.get("truncation_radius", patch.metadata.get("R", 0.5 * (u1 - u0)))
    return levels, [ball_region(0, rad - 2.0**-l) if l > 0 else None for l in levels]


def cmd_persson(cfg, out):
    from .spectrum import persson_sweep

    patch = make_patch(cfg)
    levels, K = _exhaustion(cfg, patch)
    sw = persson_sweep(patch, cfg["dx"], K, labels=levels, tol=cfg["tol"])
    p = out.path("persson.csv")
    if p is not None:
        sw.to_csv(p)
    _plot(out, "persson.svg", np.arange(len(levels)), sw.values, title="Persson sweep",
          xlabel="exhaustion index", ylabel="lambda*", logy=True)
    out.json("persson.json", json.loads(sw.to_json()))


def cmd_barta(cfg, out):
    from .spectrum import barta_bound, discretize, smallest_eigs

    grid, problem = discretize(make_patch(cfg), cfg["dx"])
    res = smallest_eigs(problem, 1, cfg["tol"])
    b = barta_bound(grid, problem, res.eigenvectors[:, 0])
    const = barta_bound(grid, problem, np.ones(problem.size))
    out.json("barta.json", {"mu1": float(res.eigenvalues[0]), "barta_ground_state": b.bound,
                            "difference": abs(b.bound - float(res.eigenvalues[0])),
                            "barta_constant": const.bound})


def cmd_witness(cfg, out):
    from .comparison import CurvatureBound, solve_h
    from .hausdorff import gauge_for_theta
    from .spectrum import barta_witness, boundary_circle_cover
    from .surfaces import flat_disk

    R_D = cfg["R_D"]
    model = solve_h(CurvatureBound.const(0.0), 3.0 * R_D)
    psi = gauge_for_theta(1.0)
    rows = []
    for r1 in parse_schedule(cfg["r1"]):
        cover = boundary_circle_cover(R_D, r1, psi)
        rep = barta_witness(flat_disk(R_D), cfg["dx"], cover, model, r1, R_D=R_D)
        rows.append(json.loads(rep.to_json()))
    ratios = [rows[i + 1]["bound"] / rows[i]["bound"] for i in range(len(rows) - 1)]
    _plot(out, "witness.svg", [r["r1"] for r in rows], [r["bound"] for r in rows],
          title="witness Barta bound", xlabel="r1", ylabel="inf(-Lap w1)/w1", logx=True, logy=True)
    out.json("witness.json", {"levels": rows, "ratios": ratios})


def cmd_ballprop(cfg, out):
    from .spectrum import ball_property_check, discretize

    grid, _ = discretize(make_patch(cfg), cfg["dx"])
    centers = [complex(c.replace(" ", "")) for c in cfg["centers"].split(",")]
    rep = ball_property_check(grid, centers, cfg["radius"], cfg["delta"])
    out.json("ballprop.json", json.loads(rep.to_json()))


def cmd_hausdorff(cfg, out):
    from .hausdorff import measure_limit, packing_lower_bound

    v = cfg.values
    rng = np.random.default_rng(cfg.seed)
    lower = None
    if v["set"] == "segment":
        pts = np.column_stack([rng.random(v["points"]), np.zeros(v["points"])])
    elif v["set"] == "square":
        pts = rng.random((v["points"], 2))
        lower = packing_lower_bound(1.0, 2) if v["gauge"] == "square" else None
    else:
        try:
            pts = np.loadtxt(v["set"], delimiter=",", ndmin=2)
        except OSError as exc:
            raise ConfigError(f"field 'set': cannot read {v['set']}: {exc.strerror}") from None
    rep = measure_limit(pts, _gauge(v), parse_schedule(v["deltas"]), v["strategy"],
                        lower_bound=lower)
    p = out.path("hausdorff.csv")
    if p is not None:
        rep.to_csv(p)
    _plot(out, "hausdorff.svg", rep.deltas, rep.sums, title="covering sums",
          xlabel="delta", ylabel="sum", logx=True, logy=True)
    out.json("hausdorff.json", json.loads(rep.to_json()))


COMMANDS = {
    "model": cmd_model, "subharmonic": cmd_subharmonic, "surface": cmd_surface,
    "spectrum": cmd_spectrum, "persson": cmd_persson, "barta": cmd_barta,
    "witness": cmd_witness, "ballprop": cmd_ballprop, "hausdorff": cmd_hausdorff,
}


def run(argv=None) -> int:
    """Parse, validate and execute; returns the exit code."""
    from .spectrum import EigenSolverError

    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = resolve_config(ns)
    except ConfigError as exc:
        print(f"speclab: config error: {exc}", file=sys.stderr)
        return 1
    if cfg.dry_run:
        plan = {"subcommand": cfg.subcommand, "config": cfg.values, "seed": cfg.seed,
                "out": cfg.out, "config_hash": cfg.config_hash, "sources": cfg.sources}
        print(json.dumps(plan, indent=2, sort_keys=True, default=str))
        return 0
    started = time.time()
    out = _Outputs(cfg)
    try:
        with np.errstate(over="raise", invalid="ignore", divide="ignore"):
            COMMANDS[cfg.subcommand](cfg, out)
    except (EigenSolverError, FloatingPointError, ArithmeticError) as exc:
        print(f"speclab: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as exc:
        print(f"speclab: input error: {exc}", file=sys.stderr)
        return 1
    out.finish(started)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
