"""``fid`` command-line front end.

Scenarios are TOML documents with flat sections::

    command = "curve"            # optional; must match the CLI command

    [model]
    key = "binomial"             # catalog model, or
    # chain = "poisson-ratio"    # step-by-step chain, or
    # family = "multinomial"     # cr-NEF (``crnef`` command)
    m = 1                        # remaining keys are model/chain parameters

    [data]
    n = 10
    s = 3                        # or x = [...] (raw sample)

    [fiducial]
    variants = ["right", "left", "arithmetic", "geometric"]

    [grid]
    lo = 0.0
    hi = 1.0
    points = 201

    [run]
    levels = [0.9, 0.95]
    seed = 1

Any value can be overridden with ``--set section.key=value`` (values are
parsed as TOML, falling back to a bare string).  Output files go to
``--out``, else ``[run] output``, else ``$FID_OUTPUT_DIR``, else ``.``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import crnef as _cr
from . import gfd as _gfd
from . import inference as _inf
from . import models as _m
from . import stepwise as _sw
from .errors import ConfigError, DomainError, FiducialError
from .fiducial1d import Variant, fiducial
from .numerics import Grid

__all__ = ["COMMANDS", "OUTPUT_ENV", "Scenario", "parse_scenario", "load_scenario", "run_scenario", "main"]

OUTPUT_ENV = "FID_OUTPUT_DIR"

COMMANDS = (
    "density",
    "cdf",
    "quantile",
    "interval",
    "curve",
    "coverage",
    "risk",
    "gfd",
    "compare-bayes",
    "sample",
    "crnef",
)

STOCHASTIC = frozenset({"coverage", "sample", "crnef"})

_SECTIONS = {
    "model": None,  # open: parameters are validated by the model constructors
    "data": None,  # open: chain statistics
    "fiducial": {"variant", "variants", "boundary", "backend", "component", "order", "path"},
    "grid": {"lo", "hi", "points"},
    "run": {
        "levels",
        "probs",
        "replicates",
        "seed",
        "theta0",
        "size",
        "prior",
        "mu_grid",
        "lengths",
        "output",
        "name",
        "method",
    },
}
_TOP = {"command", "description"}

_DEFAULT_LEVELS = [0.5, 0.8, 0.9, 0.95, 0.99]
_DEFAULT_PROBS = [0.005, 0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975, 0.995]


# -- scenario ---------------------------------------------------------------------


@dataclass
class Scenario:
    """Validated scenario with defaults filled in."""

    command: str
    name: str = "scenario"
    model_key: str | None = None
    chain_key: str | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    variants: list = field(default_factory=list)
    boundary: str = "error"
    backend: str = "closed"
    component: int = 0
    grid: tuple | None = None
    points: int = 201
    levels: list = field(default_factory=lambda: list(_DEFAULT_LEVELS))
    probs: list = field(default_factory=lambda: list(_DEFAULT_PROBS))
    replicates: int = 10000
    seed: int | None = None
    theta0: float | None = None
    size: int = 1000
    prior: str = "jeffreys"
    mu_grid: list | None = None
    lengths: bool = True
    method: str = "closed"
    output: str | None = None

    @property
    def model(self) -> _m.ModelSpec:
        if self.model_key is None:
            raise ConfigError("[model] key is required for this command")
        return _m.model(self.model_key, **self.params)


def _parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(doc: dict, sets: Sequence[str]) -> dict:
    """Apply ``section.key=value`` overrides to a parsed document."""
    doc = copy.deepcopy(doc)
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        path, raw = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) == 1:
            doc[parts[0]] = _parse_value(raw)
        elif len(parts) == 2:
            doc.setdefault(parts[0], {})[parts[1]] = _parse_value(raw)
        else:
            raise ConfigError(f"--set key {path!r} has too many dots")
    return doc


def _validate_keys(doc: dict) -> None:
    for key, val in doc.items():
        if isinstance(val, dict):
            if key not in _SECTIONS:
                raise ConfigError(f"unknown section [{key}]")
            allowed = _SECTIONS[key]
            if allowed is not None:
                bad = sorted(set(val) - allowed)
                if bad:
                    raise ConfigError(f"unknown key(s) in [{key}]: {', '.join(bad)}")
        elif key not in _TOP:
            raise ConfigError(f"unknown top-level key {key!r}")


def parse_scenario(text: str, command: str | None = None, sets: Sequence[str] = (), name: str = "scenario") -> Scenario:
    """Parse and validate a TOML scenario document.

    Raises
    ------
    ConfigError
        On TOML syntax errors (with line/column), unknown keys, a command
        mismatch, or invalid values.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    doc = apply_overrides(doc, sets)
    _validate_keys(doc)
    cmd = command or doc.get("command")
    if cmd is None:
        raise ConfigError("no command given")
    if doc.get("command") not in (None, cmd):
        raise ConfigError(f"scenario is for command {doc['command']!r}, not {cmd!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")

    model = dict(doc.get("model", {}))
    data = dict(doc.get("data", {}))
    fid = doc.get("fiducial", {})
    grid = doc.get("grid", {})
    run = doc.get("run", {})

    sc = Scenario(command=cmd, name=str(run.get("name", name)))
    sc.model_key = model.pop("key", None)
    sc.chain_key = model.pop("chain", None)
    sc.family = model.pop("family", None)
    if sum(v is not None for v in (sc.model_key, sc.chain_key, sc.family)) > 1:
        raise ConfigError("[model] takes only one of key, chain, family")
    sc.params = model
    sc.data = data

    if sc.model_key is not None:
        try:
            m = _m.model(sc.model_key, **sc.params)
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"[model]: {exc}") from exc
    else:
        m = None
    if sc.chain_key is not None and sc.chain_key not in _sw.CHAIN_KEYS:
        raise ConfigError(f"[model] unknown chain {sc.chain_key!r}")
    if cmd == "crnef" and sc.family is None:
        raise ConfigError("crnef needs [model] family")

    variants = fid.get("variants", fid.get("variant"))
    if variants is None:
        discrete = (m is not None and m.discrete) or sc.chain_key in {"poisson-ratio", "bivariate-binomial", "trinomial-ratio"}
        if sc.family is not None:
            discrete = sc.family in ("multinomial", "neg-multinomial", "poisson-normal")
        variants = ["geometric" if discrete else "right"]
    if isinstance(variants, str):
        variants = [variants]
    try:
        sc.variants = [Variant(v).value for v in variants]
    except ValueError as exc:
        raise ConfigError(f"[fiducial] {exc}") from exc
    if not sc.variants:
        raise ConfigError("[fiducial] variants is empty")
    sc.boundary = str(fid.get("boundary", "closed" if "geometric" in sc.variants else "error"))
    sc.backend = str(fid.get("backend", "closed"))
    sc.component = int(fid.get("component", 0))
    for k in ("order", "path"):
        if k in fid:
            sc.params[k] = fid[k]

    if "lo" in grid or "hi" in grid:
        if "lo" not in grid or "hi" not in grid:
            raise ConfigError("[grid] needs both lo and hi")
        lo, hi = float(grid["lo"]), float(grid["hi"])
        if not lo < hi:
            raise ConfigError(f"[grid] lo={lo!r} must be < hi={hi!r}")
        if m is not None:
            plo, phi = m.param_space
            if lo < plo or hi > phi:
                raise ConfigError(f"[grid] ({lo}, {hi}) outside the parameter space ({plo}, {phi})")
        sc.grid = (lo, hi)
    sc.points = int(grid.get("points", 201))
    if sc.points < 2:
        raise ConfigError("[grid] points must be >= 2")

    sc.levels = [float(v) for v in run.get("levels", _DEFAULT_LEVELS)]
    if any(not 0 < v < 1 for v in sc.levels):
        raise ConfigError("[run] levels must lie in (0, 1)")
    sc.probs = [float(v) for v in run.get("probs", _DEFAULT_PROBS)]
    if any(not 0 <= v <= 1 for v in sc.probs):
        raise ConfigError("[run] probs must lie in [0, 1]")
    sc.replicates = int(run.get("replicates", 10000))
    if sc.replicates <= 0:
        raise ConfigError("[run] replicates must be positive")
    sc.seed = run.get("seed")
    if cmd in STOCHASTIC and sc.seed is None:
        raise ConfigError(f"{cmd} is stochastic: [run] seed is required")
    if sc.seed is not None:
        sc.seed = int(sc.seed)
    sc.theta0 = None if run.get("theta0") is None else float(run["theta0"])
    sc.size = int(run.get("size", 1000))
    sc.prior = str(run.get("prior", "jeffreys"))
    sc.mu_grid = run.get("mu_grid")
    sc.lengths = bool(run.get("lengths", True))
    sc.method = str(run.get("method", "closed"))
    sc.output = run.get("output")
    if cmd in ("density", "cdf", "quantile", "interval", "curve", "coverage", "compare-bayes", "sample", "risk", "gfd"):
        if sc.model_key is None and sc.chain_key is None:
            raise ConfigError(f"{cmd} needs [model] key or chain")
    return sc


def load_scenario(path: str | os.PathLike, command: str | None = None, sets: Sequence[str] = ()) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {str(p)!r}: {exc}") from exc
    return parse_scenario(text, command, sets, name=p.stem)


# -- output -----------------------------------------------------------------------


def fmt(v) -> str:
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class Table:
    name: str
    header: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()


@dataclass
class Result:
    tables: list
    summary: list  # list of (label, value)


# -- helpers ----------------------------------------------------------------------


def _ns(sc: Scenario, m: _m.ModelSpec) -> tuple[int, float]:
    d = sc.data
    if "x" in d:
        x = np.asarray(d["x"], dtype=float)
        return x.size, _m.sufficient_statistic(m, x).value
    if "n" not in d or "s" not in d:
        raise ConfigError("[data] needs x, or both n and s")
    return int(d["n"]), float(d["s"])


def _chain_joint(sc: Scenario, variant: str) -> _sw.JointFiducial:
    ch = _sw.chain(sc.chain_key, **sc.params)
    data = dict(sc.data)
    if "x" in data and ch.statistics is not None and sc.chain_key not in ("uniform-shift", "uniform-scale", "loc-scale-normal"):
        data = ch.statistics(data.pop("x"))
    elif "x" in data and ch.statistics is not None:
        data = dict(ch.statistics(data["x"]))
    return _sw.build_joint(ch, data, variant, backend=sc.backend, boundary=sc.boundary)


def _dists(sc: Scenario) -> list[tuple[str, Any]]:
    """(variant, Distribution1D) pairs for the 1-D commands."""
    out = []
    for v in sc.variants:
        if sc.chain_key is not None:
            joint = _chain_joint(sc, v)
            out.append((v, joint.marginal(sc.component)))
        else:
            m = sc.model
            n, s = _ns(sc, m)
            kw = {"boundary": sc.boundary} if v == "geometric" else {}
            out.append((v, fiducial(m, n, s, v, **kw).dist))
    return out


def _auto_grid(sc: Scenario, dists: Sequence) -> np.ndarray:
    if sc.grid is not None:
        return Grid.linspace(sc.grid[0], sc.grid[1], sc.points).points
    lo = min(float(d.ppf(0.00005)) for d in dists)
    hi = max(float(d.ppf(0.99995)) for d in dists)
    if not lo < hi:
        raise DomainError("degenerate automatic grid")
    return Grid.linspace(lo, hi, sc.points).points


# -- commands ---------------------------------------------------------------------


def _cmd_curves(sc: Scenario, cols: Sequence[str]) -> Result:
    pairs = _dists(sc)
    grid = _auto_grid(sc, [d for _, d in pairs])
    t = Table(sc.command, ["theta", "variant", *cols])
    summary = []
    for v, d in pairs:
        pdf = np.asarray(d.pdf(grid), dtype=float) if "density" in cols else None
        cdf = np.asarray(d.cdf(grid), dtype=float) if ("cdf" in cols or "cc" in cols) else None
        for i, th in enumerate(grid):
            row = [float(th), v]
            for c in cols:
                if c == "density":
                    row.append(float(pdf[i]))
                elif c == "cdf":
                    row.append(float(cdf[i]))
                else:
                    row.append(abs(1.0 - 2.0 * float(cdf[i])))
            t.rows.append(row)
        lo, hi = _inf.equal_tail_interval(d, 0.95)
        summary.append((f"{v} median", float(d.ppf(0.5))))
        summary.append((f"{v} 95% interval", f"({fmt(lo)}, {fmt(hi)})"))
    return Result([t], summary)


def _cmd_quantile(sc: Scenario) -> Result:
    t = Table("quantile", ["variant", "prob", "quantile"])
    for v, d in _dists(sc):
        for p in sc.probs:
            t.rows.append([v, p, float(d.ppf(p))])
    return Result([t], [(f"{r[0]} q{fmt(r[1])}", r[2]) for r in t.rows])


def _cmd_interval(sc: Scenario) -> Result:
    t = Table("interval", ["variant", "level", "lower", "upper", "length"])
    for v, d in _dists(sc):
        for lv in sc.levels:
            lo, hi = _inf.equal_tail_interval(d, lv)
            t.rows.append([v, lv, lo, hi, hi - lo])
    return Result([t], [(f"{r[0]} {fmt(r[1])}", f"({fmt(r[2])}, {fmt(r[3])})") for r in t.rows])


def _cmd_coverage(sc: Scenario) -> Result:
    m = sc.model
    if sc.theta0 is None:
        raise ConfigError("coverage needs [run] theta0")
    n = int(sc.data.get("n", 0))
    if n <= 0:
        raise ConfigError("coverage needs [data] n")
    t = Table("coverage", ["variant", "level", "coverage", "mean_length"])
    summary = []
    for v in sc.variants:
        rep = _inf.pit_uniformity(m, n, sc.theta0, replicates=sc.replicates, seed=sc.seed, variant=v, levels=sc.levels, lengths=sc.lengths)
        for lv, cv, ml in zip(rep.levels, rep.coverage, rep.mean_length):
            t.rows.append([v, float(lv), float(cv), float(ml)])
        band = _inf.ks_critical_value(rep.replicates)
        summary += [
            (f"{v} KS statistic", rep.ks_statistic),
            (f"{v} KS 1% band", band),
            (f"{v} KS below band", rep.ks_statistic < band),
        ]
    return Result([t], summary)


def _cmd_risk(sc: Scenario) -> Result:
    key = sc.model_key
    if key not in ("binomial", "poisson", "negative-binomial"):
        raise ConfigError("risk supports binomial, poisson and negative-binomial")
    if float(sc.params.get("m", 1)) != 1:
        raise ConfigError("risk gaps are defined for m = 1")
    n = int(sc.data.get("n", 0))
    rep = _inf.confidence_risk_gap(key, n, sc.mu_grid)
    t = Table("risk", ["mu", "risk_arithmetic", "risk_geometric", "gap", "analytic"])
    for mu, a, g, gap in zip(rep.grid, rep.risk_arithmetic, rep.risk_geometric, rep.gap):
        t.rows.append([float(mu), float(a), float(g), float(gap), rep.analytic])
    return Result(
        [t],
        [("analytic gap", rep.analytic), ("max |gap - analytic|", rep.max_abs_error), ("max |mean_A - mean_G|", rep.max_mean_difference)],
    )


def _gfd_datasets(sc: Scenario) -> list:
    d = sc.data
    if "datasets" in d:
        return [np.asarray(x, dtype=float) for x in d["datasets"]]
    if "x" in d:
        return [np.asarray(d["x"], dtype=float)]
    raise ConfigError("gfd needs [data] x or datasets")


def _cmd_gfd(sc: Scenario) -> Result:
    m = sc.model
    sets = _gfd_datasets(sc)
    rs = [_gfd.gfd_density(m, x).dist for x in sets]
    hs = [fiducial(m, x.size, _m.sufficient_statistic(m, x).value, "right").dist for x in sets]
    grid = _auto_grid(sc, rs + hs)
    t = Table("gfd", ["dataset", "theta", "r_density", "r_cdf", "r_cc", "h_density", "h_cdf", "h_cc"])
    ti = Table("gfd_intervals", ["dataset", "source", "level", "lower", "upper"])
    summary = []
    for k, (x, r, h) in enumerate(zip(sets, rs, hs)):
        rp, rc = np.asarray(r.pdf(grid)), np.asarray(r.cdf(grid))
        hp, hc = np.asarray(h.pdf(grid)), np.asarray(h.cdf(grid))
        for i, th in enumerate(grid):
            t.rows.append([k, float(th), float(rp[i]), float(rc[i]), abs(1 - 2 * float(rc[i])), float(hp[i]), float(hc[i]), abs(1 - 2 * float(hc[i]))])
        for lv in sc.levels:
            for src, dist in (("r", r), ("h", h)):
                lo, hi = _inf.equal_tail_interval(dist, lv)
                ti.rows.append([k, src, lv, lo, hi])
                summary.append((f"x{k} {src} {fmt(lv)}", f"({fmt(lo)}, {fmt(hi)})"))
        summary.append((f"x{k} sup|r_cdf - h_cdf| on grid", float(np.max(np.abs(rc - hc)))))
    return Result([t, ti], summary)


def _posterior_for_chain(sc: Scenario):
    d = sc.data
    key = sc.chain_key
    if key == "neyman-scott":
        return _inf.neyman_scott_posterior(d["x"])
    if key == "trinomial-ratio":
        if sc.component != 0:
            raise ConfigError("trinomial-ratio comparison is for component 0")
        return _inf.trinomial_ratio_reference_posterior(int(d["x1"]), int(d["x2"]))
    if key == "loc-scale-normal":
        post = _inf.normal_location_scale_posterior(d["x"])
        return post.sigma if sc.component == 0 else post.theta
    if key in ("uniform-scale", "uniform-shift"):
        fam = "uniform-scale" if key == "uniform-scale" else "uniform-shift"
        return _inf.uniform_posterior(_m.model(fam), d["x"])
    raise ConfigError(f"no reference posterior for chain {key!r}")


def _cmd_compare(sc: Scenario) -> Result:
    pairs = _dists(sc)
    if sc.chain_key is not None:
        post = _posterior_for_chain(sc)
    else:
        m = sc.model
        if "x" in sc.data:
            post = _inf.bayes_posterior(m, sc.prior, x=sc.data["x"])
        else:
            n, s = _ns(sc, m)
            post = _inf.bayes_posterior(m, sc.prior, n=n, s=s)
    grid = _auto_grid(sc, [d for _, d in pairs])
    t = Table("compare-bayes", ["theta", "variant", "fiducial_cdf", "posterior_cdf", "abs_diff"])
    pc = np.asarray(post.cdf(grid), dtype=float)
    summary = []
    for v, d in pairs:
        fc = np.asarray(d.cdf(grid), dtype=float)
        for i, th in enumerate(grid):
            t.rows.append([float(th), v, float(fc[i]), float(pc[i]), abs(float(fc[i]) - float(pc[i]))])
        summary.append((f"{v} sup cdf gap", float(np.max(np.abs(fc - pc)))))
    return Result([t], summary)


def _cmd_sample(sc: Scenario) -> Result:
    summary = []
    if sc.chain_key is not None:
        tables = []
        for v in sc.variants:
            joint = _chain_joint(sc, v)
            draws = joint.sample(sc.size, sc.seed)
            t = Table("sample", ["index", "variant", *joint.names])
            for i, row in enumerate(draws):
                t.rows.append([i, v, *map(float, row)])
            tables.append(t)
            for j, nm in enumerate(joint.names):
                summary.append((f"{v} mean {nm}", float(np.mean(draws[:, j]))))
        merged = Table("sample", tables[0].header, [r for t in tables for r in t.rows])
        return Result([merged], summary)
    t = Table("sample", ["index", "variant", "value"])
    for v, d in _dists(sc):
        draws = np.asarray(d.sample(sc.size, sc.seed), dtype=float)
        for i, x in enumerate(draws):
            t.rows.append([i, v, float(x)])
        summary.append((f"{v} sample mean", float(np.mean(draws))))
    return Result([t], summary)


def _cmd_crnef(sc: Scenario) -> Result:
    p = dict(sc.params)
    d = int(p.pop("d", 0))
    if d <= 0:
        raise ConfigError("crnef needs [model] d")
    spec = _cr.crnef(sc.family, d, **p)
    n = int(sc.data.get("n", 1))
    s = sc.data.get("s")
    if s is None:
        raise ConfigError("crnef needs [data] s (vector)")
    v = sc.variants[0]
    joint = _cr.joint_fiducial_phi(spec, n, s, v, boundary=sc.boundary)
    phi = joint.sample(sc.size, sc.seed)
    mu = _cr.phi_to_mu(spec, phi)
    header = ["index"] + [f"phi_{k + 1}" for k in range(d)] + [f"mu_{k + 1}" for k in range(d)]
    t = Table("crnef", header)
    for i in range(sc.size):
        t.rows.append([i, *map(float, phi[i]), *map(float, mu[i])])
    summary = [(f"mean mu_{k + 1}", float(np.mean(mu[:, k]))) for k in range(d)]
    summary += [(f"mean phi_{k + 1}", float(np.mean(phi[:, k]))) for k in range(d)]
    return Result([t], summary)


def run_command(sc: Scenario) -> Result:
    c = sc.command
    if c == "density":
        return _cmd_curves(sc, ["density"])
    if c == "cdf":
        return _cmd_curves(sc, ["cdf"])
    if c == "curve":
        return _cmd_curves(sc, ["density", "cdf", "cc"])
    if c == "quantile":
        return _cmd_quantile(sc)
    if c == "interval":
        return _cmd_interval(sc)
    if c == "coverage":
        return _cmd_coverage(sc)
    if c == "risk":
        return _cmd_risk(sc)
    if c == "gfd":
        return _cmd_gfd(sc)
    if c == "compare-bayes":
        return _cmd_compare(sc)
    if c == "sample":
        return _cmd_sample(sc)
    if c == "crnef":
        return _cmd_crnef(sc)
    raise ConfigError(f"unknown command {c!r}")  # pragma: no cover


def output_dir(sc: Scenario, cli_out: str | None = None) -> Path:
    return Path(cli_out or sc.output or os.environ.get(OUTPUT_ENV) or ".")


def run_scenario(sc: Scenario, out: str | None = None, *, plot: bool = False, stdout=None) -> list[Path]:
    """Run a scenario, write its CSV files and print a summary table."""
    stdout = stdout or sys.stdout
    t0 = time.perf_counter()
    res = run_command(sc)
    odir = output_dir(sc, out)
    odir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in res.tables:
        suffix = "" if t.name == sc.command else "_" + t.name.split("_", 1)[-1]
        p = odir / f"{sc.name}_{sc.command}{suffix}.csv"
        with open(p, "w", newline="") as fh:
            fh.write(t.to_csv())
        paths.append(p)
    if plot:
        from .plotting import plot_table

        for t, p in zip(res.tables, list(paths)):
            png = plot_table(sc.command, t.header, t.rows, p.with_suffix(".png"))
            if png is not None:
                paths.append(png)
    width = max([len(k) for k, _ in res.summary] + [8])
    print(f"{sc.command}: {sc.name}", file=stdout)
    for k, v in res.summary:
        print(f"  {k:<{width}}  {fmt(v)}", file=stdout)
    for p in paths:
        print(f"  wrote {p}", file=stdout)
    print(f"  elapsed {time.perf_counter() - t0:.2f}s", file=stdout)
    return paths


def _error_record(exc: BaseException, command: str | None) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc), "command": command}, sort_keys=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fid", description="Fiducial and confidence distributions from scenario files.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--scenario", required=True, help="TOML scenario file")
    ap.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE", help="override, e.g. data.s=4")
    ap.add_argument("--out", default=None, help=f"output directory (default: [run] output, ${OUTPUT_ENV}, or .)")
    ap.add_argument("--plot", action="store_true", help="also write PNG plots (needs matplotlib)")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            print(_error_record(ConfigError("invalid command line"), None), file=sys.stderr)
        return int(exc.code or 0)
    try:
        sc = load_scenario(args.scenario, args.command, args.sets)
        run_scenario(sc, args.out, plot=args.plot)
    except ConfigError as exc:
        print(_error_record(exc, args.command), file=sys.stderr)
        return 2
    except (FiducialError, ValueError, ArithmeticError, KeyError, ImportError) as exc:
        print(_error_record(exc, args.command), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
