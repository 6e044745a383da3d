"""Command line runner for the experiments.

Each subcommand takes flags, an optional INI file (section named after the
subcommand, keys mirroring the flags) or both; flags win.  The merged
configuration is validated against a versioned JSON schema before anything
runs.  Artifacts are written atomically next to a manifest holding the
configuration, package versions and SHA-256 hashes.

Exit status: 0 success, 1 an experiment assertion failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import hashlib
import io
import json
import math
import os
import platform
import sys
import tempfile
from importlib import resources

import jsonschema
import numpy as np
import scipy

from . import __version__
from .errors import ConfigError, CuspedFlowError, ManifestMismatch

SCHEMA_VERSION = "1"
RANDOMIZED = ("shadow", "dense", "recur")
SUBCOMMANDS = ("geodesic", "twist", "shadow", "dense", "spectrum", "recur")

DEFAULTS = {
    "geodesic": {"backend": "hyperbolic", "start": [0.0, 1.0], "direction": [0.0, 1.0], "length": 2.0},
    "twist": {"backend": "hyperbolic"},
    "shadow": {"trials": 200, "ea_max": 0.1, "family": "polygonal"},
    "dense": {"N": [4, 8, 12], "indices": [2, 4, 8], "eps": 0.3, "eps0": 0.1, "delta1": 0.5, "delta2": 0.2},
    "spectrum": {"t_max": 12.0, "window": [8.0, 12.0], "digit_max": 4, "k_max": 16, "q_max": 30},
    "recur": {"samples": 1000, "t_horizon": 50.0, "delta": 0.2, "dt": 0.01},
}

_LISTS = {"start", "direction", "target", "ns", "N", "indices", "window"}


def _schema(name: str) -> dict:
    text = resources.files("cusped_flow").joinpath("schemas", name).read_text()
    return json.loads(text)


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# configuration


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cusped-flow", description="Geodesic flow experiments near cusps.")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, randomized=False):
        sp.add_argument("--config", help="INI file; the section named after the subcommand is read")
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--workers", type=int)
        if randomized:
            sp.add_argument("--seed", type=int)

    g = sub.add_parser("geodesic", help="integrate a geodesic or solve a chord")
    common(g)
    g.add_argument("--backend", choices=["hyperbolic", "wp_cusp_model"])
    g.add_argument("--profile", choices=["r6", "r2"])
    g.add_argument("--start", type=_floats)
    g.add_argument("--direction", type=_floats)
    g.add_argument("--target", type=_floats, help="solve the chord to this point instead of integrating")
    g.add_argument("--length", type=float)
    g.add_argument("--tol", type=float)

    t = sub.add_parser("twist", help="twist spiral family toward a cusp")
    common(t)
    t.add_argument("--backend", choices=["hyperbolic", "wp_cusp_model"])
    t.add_argument("--profile", choices=["r6", "r2"])
    t.add_argument("--ns", type=_ints)

    s = sub.add_parser("shadow", help="randomized chord shadowing trials")
    common(s, True)
    s.add_argument("--trials", type=int)
    s.add_argument("--ea-max", dest="ea_max", type=float)
    s.add_argument("--family", choices=["polygonal", "twist"])

    d = sub.add_parser("dense", help="spliced singular geodesics and chordal limits")
    common(d, True)
    d.add_argument("--N", type=_ints, help="truncations for the coverage curve")
    d.add_argument("--indices", type=_ints, help="chord depths n for p_-n p_n")
    d.add_argument("--eps", type=float)
    d.add_argument("--eps0", type=float)
    d.add_argument("--delta1", type=float)
    d.add_argument("--delta2", type=float)

    c = sub.add_parser("spectrum", help="closed geodesic census and symbolic dynamics")
    common(c)
    c.add_argument("--t-max", dest="t_max", type=float)
    c.add_argument("--window", type=_floats)
    c.add_argument("--digit-max", dest="digit_max", type=int)
    c.add_argument("--k-max", dest="k_max", type=int)
    c.add_argument("--q-max", dest="q_max", type=int)

    r = sub.add_parser("recur", help="Monte Carlo return times")
    common(r, True)
    r.add_argument("--samples", type=int)
    r.add_argument("--t-horizon", dest="t_horizon", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--dt", type=float)

    rep = sub.add_parser("report", help="merge manifests of earlier runs")
    rep.add_argument("inputs", nargs="*", help="run directories or manifest files")
    rep.add_argument("--out-dir", dest="out_dir")
    return p


def _coerce(key: str, raw: str, props: dict):
    typ = props.get(key, {}).get("type")
    if key in _LISTS:
        item = props[key]["items"]["type"]
        return _ints(raw) if item == "integer" else _floats(raw)
    if typ == "integer":
        return int(raw)
    if typ == "number":
        return float(raw)
    return raw.strip()


def read_ini(path: str, subcommand: str) -> dict:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if not cp.has_section(subcommand):
        return {}
    props = _schema("config.schema.json")["properties"]
    out = {}
    for k, v in cp.items(subcommand):
        key = k.replace("-", "_")
        try:
            out[key] = _coerce(key, v, props)
        except ValueError as exc:
            raise ConfigError(f"{subcommand}.{key}: {exc}") from None
    return out


def make_config(args: argparse.Namespace) -> dict:
    sub = args.subcommand
    cfg = {"schema_version": SCHEMA_VERSION, "subcommand": sub}
    cfg.update(DEFAULTS.get(sub, {}))
    if getattr(args, "config", None):
        cfg.update(read_ini(args.config, sub))
    for k, v in vars(args).items():
        if k in ("config", "subcommand") or v is None:
            continue
        cfg[k] = v
    env = os.environ.get("CUSPED_FLOW_WORKERS")
    if env:
        try:
            cfg["workers"] = int(env)
        except ValueError:
            raise ConfigError(f"CUSPED_FLOW_WORKERS: not an integer: {env!r}") from None
    cfg.setdefault("out_dir", os.path.join("out", sub))
    return cfg


def validate_config(cfg: dict) -> dict:
    """Schema check plus cross-field rules; errors name the offending field."""
    validator = jsonschema.Draft7Validator(_schema("config.schema.json"))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            path = ".".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"{path}: {e.message}")
        raise ConfigError("; ".join(msgs))
    if "delta1" in cfg or "delta2" in cfg:
        d1, d2 = cfg.get("delta1"), cfg.get("delta2")
        if d1 is None or d2 is None or not d1 > 2 * d2 > 0:
            raise ConfigError(f"delta1, delta2: need delta1 > 2*delta2 > 0, got {d1}, {d2}")
    if cfg["subcommand"] in RANDOMIZED and "seed" not in cfg:
        raise ConfigError("seed: required for randomized runs")
    return cfg


# ---------------------------------------------------------------------------
# artifacts


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _plain(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> str:
    """Write via a temporary file in the same directory and rename; returns the SHA-256."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def versions() -> dict:
    return {"cusped_flow": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


class Run:
    """Collects artifacts and assertions for one experiment."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.artifacts: dict[str, str] = {}
        self.texts: dict[str, str] = {}
        self.assertions: dict[str, bool] = {}
        self.summary = ""

    def add(self, name: str, text: str):
        self.texts[name] = text

    def check(self, name: str, ok) -> None:
        self.assertions[name] = bool(ok)

    @property
    def status(self) -> int:
        return 0 if all(self.assertions.values()) else 1

    def commit(self) -> str:
        out = self.cfg["out_dir"]
        for name in sorted(self.texts):
            self.artifacts[name] = atomic_write(os.path.join(out, name), self.texts[name])
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.cfg["subcommand"],
            "config": self.cfg,
            "versions": versions(),
            "artifacts": self.artifacts,
            "assertions": self.assertions,
            "summary": self.summary,
            "status": self.status,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        path = os.path.join(out, "manifest.json")
        atomic_write(path, dumps(manifest))
        return path


# ---------------------------------------------------------------------------
# subcommands


def _backend(cfg):
    from .metric_engine import get_backend

    name = cfg.get("backend", "hyperbolic")
    if name == "wp_cusp_model":
        return get_backend(name, profile=cfg.get("profile", "r6"))
    return get_backend(name)


def run_geodesic(cfg: dict, run: Run):
    from .metric_engine import TOL_BVP, chord_bvp, integrate_geodesic

    backend = _backend(cfg)
    if "target" in cfg:
        tol = cfg.get("tol", TOL_BVP)
        res = chord_bvp(backend, tuple(cfg["start"]), tuple(cfg["target"]), tol=tol)
        path = res.segment
        info = {"endpoint_error": res.endpoint_error, "iterations": res.iterations, "method": res.method}
        run.check("endpoint_error", res.endpoint_error <= tol)
    else:
        path = integrate_geodesic(backend, tuple(cfg["start"]), np.array(cfg["direction"], dtype=float),
                                  cfg["length"])
        info = {}
        run.check("unit_speed", path.speed_residual(backend) <= 1e-8)
    body = path.to_json()
    body.update(info)
    run.add("path.csv", path.to_csv())
    run.add("path.json", dumps(body))
    run.summary = f"geodesic length {path.total_length:.10g} cusp={path.terminated_at_cusp}"


def run_twist(cfg: dict, run: Run):
    from .concatenation import twist_family
    from .hyp_geometry import BoundaryPoint, HalfPlanePoint

    backend = _backend(cfg)
    hyper = cfg.get("backend", "hyperbolic") == "hyperbolic"
    ns = cfg.get("ns") or (list(range(1, 65)) if hyper else [0, 1, 2, 4, 8, 16, 32, 64])
    if hyper:
        fam = twist_family(BoundaryPoint.infinity(), HalfPlanePoint(0.0, 1.0), HalfPlanePoint(0.0, 1.0), ns, backend)
        err = max(abs(a.initial_angle_gap - math.atan(2.0 / a.n)) for a in fam.analyses if a.n > 0)
        run.check("closed_form_gap", err <= 1e-6)
    else:
        fam = twist_family(None, (1.0, 0.0), (1.0, 0.0), ns, backend)
        err = None
    last = fam.analyses[-1]
    tail = [max(a.initial_angle_gap, a.terminal_angle_gap) for a in fam.analyses if a.n >= fam.n0]
    run.check("monotone_beyond_n0", all(b <= a + 1e-12 for a, b in zip(tail, tail[1:])))
    if not hyper:
        run.check("final_gap_below_0.02", max(last.initial_angle_gap, last.terminal_angle_gap) < 0.02)
    run.check("length_bound", fam.L0 is not None and fam.L0 > 0 and fam.length_bound_holds())
    rows = fam.rows()
    run.add("twist.csv", csv_text(["n", "initial_gap", "terminal_gap", "chord_length", "min_ell"],
                                  [[r["n"], r["initial_gap"], r["terminal_gap"], r["chord_length"], r["min_ell"]]
                                   for r in rows]))
    run.add("twist.json", dumps({"n0": fam.n0, "L0": fam.L0, "max_closed_form_error": err, "rows": rows}))
    run.summary = f"twist n0={fam.n0} L0={fam.L0} gap(n_max)={last.initial_angle_gap:.6g}"


def run_shadow(cfg: dict, run: Run):
    from .shadowing import shadowing_experiment

    summ = shadowing_experiment(cfg["trials"], cfg["seed"], cfg["ea_max"], cfg["family"], cfg.get("workers", 1))
    run.check("bound_all_trials", summ.pass_rate == 1.0)
    run.check("derivative_all_trials", summ.derivative_pass_rate == 1.0)
    run.check("positive_slope", summ.slope is not None and summ.slope > 0)
    keys = ["trial", "ea_total", "max_F", "bound", "pass", "max_abs_dF", "derivative_ok", "error"]
    run.add("shadow_rows.csv", csv_text(keys, [[r.as_dict()[k] for k in keys] for r in summ.rows]))
    run.add("shadow_summary.json", dumps(summ.to_json()))
    run.summary = f"shadow pass_rate={summ.pass_rate} slope={summ.slope}"


def run_dense(cfg: dict, run: Run):
    from .dense_limit import (ConcatenationPlan, build_concatenation, chord_between, chord_tangent_samples,
                              chordal_limit, check_no_degeneration, coverage_grid, density_coverage,
                              singular_geodesic_sequence)

    Ns = sorted(cfg["N"])
    idx = sorted(cfg["indices"])
    count = max(max(Ns), 2 * max(idx) + 1)
    plan = ConcatenationPlan(tuple(singular_geodesic_sequence(count, cfg["seed"])), cfg["delta1"], cfg["delta2"],
                             cfg["eps0"])
    grid = coverage_grid()
    cov, samples = [], None
    for N in Ns:
        C = build_concatenation(plan, N)
        samples = chord_tangent_samples(C, chord_between(C, C.lo, C.hi)) if N > 1 else np.zeros((0, 3))
        cov.append({"N": N, "coverage": density_coverage(samples, cfg["eps"], grid), "ea_total": C.ea_total,
                    "samples": int(len(samples))})
    C = build_concatenation(plan, 2 * max(idx) + 1)
    lim = chordal_limit(C, idx)
    deg = check_no_degeneration(C, lim.chords)
    c = [r["coverage"] for r in cov]
    g = list(lim.cauchy_gaps)
    w = list(lim.window_max_F)
    run.check("coverage_increasing", all(b > a for a, b in zip(c, c[1:])))
    run.check("cauchy_halving", len(g) >= 2 and g[-1] <= 0.5 * g[-2])
    run.check("window_decreasing", all(b < a for a, b in zip(w, w[1:])))
    run.check("derivative_bound", all(r.passed for r in lim.derivative_reports))
    run.check("no_degeneration", deg["passed"])
    run.add("dense.json", dumps({"coverage": cov, "limit": lim.to_json(), "degeneration": deg,
                                 "concatenation": C.to_json()}))
    run.add("tangents.csv", csv_text(["x", "y", "dir"], samples.tolist()))
    run.summary = f"dense coverage={[round(v, 4) for v in c]} gaps={[float(f'{v:.3g}') for v in g]}"


def run_spectrum(cfg: dict, run: Run):
    from . import spectrum as sp

    census = sp.enumerate_closed_geodesics(cfg["t_max"])
    lines = "".join(json.dumps(_plain(c.to_json()), sort_keys=True) + "\n" for c in census.classes)
    run.add("census.jsonl", lines)
    Ts = np.round(np.arange(0.0, cfg["t_max"] + 1e-9, 0.05), 10)
    run.add("counts.csv", csv_text(["T", "N"], [[float(t), int(n)] for t, n in zip(Ts, census.counts(Ts))]))
    out = {"classes": len(census), "T_max": cfg["t_max"]}
    if len(census):
        shortest = float(census.lengths[0])
        out["shortest_length"] = shortest
        run.check("shortest_length", abs(shortest - 2 * math.acosh(1.5)) <= 1e-9)
        run.check("census_matches_forms", census.keys() == sp.classes_by_forms(sp.trace_bound(cfg["t_max"])))
    try:
        fit = sp.growth_rate_fit(census, tuple(cfg["window"]))
        out["growth"] = {"slope": fit.slope, "stderr": fit.stderr, "window": list(fit.window)}
        run.check("growth_slope", abs(fit.slope - 1.0) <= 0.15)
    except CuspedFlowError as exc:
        out["growth"] = {"error": str(exc)}
    ent = [sp.bounded_cf_subshift(n) for n in range(1, cfg["digit_max"] + 1)]
    out["entropy"] = {str(s.digit_bound): s.entropy for s in ent}
    run.check("entropy_increasing", all(b.entropy > a.entropy for a, b in zip(ent, ent[1:])))
    k = cfg["k_max"]
    out["periodic_rate"] = {str(s.digit_bound): math.log(s.periodic_points(k)) / k for s in ent if s.digit_bound > 1}
    heights = {}
    for n in range(1, cfg["digit_max"] + 1):
        cls = sp.closed_geodesics_in_horseshoe(n, min(k, 8))
        heights[str(n)] = {"max_height": max(sp.axis_height(c.cf_period) for c in cls), "bound": sp.height_bound(n),
                           "classes": len(cls)}
    out["horseshoe"] = heights
    run.check("horseshoe_heights", all(v["max_height"] <= v["bound"] + 1e-9 for v in heights.values()))
    simple = sp.simple_geodesic_census(cfg["q_max"])
    h_star = max(s.height for s in simple)
    ns = sp.nonsimple_sample(20, 0)
    out["simple"] = {"count": len(simple), "H_star": h_star, "nonsimple_above": sum(s.height > h_star for s in ns)}
    run.check("simple_bounded", h_star <= sp.H_STAR + 1e-9 and out["simple"]["nonsimple_above"] >= 10)
    run.add("spectrum.json", dumps(out))
    run.summary = f"spectrum classes={len(census)} slope={out.get('growth', {}).get('slope')}"


def run_recur(cfg: dict, run: Run):
    from .spectrum import recurrence_mc, return_times, trace3_tangent

    stats = recurrence_mc(None, cfg["samples"], cfg["t_horizon"], cfg["delta"], cfg["seed"], cfg["dt"])
    Ts = np.linspace(0.0, cfg["t_horizon"], 51)
    curve = stats.curve(Ts)
    z, th = trace3_tangent()
    t3 = float(return_times(np.array([z]), np.array([th]), 5.0, cfg["delta"], cfg["dt"])[0])
    body = stats.to_json()
    body["curve"] = curve
    body["trace3_return"] = t3
    run.check("fraction_at_horizon", stats.fraction(cfg["t_horizon"]) >= 0.9)
    run.check("monotone", all(b[1] >= a[1] for a, b in zip(curve, curve[1:])))
    run.check("trace3_return", abs(t3 - 2 * math.acosh(1.5)) <= 1e-3)
    run.add("returns.csv", csv_text(["sample", "return_time"], [[i, float(t)] for i, t in enumerate(stats.return_times)]))
    run.add("recur.json", dumps(body))
    run.summary = f"recur fraction={body['recurrent_fraction']} trace3={t3:.6f}"


RUNNERS = {"geodesic": run_geodesic, "twist": run_twist, "shadow": run_shadow, "dense": run_dense,
           "spectrum": run_spectrum, "recur": run_recur}


def run(cfg: dict) -> int:
    """Validate, execute and write artifacts; returns the exit status."""
    validate_config(cfg)
    r = Run(cfg)
    RUNNERS[cfg["subcommand"]](cfg, r)
    r.commit()
    failed = [k for k, v in r.assertions.items() if not v]
    print(r.summary + (f" FAILED: {','.join(failed)}" if failed else " ok"))
    return r.status


# ---------------------------------------------------------------------------
# report


def _load_manifest(path: str) -> dict:
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    try:
        with open(path, encoding="utf-8") as fh:
            m = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestMismatch(f"{path}: {exc}") from None
    if not isinstance(m, dict) or m.get("schema_version") != SCHEMA_VERSION:
        raise ManifestMismatch(f"{path}: schema version {m.get('schema_version') if isinstance(m, dict) else None!r}"
                               f" is not {SCHEMA_VERSION}")
    try:
        jsonschema.validate(m, _schema("manifest.schema.json"))
    except jsonschema.ValidationError as exc:
        raise ManifestMismatch(f"{path}: {exc.message}") from None
    m["_dir"] = os.path.dirname(os.path.abspath(path))
    return m


def report(inputs, out_dir: str | None = None) -> tuple[int, str]:
    """Merge manifests into one summary; returns (status, text)."""
    manifests = [_load_manifest(p) for p in inputs]
    if not manifests:
        text = "warning: no inputs\n"
        if out_dir:
            atomic_write(os.path.join(out_dir, "report.txt"), text)
            atomic_write(os.path.join(out_dir, "report.json"), dumps({"runs": [], "failed": []}))
        return 0, text
    manifests.sort(key=lambda m: (m["subcommand"], dumps(m["config"])))
    failed = []
    lines = []
    shadow_rows, coverage = [], []
    for m in manifests:
        bad = sorted(k for k, v in m["assertions"].items() if not v)
        failed += [f"{m['subcommand']}:{k}" for k in bad]
        lines.append(f"{m['subcommand']:<9} status={m['status']} {m.get('summary', '')}" +
                     (f"  FAILED {','.join(bad)}" if bad else ""))
        if m["subcommand"] == "shadow":
            with open(os.path.join(m["_dir"], "shadow_rows.csv"), encoding="utf-8") as fh:
                shadow_rows += [float(r["max_F"]) for r in csv.DictReader(fh) if r["max_F"] not in ("", "nan")]
        if m["subcommand"] == "dense":
            with open(os.path.join(m["_dir"], "dense.json"), encoding="utf-8") as fh:
                coverage += json.load(fh)["coverage"]
    body = {"runs": [{"subcommand": m["subcommand"], "status": m["status"], "summary": m.get("summary", "")}
                     for m in manifests], "failed": failed}
    if shadow_rows:
        q = np.quantile(np.array(shadow_rows), [0.05, 0.5, 0.95, 1.0])
        body["shadow_quantiles"] = dict(zip(["q05", "q50", "q95", "max"], [float(v) for v in q]))
        body["shadow_trials"] = len(shadow_rows)
        lines.append("max_F quantiles: " + " ".join(f"{k}={v:.6g}" for k, v in body["shadow_quantiles"].items()))
    if coverage:
        table = sorted({(c["N"], c["coverage"]) for c in coverage})
        body["coverage_vs_N"] = [{"N": n, "coverage": v} for n, v in table]
        lines.append("coverage vs N: " + " ".join(f"{n}:{v:.4f}" for n, v in table))
    if failed:
        lines.append("FAILED assertions: " + ", ".join(failed))
    text = "\n".join(lines) + "\n"
    if out_dir:
        atomic_write(os.path.join(out_dir, "report.txt"), text)
        atomic_write(os.path.join(out_dir, "report.json"), dumps(body))
    return 0, text


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        if args.subcommand == "report":
            status, text = report(args.inputs, args.out_dir)
            sys.stdout.write(text)
            return status
        return run(make_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ManifestMismatch as exc:
        print(f"manifest mismatch: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
