"""Command-line front end.

Usage::

    growthnet exact --m 100 --class 1.0:50 --out result.json
    growthnet compare --config run.toml --seed 3
    growthnet fleet --route-load 100 --locations 10 --alpha 0.9

Configuration files are TOML; see the README for the schema.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .applications import (BottleneckSystem, FleetProblem, bottleneck_marginal,
                           fleet_sizing, service_level_details)
from .asymptotic import asymptotic_result
from .errors import CapacityError, GrowthNetError, RegimeError, ValidationError
from .exact import DEFAULT_CELL_CAP, DEFAULT_STATE_CAP, exact_marginals
from .model import Regime, RegimeThresholds, build_model, scale
from .simulate import SimConfig, compare_distributions, gillespie_run

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = "1.0"
METHODS = ("exact", "asymptotic", "simulate", "compare", "fleet", "bottleneck")
EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION, EXIT_CAPACITY, EXIT_REGIME = 0, 1, 2, 3, 4

_REGIMES = {
    "auto": None,
    "linear": Regime.LINEAR_BOTTLENECK,
    "overloaded": Regime.SUBLINEAR_OVERLOADED,
    "underloaded": Regime.SUBLINEAR_UNDERLOADED,
}


class ConfigError(ValidationError):
    """Config could not be read or parsed; nothing is written in that case."""


# ---------------------------------------------------------------- config

def _parse_class(text: str) -> dict:
    try:
        kappa, count = text.split(":")
        return {"kappa": float(kappa), "count": int(count)}
    except ValueError as exc:
        raise ConfigError(f"--class expects KAPPA:COUNT, got {text!r}") from exc


def _load_file(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge the config file with command-line overrides into one plain dict."""
    cfg = _load_file(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a table")
    cfg = {k: (dict(v) if isinstance(v, dict) else v) for k, v in cfg.items()}
    for section in ("model", "regime", "simulation", "output", "caps", "fleet", "bottleneck"):
        if not isinstance(cfg.setdefault(section, {}), dict):
            raise ConfigError(f"[{section}] must be a table")
    cfg["method"] = args.method

    if args.m is not None:
        cfg["model"]["m"] = args.m
    if args.classes:
        cfg["model"]["classes"] = [_parse_class(c) for c in args.classes]
    if args.regime is not None:
        cfg["regime"]["mode"] = args.regime
    cfg["regime"].setdefault("mode", "auto")
    if cfg["regime"]["mode"] not in _REGIMES:
        raise ConfigError(f"regime mode must be one of {sorted(_REGIMES)}")
    if args.seed is not None:
        cfg["simulation"]["seed"] = args.seed
    if args.events is not None:
        cfg["simulation"]["events"] = args.events
    if args.out is not None:
        cfg["output"]["path"] = args.out
    if args.format is not None:
        cfg["output"]["format"] = args.format
    cfg["output"].setdefault("format", "json")
    if cfg["output"]["format"] not in ("json", "csv"):
        raise ConfigError("output format must be json or csv")
    cfg["caps"].setdefault("cells", DEFAULT_CELL_CAP)
    cfg["caps"].setdefault("states", DEFAULT_STATE_CAP)

    fleet = cfg["fleet"]
    for key, val in (("route_load", args.route_load), ("locations", args.locations),
                     ("target_alpha", args.alpha), ("m", args.fleet_m)):
        if val is not None:
            fleet[key] = val
    bott = cfg["bottleneck"]
    for key, val in (("m", args.m if args.method == "bottleneck" else None),
                     ("poisson_means", args.poisson_means),
                     ("geo_utilizations", args.utilizations), ("node", args.node)):
        if val is not None:
            bott[key] = val
    return cfg


def _model_from(cfg: dict):
    spec = cfg["model"]
    if "m" not in spec or "classes" not in spec:
        raise ValidationError("model needs m and at least one class")
    try:
        pairs = [(c["kappa"], c["count"]) for c in spec["classes"]]
    except (TypeError, KeyError) as exc:
        raise ValidationError("each class needs kappa and count") from exc
    return build_model(spec["m"], pairs)


def _sim_config_from(cfg: dict) -> SimConfig:
    s = cfg["simulation"]
    lambdas = s.get("class_lambdas")
    return SimConfig(
        seed=int(s.get("seed", 0)),
        events=int(s.get("events", 1_000_000)),
        burnin_events=int(s.get("burnin_events", 10_000)),
        lambda_scale=float(s.get("lambda_scale", 1.0)),
        class_lambdas=tuple(lambdas) if lambdas else None,
    )


def _thresholds_from(cfg: dict) -> RegimeThresholds:
    r = cfg["regime"]
    return RegimeThresholds(linear=float(r.get("linear_threshold", 0.05)),
                            count=int(r.get("count_threshold", 10)))


# ---------------------------------------------------------------- serialization

def _finite_or_none(x: float):
    return None if not math.isfinite(x) else float(x)


def pmf_to_dict(log_p, residual: float | None = None) -> dict:
    log_p = np.asarray(log_p, dtype=float)
    p = np.exp(log_p)
    out = {
        "support_max": len(log_p) - 1,
        "probability": p.tolist(),
        "log_probability": [_finite_or_none(v) for v in log_p],
        "mean": float(np.dot(np.arange(len(p)), p)),
    }
    if residual is not None:
        out["residual"] = residual
    return out


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(p, dtype=float))


def _exact_result(model, cfg):
    ex = exact_marginals(model, cell_cap=int(cfg["caps"]["cells"]))
    return ex, {
        "log_partition": ex.log_partition,
        "free_pool": pmf_to_dict(ex.free_pool.log_p, ex.free_pool.residual),
        "filament": [dict(pmf_to_dict(p.log_p, p.residual), **{"class": i + 1,
                                                               "kappa": c.kappa,
                                                               "count": c.count})
                     for i, (c, p) in enumerate(zip(model.classes, ex.filament))],
        "diagnostics": {"mean_conservation_gap": ex.mean_conservation_gap(),
                        "flow_conservation_gaps": ex.flow_conservation_gaps()},
    }


def _asymptotic_result(model, cfg):
    res = asymptotic_result(model, _REGIMES[cfg["regime"]["mode"]], _thresholds_from(cfg))
    params = scale(model)
    out = res.to_dict()
    # limit laws evaluated on 0..m so they line up with the exact marginals
    out["per_class_pmf"] = [law.pmf(model.m).tolist() for law in res.per_class_law]
    out["scaled_params"] = {"kbar1": params.kbar1, "fbar": list(params.fbar),
                            "varrho": list(params.varrho), "sbar": params.sbar}
    return res, out


def _tv_with_tail(exact_p: np.ndarray, law_p: np.ndarray) -> tuple[float, float]:
    """TV between an exact pmf on 0..m and a limit law whose mass may extend past m."""
    diff = np.abs(exact_p - law_p)
    tail = max(0.0, 1.0 - float(law_p.sum()))
    return 0.5 * (float(diff.sum()) + tail), float(max(diff.max(), tail))


def _compare(model, cfg):
    ex, _ = _exact_result(model, cfg)
    rows, skipped = [], {}
    names = ["pool"] + [f"class {i + 1}" for i in range(model.K)]
    exact_pmfs = [ex.free_pool.p] + [p.p for p in ex.filament]
    for name, p in zip(names, exact_pmfs):
        rows.append({"method": "exact", "quantity": name,
                     "mean": float(np.dot(np.arange(len(p)), p)),
                     "tv_vs_exact": 0.0, "max_abs_vs_exact": 0.0})
    try:
        res, _ = _asymptotic_result(model, cfg)
    except RegimeError as exc:
        skipped["asymptotic"] = str(exc)
    else:
        rows.append({"method": "asymptotic", "quantity": "pool",
                     "mean": res.pool_fraction * model.m,
                     "tv_vs_exact": None, "max_abs_vs_exact": None})
        for name, law, p in zip(names[1:], res.per_class_law, exact_pmfs[1:]):
            tv, mx = _tv_with_tail(p, law.pmf(model.m))
            rows.append({"method": "asymptotic", "quantity": name, "mean": law.mean(),
                         "tv_vs_exact": tv, "max_abs_vs_exact": mx})
    sim_cfg = _sim_config_from(cfg)
    est = gillespie_run(model, sim_cfg)
    for name, s, p in zip(names, [est.free_pool_pmf, *est.filament_pmf], exact_pmfs):
        tv, mx = compare_distributions(s, p / p.sum())
        rows.append({"method": "simulate", "quantity": name,
                     "mean": float(np.dot(np.arange(len(s)), s)),
                     "tv_vs_exact": tv, "max_abs_vs_exact": mx})
    return {"rows": rows, "skipped": skipped, "simulation": sim_cfg.to_dict(),
            "rng_algorithm": est.rng_algorithm}


def _fleet(cfg):
    fl = cfg["fleet"]
    try:
        load = float(fl["route_load"])
        f = int(fl["locations"])
    except KeyError as exc:
        raise ValidationError(f"fleet needs {exc.args[0]}") from exc
    out = {}
    if "target_alpha" in fl:
        sizing = fleet_sizing(FleetProblem(load, f, float(fl["target_alpha"])))
        out["sizing"] = sizing.to_dict()
        m = sizing.m
    elif "m" in fl:
        m = int(fl["m"])
    else:
        raise ValidationError("fleet needs target_alpha or m")
    out["m"] = m
    out["service_level"] = service_level_details(m, load, f).to_dict()
    if load > 0 and (m + 1) * 2 <= int(cfg["caps"]["cells"]):
        from .exact import marginal_filament
        pmf = marginal_filament(build_model(m, [(load, f)]), 0,
                                cell_cap=int(cfg["caps"]["cells"]))
        out["exact_service_level"] = pmf.prob_positive()
    return out


def _bottleneck(cfg):
    b = cfg["bottleneck"]
    try:
        system = BottleneckSystem(int(b["m"]), tuple(b.get("poisson_means", ())),
                                  tuple(b["geo_utilizations"]))
        node = int(b.get("node", 2))
    except KeyError as exc:
        raise ValidationError(f"bottleneck needs {exc.args[0]}") from exc
    pmf = bottleneck_marginal(system, node, cell_cap=int(cfg["caps"]["cells"]))
    return {"node": node, "pmf": pmf_to_dict(pmf.log_p, pmf.residual),
            "open_network_mean": system.geo_utilizations[node - 2]
            / (1 - system.geo_utilizations[node - 2])}


def execute(cfg: dict) -> dict:
    """Run the configured method and return the ``result`` block."""
    method = cfg["method"]
    if method == "fleet":
        return _fleet(cfg)
    if method == "bottleneck":
        return _bottleneck(cfg)
    model = _model_from(cfg)
    if method == "exact":
        return _exact_result(model, cfg)[1]
    if method == "asymptotic":
        return _asymptotic_result(model, cfg)[1]
    if method == "simulate":
        return gillespie_run(model, _sim_config_from(cfg)).to_dict()
    if method == "compare":
        return _compare(model, cfg)
    raise ValidationError(f"unknown method {method!r}")


def _csv_text(method: str, result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")

    def pmf_rows(name, probs):
        for v, p in enumerate(probs):
            lp = math.log(p) if p > 0 else "-inf"
            w.writerow([name, v, repr(float(p)), lp if isinstance(lp, str) else repr(lp)])

    if method == "compare":
        cols = ["method", "quantity", "mean", "tv_vs_exact", "max_abs_vs_exact"]
        w.writerow(cols)
        for row in result["rows"]:
            w.writerow(["" if row[c] is None else row[c] for c in cols])
    elif method == "fleet":
        w.writerow(["key", "value"])
        flat = {"m": result["m"], **{f"service_level.{k}": v
                                     for k, v in result["service_level"].items()}}
        flat.update({f"sizing.{k}": v for k, v in result.get("sizing", {}).items()})
        if "exact_service_level" in result:
            flat["exact_service_level"] = result["exact_service_level"]
        for k, v in flat.items():
            w.writerow([k, "" if v is None else v])
    else:
        w.writerow(["distribution", "value", "probability", "log_probability"])
        if method == "exact":
            pmf_rows("pool", result["free_pool"]["probability"])
            for fil in result["filament"]:
                pmf_rows(f"class {fil['class']}", fil["probability"])
        elif method == "simulate":
            pmf_rows("pool", result["free_pool_pmf"])
            for i, p in enumerate(result["filament_pmf"]):
                pmf_rows(f"class {i + 1}", p)
        elif method == "bottleneck":
            pmf_rows(f"node {result['node']}", result["pmf"]["probability"])
        elif method == "asymptotic":
            for i, probs in enumerate(result["per_class_pmf"]):
                pmf_rows(f"class {i + 1}", probs)
    return buf.getvalue()


def _document(cfg: dict, **payload) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "method": cfg.get("method"),
        "config": cfg,
        "backend": BACKEND,
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    doc.update(payload)
    return doc


def _write(cfg: dict, doc: dict) -> None:
    path = cfg["output"].get("path")
    fmt = cfg["output"]["format"]
    if fmt == "csv" and "result" in doc:
        text = _csv_text(cfg["method"], doc["result"])
    else:
        text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def load_schema() -> dict:
    return json.loads((Path(__file__).with_name("output_schema.json")).read_text())


def validate_output(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match the output schema."""
    import jsonschema

    jsonschema.validate(doc, load_schema())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="growthnet", description=__doc__.split("\n")[0])
    p.add_argument("method", choices=METHODS)
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--seed", type=int)
    p.add_argument("--events", type=int, help="simulated events after burn-in")
    p.add_argument("--regime", choices=sorted(_REGIMES))
    p.add_argument("--m", type=int, help="number of monomers (customers)")
    p.add_argument("--class", dest="classes", action="append", metavar="KAPPA:COUNT")
    g = p.add_argument_group("fleet")
    g.add_argument("--route-load", type=float)
    g.add_argument("--locations", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--fleet-m", type=int, help="evaluate the service level of this fleet size")
    g = p.add_argument_group("bottleneck")
    g.add_argument("--poisson-means", type=float, nargs="*")
    g.add_argument("--utilizations", type=float, nargs="*")
    g.add_argument("--node", type=int)
    return p


def run(cfg: dict) -> int:
    """Execute a resolved config, writing artifacts; returns the exit code."""
    try:
        result = execute(cfg)
    except GrowthNetError as exc:
        if isinstance(exc, CapacityError):
            code = EXIT_CAPACITY
        elif isinstance(exc, RegimeError):
            code = EXIT_REGIME
        elif isinstance(exc, ValidationError):
            code = EXIT_VALIDATION
        else:
            code = EXIT_INTERNAL
        sys.stderr.write(f"growthnet: error: {exc}\n")
        if cfg["output"].get("path"):
            doc = _document(cfg, error={"type": type(exc).__name__, "message": str(exc),
                                        "exit_code": code})
            Path(cfg["output"]["path"]).write_text(
                json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return code
    _write(cfg, _document(cfg, result=result))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ValidationError as exc:
        sys.stderr.write(f"growthnet: error: {exc}\n")
        return EXIT_VALIDATION
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
