"""Scenario configuration: a YAML document per scenario.

Validation errors carry the line of the offending key, e.g.
``fig2.yaml:7: methods: unknown method 'exact'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .channel import (InputEnsemble, SimoSpec, autocorrelation, block_fading_siso,
                      enum_budget, ensemble_oofsk, ensemble_qpsk_block, ensemble_ternary_iid,
                      receive_correlation, simo_block_law)
from .report import Method

PRESETS = ("fig2", "fig3")

MODELS = ("block-siso", "simo-spread")
ENSEMBLES = ("qpsk-block", "oofsk", "ternary-iid")
ESTIMATORS = ("mc", "qmc", "quadrature")
SIMO_ONLY = {Method.IID_CLOSED_FORM, Method.UPPER_BOUND_PROP1}
NEEDS_ENSEMBLE = {Method.EXACT_ENUM, Method.LOWER_BOUND, Method.QUADRATIC, Method.UNQUANTIZED_QUADRATIC}


class ConfigError(ValueError):
    def __init__(self, message, line=None, source="<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass
class ScenarioConfig:
    name: str
    model: dict
    ensemble: Optional[dict]
    snr_grid: list
    methods: list
    samples: int = 100_000
    seed: Optional[int] = None
    estimator: str = "mc"
    quad_order: int = 32
    sweep: Optional[dict] = None
    output_path: Optional[str] = None
    output_format: str = "csv"
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def is_sweep(self) -> bool:
        return self.sweep is not None

    def needs_seed(self) -> bool:
        if self.is_sweep:
            return False
        if Method.EXACT_ENUM in self.methods and self.estimator in ("mc", "qmc"):
            return True
        return Method.LOWER_BOUND in self.methods and self.model["kind"] == "simo-spread"


def _line_index(node, prefix=(), out=None):
    # map key paths to 1-based line numbers
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = k.start_mark.line + 1
            _line_index(v, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out[prefix + (i,)] = v.start_mark.line + 1
            _line_index(v, prefix + (i,), out)
    return out


class _Reader:
    def __init__(self, data, lines, source):
        self.data, self.lines, self.source = data, lines, source

    def fail(self, path, message):
        line = None
        for i in range(len(path), 0, -1):
            if tuple(path[:i]) in self.lines:
                line = self.lines[tuple(path[:i])]
                break
        label = ".".join(str(p) for p in path)
        raise ConfigError(f"{label}: {message}" if label else message, line, self.source)

    def get(self, path, default=KeyError):
        cur = self.data
        for p in path:
            if isinstance(cur, list) and isinstance(p, int) and p < len(cur):
                cur = cur[p]
                continue
            if not isinstance(cur, dict) or p not in cur:
                if default is KeyError:
                    self.fail(path[:-1] if len(path) > 1 else path, f"missing required key {path[-1]!r}")
                return default
            cur = cur[p]
        return cur

    def number(self, path, default=KeyError, lo=None, integer=False):
        v = self.get(path, default)
        if v is default and default is not KeyError:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {v!r}")
        if integer and int(v) != v:
            self.fail(path, f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            self.fail(path, f"must be >= {lo}, got {v}")
        return int(v) if integer else float(v)

    def choice(self, path, options, default=KeyError):
        v = self.get(path, default)
        if v not in options:
            self.fail(path, f"expected one of {', '.join(options)}, got {v!r}")
        return v


def _grid(reader, path):
    v = reader.get(path)
    if isinstance(v, dict):
        if set(v) == {"logspace"} and isinstance(v["logspace"], list) and len(v["logspace"]) == 3:
            a, b, k = v["logspace"]
            return [float(x) for x in np.logspace(a, b, int(k))]
        if set(v) == {"linspace"} and isinstance(v["linspace"], list) and len(v["linspace"]) == 3:
            a, b, k = v["linspace"]
            return [float(x) for x in np.linspace(a, b, int(k))]
        reader.fail(path, "grid must be a list or {linspace|logspace: [start, stop, count]}")
    if not isinstance(v, list):
        reader.fail(path, "expected a list of numbers")
    if not v:
        reader.fail(path, "grid must not be empty")
    for i in range(len(v)):
        reader.number(path + (i,), lo=0.0)
    return [float(x) for x in v]


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", 1, source)
    rd = _Reader(data, _line_index(node), source)
    known = {"name", "model", "ensemble", "snr_grid", "methods", "mc", "quadrature", "sweep", "output"}
    for key in data:
        if key not in known:
            rd.fail((key,), "unknown key")

    name = str(data.get("name", Path(source).stem))
    out = data.get("output", {}) or {}
    output_path = out.get("path") if isinstance(out, dict) else None
    fmt = rd.choice(("output", "format"), ("csv", "json"), "csv") if "format" in out else "csv"

    if "sweep" in data:
        sweep = {
            "kind": rd.choice(("sweep", "kind"), ("ratio",)),
            "beta": rd.number(("sweep", "beta"), lo=1.0),
            "T": [rd.number(("sweep", "T", i), lo=1, integer=True) for i in range(len(rd.get(("sweep", "T"))))],
            "sigma_over_mu": _grid(rd, ("sweep", "sigma_over_mu")),
            "c": rd.number(("sweep", "c"), 0.9),
        }
        if not sweep["T"]:
            rd.fail(("sweep", "T"), "must list at least one tap count")
        return ScenarioConfig(name, {"kind": "simo-spread"}, None, [], [], sweep=sweep,
                              output_path=output_path, output_format=fmt, raw=data)

    model = _parse_model(rd)
    methods_raw = rd.get(("methods",))
    if not isinstance(methods_raw, list) or not methods_raw:
        rd.fail(("methods",), "expected a non-empty list of methods")
    methods = []
    for i, m in enumerate(methods_raw):
        try:
            methods.append(Method(m))
        except ValueError:
            rd.fail(("methods", i), f"unknown method {m!r} (choose from {', '.join(x.value for x in Method)})")
    for i, m in enumerate(methods):
        if m in SIMO_ONLY and model["kind"] != "simo-spread":
            rd.fail(("methods", i), f"{m.value} applies to the simo-spread model only")
    ensemble = None
    if "ensemble" in data:
        ensemble = _parse_ensemble(rd, model)
    elif any(m in NEEDS_ENSEMBLE for m in methods):
        rd.fail(("ensemble",), "an input ensemble is required by the selected methods")
    if any(m in SIMO_ONLY for m in methods) and "beta" not in (ensemble or {}):
        rd.fail(("ensemble",), "iid-closed-form / upper-bound-prop1 need ensemble.beta")

    snr = _grid(rd, ("snr_grid",))
    cfg = ScenarioConfig(name, model, ensemble, snr, methods, output_path=output_path,
                         output_format=fmt, raw=data)
    if "mc" in data:
        cfg.samples = rd.number(("mc", "samples"), cfg.samples, lo=1, integer=True)
        seed = rd.get(("mc", "seed"), None)
        cfg.seed = None if seed is None else rd.number(("mc", "seed"), lo=0, integer=True)
        cfg.estimator = rd.choice(("mc", "estimator"), ESTIMATORS, "mc")
    if "quadrature" in data:
        cfg.quad_order = rd.number(("quadrature", "order"), 32, lo=2, integer=True)
    if cfg.estimator == "quadrature" and model["kind"] != "block-siso":
        rd.fail(("mc", "estimator"), "quadrature estimator needs the block-siso model")
    if Method.EXACT_ENUM in methods:
        cost = 4 ** model["n_rx"] * _ensemble_size(ensemble, model)
        if cost > enum_budget():
            rd.fail(("methods", methods.index(Method.EXACT_ENUM)),
                    f"exact-enum needs {cost} terms, above the enumeration budget {enum_budget()}")
    return cfg


def _parse_model(rd):
    kind = rd.choice(("model", "kind"), MODELS)
    if kind == "block-siso":
        n = rd.number(("model", "n"), lo=1, integer=True)
        return {"kind": kind, "n": n, "n_rx": n}
    N = rd.number(("model", "N"), lo=1, integer=True)
    T = rd.number(("model", "T"), lo=1, integer=True)
    n = rd.number(("model", "n"), lo=2, integer=True)
    if n <= T:
        rd.fail(("model", "n"), f"block length must exceed T={T}")
    R_raw = rd.get(("model", "R"), {"family": "identity"})
    if isinstance(R_raw, dict):
        fam = rd.choice(("model", "R", "family"), ("identity", "constant", "exponential"), "identity")
        R = receive_correlation(N, fam, complex(rd.get(("model", "R", "c"), 0.0)))
    else:
        try:
            R = np.array([[complex(str(v).replace(" ", "")) for v in row] for row in R_raw])
        except (TypeError, ValueError):
            rd.fail(("model", "R"), "R must be a family mapping or a matrix of numbers")
    r_raw = rd.get(("model", "r"), {"family": "delta"})
    fam = rd.choice(("model", "r", "family"), ("delta", "geometric", "finite"), "delta")
    try:
        r = autocorrelation(fam, float(r_raw.get("a", 0.0)), r_raw.get("values", ()))
    except ValueError as exc:
        rd.fail(("model", "r"), str(exc))
    alpha = rd.get(("model", "alpha"), None)
    if alpha is None:
        alpha = [1.0 / T] * T
    horizon = rd.get(("model", "horizon"), None)
    try:
        spec = SimoSpec(N, T, R, r, np.asarray(alpha, dtype=float), horizon,
                        description={"R": R_raw, "r": r_raw, "alpha": alpha})
    except ValueError as exc:
        rd.fail(("model",), str(exc))
    return {"kind": kind, "N": N, "T": T, "n": n, "n_rx": N * n, "spec": spec}


def _parse_ensemble(rd, model):
    kind = rd.choice(("ensemble", "kind"), ENSEMBLES)
    ens = {"kind": kind}
    if kind == "qpsk-block":
        if model["kind"] != "block-siso":
            rd.fail(("ensemble", "kind"), "qpsk-block pairs with the block-siso model")
        if model["n"] > 6:
            rd.fail(("model", "n"), "qpsk-block enumeration is limited to n <= 6")
        return ens
    ens["beta"] = rd.number(("ensemble", "beta"), lo=1.0)
    gamma = rd.get(("ensemble", "gamma"), "auto")
    if gamma == "auto":
        if model["kind"] != "simo-spread":
            rd.fail(("ensemble", "gamma"), "gamma: auto needs the simo-spread model")
        ens["gamma"] = "auto"
    else:
        ens["gamma"] = rd.number(("ensemble", "gamma"), lo=0.0)
        if ens["gamma"] > 1 or ens["gamma"] > ens["beta"]:
            rd.fail(("ensemble", "gamma"), "need gamma <= 1 and gamma <= beta")
    if kind == "oofsk":
        if model["n"] < 2:
            rd.fail(("model", "n"), "oofsk needs a block length of at least 2")
        ens["include_zero"] = bool(rd.get(("ensemble", "include_zero"), False))
    return ens


def _ensemble_size(ens, model):
    # upper bound on the number of constellation points, without building it
    n = model["n"]
    if ens["kind"] == "qpsk-block":
        return 4 ** n
    if ens["kind"] == "oofsk":
        return n + 1
    return 3 ** n


def build_law(cfg: ScenarioConfig):
    m = cfg.model
    if m["kind"] == "block-siso":
        return block_fading_siso(m["n"])
    return simo_block_law(m["spec"], m["n"])


def build_ensemble(cfg: ScenarioConfig, gamma: Optional[float] = None) -> InputEnsemble:
    e, n = cfg.ensemble, cfg.model["n"]
    if e["kind"] == "qpsk-block":
        return ensemble_qpsk_block(n)
    g = e["gamma"] if gamma is None else gamma
    if e["kind"] == "oofsk":
        return ensemble_oofsk(n, e["beta"], g, e.get("include_zero", False))
    return ensemble_ternary_iid(n, e["beta"], g)


def load_config(ref: str) -> ScenarioConfig:
    """Load a scenario from a file path or a preset name (``fig2``, ``fig3``)."""
    if ref in PRESETS and not Path(ref).exists():
        text = resources.files("onebit").joinpath("presets", f"{ref}.yaml").read_text()
        return parse_config(text, f"{ref}.yaml")
    path = Path(ref)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))
