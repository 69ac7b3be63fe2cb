"""Run a :class:`~onebit.config.ScenarioConfig` and write its table.

CSV output starts with ``#``-prefixed metadata lines, then a header row.
Rate scenarios have columns ``rho,method,value,std_error``; ratio sweeps
have ``sigma_over_mu,T,beta,ratio``.  Numbers carry 12 significant digits.
If a computation fails, the rows already written are kept and a
``# FAILED: ...`` line is appended.
"""

from __future__ import annotations

import json
import logging
import sys
from contextlib import contextmanager
from importlib.metadata import PackageNotFoundError, version

import numpy as np
import scipy

from .asymptotic import theorem1_coefficient, unquantized_coefficient
from .config import ScenarioConfig, build_ensemble, build_law
from .mi_exact import MCSettings, mutual_info_exact, mutual_info_lower_bound
from .report import Method
from .simo import coherence_stats, gamma_opt, geometric_family, iid_objective, iid_rate, prop1_upper_bound, ratio_sweep

log = logging.getLogger(__name__)

RATE_COLUMNS = ("rho", "method", "value", "std_error")
SWEEP_COLUMNS = ("sigma_over_mu", "T", "beta", "ratio")


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if v == 0:
        return "0"
    return f"{v:.12g}"


def _pkg_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def metadata(cfg: ScenarioConfig) -> dict:
    meta = {"scenario": cfg.name, "onebit": _pkg_version(), "numpy": np.__version__, "scipy": scipy.__version__}
    if cfg.is_sweep:
        meta.update(kind="ratio-sweep", beta=cfg.sweep["beta"], T=cfg.sweep["T"], units="ratio (rho cancels)")
        return meta
    model = cfg.model
    meta["model"] = model["kind"] + "(" + ", ".join(f"{k}={model[k]}" for k in ("n", "N", "T") if k in model) + ")"
    if cfg.ensemble:
        meta["ensemble"] = ", ".join(f"{k}={v}" for k, v in cfg.ensemble.items())
    meta["methods"] = ",".join(m.value for m in cfg.methods)
    meta["estimator"] = cfg.estimator
    meta["samples"] = cfg.samples
    meta["seed"] = cfg.seed
    meta["units"] = (f"nats per block of {model['n']} uses" if model["kind"] == "block-siso"
                     else "nats per channel use")
    return meta


class _Sink:
    def __init__(self, stream, fmt_name, meta, columns):
        self.stream, self.format, self.meta, self.columns = stream, fmt_name, meta, columns
        self.rows = []
        if self.format == "csv":
            for k, v in meta.items():
                stream.write(f"# {k}: {v}\n")
            stream.write(",".join(columns) + "\n")
            stream.flush()

    def row(self, values):
        cells = [fmt(v) for v in values]
        if self.format == "csv":
            self.stream.write(",".join(cells) + "\n")
            self.stream.flush()
        else:
            self.rows.append(dict(zip(self.columns, cells)))

    def close(self, failure=None):
        if self.format == "csv":
            if failure:
                self.stream.write(f"# FAILED: {failure}\n")
        else:
            doc = {"meta": self.meta, "columns": list(self.columns), "rows": self.rows}
            if failure:
                doc["failed"] = failure
            json.dump(doc, self.stream, indent=2, default=str)
            self.stream.write("\n")
        self.stream.flush()


@contextmanager
def _open(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def run_scenario(cfg: ScenarioConfig, out=None) -> int:
    """Compute every (rho, method) row or sweep point; returns an exit status."""
    columns = SWEEP_COLUMNS if cfg.is_sweep else RATE_COLUMNS
    with _open(out if out is not None else cfg.output_path) as stream:
        sink = _Sink(stream, cfg.output_format, metadata(cfg), columns)
        try:
            rows = _sweep_rows(cfg) if cfg.is_sweep else _rate_rows(cfg)
            for values in rows:
                sink.row(values)
        except BrokenPipeError:
            raise
        except Exception as exc:  # keep partial output, mark failure
            log.error("scenario %s failed: %s", cfg.name, exc)
            sink.close(f"{type(exc).__name__}: {exc}")
            return 2
        sink.close()
    return 0


def _sweep_rows(cfg):
    sw = cfg.sweep
    family = lambda s, T: geometric_family(s, T, sw["c"])
    for row in ratio_sweep(sw["sigma_over_mu"], sw["T"], sw["beta"], family=family):
        yield row.sigma_over_mu, row.T, row.beta, row.ratio if row.defined else "nan"


def _rate_rows(cfg):
    model = cfg.model
    law = build_law(cfg)
    simo = model["kind"] == "simo-spread"
    ens = None
    if cfg.ensemble is not None:
        gamma = None
        if cfg.ensemble.get("gamma") == "auto":
            spec = model["spec"]
            if cfg.ensemble["kind"] == "oofsk":
                gamma = gamma_opt(coherence_stats(spec), cfg.ensemble["beta"])
            else:
                st = coherence_stats(spec, model["n"])
                gamma = iid_objective(st.mu_n, st.sigma, cfg.ensemble["beta"], float(np.sum(spec.alpha ** 2)))[1]
            log.info("gamma auto -> %.6g", gamma)
        ens = build_ensemble(cfg, gamma)

    def norm(report):
        return report.per_symbol() if simo else report

    coef = {}
    mc = MCSettings(cfg.samples, cfg.seed if cfg.seed is not None else 0)
    for rho in cfg.snr_grid:
        for method in cfg.methods:
            if method is Method.EXACT_ENUM:
                r = norm(mutual_info_exact(law, ens, rho, mc, cfg.estimator, cfg.quad_order))
            elif method is Method.LOWER_BOUND:
                r = norm(mutual_info_lower_bound(law, ens, rho, cfg.quad_order, mc if simo else None))
            elif method in (Method.QUADRATIC, Method.UNQUANTIZED_QUADRATIC):
                if method not in coef:
                    fn = theorem1_coefficient if method is Method.QUADRATIC else unquantized_coefficient
                    c = fn(law, ens)
                    coef[method] = c.per_symbol() if simo else c
                r = coef[method].rate(rho)
            elif method is Method.IID_CLOSED_FORM:
                r = iid_rate(model["spec"], coherence_stats(model["spec"], model["n"]), cfg.ensemble["beta"], rho)
            else:
                r = prop1_upper_bound(coherence_stats(model["spec"]), cfg.ensemble["beta"], rho)
            yield rho, method.value, r.value, r.std_error
