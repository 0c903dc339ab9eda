"""Experiment configuration, orchestration and persistence.

Configuration files are line oriented::

    # comment
    [model]
    s = 0.5
    beta = 2.0
    n = 64

    [sampler]
    sweeps = 20000

    [[test_function]]
    name = window
    kind = indicator
    param = 0.125

    [[observable]]
    name = gapvar:4

    [[observable]]
    test_function = window

``[model]`` and ``[sampler]`` appear at most once; ``[run]`` holds harness
options; ``[[test_function]]`` and ``[[observable]]`` may repeat. Unknown
sections or keys are errors reported with line and column. See
``docs/formats.md`` for the full schema and the output files.
"""
from __future__ import annotations

import csv
import json
import os
import platform
import re
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, InsufficientESSError, RieszError
from .estimators import GATE_ESS, mean_with_error, sub_poisson_check, total_ess
from .sampler import SamplerConfig, parse_observable, resolve_threads, run_chains
from .special import ModelParams, build_kernel_table
from .transforms import TestFunction

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "TestFunctionSpec",
    "ExperimentSpec",
    "parse_config",
    "parse_config_text",
    "emit_config",
    "run",
    "analyze",
    "load_series",
    "write_series_csv",
    "write_report",
]

REPORT_SCHEMA_VERSION = 1
_KINDS = ("cosine", "indicator", "power")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.-]*$")


@dataclass(frozen=True)
class TestFunctionSpec:
    """A named test function: ``cosine`` (param = mode m), ``indicator`` (param = half-width) or ``power`` (param = alpha)."""

    __test__ = False

    name: str
    kind: str
    param: float

    def build(self) -> TestFunction:
        if self.kind == "cosine":
            return TestFunction.cosine(int(self.param))
        if self.kind == "indicator":
            return TestFunction.indicator(self.param)
        return TestFunction.power(self.param)

    def observable(self) -> str:
        if self.kind == "cosine":
            return f"fluct:cos:{int(self.param)}"
        if self.kind == "indicator":
            return f"fluct:ind:{self.param!r}"
        raise ConfigError(f"test function {self.name!r}: fluctuations of the power kind are unbounded")


@dataclass(frozen=True)
class ExperimentSpec:
    model: ModelParams
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    test_functions: tuple = ()
    observables: tuple = ()
    chains: int = 1
    outputs: str = ""
    suite: str | None = None
    checks: bool = True
    min_ess: float = GATE_ESS

    def resolved_observables(self) -> list[str]:
        """Observable names with test-function references expanded."""
        table = {tf.name: tf for tf in self.test_functions}
        out = []
        for obs in self.observables:
            if obs.startswith("@"):
                out.append(table[obs[1:]].observable())
            else:
                out.append(obs)
        return out


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _err(msg, line=None, col=None, path=None):
    where = ""
    if line is not None:
        where = f"{path or '<config>'}:{line}:{col or 1}: "
    exc = ConfigError(where + msg)
    exc.line, exc.column = line, col
    return exc


def _to_bool(text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _opt_float(text):
    return None if text.lower() == "none" else float(text)


def _opt_int(text):
    return None if text.lower() == "none" else int(text)


_MODEL_KEYS = {"s": float, "beta": float, "n": int}
_SAMPLER_KEYS = {
    "scheme": str, "step": float, "sweeps": int, "burn_in": int, "thin": int, "seed": int,
    "target_accept": _opt_float, "adapt_sweeps": _opt_int, "init": str, "chains": int,
}
_RUN_KEYS = {"output": str, "suite": str, "checks": _to_bool, "min_ess": float}
_TF_KEYS = {"name": str, "kind": str, "param": float}
_OBS_KEYS = {"name": str, "test_function": str}
_SECTIONS = {"model": _MODEL_KEYS, "sampler": _SAMPLER_KEYS, "run": _RUN_KEYS}
_ARRAYS = {"test_function": _TF_KEYS, "observable": _OBS_KEYS}


def parse_config(path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), str(path))


def parse_config_text(text: str, source: str = "<config>") -> ExperimentSpec:
    """Parse and validate a configuration; defaults are applied for missing keys."""
    tables = {}
    arrays = {"test_function": [], "observable": []}
    where = {}  # (section, key or None) -> (line, col)
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        col0 = len(raw) - len(raw.lstrip()) + 1
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[["):
            if not stripped.endswith("]]"):
                raise _err("unterminated section header", lineno, col0, source)
            name = stripped[2:-2].strip()
            if name not in _ARRAYS:
                raise _err(f"unknown section [[{name}]]", lineno, col0 + 2, source)
            arrays[name].append({})
            current = (name, len(arrays[name]) - 1)
            where[current] = (lineno, col0)
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise _err("unterminated section header", lineno, col0, source)
            name = stripped[1:-1].strip()
            if name not in _SECTIONS:
                raise _err(f"unknown section [{name}]", lineno, col0 + 1, source)
            if name in tables:
                raise _err(f"section [{name}] appears twice", lineno, col0, source)
            tables[name] = {}
            current = (name, None)
            where[current] = (lineno, col0)
            continue
        if "=" not in stripped:
            raise _err("expected 'key = value'", lineno, col0, source)
        if current is None:
            raise _err("key outside of any section", lineno, col0, source)
        key, value = (p.strip() for p in stripped.split("=", 1))
        after = raw[raw.index("=") + 1:]
        vcol = raw.index("=") + 2 + len(after) - len(after.lstrip())
        sec, idx = current
        schema = _SECTIONS.get(sec) or _ARRAYS[sec]
        if key not in schema:
            raise _err(f"unknown key {key!r} in [{sec}]", lineno, col0, source)
        target = tables[sec] if idx is None else arrays[sec][idx]
        if key in target:
            raise _err(f"duplicate key {key!r}", lineno, col0, source)
        if not value:
            raise _err(f"missing value for {key!r}", lineno, vcol, source)
        try:
            target[key] = schema[key](value)
        except ValueError as exc:
            raise _err(f"bad value for {key!r}: {exc}", lineno, vcol, source) from None
        where[(sec, idx, key)] = (lineno, vcol)

    def field_error(sec, key, exc, idx=None):
        line, col = where.get((sec, idx, key), where.get((sec, idx), (None, None)))
        return _err(f"[{sec}] {key}: {exc}", line, col, source)

    if "model" not in tables:
        raise _err("missing [model] section", path=source)
    model_t = tables["model"]
    for key in _MODEL_KEYS:
        if key not in model_t:
            raise field_error("model", key, "required key missing")
    try:
        model = ModelParams(**model_t)
    except DomainError as exc:
        bad = next((k for k in ("s", "beta", "n") if f"{k} " in str(exc)), "s")
        raise field_error("model", bad, exc) from None

    samp_t = dict(tables.get("sampler", {}))
    chains = samp_t.pop("chains", 1)
    if chains < 1:
        raise field_error("sampler", "chains", "must be at least 1")
    try:
        sampler = SamplerConfig(**samp_t)
    except ConfigError as exc:
        raise _err(f"[sampler] {exc}", *where.get(("sampler", None), (None, None)), source) from None

    tfs = []
    for i, entry in enumerate(arrays["test_function"]):
        for key in _TF_KEYS:
            if key not in entry:
                raise field_error("test_function", key, "required key missing", i)
        if not _NAME_RE.match(entry["name"]):
            raise field_error("test_function", "name", "invalid name", i)
        if entry["kind"] not in _KINDS:
            raise field_error("test_function", "kind", f"must be one of {_KINDS}", i)
        tf = TestFunctionSpec(entry["name"], entry["kind"], entry["param"])
        try:
            tf.build()
        except (RieszError, ValueError) as exc:
            raise field_error("test_function", "param", exc, i) from None
        if tf.name in {t.name for t in tfs}:
            raise field_error("test_function", "name", f"duplicate test function {tf.name!r}", i)
        tfs.append(tf)
    names = {t.name: t for t in tfs}

    obs = []
    for i, entry in enumerate(arrays["observable"]):
        if ("name" in entry) == ("test_function" in entry):
            line, col = where[("observable", i)]
            raise _err("[[observable]] needs exactly one of 'name' or 'test_function'", line, col, source)
        if "test_function" in entry:
            ref = entry["test_function"]
            if ref not in names:
                raise field_error("observable", "test_function", f"unknown test function {ref!r}", i)
            names[ref].observable()
            obs.append("@" + ref)
        else:
            obs.append(entry["name"])

    run_t = tables.get("run", {})
    suite = run_t.get("suite")
    if suite is not None and suite not in ("quick", "full"):
        raise field_error("run", "suite", "must be 'quick' or 'full'")
    spec = ExperimentSpec(model, sampler, tuple(tfs), tuple(obs), chains,
                          run_t.get("output", ""), suite, run_t.get("checks", True),
                          run_t.get("min_ess", float(GATE_ESS)))
    for name in spec.resolved_observables():
        parse_observable(name, model.n)
    return spec


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(spec: ExperimentSpec) -> str:
    """Serialize a spec so that ``parse_config_text(emit_config(spec)) == spec``."""
    lines = ["[model]"]
    for key in _MODEL_KEYS:
        lines.append(f"{key} = {_fmt(getattr(spec.model, key))}")
    lines += ["", "[sampler]"]
    for f in fields(SamplerConfig):
        lines.append(f"{f.name} = {_fmt(getattr(spec.sampler, f.name))}")
    lines.append(f"chains = {spec.chains}")
    lines += ["", "[run]"]
    if spec.outputs:
        lines.append(f"output = {spec.outputs}")
    if spec.suite:
        lines.append(f"suite = {spec.suite}")
    lines.append(f"checks = {_fmt(spec.checks)}")
    lines.append(f"min_ess = {_fmt(float(spec.min_ess))}")
    for tf in spec.test_functions:
        lines += ["", "[[test_function]]", f"name = {tf.name}", f"kind = {tf.kind}",
                  f"param = {_fmt(float(tf.param))}"]
    for obs in spec.observables:
        lines += ["", "[[observable]]"]
        lines.append(f"test_function = {obs[1:]}" if obs.startswith("@") else f"name = {obs}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _csv_name(observable: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", observable) + ".csv"


def write_series_csv(path, series) -> None:
    """Write ``chain,sweep,value`` rows; values with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("chain,sweep,value\n")
        for s in series:
            for sw, v in zip(s.sweeps, s.values):
                fh.write(f"{s.chain},{int(sw)},{float(v):.17g}\n")


def load_series(path) -> list[np.ndarray]:
    """Read a series CSV back into per-chain value arrays (ordered by chain)."""
    chains = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["chain", "sweep", "value"]:
            raise ConfigError(f"{path}: expected header chain,sweep,value")
        for row in reader:
            chains.setdefault(int(row[0]), []).append(float(row[2]))
    return [np.array(chains[c]) for c in sorted(chains)]


def write_report(path, claims, extra=None) -> dict:
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "passed": all(c["passed"] for c in claims),
        "claims": claims,
    }
    if extra:
        report.update(extra)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n")
    return report


def _versions():
    import numba
    import scipy

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "rieszgas": __version__}


# ---------------------------------------------------------------------------
# Run and analyze
# ---------------------------------------------------------------------------


def _claim(cid, desc, emp, pred, tol, ok, **details):
    def num(v):
        return None if v is None or not np.isfinite(v) else float(v)

    return {"claim_id": cid, "description": desc, "empirical": num(emp), "predicted": num(pred),
            "tolerance": num(tol), "passed": bool(ok), "details": details}


def _checks_for(name: str, chains, spec: ExperimentSpec) -> list[dict]:
    """Symmetry and inequality checks applicable to one observable."""
    head, *rest = name.split(":")
    n = spec.model.n
    claims = []
    if head == "gap":
        expected, what = float(rest[0]), f"E[{name}] = k"
    elif head in ("count", "fluct"):
        expected, what = 0.0, f"E[{name}] = 0"
    else:
        return claims
    try:
        m, se = mean_with_error(chains, min_ess=spec.min_ess)
    except InsufficientESSError as exc:
        return [_claim(f"{name}.mean", what, None, expected, None, False, error=str(exc))]
    claims.append(_claim(f"{name}.mean", what + " within 3 batch-means sigma", m, expected, 3 * se,
                         abs(m - expected) <= 3 * se, stderr=se))
    if head in ("count", "fluct"):
        if head == "count":
            xi = TestFunction.indicator(float(rest[0]))
        elif rest[0] == "cos":
            xi = TestFunction.cosine(int(rest[1]) if len(rest) > 1 else 1)
        else:
            xi = TestFunction.indicator(float(rest[1]))
        var, bound, margin = sub_poisson_check(chains, xi, n, min_ess=spec.min_ess,
                                               raise_on_violation=False)
        claims.append(_claim(f"{name}.subpoisson", "Var[Fluct] <= N (int xi^2 - (int xi)^2)",
                             var, bound, margin + bound - var, margin >= 0))
    return claims


def _summaries(series_by_name):
    out = {}
    for name, chains in series_by_name.items():
        pooled = np.concatenate(chains)
        entry = {"records": int(pooled.size), "mean": float(pooled.mean()),
                 "variance": float(pooled.var(ddof=1)) if pooled.size > 1 else 0.0}
        try:
            entry["ess"] = total_ess(chains)
        except RieszError as exc:
            entry["ess"] = None
            entry["ess_note"] = str(exc)
        out[name] = entry
    return out


def _analyze_series(series_by_name, spec: ExperimentSpec) -> dict:
    claims = []
    if spec.checks:
        for name, chains in series_by_name.items():
            try:
                claims.extend(_checks_for(name, chains, spec))
            except InsufficientESSError as exc:
                claims.append(_claim(f"{name}.check", "estimator gate", None, None, None, False,
                                     error=str(exc)))
    return {"claims": claims, "summaries": _summaries(series_by_name)}


def run(spec: ExperimentSpec, out=None, threads: int | None = None) -> Path:
    """Sample, write CSVs, metadata and ``report.json``; return the directory.

    The output directory must already exist. The report's ``passed`` field
    is true iff every enabled check passed.
    """
    out = Path(out or spec.outputs or ".")
    if not out.is_dir():
        raise ConfigError(f"output directory does not exist: {out}")
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory is not writable: {out}")
    if not spec.observables:
        raise ConfigError("no observables requested")
    threads = resolve_threads(threads)
    t0 = time.perf_counter()
    model = build_kernel_table(spec.model)
    t_table = time.perf_counter() - t0
    names = spec.resolved_observables()
    chain_run = run_chains(model, spec.sampler, names, chains=spec.chains, threads=threads)
    files = {}
    for name in names:
        fname = _csv_name(name)
        write_series_csv(out / fname, chain_run.series[name])
        files[name] = fname
    series_by_name = {name: [s.values for s in chain_run.series[name]] for name in names}
    analysis = _analyze_series(series_by_name, spec)
    meta = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "seed": spec.sampler.seed,
        "rng": "numpy Philox; chain c keyed by seed XOR splitmix64(c)",
        "threads": threads,
        "versions": _versions(),
        "timings": {"kernel_table_s": t_table, "sampling_s": chain_run.seconds},
        "acceptance": chain_run.acceptance,
        "final_step": chain_run.final_step,
        "files": files,
        "config": emit_config(spec),
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
    write_report(out / "report.json", analysis["claims"], {"summaries": analysis["summaries"]})
    return out


def analyze(run_dir, out=None) -> dict:
    """Recompute ``report.json`` from the CSV files of an earlier run."""
    run_dir = Path(run_dir)
    meta_path = run_dir / "metadata.json"
    if not meta_path.is_file():
        raise ConfigError(f"{run_dir} does not contain metadata.json")
    meta = json.loads(meta_path.read_text())
    spec = parse_config_text(meta["config"], str(meta_path))
    series_by_name = {name: load_series(run_dir / fname) for name, fname in meta["files"].items()}
    analysis = _analyze_series(series_by_name, spec)
    target = Path(out) if out else run_dir
    if not target.is_dir():
        raise ConfigError(f"output directory does not exist: {target}")
    return write_report(target / "report.json", analysis["claims"], {"summaries": analysis["summaries"]})
