"""Config-driven experiment runs with deterministic report files.

One entry point, ``normflow run <config.json>``, four modes:

* ``flow``            -- integrate the coefficient flow, report per-index
                         divisors, limits, and fitted decay rates;
* ``majorant-cert``    -- run the scalar majorant alongside the flow and
                         certify coefficientwise domination on a delta grid;
* ``low-order-pipeline`` -- chained band steps with per-step certificates
                         and a dump of the weight sequences;
* ``corank1-split``    -- resonant/nonresonant split with norm estimates and
                         the guaranteed decay bound.

Reports are emitted as CSV and JSON with a fixed column order and floats at
17 significant digits, so re-running a config reproduces the files byte for
byte.  Exit codes: 0 success, 1 input or module error, 2 a certified bound
failed, in which case ``witness.json`` names the module, operation, and the
violating indices.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Callable, NamedTuple

from .algebra import FormalSeries, MultiIndex, norm_upper_estimate
from .errors import BoundViolation, TermBudgetError
from .exppoly import ep_eval, ep_limit_infinity
from .flow import DECAY_FIT_GRID, fitted_decay_rate, flow_exact
from .majorant import majorant_flow, verify_domination
from .resonance import Frequency, corank1_decompose
from .scheduler import (b_from_a, bruno_check, choose_initial_bounds, corank1_split,
                        eps0_estimates, make_a_sequence, normalize_low_orders)

MODES = ("flow", "majorant-cert", "low-order-pipeline", "corank1-split")
PRESET_NAMES = ("one-one-resonance", "golden-mean", "henon-heiles-like")

_TOP_KEYS = {"mode", "K", "frequency", "hamiltonian", "delta_grid", "thresholds",
             "majorant", "pipeline", "out"}


# -- config ---------------------------------------------------------------------

def _fail(msg: str):
    raise ValueError(f"config: {msg}")


def validate_config(obj: Any) -> dict:
    """Normalize a raw config object, raising ValueError on any schema breach.

    The accepted shape is documented in docs/config_schema.json; defaults are
    filled in here so the runners can rely on every key being present.
    """
    if not isinstance(obj, dict):
        _fail("top level must be an object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        _fail(f"unknown keys {sorted(unknown)}")
    cfg: dict[str, Any] = {}

    mode = obj.get("mode", "flow")
    if mode not in MODES:
        _fail(f"mode must be one of {MODES}, got {mode!r}")
    cfg["mode"] = mode

    K = obj.get("K")
    if not isinstance(K, int) or isinstance(K, bool) or K < 3:
        _fail("K must be an integer >= 3")
    cfg["K"] = K

    ham = obj.get("hamiltonian")
    if not isinstance(ham, dict):
        _fail("hamiltonian must be an object")
    if "preset" in ham:
        if set(ham) != {"preset"}:
            _fail("a preset hamiltonian takes no other keys")
        if ham["preset"] not in PRESET_NAMES:
            _fail(f"unknown preset {ham['preset']!r}; available: {PRESET_NAMES}")
        cfg["hamiltonian"] = {"preset": ham["preset"]}
    else:
        if set(ham) != {"n", "coefficients"}:
            _fail("an inline hamiltonian needs exactly the keys n, coefficients")
        n = ham["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            _fail("hamiltonian.n must be an integer >= 1")
        coeffs = ham["coefficients"]
        if not isinstance(coeffs, list):
            _fail("hamiltonian.coefficients must be a list")
        seen = set()
        clean = []
        for i, entry in enumerate(coeffs):
            if not isinstance(entry, dict) or not {"k", "kbar"} <= set(entry) \
                    or not set(entry) <= {"k", "kbar", "re", "im"}:
                _fail(f"coefficient {i} needs keys k, kbar and optionally re, im")
            k, kbar = entry["k"], entry["kbar"]
            for part, name in ((k, "k"), (kbar, "kbar")):
                if (not isinstance(part, list) or len(part) != n
                        or not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0
                                   for x in part)):
                    _fail(f"coefficient {i}: {name} must be {n} nonnegative integers")
            key = (tuple(k), tuple(kbar))
            if key in seen:
                _fail(f"coefficient {i} repeats index {key}")
            seen.add(key)
            re, im = entry.get("re", 0.0), entry.get("im", 0.0)
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                       and math.isfinite(x) for x in (re, im)):
                _fail(f"coefficient {i}: re/im must be finite numbers")
            clean.append({"k": list(k), "kbar": list(kbar),
                          "re": float(re), "im": float(im)})
        cfg["hamiltonian"] = {"n": n, "coefficients": clean}

    freq = obj.get("frequency")
    if freq is None:
        if "preset" not in cfg["hamiltonian"]:
            _fail("an inline hamiltonian requires a frequency")
    elif not isinstance(freq, dict):
        _fail("frequency must be an object")
    cfg["frequency"] = freq

    grid = obj.get("delta_grid", [])
    if not isinstance(grid, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)
            and x >= 0 for x in grid):
        _fail("delta_grid must be a list of finite numbers >= 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        _fail("delta_grid must be strictly ascending")
    cfg["delta_grid"] = [float(x) for x in grid]

    thr = obj.get("thresholds", {})
    if not isinstance(thr, dict) or not set(thr) <= {"normal_form"}:
        _fail("thresholds accepts only the key normal_form")
    nf_thr = thr.get("normal_form", 1e-10)
    if not isinstance(nf_thr, (int, float)) or isinstance(nf_thr, bool) or not nf_thr > 0:
        _fail("thresholds.normal_form must be > 0")
    cfg["thresholds"] = {"normal_form": float(nf_thr)}

    maj = obj.get("majorant", {})
    if not isinstance(maj, dict) or not set(maj) <= {"rho", "initial_scale"}:
        _fail("majorant accepts only the keys rho, initial_scale")
    rho = maj.get("rho", 0.5)
    scale = maj.get("initial_scale", 1)
    for v, name in ((rho, "rho"), (scale, "initial_scale")):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            _fail(f"majorant.{name} must be > 0")
    cfg["majorant"] = {"rho": rho, "initial_scale": scale}

    pipe = obj.get("pipeline", {})
    if not isinstance(pipe, dict) or not set(pipe) <= {"r", "J", "c0", "alpha0"}:
        _fail("pipeline accepts only the keys r, J, c0, alpha0")
    if cfg["mode"] == "low-order-pipeline" and "r" not in pipe:
        _fail("mode low-order-pipeline requires pipeline.r")
    if "r" in pipe and (not isinstance(pipe["r"], int) or isinstance(pipe["r"], bool)
                        or pipe["r"] < 3):
        _fail("pipeline.r must be an integer >= 3")
    if "J" in pipe and (not isinstance(pipe["J"], int) or isinstance(pipe["J"], bool)
                        or pipe["J"] < 0):
        _fail("pipeline.J must be an integer >= 0")
    for name in ("c0", "alpha0"):
        if name in pipe and (not isinstance(pipe[name], (int, float))
                             or isinstance(pipe[name], bool) or not math.isfinite(pipe[name])):
            _fail(f"pipeline.{name} must be a finite number")
    cfg["pipeline"] = dict(pipe)

    out = obj.get("out", "reports")
    if not isinstance(out, str) or not out:
        _fail("out must be a nonempty string")
    cfg["out"] = out
    return cfg


def load_preset(name: str) -> dict:
    """Raw JSON body of a named preset from the packaged data directory."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}")
    text = resources.files("normflow.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def build_problem(cfg: dict) -> tuple[FormalSeries, Frequency]:
    """Materialize (H, omega) from a validated config."""
    ham = cfg["hamiltonian"]
    if "preset" in ham:
        body = load_preset(ham["preset"])
        n = body["n"]
        entries = body["coefficients"]
        freq_obj = cfg["frequency"] or body["frequency"]
    else:
        n = ham["n"]
        entries = ham["coefficients"]
        freq_obj = cfg["frequency"]
    omega = Frequency.from_json(freq_obj)
    if omega.n != n:
        raise ValueError(f"frequency has n = {omega.n} but hamiltonian has n = {n}")
    coeffs = {MultiIndex.make(e["k"], e["kbar"]): complex(e["re"], e.get("im", 0.0))
              for e in entries}
    return FormalSeries(n, cfg["K"], coeffs), omega


def _threads_from_env() -> int:
    """NORMFLOW_THREADS caps worker counts; the runners are serial today, so
    the value is validated and recorded but does not change results."""
    raw = os.environ.get("NORMFLOW_THREADS")
    if raw is None:
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise ValueError(f"NORMFLOW_THREADS must be an integer, got {raw!r}") from None
    if val < 1:
        raise ValueError("NORMFLOW_THREADS must be >= 1")
    return val


# -- report emission -------------------------------------------------------------

class Report(NamedTuple):
    """One tabular result: fixed column order plus a metadata object."""

    name: str
    columns: tuple[str, ...]
    rows: list[list]
    meta: dict


def _cell_csv(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _cell_json(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def validate_report(obj: Any) -> None:
    """Check an emitted JSON report against the documented schema shape."""
    if not isinstance(obj, dict) or set(obj) != {"name", "columns", "rows", "meta"}:
        raise ValueError("report must have exactly the keys name, columns, rows, meta")
    if not isinstance(obj["name"], str):
        raise ValueError("report name must be a string")
    cols = obj["columns"]
    if not isinstance(cols, list) or not cols or not all(isinstance(c, str) for c in cols):
        raise ValueError("columns must be a nonempty list of strings")
    rows = obj["rows"]
    if not isinstance(rows, list):
        raise ValueError("rows must be a list")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(cols):
            raise ValueError(f"row {i} does not match the column count")
        for v in row:
            if not (v is None or isinstance(v, (str, int, float))):
                raise ValueError(f"row {i} holds a non-scalar cell")
    if not isinstance(obj["meta"], dict):
        raise ValueError("meta must be an object")


def emit_report(report: Report, fmt: str, out_dir: Path) -> Path:
    """Write one report file; CSV for tables, JSON for the same plus metadata."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [",".join(report.columns)]
        lines += [",".join(_cell_csv(v) for v in row) for row in report.rows]
        path = out_dir / f"{report.name}.csv"
        path.write_text("\n".join(lines) + "\n")
        return path
    if fmt == "json":
        body = {"name": report.name, "columns": list(report.columns),
                "rows": [[_cell_json(v) for v in row] for row in report.rows],
                "meta": report.meta}
        validate_report(body)
        path = out_dir / f"{report.name}.json"
        path.write_text(json.dumps(body, sort_keys=True, separators=(",", ":"),
                                   allow_nan=False) + "\n")
        return path
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def _idx_str(t: tuple[int, ...]) -> str:
    return " ".join(str(x) for x in t)


def _fit_grid(grid: list[float]) -> list[float]:
    """Fitting needs at least three positive samples; fall back to the
    module default when the config grid cannot provide them."""
    pos = [d for d in grid if d > 0]
    return pos if len(pos) >= 3 else list(DECAY_FIT_GRID)


# -- mode runners ----------------------------------------------------------------

def _run_flow(H: FormalSeries, omega: Frequency, cfg: dict,
              threads: int) -> tuple[list[Report], BoundViolation | None]:
    sol = flow_exact(H, omega, cfg["K"])
    grid = _fit_grid(cfg["delta_grid"])
    rows = []
    for k in sol.support():
        div = float(sol.divisors[k])
        limit = ep_limit_infinity(sol.calH[k]) if div == 0.0 else 0j
        vals = [abs(ep_eval(sol.calH[k], d)) * math.exp(-div * d) for d in grid]
        rows.append([_idx_str(k.k), _idx_str(k.kbar), k.degree, div,
                     limit.real, limit.imag, fitted_decay_rate(vals, grid)])
    meta = {"mode": "flow", "n": H.n, "K": cfg["K"], "frequency": omega.to_json(),
            "fit_grid": grid, "threads": threads, "term_count": len(rows)}
    return [Report("flow_report",
                   ("k", "kbar", "deg", "divisor", "limit_re", "limit_im", "fitted_decay"),
                   rows, meta)], None


def _run_majorant(H: FormalSeries, omega: Frequency, cfg: dict,
                  threads: int) -> tuple[list[Report], BoundViolation | None]:
    sol = flow_exact(H, omega, cfg["K"])
    mf = majorant_flow(H, cfg["majorant"]["rho"], cfg["K"],
                       initial_scale=cfg["majorant"]["initial_scale"])
    grid = cfg["delta_grid"] or [0.0, 0.5, 1.0, 2.0]
    rep = verify_domination(sol, mf.as_map(sol.support()), grid)
    rows = [[_idx_str(k.k), _idx_str(k.kbar), delta, val, bnd, bnd - val]
            for (k, delta, val, bnd, _margin) in rep.rows]
    meta = {"mode": "majorant-cert", "n": H.n, "K": cfg["K"],
            "frequency": omega.to_json(), "rho": float(cfg["majorant"]["rho"]),
            "initial_scale": float(cfg["majorant"]["initial_scale"]),
            "h": float(mf.h), "ok": rep.ok, "threads": threads}
    reports = [Report("majorant_report",
                      ("k", "kbar", "delta", "exact", "bound", "margin"), rows, meta)]
    violation = None
    if not rep.ok:
        violation = BoundViolation("majorant", "verify_domination", rep.witness,
                                   "majorant fails to dominate the flow")
    return reports, violation


def _run_pipeline(H: FormalSeries, omega: Frequency, cfg: dict,
                  threads: int) -> tuple[list[Report], BoundViolation | None]:
    K = cfg["K"]
    r = cfg["pipeline"]["r"]
    n_steps = 0
    while 2 ** n_steps + 2 < r:
        n_steps += 1
    last_s = 2 ** max(n_steps - 1, 0) + 2
    need = max(K, 2 * last_s - 2)
    J = cfg["pipeline"].get("J")
    if J is None:
        J = 0
        while 2 ** (J + 1) + 2 < need:
            J += 1
    a = make_a_sequence(omega, H.n, J)
    partial, verdict = bruno_check(a)
    pair = b_from_a(a)
    if "c0" in cfg["pipeline"] or "alpha0" in cfg["pipeline"]:
        if not {"c0", "alpha0"} <= set(cfg["pipeline"]):
            raise ValueError("pipeline.c0 and pipeline.alpha0 must be given together")
        c0, alpha0 = float(cfg["pipeline"]["c0"]), float(cfg["pipeline"]["alpha0"])
    else:
        c0, alpha0 = choose_initial_bounds(H, pair)
    G, certs = normalize_low_orders(H, omega, r, c0, alpha0, pair, K)
    eps0, eps0_variant = eps0_estimates(c0, alpha0)

    cert_rows = [[c.m, c.s, c.alpha, c.eps, c.lam, c.rho, c.band_residual, c.eps_ael]
                 for c in certs]
    meta = {"mode": "low-order-pipeline", "n": H.n, "K": K, "r": r, "J": J,
            "frequency": omega.to_json(), "c0": c0, "alpha0": alpha0,
            "eps0": eps0, "eps0_variant": eps0_variant,
            "bruno_partial_sum": partial, "bruno_verdict": verdict,
            "tail_model": pair.tail_model,
            "rho_star": certs[-1].rho if certs else math.exp(-alpha0),
            "sum_eps": math.fsum(c.eps for c in certs),
            "residual_threshold": 1e-10, "threads": threads}
    seq_rows = [["a", j, aj] for j, aj in enumerate(pair.a)]
    seq_rows += [["b", s, pair.value(s)] for s in range(3, pair.s_max + 1)]
    out_rows = [[_idx_str(k.k), _idx_str(k.kbar), k.degree, cv.real, cv.imag]
                for k, cv in sorted(G.coeffs.items())]
    reports = [
        Report("pipeline_certificates",
               ("m", "s", "alpha", "eps", "lam", "rho", "band_residual", "eps_ael"),
               cert_rows, meta),
        Report("pipeline_sequences", ("kind", "index", "value"), seq_rows,
               {"mode": "low-order-pipeline", "J": J, "tail_model": pair.tail_model,
                "threads": threads}),
        Report("pipeline_output", ("k", "kbar", "deg", "re", "im"), out_rows,
               {"mode": "low-order-pipeline", "n": H.n, "K": K, "r": r,
                "min_degree": G.min_degree, "truncation_touched": G.truncation_touched,
                "threads": threads}),
    ]
    return reports, None


def _run_corank(H: FormalSeries, omega: Frequency, cfg: dict,
                threads: int) -> tuple[list[Report], BoundViolation | None]:
    data = corank1_decompose(omega)
    sol = flow_exact(H, omega, cfg["K"])
    grid = cfg["delta_grid"] or [float(i) for i in range(7)]
    rows = []
    gstar_at: Callable[[float], FormalSeries] | None = None
    for delta in grid:
        split = corank1_split(sol, data, delta)
        gstar_at = split.gstar_at
        rows.append([delta, norm_upper_estimate(split.g0, 1.0),
                     norm_upper_estimate(split.gstar, 1.0), split.ratio,
                     split.decay_bound])
    fit = _fit_grid(grid)
    if gstar_at is None:
        gstar_at = corank1_split(sol, data, 0.0).gstar_at
    fitted = fitted_decay_rate([norm_upper_estimate(gstar_at(d), 1.0) for d in fit], fit)
    meta = {"mode": "corank1-split", "n": H.n, "K": cfg["K"],
            "frequency": omega.to_json(), "q": list(data.q), "p": data.p,
            "lam": float(data.lam), "lam_over_p": data.lam_over_p,
            "fitted_decay": _cell_json(fitted), "threads": threads}
    return [Report("corank1_report",
                   ("delta", "g0_norm", "gstar_norm", "ratio", "decay_bound"),
                   rows, meta)], None


_RUNNERS = {"flow": _run_flow, "majorant-cert": _run_majorant,
            "low-order-pipeline": _run_pipeline, "corank1-split": _run_corank}


# -- entry point -----------------------------------------------------------------

def _write_witness(exc: BoundViolation, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    body = {"module": exc.module, "operation": exc.operation,
            "witness": exc.witness, "message": str(exc)}
    path = out_dir / "witness.json"
    path.write_text(json.dumps(body, sort_keys=True, separators=(",", ":"),
                               allow_nan=False, default=str) + "\n")
    return path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="normflow", description="normal-form flow experiments from a JSON config")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute one config and write report files")
    run.add_argument("config", help="path to the JSON config")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--k", type=int, default=None, help="truncation override")
    run.add_argument("--mode", choices=MODES, default=None, help="mode override")
    args = parser.parse_args(argv)

    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(".")
    try:
        cfg = validate_config(raw)
        if args.k is not None:
            if args.k < 3:
                raise ValueError("--k must be >= 3")
            cfg["K"] = args.k
        if args.mode is not None:
            cfg["mode"] = args.mode
            if cfg["mode"] == "low-order-pipeline" and "r" not in cfg["pipeline"]:
                raise ValueError("mode low-order-pipeline requires pipeline.r")
        threads = _threads_from_env()
        out_dir = Path(args.out) if args.out is not None else Path(cfg["out"])
        H, omega = build_problem(cfg)
        reports, violation = _RUNNERS[cfg["mode"]](H, omega, cfg, threads)
        for rep in reports:
            emit_report(rep, "csv", out_dir)
            emit_report(rep, "json", out_dir)
        if violation is not None:
            path = _write_witness(violation, out_dir)
            print(f"bound violation: {violation} (witness: {path})", file=sys.stderr)
            return 2
        return 0
    except BoundViolation as exc:
        path = _write_witness(exc, out_dir)
        print(f"bound violation: {exc} (witness: {path})", file=sys.stderr)
        return 2
    except (ValueError, TermBudgetError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


def cli() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    cli()
