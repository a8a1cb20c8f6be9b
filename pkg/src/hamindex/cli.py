"""Config-driven command line: one JSON config in, one JSON report out.

The config's task block selects the command (validate, monodromy,
winding, sfl, cz, sturm, bifurcate, orbit, theorem-check); unknown keys
anywhere are rejected with their path.  Exit codes: 0 success, 2 config
or validation error, 3 not admissible, 4 numerical failure, 5
theorem-check disagreement.  Reports are deterministic modulo the timing
field; bulk numerics go to CSV files under --traces.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import (
    NoBranch,
    candidate_scan,
    d_gamma,
    disconnection_report,
    newton_orbit,
)
from .errors import (
    AdmissibilityError,
    ConfigError,
    ExpressionError,
    FamilyValidationError,
    HamindexError,
    NumericalError,
)
from .families import BUILTIN_FAMILIES, NONLINEAR_BUILTINS, random_trig_family
from .model import (
    Circle,
    CoefficientFamily,
    Interval,
    NonlinearFamily,
    ParameterPath,
    Rectangle,
    validate_family,
)
from .monodromy import DEFAULT_MARGIN, MonodromyField, kernel_scan, monodromy_index, rho_winding
from .spectral import default_cutoff, spectral_flow_along
from .sturm import CONVENTIONS, DEFAULT_CONVENTION, HomogeneousPair, homogeneous_index
from .symplectic import conley_zehnder, symplectic_path
from .theorem import theorem_check
from .winding import rectangle_curve

COMMANDS = (
    "validate",
    "monodromy",
    "winding",
    "sfl",
    "cz",
    "sturm",
    "bifurcate",
    "orbit",
    "theorem-check",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_ADMISSIBLE = 3
EXIT_NUMERICAL = 4
EXIT_DISAGREEMENT = 5


def _require_keys(obj, allowed: set[str], required: set[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing key {path}.{key}")


def _positive(value, path: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number") from None
    if x <= 0:
        raise ConfigError(f"{path}: must be positive")
    return x


@dataclass
class Numerics:
    integrator_steps: int = 2048
    integrator_tol: float = 1e-9
    modes: int | None = None
    sturm_convention: str = DEFAULT_CONVENTION
    endpoint_rho_tol: float = 1e-6
    pencil_tol: float = 1e-6
    crossing_sv_tol: float = 1e-6
    margin: float = DEFAULT_MARGIN
    threads: int = 1
    seed: int | None = None


def _parse_numerics(block: dict | None, path: str = "numerics") -> Numerics:
    num = Numerics()
    if block is None:
        return num
    allowed = {
        "integrator_steps",
        "integrator_tol",
        "modes",
        "sturm_convention",
        "thresholds",
        "margin",
    }
    _require_keys(block, allowed, set(), path)
    if "integrator_steps" in block:
        num.integrator_steps = int(_positive(block["integrator_steps"], f"{path}.integrator_steps"))
    if "integrator_tol" in block:
        num.integrator_tol = _positive(block["integrator_tol"], f"{path}.integrator_tol")
    if "modes" in block and block["modes"] is not None:
        num.modes = int(_positive(block["modes"], f"{path}.modes"))
    if "margin" in block:
        num.margin = _positive(block["margin"], f"{path}.margin")
    if "sturm_convention" in block:
        if block["sturm_convention"] not in CONVENTIONS:
            raise ConfigError(
                f"{path}.sturm_convention: must be one of {list(CONVENTIONS)}"
            )
        num.sturm_convention = block["sturm_convention"]
    thresholds = block.get("thresholds")
    if thresholds is not None:
        _require_keys(
            thresholds,
            {"endpoint_rho", "pencil", "crossing_sv"},
            set(),
            f"{path}.thresholds",
        )
        if "endpoint_rho" in thresholds:
            num.endpoint_rho_tol = _positive(thresholds["endpoint_rho"], f"{path}.thresholds.endpoint_rho")
        if "pencil" in thresholds:
            num.pencil_tol = _positive(thresholds["pencil"], f"{path}.thresholds.pencil")
        if "crossing_sv" in thresholds:
            num.crossing_sv_tol = _positive(thresholds["crossing_sv"], f"{path}.thresholds.crossing_sv")
    return num


def _parse_family(block: dict | None, seed_override: int | None):
    """Returns (linear family | None, nonlinear family | None)."""
    if block is None:
        return None, None
    allowed = {"n", "arity", "entries", "gradient", "builtin", "random_trig"}
    _require_keys(block, allowed, set(), "family")
    sources = [k for k in ("entries", "gradient", "builtin", "random_trig") if k in block]
    if len(sources) != 1:
        raise ConfigError(
            "family: exactly one of entries | gradient | builtin | random_trig is required"
        )
    kind = sources[0]
    if kind == "builtin":
        key = block["builtin"]
        if key in BUILTIN_FAMILIES:
            return BUILTIN_FAMILIES[key].family, None
        if key in NONLINEAR_BUILTINS:
            return None, NONLINEAR_BUILTINS[key]
        raise ConfigError(f"family.builtin: unknown builtin {key!r}")
    if kind == "random_trig":
        sub = block["random_trig"]
        _require_keys(sub, {"n", "degree", "amplitude", "seed"}, set(), "family.random_trig")
        seed = seed_override if seed_override is not None else sub.get("seed")
        if seed is None:
            raise ConfigError("family.random_trig.seed: required (or pass --seed)")
        rng = np.random.default_rng(int(seed))
        return (
            random_trig_family(
                rng,
                n=int(sub.get("n", 1)),
                degree=int(sub.get("degree", 3)),
                amplitude=float(sub.get("amplitude", 0.5)),
            ),
            None,
        )
    n = block.get("n")
    if n is None:
        raise ConfigError("missing key family.n")
    arity = int(block.get("arity", 1))
    try:
        if kind == "entries":
            return CoefficientFamily.from_strings(int(n), block["entries"], arity=arity), None
        return None, NonlinearFamily.from_strings(int(n), block["gradient"], arity=arity)
    except ExpressionError as exc:
        raise ConfigError(f"family.{kind}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"family.{kind}: {exc}") from exc


def _parse_domain(block: dict | None):
    if block is None:
        return None
    _require_keys(
        block,
        {"kind", "bounds", "resolution", "boundary", "circumference"},
        {"kind"},
        "domain",
    )
    kind = block["kind"]
    try:
        if kind == "interval":
            lo, hi = block["bounds"]
            return Interval(
                float(lo),
                float(hi),
                int(block.get("resolution", 256)),
                tuple(float(x) for x in block["boundary"]) if "boundary" in block else None,
            )
        if kind == "circle":
            return Circle(
                float(block.get("circumference", 2 * np.pi)),
                int(block.get("resolution", 64)),
            )
        if kind == "rectangle":
            (a1, b1), (a2, b2) = block["bounds"]
            res = block.get("resolution", [64, 64])
            boundary = tuple(tuple(map(float, p)) for p in block.get("boundary", ()))
            return Rectangle(
                ((float(a1), float(b1)), (float(a2), float(b2))),
                (int(res[0]), int(res[1])),
                boundary,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc
    raise ConfigError(f"domain.kind: unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# trace writers


class Traces:
    def __init__(self, directory: str | None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, header: list[str], rows) -> None:
        if not self.directory:
            return
        with open(self.directory / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)


def _dump_winding_samples(traces: Traces, name: str, result) -> None:
    if result.samples is None:
        return
    traces.write(
        name,
        ["param", "lambda", "s", "re_rho", "im_rho", "unwrapped_phase"],
        [(t, x, y, v.real, v.imag, ph) for (t, x, y, v, ph) in result.samples],
    )


def _dump_eigen_trace(traces: Traces, name: str, path, band: float = 2.0) -> None:
    rows = []
    width = 0
    data = path.trace(band)
    for lam, eigs in data:
        width = max(width, len(eigs))
    for lam, eigs in data:
        rows.append([lam] + [float(e) for e in eigs] + [""] * (width - len(eigs)))
    traces.write(name, ["lambda"] + [f"mu{i + 1}" for i in range(width)], rows)


# ---------------------------------------------------------------------------
# command handlers: each returns (result dict, exit code)


def _interval_from_task(task: dict, family, num: Numerics) -> tuple[float, float]:
    if "interval" not in task:
        raise ConfigError("missing key task.interval")
    a, b = task["interval"]
    return float(a), float(b)


def _need_linear(linear) -> CoefficientFamily:
    if linear is None:
        raise ConfigError("this command needs a linear coefficient family")
    return linear


def _validated(linear, domain) -> CoefficientFamily:
    report = validate_family(linear, domain)
    report.raise_if_invalid()
    return linear


def _cmd_validate(linear, nonlinear, domain, num, task, traces):
    _require_keys(task, {"command"}, set(), "task")
    if linear is None and nonlinear is None:
        raise ConfigError("validate needs a family block")
    if linear is not None:
        report = validate_family(linear, domain)
    else:
        report = nonlinear.validate_trivial_branch(domain)
    result = {
        "ok": report.ok,
        "n_lambda_samples": report.n_lambda_samples,
        "n_time_samples": report.n_time_samples,
        "violations": [
            {
                "kind": v.kind,
                "lambda": list(v.lam),
                "t": v.t,
                "entry": list(v.entry) if v.entry else None,
                "magnitude": v.magnitude,
            }
            for v in report.violations[:50]
        ],
    }
    return result, EXIT_OK if report.ok else EXIT_CONFIG


def _cmd_monodromy(linear, nonlinear, domain, num, task, traces):
    _require_keys(
        task, {"command", "interval", "margin", "trajectory_at"}, {"interval"}, "task"
    )
    family = _validated(_need_linear(linear), domain)
    a, b = _interval_from_task(task, family, num)
    margin = float(task.get("margin", num.margin))
    field = MonodromyField(family, steps=num.integrator_steps, tol=num.integrator_tol)
    index = monodromy_index(field, (a, b), margin, endpoint_tol=num.endpoint_rho_tol)
    points = kernel_scan(field, (a, b))
    if "trajectory_at" in task and traces.directory:
        lam, s = task["trajectory_at"]
        ts, hist = solution_trajectory(
            family, float(lam), float(s), steps=num.integrator_steps
        )
        d = family.dim
        header = ["t"] + [
            f"{part}_psi_{i}{j}" for i in range(d) for j in range(d) for part in ("re", "im")
        ]
        rows = [
            [float(t)]
            + [
                float(np.real(m[i, j])) if part == "re" else float(np.imag(m[i, j]))
                for i in range(d)
                for j in range(d)
                for part in ("re", "im")
            ]
            for t, m in zip(ts, hist)
        ]
        traces.write("trajectory.csv", header, rows)
    return {
        "index": index,
        "margin": margin,
        "degeneracies": [
            {"lambda": p.lam, "rho_abs": p.rho_abs, "bracket": list(p.bracket)} for p in points
        ],
    }, EXIT_OK


def _cmd_winding(linear, nonlinear, domain, num, task, traces):
    _require_keys(
        task, {"command", "rectangle", "samples_per_edge"}, {"rectangle"}, "task"
    )
    family = _validated(_need_linear(linear), domain)
    (a, b), (smin, smax) = task["rectangle"]
    field = MonodromyField(family, steps=num.integrator_steps, tol=num.integrator_tol)
    result = rho_winding(
        field,
        rectangle_curve((float(a), float(b)), (float(smin), float(smax))),
        samples_per_edge=int(task.get("samples_per_edge", 8)),
        keep_samples=traces.directory is not None,
    )
    _dump_winding_samples(traces, "winding_samples.csv", result)
    return {
        "winding": result.winding,
        "min_abs": result.min_abs,
        "max_abs": result.max_abs,
        "refinement_depth": result.depth,
        "certified": result.certified,
        "n_samples": result.n_samples,
    }, EXIT_OK


def _cmd_sfl(linear, nonlinear, domain, num, task, traces):
    _require_keys(
        task,
        {"command", "interval", "operator", "loop", "nodes"},
        {"interval"},
        "task",
    )
    family = _validated(_need_linear(linear), domain)
    a, b = _interval_from_task(task, family, num)
    kind = task.get("operator", "A")
    if kind not in ("A", "L"):
        raise ConfigError("task.operator: must be 'A' or 'L'")
    loop = bool(task.get("loop", False))
    circumference = domain.circumference if isinstance(domain, Circle) else 2 * np.pi
    flow, path = spectral_flow_along(
        family,
        kind,
        (a, b),
        cutoff=num.modes,
        nodes=int(task.get("nodes", 17)),
        loop=loop,
        loop_circumference=circumference,
        invertibility_tol=num.pencil_tol,
    )
    _dump_eigen_trace(traces, "eigen_trace.csv", path)
    return {
        "spectral_flow": flow,
        "operator": kind,
        "mode_cutoff": path.cutoff,
        "assemblies": len(path._cache),
        "loop": loop,
    }, EXIT_OK


def _cmd_cz(linear, nonlinear, domain, num, task, traces):
    _require_keys(task, {"command", "interval", "nodes"}, {"interval"}, "task")
    family = _validated(_need_linear(linear), domain)
    a, b = _interval_from_task(task, family, num)
    field = MonodromyField(family, steps=num.integrator_steps, tol=num.integrator_tol)
    path = symplectic_path(field, (a, b), nodes=int(task.get("nodes", 257)))
    index, crossings = conley_zehnder(path, sv_tol=num.crossing_sv_tol, details=True)
    return {
        "conley_zehnder": index,
        "crossings": [
            {"lambda": c.lam, "kernel_dim": c.kernel_dim, "signature": c.signature}
            for c in crossings
        ],
    }, EXIT_OK


def _cmd_sturm(linear, nonlinear, domain, num, task, traces):
    _require_keys(task, {"command", "pairs", "convention"}, {"pairs"}, "task")
    convention = task.get("convention", num.sturm_convention)
    if convention not in CONVENTIONS:
        raise ConfigError(f"task.convention: must be one of {list(CONVENTIONS)}")
    out = []
    for i, spec in enumerate(task["pairs"]):
        _require_keys(
            spec,
            {"p_degree", "p_coeffs", "q_degree", "q_coeffs", "exact"},
            {"p_degree", "p_coeffs", "q_degree", "q_coeffs"},
            f"task.pairs[{i}]",
        )
        try:
            pair = HomogeneousPair.from_lists(
                int(spec["p_degree"]),
                spec["p_coeffs"],
                int(spec["q_degree"]),
                spec["q_coeffs"],
                exact=bool(spec.get("exact", True)),
            )
        except ValueError as exc:
            raise ConfigError(f"task.pairs[{i}]: {exc}") from exc
        report = homogeneous_index(pair, convention)
        out.append(
            {
                "value": report.value,
                "method": report.method,
                "convention": report.convention,
                "formula_applicable": report.formula_applicable,
                "oracle_value": report.oracle_value,
                "chain": [list(c) for c in report.chain_coeffs] if report.chain_coeffs else None,
                "sign_changes_at_infinity": list(report.sign_changes)
                if report.sign_changes
                else None,
            }
        )
    return {"pairs": out}, EXIT_OK


def _cmd_bifurcate(linear, nonlinear, domain, num, task, traces):
    _require_keys(task, {"command", "paths", "margin"}, set(), "task")
    family = _validated(_need_linear(linear), domain)
    if domain is None:
        raise ConfigError("bifurcate needs a domain block")
    scan = candidate_scan(family, domain)
    count, labels = disconnection_report(domain, scan)
    result = {
        "candidates": [
            {
                "point": list(c.point),
                "rho_abs": c.rho_abs,
                "kernel_dim": c.kernel_dim,
            }
            for c in scan.candidates[:200]
        ],
        "n_candidates": len(scan.candidates),
        "candidate_cells": sorted(list(map(list, scan.cells))) if scan.cells else None,
        "component_count": count,
    }
    if scan.cells is not None and traces.directory:
        rows = [
            (i, j, int((i, j) in scan.cells), int(labels[i, j]))
            for i in range(labels.shape[0])
            for j in range(labels.shape[1])
        ]
        traces.write("candidate_cells.csv", ["i", "j", "candidate", "component"], rows)
    if "margin" in task and "paths" not in task:
        raise ConfigError("task.margin only applies together with task.paths")
    if "paths" in task:
        margin = float(task.get("margin", num.margin))
        d_values = []
        for k, pts in enumerate(task["paths"]):
            try:
                path = ParameterPath(tuple(tuple(map(float, p)) for p in pts))
            except ValueError as exc:
                raise ConfigError(f"task.paths[{k}]: {exc}") from exc
            d_values.append(d_gamma(family, path, margin, endpoint_tol=num.endpoint_rho_tol))
        result["d_gamma"] = d_values
    return result, EXIT_OK


def _cmd_orbit(linear, nonlinear, domain, num, task, traces):
    _require_keys(
        task,
        {"command", "lambda", "modes", "seed_amplitude", "kernel_at"},
        {"lambda", "seed_amplitude"},
        "task",
    )
    if nonlinear is None:
        raise ConfigError("orbit needs a nonlinear family (gradient block)")
    report = nonlinear.validate_trivial_branch(domain)
    report.raise_if_invalid()
    cutoff = int(task.get("modes", num.modes or 8))
    outcome = newton_orbit(
        nonlinear,
        float(task["lambda"]),
        cutoff,
        _positive(task["seed_amplitude"], "task.seed_amplitude"),
        kernel_at=float(task["kernel_at"]) if task.get("kernel_at") is not None else None,
    )
    if isinstance(outcome, NoBranch):
        return {
            "outcome": "no-branch",
            "reason": outcome.reason,
            "amplitude": outcome.amplitude,
        }, EXIT_OK
    if traces.directory:
        trunc = outcome.coefficients
        traces.write(
            "orbit_coefficients.csv",
            ["index", "value"],
            list(enumerate(map(float, trunc))),
        )
    return {
        "outcome": "orbit",
        "lambda": outcome.lam,
        "amplitude": outcome.amplitude,
        "residual": outcome.residual,
        "mode_cutoff": outcome.cutoff,
        "iterations": outcome.iterations,
    }, EXIT_OK


def _cmd_theorem_check(linear, nonlinear, domain, num, task, traces):
    _require_keys(task, {"command", "interval", "margin"}, {"interval"}, "task")
    family = _validated(_need_linear(linear), domain)
    a, b = _interval_from_task(task, family, num)
    report = theorem_check(
        family,
        (a, b),
        margin=float(task.get("margin", num.margin)),
        cutoff=num.modes,
        endpoint_rho_tol=num.endpoint_rho_tol,
        invertibility_tol=num.pencil_tol,
        crossing_sv_tol=num.crossing_sv_tol,
        integrator_steps=num.integrator_steps,
        integrator_tol=num.integrator_tol,
    )
    result = {
        "indices": {
            "monodromy_winding": report.winding,
            "spectral_flow_A": report.sfl_a,
            "spectral_flow_L": report.sfl_l,
            "conley_zehnder": report.cz,
        },
        "agreement": report.agree,
        "diagnostics": report.diagnostics,
    }
    return result, EXIT_OK if report.agree else EXIT_DISAGREEMENT


_HANDLERS = {
    "validate": _cmd_validate,
    "monodromy": _cmd_monodromy,
    "winding": _cmd_winding,
    "sfl": _cmd_sfl,
    "cz": _cmd_cz,
    "sturm": _cmd_sturm,
    "bifurcate": _cmd_bifurcate,
    "orbit": _cmd_orbit,
    "theorem-check": _cmd_theorem_check,
}


def run(config: dict, *, traces_dir: str | None = None, seed: int | None = None, threads: int = 1):
    """Execute one config document; returns (report dict, exit code)."""
    t0 = time.perf_counter()
    try:
        _require_keys(
            config,
            {"schema_version", "family", "domain", "numerics", "task"},
            {"schema_version", "task"},
            "config",
        )
        if config["schema_version"] != 1:
            raise ConfigError(f"config.schema_version: unsupported version {config['schema_version']!r}")
        task = config["task"]
        if not isinstance(task, dict) or "command" not in task:
            raise ConfigError("missing key task.command")
        command = task["command"]
        if command not in COMMANDS:
            raise ConfigError(f"task.command: unknown command {command!r}")
        num = _parse_numerics(config.get("numerics"))
        num.threads = threads
        num.seed = seed
        linear, nonlinear = _parse_family(config.get("family"), seed)
        domain = _parse_domain(config.get("domain"))
        traces = Traces(traces_dir)
        result, code = _HANDLERS[command](linear, nonlinear, domain, num, task, traces)
        report = {
            "schema_version": 1,
            "tool": {"name": "hamindex", "version": __version__},
            "command": command,
            "status": "ok" if code in (EXIT_OK, EXIT_DISAGREEMENT) else "error",
            "result": result,
            "timing_seconds": time.perf_counter() - t0,
        }
        return report, code
    except HamindexError as exc:
        code = EXIT_CONFIG
        if isinstance(exc, AdmissibilityError):
            code = EXIT_NOT_ADMISSIBLE
        elif isinstance(exc, NumericalError):
            code = EXIT_NUMERICAL
        elif isinstance(exc, (ConfigError, ExpressionError, FamilyValidationError)):
            code = EXIT_CONFIG
        report = {
            "schema_version": 1,
            "tool": {"name": "hamindex", "version": __version__},
            "command": config.get("task", {}).get("command") if isinstance(config, dict) else None,
            "status": "error",
            "error": {"reason": exc.reason, "message": str(exc)},
            "timing_seconds": time.perf_counter() - t0,
        }
        return report, code


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hamindex",
        description="Integer indices of families of periodic linear Hamiltonian systems",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config document")
    parser.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    parser.add_argument("--traces", default=None, help="directory for CSV trace dumps")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for grid sweeps")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized family generation")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report, code = run(config, traces_dir=args.traces, seed=args.seed, threads=args.threads)
    text = render_report(report)
    if args.out:
        tmp = args.out + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, args.out)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
