"""Config-driven scenario runner and engine cross-validation.

A scenario is a YAML file with sections geometry / state / engine /
output and an optional protocol.  Running one computes collective decay
rates with the requested engines (Markov kernel, mode-resolved
integration, exact small-sample algebra), optionally simulates a
preparation or switching protocol, and writes deterministic CSV/JSON
artifacts; the summary always lists each computed rate next to the
applicable closed-form prediction and their relative deviation.
"""

from __future__ import annotations

from dataclasses import dataclass
import hashlib
import math
import os

import numpy as np
import yaml

from . import __version__
from . import dicke, optics
from .ensemble import halves, make_ensemble
from .errors import (AcceptanceViolation, DickesimError, InvalidParameterError,
                     ScenarioParseError, ScenarioValidationError)
from .io import table_rows_to_json, write_csv, write_json
from .kernel import (build_kernel, closed_form_clamped, evolve_amplitudes,
                     rate_minus_closed_form, rate_of, rate_plus_closed_form,
                     rate_three_bin_closed_form)
from .states import (ExcitationState, basis_state, minus_state, plus_state,
                     three_bin_state)
from .wigner_weisskopf import extract_rate, integrate_ww, make_mode_grid

REQUIRED_SECTIONS = ("geometry", "state", "engine", "output")
KNOWN_ENGINES = ("kernel", "ww", "dicke-oracle")
WW_MAX_ATOMS = 16
PROTOCOL_KINDS = ("timed-plus", "timed-minus", "singlet-pair", "conditional",
                  "switch-demo")

_WW_DEFAULTS = {"n_angles": 6, "n_radial": 128, "cutoff_multiple": 60.0,
                "light_speed": 1e6, "t_end": 1.2, "dt": None, "n_samples": 600}
_KERNEL_DEFAULTS = {"t_end": 1.5, "n_time_samples": 301, "trajectory": True}
_TOLERANCE_DEFAULTS = {"kernel_oracle": 1e-8, "kernel_ww": 0.10,
                       "subradiant_threshold": 0.1}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    geometry: dict
    state: dict
    engine: dict
    protocol: dict
    output: dict
    sha256: str
    seed_override: int = None


def bundled_scenarios() -> dict:
    """Name -> path of the scenario files shipped with the package."""
    base = os.path.join(os.path.dirname(__file__), "scenarios")
    out = {}
    if os.path.isdir(base):
        for fn in sorted(os.listdir(base)):
            if fn.endswith(".yaml"):
                out[fn[:-5]] = os.path.join(base, fn)
    return out


def resolve_config_path(name_or_path: str) -> str:
    if os.path.isfile(name_or_path):
        return name_or_path
    bundled = bundled_scenarios()
    for key in (name_or_path, name_or_path.removesuffix(".yaml")):
        if key in bundled:
            return bundled[key]
    raise ScenarioParseError(
        f"no such config file or bundled scenario: {name_or_path!r} "
        f"(bundled: {', '.join(sorted(bundled))})")


def load_config(name_or_path: str, seed_override: int = None) -> ScenarioConfig:
    """Parse a scenario file; raises ScenarioParseError on syntax errors,
    missing sections, or non-mapping sections."""
    path = resolve_config_path(name_or_path)
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"config parse error in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioParseError(f"config root must be a mapping: {path}")
    for section in REQUIRED_SECTIONS:
        if section not in doc:
            raise ScenarioParseError(f"missing required section {section!r}")
        if not isinstance(doc[section], dict):
            raise ScenarioParseError(f"section {section!r} must be a mapping")
    if "protocol" in doc and not isinstance(doc["protocol"], dict):
        raise ScenarioParseError("section 'protocol' must be a mapping")

    geometry = dict(doc["geometry"])
    if seed_override is not None:
        geometry["seed"] = int(seed_override)
    name = doc.get("name") or os.path.splitext(os.path.basename(path))[0]
    return ScenarioConfig(
        name=str(name), geometry=geometry, state=dict(doc["state"]),
        engine=dict(doc["engine"]), protocol=dict(doc.get("protocol") or {}),
        output=dict(doc["output"]), sha256=hashlib.sha256(raw).hexdigest(),
        seed_override=seed_override)


@dataclass
class _StateSpec:
    name: str
    excitation: ExcitationState        # None if outside the sector
    full: dicke.FullState              # None unless N small enough
    closed_form: float
    closed_form_source: str
    clamped: bool


@dataclass
class _Plan:
    config: ScenarioConfig
    ensemble: object
    states: list
    engines: list
    kernel_opts: dict
    ww_opts: dict
    tolerances: dict


def _merged(defaults: dict, given: dict, section: str) -> dict:
    out = dict(defaults)
    for key, val in (given or {}).items():
        if key not in defaults:
            raise ScenarioValidationError(
                f"unknown option {key!r} in engine.{section}")
        out[key] = val
    return out


def _resolve_state(name: str, ensemble) -> _StateSpec:
    n = ensemble.n
    gamma = ensemble.gamma
    exc = full = None
    closed = None
    source = ""
    clamped = False
    if name == "plus":
        exc = plus_state(ensemble)
        closed = rate_plus_closed_form(ensemble)
        source = "large-sample symmetric"
    elif name == "minus":
        exc = minus_state(ensemble)
        closed = rate_minus_closed_form(ensemble)
        source = "large-sample antisymmetric"
        clamped = closed_form_clamped(ensemble)
    elif name == "three-bin":
        exc = three_bin_state(ensemble)
        closed = rate_three_bin_closed_form(ensemble)
        source = "large-sample three-bin"
        clamped = closed_form_clamped(ensemble)
    elif name.startswith("basis:"):
        exc = basis_state(n, int(name.split(":", 1)[1]))
    elif name.startswith("multiplet:"):
        parts = name.split(":", 1)[1].split(",")
        if len(parts) not in (2, 3):
            raise ScenarioValidationError(
                f"multiplet state needs 'multiplet:r,m[,p]', got {name!r}")
        r, m = float(parts[0]), float(parts[1])
        p = int(parts[2]) if len(parts) == 3 else 0
        full = dicke.multiplet_state(n, r, m, p)
        label = dicke.MultipletLabel(r, m, p)
        closed = dicke.ladder_rate(label, gamma)
        source = "angular-momentum ladder"
        try:
            exc = ExcitationState(dicke.extract_single_excitation(full),
                                  label=name)
        except InvalidParameterError:
            exc = None
    else:
        raise ScenarioValidationError(f"unknown state constructor {name!r}")

    if full is None and exc is not None and n <= dicke.MAX_ATOMS:
        full = dicke.embed_single_excitation(exc.amplitudes, n, label=name)
    return _StateSpec(name=name, excitation=exc, full=full,
                      closed_form=closed, closed_form_source=source,
                      clamped=clamped)


def build_plan(config: ScenarioConfig) -> _Plan:
    """Validate the parsed config and construct all static objects."""
    try:
        ensemble = make_ensemble(config.geometry)
    except (InvalidParameterError, KeyError, TypeError, ValueError) as exc:
        raise ScenarioValidationError(f"invalid geometry: {exc}") from exc

    constructors = config.state.get("constructors")
    if isinstance(constructors, str):
        constructors = [constructors]
    if not constructors:
        raise ScenarioValidationError("state.constructors must be non-empty")

    engines = config.engine.get("engines", ["kernel"])
    if isinstance(engines, str):
        engines = [engines]
    for eng in engines:
        if eng not in KNOWN_ENGINES:
            raise ScenarioValidationError(
                f"unknown engine {eng!r}; known: {KNOWN_ENGINES}")
    if not engines:
        raise ScenarioValidationError("engine.engines must be non-empty")

    kernel_opts = _merged(_KERNEL_DEFAULTS, config.engine.get("kernel"), "kernel")
    ww_opts = _merged(_WW_DEFAULTS, config.engine.get("ww"), "ww")
    tolerances = _merged(_TOLERANCE_DEFAULTS, config.engine.get("tolerances"),
                         "tolerances")
    for key, val in tolerances.items():
        if not (val > 0):
            raise ScenarioValidationError(f"tolerance {key} must be positive")
    for key in ("t_end",):
        if not (kernel_opts[key] > 0 and ww_opts[key] > 0):
            raise ScenarioValidationError("t_end must be positive")

    if config.protocol:
        kind = config.protocol.get("kind")
        if kind not in PROTOCOL_KINDS:
            raise ScenarioValidationError(
                f"unknown protocol kind {kind!r}; known: {PROTOCOL_KINDS}")

    try:
        states = [_resolve_state(str(name), ensemble) for name in constructors]
    except (InvalidParameterError, ScenarioValidationError) as exc:
        raise ScenarioValidationError(f"invalid state section: {exc}") from exc

    return _Plan(config=config, ensemble=ensemble, states=states,
                 engines=list(engines), kernel_opts=kernel_opts,
                 ww_opts=ww_opts, tolerances=tolerances)


def _engine_rates(plan: _Plan):
    """Rate per (state, engine): list of dict rows, plus side artifacts."""
    ens = plan.ensemble
    gamma = ens.gamma
    rows = []
    extras = {"trajectories": {}, "ww_trajectories": {}, "grid": None}

    kern = build_kernel(ens) if ("kernel" in plan.engines
                                 or "ww" in plan.engines) else None
    grid = None
    if "ww" in plan.engines and ens.n <= WW_MAX_ATOMS:
        grid = make_mode_grid(
            ens, n_angles=int(plan.ww_opts["n_angles"]),
            n_radial=int(plan.ww_opts["n_radial"]),
            cutoff_multiple=float(plan.ww_opts["cutoff_multiple"]),
            light_speed=float(plan.ww_opts["light_speed"]))
        extras["grid"] = grid

    dicke_ok = ens.n <= dicke.MAX_ATOMS and ens.is_dicke_limit()
    for spec in plan.states:
        for engine in plan.engines:
            row = {"state": spec.name, "engine": engine, "rate": None,
                   "skipped": False, "reason": ""}
            if engine == "kernel":
                if spec.excitation is None:
                    row.update(skipped=True,
                               reason="state outside single-excitation sector")
                else:
                    row["rate"] = rate_of(spec.excitation, kern)
            elif engine == "ww":
                if ens.n > WW_MAX_ATOMS:
                    row.update(skipped=True,
                               reason=f"capacity: N > {WW_MAX_ATOMS}")
                elif spec.excitation is None:
                    row.update(skipped=True,
                               reason="state outside single-excitation sector")
                else:
                    traj = integrate_ww(ens, grid, spec.excitation,
                                        t_end=float(plan.ww_opts["t_end"]),
                                        dt=plan.ww_opts["dt"],
                                        n_samples=int(plan.ww_opts["n_samples"]))
                    fit = extract_rate(traj, spec.excitation)
                    extras["ww_trajectories"][spec.name] = (traj, spec.excitation)
                    row["rate"] = fit.rate
                    row["stderr"] = fit.stderr
                    row["flat"] = fit.flat
            elif engine == "dicke-oracle":
                if ens.n > dicke.MAX_ATOMS:
                    row.update(skipped=True,
                               reason=f"capacity: N > {dicke.MAX_ATOMS}")
                elif not ens.is_dicke_limit():
                    row.update(skipped=True,
                               reason="requires small-sample (Dicke) geometry")
                elif spec.full is None:
                    row.update(skipped=True, reason="no full-space form")
                else:
                    row["rate"] = dicke.dicke_decay_oracle(spec.full, ens.n,
                                                           gamma)
            rows.append(row)

        if ("kernel" in plan.engines and plan.kernel_opts["trajectory"]
                and spec.excitation is not None):
            t_grid = np.linspace(0.0, float(plan.kernel_opts["t_end"]),
                                 int(plan.kernel_opts["n_time_samples"]))
            extras["trajectories"][spec.name] = evolve_amplitudes(
                spec.excitation, kern, t_grid)
    return rows, extras


def _rate_summary(plan: _Plan, rows) -> list:
    out = []
    for row in rows:
        entry = dict(row)
        spec = next(s for s in plan.states if s.name == row["state"])
        entry["closed_form"] = spec.closed_form
        entry["closed_form_source"] = spec.closed_form_source
        entry["closed_form_clamped"] = spec.clamped
        if row["rate"] is not None and spec.closed_form is not None:
            denom = max(abs(spec.closed_form), 1e-12 * plan.ensemble.gamma)
            entry["closed_form_rel_deviation"] = (
                abs(row["rate"] - spec.closed_form) / denom)
        else:
            entry["closed_form_rel_deviation"] = None
        out.append(entry)
    return out


def _run_protocol(plan: _Plan):
    """Execute the optional protocol section; returns (record, csv_blocks)."""
    proto = plan.config.protocol
    if not proto:
        return None, {}
    ens = plan.ensemble
    kind = proto["kind"]
    record = {"kind": kind}
    csv_blocks = {}

    if kind in ("timed-plus", "timed-minus"):
        prep = (optics.prepare_timed_plus(ens) if kind == "timed-plus"
                else optics.prepare_timed_minus(ens))
        target = plus_state(ens) if kind == "timed-plus" else minus_state(ens)
        record.update(
            fidelity=prep.state.fidelity_to(target),
            success_probability=prep.success_probability,
            field_vacuum_probability=prep.photon_state.field_vacuum_probability,
            state=prep.state.to_json_dict())
    elif kind == "singlet-pair":
        pairs = proto.get("pairs", [[0, 1]])
        if not pairs:
            raise ScenarioValidationError("singlet-pair needs at least one pair")
        state = None
        prob = 1.0
        for i, j in pairs:
            state, prob = optics.prepare_singlet_pair(int(i), int(j), ens.n,
                                                      base=state)
        expected = None
        for i, j in pairs:
            vec = (dicke.ground_state(ens.n) if expected is None
                   else expected)
            expected = dicke._pair_create(vec, int(i), int(j), ens.n, -1.0)
        expected_state = dicke.FullState(expected)
        record.update(
            pairs=[[int(i), int(j)] for i, j in pairs],
            fidelity=state.fidelity_to(expected_state),
            success_probability=prob,
            oracle_rate=dicke.dicke_decay_oracle(state, ens.n, ens.gamma))
    elif kind == "conditional":
        target = proto.get("target", "plus")
        epsilons = proto.get("epsilons", [0.05, 0.1])
        if not isinstance(epsilons, (list, tuple)):
            epsilons = [epsilons]
        target_state = plus_state(ens) if target == "plus" else minus_state(ens)
        outcomes = []
        for eps in epsilons:
            out = optics.conditional_prepare(ens, target, float(eps))
            outcomes.append({
                "drive_strength": float(eps),
                "no_count_probability": out.no_count_probability,
                "count_probability": out.count_probability,
                "fidelity": out.no_count_state.fidelity_to(target_state),
                "thin_medium": out.thin_medium,
            })
        record.update(target=target, outcomes=outcomes)
    elif kind == "switch-demo":
        t_switch = float(proto.get("switch_time", 1.0))
        t_end = float(proto.get("t_end", 2.0))
        n_samples = int(proto.get("n_samples", 201))
        if not (0 < t_switch < t_end):
            raise ScenarioValidationError(
                "switch-demo needs 0 < switch_time < t_end")
        kern = build_kernel(ens)
        initial = minus_state(ens)
        part = halves(ens)
        seg1 = evolve_amplitudes(initial, kern,
                                 np.linspace(0.0, t_switch, n_samples))
        flipped = seg1.amplitudes[-1].copy()
        flipped[part.bins[1]] *= -1.0
        switched = ExcitationState.normalized(flipped, label="switched")
        seg2 = evolve_amplitudes(switched, kern,
                                 np.linspace(0.0, t_end - t_switch, n_samples))
        survival1 = seg1.survival
        scale = float(np.sum(np.abs(flipped) ** 2))
        times = np.concatenate([seg1.times, t_switch + seg2.times[1:]])
        survival = np.concatenate([survival1, scale * seg2.survival[1:]])
        record.update(
            switch_time=t_switch,
            rate_before=rate_of(initial, kern),
            rate_after=rate_of(switched, kern),
            fidelity_to_plus=switched.fidelity_to(plus_state(ens)),
            survival_at_switch=float(survival1[-1]))
        csv_blocks["switch_demo"] = (
            ["t", "survival"],
            [(float(t), float(p)) for t, p in zip(times, survival)])
    return record, csv_blocks


def _meta(config: ScenarioConfig) -> dict:
    return {
        "tool-version": __version__,
        "config-sha256": config.sha256,
        "scenario": config.name,
        "seed-override": ("none" if config.seed_override is None
                          else config.seed_override),
    }


def _trajectory_columns(n: int):
    cols = ["t", "survival"]
    for j in range(n):
        cols += [f"re_beta_{j}", f"im_beta_{j}"]
    return cols


def _trajectory_rows(traj):
    rows = []
    for i, t in enumerate(traj.times):
        row = [float(t), float(traj.survival[i])]
        for a in traj.amplitudes[i]:
            row += [float(a.real), float(a.imag)]
        rows.append(row)
    return rows


def _ww_columns():
    return ["t", "p_atoms", "p_field", "re_projection", "im_projection"]


def _ww_rows(traj, subspace):
    proj = traj.amplitudes @ subspace.amplitudes.conj()
    return [[float(t), float(pa), float(pf), float(pr.real), float(pr.imag)]
            for t, pa, pf, pr in zip(traj.times, traj.atom_norm2,
                                     traj.field_norm2, proj)]


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in name)


def _write_table(out_dir, base, meta, columns, rows, fmt, artifacts):
    if fmt == "json":
        path = os.path.join(out_dir, base + ".json")
        write_json(path, meta, {"rows": table_rows_to_json(columns, rows)})
    else:
        path = os.path.join(out_dir, base + ".csv")
        write_csv(path, meta, columns, rows)
    artifacts.append(path)


@dataclass
class ScenarioResult:
    summary: dict
    artifacts: list


def run_scenario(config: ScenarioConfig, out_dir: str,
                 fmt: str = "csv") -> ScenarioResult:
    """Execute a scenario and write its artifacts.

    All computation happens before the first file is written, so a
    failing engine leaves no partial outputs.
    """
    if fmt not in ("csv", "json"):
        raise ScenarioValidationError(f"unknown format {fmt!r}")
    plan = build_plan(config)
    rows, extras = _engine_rates(plan)
    summary_rows = _rate_summary(plan, rows)
    protocol_record, csv_blocks = _run_protocol(plan)

    meta = _meta(config)
    ens = plan.ensemble
    summary = {
        "scenario": config.name,
        "ensemble": {
            "n_atoms": ens.n, "gamma": ens.gamma, "lambda0": ens.lambda0,
            "radius_R": ens.radius_R, "area_A": ens.area_A,
            "dicke_limit": ens.is_dicke_limit(), "label": ens.label,
        },
        "engines": plan.engines,
        "rates": summary_rows,
    }
    if protocol_record is not None:
        summary["protocol"] = protocol_record
    if extras["grid"] is not None:
        summary["grid_calibration"] = extras["grid"].calibration_report()

    os.makedirs(out_dir, exist_ok=True)
    artifacts = []
    summary_path = os.path.join(out_dir, "summary.json")
    write_json(summary_path, meta, summary)
    artifacts.append(summary_path)

    rate_columns = ["state", "engine", "rate", "closed_form",
                    "closed_form_rel_deviation", "closed_form_clamped",
                    "skipped", "reason"]
    rate_rows = [[r["state"], r["engine"], r["rate"], r["closed_form"],
                  r["closed_form_rel_deviation"], r["closed_form_clamped"],
                  r["skipped"], r["reason"]] for r in summary_rows]
    _write_table(out_dir, "rates", meta, rate_columns, rate_rows, fmt,
                 artifacts)

    for name, traj in extras["trajectories"].items():
        _write_table(out_dir, f"decay_{_safe(name)}", meta,
                     _trajectory_columns(ens.n), _trajectory_rows(traj), fmt,
                     artifacts)
    for name, (traj, subspace) in extras["ww_trajectories"].items():
        _write_table(out_dir, f"ww_{_safe(name)}", meta, _ww_columns(),
                     _ww_rows(traj, subspace), fmt, artifacts)
    if extras["grid"] is not None:
        path = os.path.join(out_dir, "grid_calibration.json")
        write_json(path, meta, extras["grid"].calibration_report())
        artifacts.append(path)
    if protocol_record is not None:
        path = os.path.join(out_dir, "protocol.json")
        write_json(path, meta, protocol_record)
        artifacts.append(path)
    for base, (columns, rows) in csv_blocks.items():
        _write_table(out_dir, base, meta, columns, rows, fmt, artifacts)

    return ScenarioResult(summary=summary, artifacts=artifacts)


@dataclass
class CompareResult:
    report: dict
    artifacts: list
    passed: bool


def compare_engines(config: ScenarioConfig, out_dir: str,
                    fmt: str = "csv") -> CompareResult:
    """Cross-validate the engines on every configured state.

    Kernel vs exact-algebra rates must agree to the kernel_oracle
    tolerance (small-sample geometry only); kernel vs mode-resolved rates
    to the kernel_ww tolerance, with deeply subradiant states compared by
    classification below the subradiant threshold.  Engines out of
    capacity are skipped and marked.  Raises AcceptanceViolation (after
    writing the report) if any check fails.
    """
    if fmt not in ("csv", "json"):
        raise ScenarioValidationError(f"unknown format {fmt!r}")
    plan = build_plan(config)
    rows, extras = _engine_rates(plan)
    gamma = plan.ensemble.gamma
    tol = plan.tolerances

    by_state = {}
    for row in rows:
        by_state.setdefault(row["state"], {})[row["engine"]] = row

    checks = []
    for name, engines in by_state.items():
        kern = engines.get("kernel")

        def _rate(r):
            return None if (r is None or r["skipped"]) else r["rate"]

        k_rate = _rate(kern)
        o_rate = _rate(engines.get("dicke-oracle"))
        w_rate = _rate(engines.get("ww"))
        if k_rate is not None and o_rate is not None:
            scale = max(abs(k_rate), abs(o_rate), gamma)
            dev = abs(k_rate - o_rate) / scale
            checks.append({"state": name, "pair": "kernel-vs-oracle",
                           "deviation": dev, "tolerance": tol["kernel_oracle"],
                           "passed": dev <= tol["kernel_oracle"]})
        if k_rate is not None and w_rate is not None:
            thr = tol["subradiant_threshold"] * gamma
            if k_rate < thr and w_rate < thr:
                checks.append({"state": name, "pair": "kernel-vs-ww",
                               "deviation": 0.0,
                               "tolerance": tol["kernel_ww"],
                               "passed": True,
                               "note": "both classified subradiant"})
            else:
                dev = abs(k_rate - w_rate) / max(abs(k_rate), abs(w_rate))
                checks.append({"state": name, "pair": "kernel-vs-ww",
                               "deviation": dev,
                               "tolerance": tol["kernel_ww"],
                               "passed": dev <= tol["kernel_ww"]})

    passed = all(c["passed"] for c in checks)
    report = {
        "scenario": config.name,
        "n_atoms": plan.ensemble.n,
        "engines": plan.engines,
        "rates": rows,
        "checks": checks,
        "passed": passed,
    }
    meta = _meta(config)
    os.makedirs(out_dir, exist_ok=True)
    artifacts = []
    path = os.path.join(out_dir, "compare_report.json")
    write_json(path, meta, report)
    artifacts.append(path)
    columns = ["state", "engine", "rate", "skipped", "reason"]
    table = [[r["state"], r["engine"], r["rate"], r["skipped"], r["reason"]]
             for r in rows]
    _write_table(out_dir, "compare_rates", meta, columns, table, fmt,
                 artifacts)

    if not passed:
        failing = [c for c in checks if not c["passed"]]
        raise AcceptanceViolation(
            f"engine cross-check failed: {failing}")
    return CompareResult(report=report, artifacts=artifacts, passed=passed)
