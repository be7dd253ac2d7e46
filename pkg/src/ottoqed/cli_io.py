"""Config ingestion, CSV/JSON result bundles, and the ottoqed command line.

Bundle layout: <dir>/<prefix>.csv holds the sampled time series with the fixed
header ``t,stroke,U,S,W,Q_a,Q_f,P_inst,P_av,P_c_av,pop_*`` (12 significant
digits; W, Q and the averaged powers restart at each stroke boundary, matching
their per-stroke definitions); <dir>/<prefix>.json holds per-stroke and cycle
totals, the resonance report, and the resolved configuration with its sha256,
so a figure can be reproduced from its output directory alone. Reruns of the
same configuration produce byte-identical CSV files.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime or physics
error (leakage, trace drift, non-convergence, ambiguous resonance).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, cycle, dynamics, hilbert, spectra, thermo
from .dynamics import BathSpec, IntegratorConfig
from .hilbert import FockCutoff
from .model import SystemParams
from .thermo import StrokeRecord

__all__ = ["ConfigError", "RunConfig", "ResultBundle", "load_config", "emit", "main"]

CSV_BASE_COLUMNS = ("t", "stroke", "U", "S", "W", "Q_a", "Q_f", "P_inst", "P_av", "P_c_av")


class ConfigError(ValueError):
    """Configuration file violates the schema or a physics invariant."""


_SCHEMA = {
    "model": ("jc", "rabi"),
    "params": {"omega": float, "omega0": float, "g0": float, "eps": float, "eta": (float, None)},
    "cutoff": int,
    "baths": {
        "atom": {"rate": float, "temperature": float},
        "cavity": {"rate": float, "temperature": float},
    },
    "integrator": {
        "step": (float, None),
        "sample_every": int,
        "renormalize_trace": bool,
        "leakage_tol": float,
        "stroboscopic": bool,
    },
    "cycle": {
        "isochore_multiple": float,
        "reset_duration": (float, None),
        "work_window": list,
        "sideband_n": int,
    },
    "rabi": {"nbar": float, "regime": ("jc", "adce"), "duration": (float, None)},
    "stroke": {"duration": (float, None)},
    "populations": list,
    "output": {"dir": str, "prefix": str, "thin": int},
}

_DEFAULTS = {
    "params": {"omega": 1.0, "eps": 0.0, "eta": None},
    "cutoff": 4,
    "baths": {"atom": {"rate": 0.0, "temperature": 0.0},
              "cavity": {"rate": 0.0, "temperature": 0.0}},
    "integrator": {"step": None, "sample_every": 1, "renormalize_trace": False,
                   "leakage_tol": 1e-4, "stroboscopic": True},
    "cycle": {"isochore_multiple": 10.0, "reset_duration": None,
              "work_window": [0.85, 1.2], "sideband_n": 0},
    "rabi": {"nbar": 0.0, "regime": "jc", "duration": None},
    "stroke": {"duration": None},
    "populations": ["g0", "e0", "g1", "e1"],
    "output": {"dir": "out", "prefix": "run", "thin": 10},
}


def _check_keys(section: dict, schema: dict, path: str) -> None:
    for key in section:
        if key not in schema:
            raise ConfigError(f"unknown key {path}{key!r}")


def _check_value(value, expect, path: str):
    if isinstance(expect, tuple) and None in expect:
        if value is None:
            return None
        expect = next(e for e in expect if e is not None)
    if isinstance(expect, tuple):  # enumerated strings
        if value not in expect:
            raise ConfigError(f"{path}: expected one of {expect}, got {value!r}")
        return value
    if expect is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if expect is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if expect is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if expect is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if expect is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return value
    raise AssertionError(f"bad schema entry at {path}")


@dataclass
class RunConfig:
    """Validated configuration with resolved domain objects."""

    model: str
    params: SystemParams
    cutoff: FockCutoff
    bath_atom: BathSpec
    bath_cavity: BathSpec
    integrator: IntegratorConfig
    cycle_opts: dict
    rabi_opts: dict
    stroke_opts: dict
    populations: tuple[str, ...]
    out_dir: str
    prefix: str
    thin: int
    resolved: dict = field(default_factory=dict)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(
            json.dumps(self.resolved, sort_keys=True).encode()
        ).hexdigest()


def _merge_defaults(raw: dict) -> dict:
    merged = {}
    for key, default in _DEFAULTS.items():
        if isinstance(default, dict):
            merged[key] = dict(default)
            merged[key].update(raw.get(key, {}) or {})
        else:
            merged[key] = raw.get(key, default)
    for key in ("model",):
        if key in raw:
            merged[key] = raw[key]
    return merged


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a JSON run configuration (bundled presets by name)."""
    p = Path(path)
    if not p.exists():
        candidate = resources.files("ottoqed").joinpath("presets", p.name)
        if candidate.is_file():
            text = candidate.read_text()
        elif resources.files("ottoqed").joinpath("presets", p.name + ".json").is_file():
            text = resources.files("ottoqed").joinpath("presets", p.name + ".json").read_text()
        else:
            raise ConfigError(f"config file not found: {path}")
    else:
        text = p.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    _check_keys(raw, _SCHEMA, "")
    if "model" not in raw:
        raise ConfigError("missing required key 'model'")
    model = _check_value(raw["model"], _SCHEMA["model"], "model")
    if "params" not in raw or not isinstance(raw["params"], dict):
        raise ConfigError("missing required section 'params'")
    for section in ("params", "baths", "integrator", "cycle", "rabi", "stroke", "output"):
        if section in raw:
            if not isinstance(raw[section], dict):
                raise ConfigError(f"section {section!r} must be an object")
            _check_keys(raw[section], _SCHEMA[section], f"{section}.")
            if section == "baths":
                for b in raw[section]:
                    _check_keys(raw[section][b], _SCHEMA["baths"][b], f"baths.{b}.")

    merged = _merge_defaults(raw)
    for req in ("omega0", "g0"):
        if req not in merged["params"]:
            raise ConfigError(f"params.{req} is required")

    vals = {}
    for key, expect in _SCHEMA["params"].items():
        if key in merged["params"]:
            vals[key] = _check_value(merged["params"][key], expect, f"params.{key}")
    for sec in ("baths", "integrator", "cycle", "rabi", "stroke", "output"):
        for key, expect in _SCHEMA[sec].items():
            if isinstance(expect, dict):
                for k2, e2 in expect.items():
                    merged[sec][key][k2] = _check_value(
                        merged[sec][key][k2], e2, f"{sec}.{key}.{k2}"
                    )
            else:
                merged[sec][key] = _check_value(merged[sec][key], expect, f"{sec}.{key}")
    merged["cutoff"] = _check_value(merged["cutoff"], _SCHEMA["cutoff"], "cutoff")
    merged["populations"] = _check_value(merged["populations"], list, "populations")

    ww = merged["cycle"]["work_window"]
    if len(ww) != 2 or not all(isinstance(x, (int, float)) for x in ww) or not ww[0] < ww[1]:
        raise ConfigError("cycle.work_window must be [lo, hi] with lo < hi")

    try:
        cutoff = FockCutoff(merged["cutoff"])
        params = SystemParams(
            omega0=vals["omega0"], g0=vals["g0"],
            eps=vals.get("eps", 0.0),
            eta=vals.get("eta") or 0.0,
            omega=vals.get("omega", 1.0),
        )
        params.validate(cutoff)
        bath_atom = BathSpec("atom", **merged["baths"]["atom"])
        bath_cavity = BathSpec("cavity", **merged["baths"]["cavity"])
        integrator = IntegratorConfig(**merged["integrator"])
        for lab in merged["populations"]:
            n, _ = hilbert.parse_state_label(lab)
            if n > cutoff.n_max:
                raise ValueError(f"population label {lab!r} outside cutoff n_max={cutoff.n_max}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    merged["model"] = model
    merged["params"] = {
        "omega": params.omega, "omega0": params.omega0, "g0": params.g0,
        "eps": params.eps, "eta": vals.get("eta"),
    }
    return RunConfig(
        model=model,
        params=params,
        cutoff=cutoff,
        bath_atom=bath_atom,
        bath_cavity=bath_cavity,
        integrator=integrator,
        cycle_opts=merged["cycle"],
        rabi_opts=merged["rabi"],
        stroke_opts=merged["stroke"],
        populations=tuple(merged["populations"]),
        out_dir=merged["output"]["dir"],
        prefix=merged["output"]["prefix"],
        thin=merged["output"]["thin"],
        resolved=merged,
    )


@dataclass
class ResultBundle:
    csv_path: Path
    json_path: Path
    summary: dict


def _fmt(x: float) -> str:
    return f"{x + 0.0:.12g}" if x != 0 else "0"


def _stroke_rows(rec: StrokeRecord, pop_labels, thin: int, t_offset: float):
    n = len(rec.times)
    idx = sorted(set(range(0, n, max(1, thin))) | {n - 1})
    p_av = thermo.avg_quantum_power_series(rec)
    p_c = thermo.avg_classical_power_series(rec)
    for i in idx:
        row = [
            _fmt(rec.times[i] + t_offset),
            rec.label,
            _fmt(rec.u[i]),
            _fmt(rec.s[i]),
            _fmt(rec.w[i]),
            _fmt(rec.q_a[i]),
            _fmt(rec.q_f[i]),
            _fmt(rec.p_inst[i]),
            _fmt(p_av[i]),
            _fmt(p_c[i]),
        ]
        for lab in pop_labels:
            row.append(_fmt(rec.pops[lab][i]))
        yield ",".join(row)


def emit(
    records: list[StrokeRecord],
    run_config: RunConfig,
    summary: dict,
    out_dir: str | Path | None = None,
    prefix: str | None = None,
) -> ResultBundle:
    """Write the CSV time series and JSON summary for a sequence of strokes."""
    out = Path(out_dir if out_dir is not None else run_config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = prefix if prefix is not None else run_config.prefix
    pop_labels = run_config.populations
    csv_path = out / f"{prefix}.csv"
    json_path = out / f"{prefix}.json"

    header = ",".join(CSV_BASE_COLUMNS + tuple(f"pop_{lab}" for lab in pop_labels))
    lines = [header]
    t_offset = 0.0
    for rec in records:
        lines.extend(_stroke_rows(rec, pop_labels, run_config.thin, t_offset))
        t_offset += rec.duration
    csv_path.write_text("\n".join(lines) + "\n")

    summary = dict(summary)
    summary["provenance"] = {
        "package": "ottoqed",
        "version": __version__,
        "config_sha256": run_config.sha256,
        "config": run_config.resolved,
    }
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return ResultBundle(csv_path, json_path, summary)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cycle_spec(rc: RunConfig) -> cycle.CycleSpec:
    return cycle.CycleSpec(
        model=rc.model,
        params=rc.params,
        cutoff=rc.cutoff,
        bath_atom=rc.bath_atom,
        bath_cavity=rc.bath_cavity,
        eta=(rc.params.eta or None),
        sideband_n=rc.cycle_opts["sideband_n"],
        isochore_multiple=rc.cycle_opts["isochore_multiple"],
        reset_duration=rc.cycle_opts["reset_duration"],
        work_window=tuple(rc.cycle_opts["work_window"]),
        pop_labels=rc.populations,
    )


def _cmd_otto(rc: RunConfig, args) -> int:
    spec = _cycle_spec(rc)
    crec = cycle.run_otto_cycle(spec, rc.integrator)
    report = spectra.resonance_report(rc.params, rc.cutoff, rc.model, rc.cycle_opts["sideband_n"])
    summary = {
        "kind": "otto",
        "eta": crec.eta,
        "t3_minus_t2": crec.t3_minus_t2,
        "q_in": crec.q_in,
        "w_out": crec.w_out,
        "q_out": crec.q_out,
        "w_in": crec.w_in,
        "closure": crec.closure,
        "efficiency": abs(crec.w_out) / crec.q_in if crec.q_in else None,
        "per_stroke": crec.per_stroke,
        "boundaries": crec.boundaries,
        "resonance": report.to_dict(),
    }
    bundle = emit(crec.strokes, rc, summary, args.out, args.prefix)
    print(f"wrote {bundle.csv_path} and {bundle.json_path}")
    print(
        f"Q_in={crec.q_in:.6f} W_out={crec.w_out:.6f} Q_out={crec.q_out:.6f} "
        f"W_in={crec.w_in:.2e} closure={crec.closure:.2e}"
    )
    return 0


def _stroke_initial_state(rc: RunConfig) -> np.ndarray:
    if rc.model == "rabi":
        return hilbert.thermal_cavity_state(rc.rabi_opts["nbar"], rc.cutoff)
    return hilbert.atom_thermal_mixture(
        rc.params.omega0, rc.bath_atom.temperature, rc.cutoff
    )


def _resolve_stroke_duration(rc: RunConfig, eta_res: float):
    """Stroke length shared by all drive frequencies of a Fig.-2-style family.

    Configured duration wins; otherwise the work stroke is scanned at the
    resonant frequency and cut at the optimal zero crossing, and that length
    is reused for every off-resonant run (the comparisons are defined on a
    common time span). Returns (duration, resonant_record_or_None).
    """
    if rc.stroke_opts["duration"] is not None:
        return rc.stroke_opts["duration"], None
    spec = dataclasses.replace(_cycle_spec(rc), eta=eta_res)
    rho0 = _stroke_initial_state(rc)
    rec, idx3, t3 = cycle.scan_work_stroke(rho0, spec, rc.integrator)
    return t3, rec.truncate(idx3)


def _cmd_stroke(rc: RunConfig, args) -> int:
    report = spectra.resonance_report(rc.params, rc.cutoff, rc.model, rc.cycle_opts["sideband_n"])
    eta_res = report.refined_sideband
    duration, rec_res = _resolve_stroke_duration(rc, eta_res)
    eta = rc.params.eta if rc.params.eta else eta_res
    if rec_res is not None and abs(eta - eta_res) < 1e-12:
        rec = rec_res
    else:
        rho0 = _stroke_initial_state(rc)
        ham = cycle._build_ham(rc.model, rc.params.with_eta(eta), rc.cutoff,
                               "ramp_on", "harmonic", eta)
        rec = dynamics.evolve(rho0, duration, ham, None, rc.integrator,
                              pop_labels=rc.populations, label="work_extraction")
    p_av = thermo.avg_quantum_power(rec, rec.times[-1])
    p_c = thermo.avg_classical_power(rec, rec.times[-1])
    summary = {
        "kind": "stroke",
        "eta": eta,
        "duration": float(rec.times[-1]),
        "w_end": float(rec.w[-1]),
        "p_av_end": p_av,
        "p_c_av_end": p_c,
        "gap_end": abs(p_av - p_c),
        "resonance": report.to_dict(),
    }
    bundle = emit([rec], rc, summary, args.out, args.prefix)
    print(f"wrote {bundle.csv_path} and {bundle.json_path}")
    print(f"eta={eta:.6f} W(t_end)={rec.w[-1]:.6f} P_av={p_av:.4e} P_c_av={p_c:.4e}")
    return 0


def _cmd_resonance(rc: RunConfig, args) -> int:
    report = spectra.resonance_report(
        rc.params, rc.cutoff, rc.model, args.n if args.n is not None else rc.cycle_opts["sideband_n"]
    )
    out = report.to_dict()
    if args.floquet:
        if rc.params.eps <= 0:
            raise ConfigError("--floquet needs params.eps > 0")
        pair = (
            hilbert.basis_state(rc.cutoff, out["n"] + 1, 0),
            hilbert.basis_state(rc.cutoff, out["n"], 1),
        )
        eta_f, lam_f = spectra.floquet_resonance(
            rc.params, rc.cutoff, rc.model, *pair, out["refined_sideband"]
        )
        out["floquet_sideband"] = eta_f
        out["floquet_sideband_rate"] = lam_f
        if rc.model == "rabi":
            eta_a, lam_a = spectra.floquet_resonance(
                rc.params, rc.cutoff, rc.model,
                hilbert.basis_state(rc.cutoff, 3, 0),
                hilbert.basis_state(rc.cutoff, 0, 1),
                out["refined_adce"],
            )
            out["floquet_adce"] = eta_a
            out["floquet_adce_rate"] = lam_a
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_rabi(rc: RunConfig, args) -> int:
    if rc.model != "rabi":
        raise ConfigError("rabi runs need model = 'rabi'")
    regime = args.regime or rc.rabi_opts["regime"]
    nbar = args.nbar if args.nbar is not None else rc.rabi_opts["nbar"]
    duration = args.duration if args.duration is not None else rc.rabi_opts["duration"]
    rec = cycle.run_rabi_extraction(
        regime, nbar, rc.params, rc.cutoff, rc.integrator,
        duration=duration,
        eta=(rc.params.eta or None),
        pop_labels=rc.populations,
    )
    i_min = int(np.argmin(rec.w))
    p_av = thermo.avg_quantum_power_series(rec)
    p_c = thermo.avg_classical_power_series(rec)
    summary = {
        "kind": "rabi",
        "regime": regime,
        "nbar": nbar,
        "eta": rec.meta["eta"],
        "lambda_floquet": rec.meta.get("lambda_floquet"),
        "duration": float(rec.times[-1]),
        "w_min": float(rec.w[i_min]),
        "t_min": float(rec.times[i_min]),
        "p_av_at_min": float(p_av[i_min]),
        "p_c_av_at_min": float(p_c[i_min]),
        "pops_at_min": {lab: float(rec.pops[lab][i_min]) for lab in rec.pops},
        "thermal_tail_mass": rec.meta["thermal_tail_mass"],
    }
    bundle = emit([rec], rc, summary, args.out, args.prefix)
    print(f"wrote {bundle.csv_path} and {bundle.json_path}")
    print(
        f"regime={regime} eta={rec.meta['eta']:.7f} "
        f"W_min={rec.w[i_min]:.6f} at t={rec.times[i_min]:.0f}"
    )
    return 0


def _cmd_sweep(rc: RunConfig, args) -> int:
    if args.steps < 2:
        raise ConfigError("--steps must be >= 2")
    report = spectra.resonance_report(rc.params, rc.cutoff, rc.model, rc.cycle_opts["sideband_n"])
    duration, _ = _resolve_stroke_duration(rc, report.refined_sideband)
    etas = np.linspace(args.eta_from, args.eta_to, args.steps)
    rho0 = _stroke_initial_state(rc)
    rows = ["eta,W,P_av,P_c_av,gap_abs"]
    results = []
    for eta in etas:
        ham = cycle._build_ham(rc.model, rc.params.with_eta(float(eta)), rc.cutoff,
                               "ramp_on", "harmonic", float(eta))
        rec = dynamics.evolve(rho0, duration, ham, None, rc.integrator,
                              pop_labels=(), label="work_extraction")
        p_av = thermo.avg_quantum_power(rec, rec.times[-1])
        p_c = thermo.avg_classical_power(rec, rec.times[-1])
        rows.append(",".join(_fmt(x) for x in (eta, rec.w[-1], p_av, p_c, abs(p_av - p_c))))
        results.append({"eta": float(eta), "w_end": float(rec.w[-1]),
                        "p_av": p_av, "p_c_av": p_c, "gap_abs": abs(p_av - p_c)})
    out = Path(args.out if args.out is not None else rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = args.prefix if args.prefix is not None else rc.prefix
    csv_path = out / f"{prefix}_sweep.csv"
    json_path = out / f"{prefix}_sweep.json"
    csv_path.write_text("\n".join(rows) + "\n")
    summary = {
        "kind": "sweep",
        "duration": duration,
        "points": results,
        "resonance": report.to_dict(),
        "provenance": {
            "package": "ottoqed",
            "version": __version__,
            "config_sha256": rc.sha256,
            "config": rc.resolved,
        },
    }
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ottoqed",
        description="Nonstationary cavity-QED quantum Otto engine simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True,
                       help="JSON config path or bundled preset name (fig1, fig2, fig3_jc, fig3_adce)")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--prefix", default=None, help="bundle file prefix (overrides config)")
        p.add_argument("--thin", type=int, default=None, help="CSV row thinning (overrides config)")
        p.add_argument("--eta", type=float, default=None, help="drive frequency (overrides config)")

    p = sub.add_parser("otto", help="run the full four-stroke Otto cycle (Fig. 1 data)")
    common(p)
    p = sub.add_parser("stroke", help="run a single work-extraction stroke (Fig. 2 data)")
    common(p)
    p.add_argument("--duration", type=float, default=None, help="stroke length (overrides config)")
    p = sub.add_parser("resonance", help="print the resonance report as JSON")
    common(p)
    p.add_argument("--n", type=int, default=None, help="sideband manifold index")
    p.add_argument("--floquet", action="store_true",
                   help="include drive-dressed (Floquet) resonances and rates")
    p = sub.add_parser("rabi", help="run a Rabi-model extraction (Fig. 3 data)")
    common(p)
    p.add_argument("--regime", choices=("jc", "adce"), default=None)
    p.add_argument("--nbar", type=float, default=None)
    p.add_argument("--duration", type=float, default=None)
    p = sub.add_parser("sweep", help="sweep the drive frequency; one CSV row per eta")
    common(p)
    p.add_argument("--eta-from", type=float, required=True)
    p.add_argument("--eta-to", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    return parser


_COMMANDS = {
    "otto": _cmd_otto,
    "stroke": _cmd_stroke,
    "resonance": _cmd_resonance,
    "rabi": _cmd_rabi,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        rc = load_config(args.config)
        if getattr(args, "eta", None) is not None:
            rc.params = rc.params.with_eta(args.eta)
            rc.resolved["params"]["eta"] = args.eta
        if getattr(args, "thin", None) is not None:
            rc.thin = args.thin
            rc.resolved["output"]["thin"] = args.thin
        if getattr(args, "duration", None) is not None and args.command == "stroke":
            rc.stroke_opts["duration"] = args.duration
            rc.resolved["stroke"]["duration"] = args.duration
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](rc, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (
        dynamics.LeakageError,
        dynamics.TraceDriftError,
        thermo.IntegrationMismatchError,
        spectra.AmbiguousOverlapError,
        ValueError,
        RuntimeError,
    ) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
