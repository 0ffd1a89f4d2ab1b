"""Command-line front end: JSON configs in, JSON reports and CSV sweeps out.

Subcommands::

    coupledtransport validate --config cfg.json
    coupledtransport steady   --config cfg.json [--out report.json] [--tol X]
    coupledtransport sweep    --config cfg.json --axis NAME START STOP COUNT [...] --out table.csv
    coupledtransport onsager  --config cfg.json [--step X] [--beta B --mu M]
    coupledtransport icc-scan --config cfg.json --force-energy A B N --force-particle A B N [--kappa A B N]

Any error is printed as a JSON ``{"error": ...}`` record and the process
exits with status 1.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

from .core import (
    ConfigurationError,
    InvalidParameterError,
    PreconditionError,
    ReservoirSpec,
    Spin,
    TransportError,
)
from .models import (
    LeadPerturbation,
    Scenario,
    cqd_three_terminal,
    icc_reduction,
    lead_from_forces,
    sb_reduction,
    single_qd_two_terminal,
    split_kappa,
)
from . import thermo

PACKAGE = "coupledtransport"

_NUMBER = {"type": "number"}
_SPIN = {"enum": [s.value for s in Spin]}
_DOT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["epsilon"],
    "properties": {"epsilon": _NUMBER, "spin": _SPIN},
}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "dots", "reservoirs"],
    "properties": {
        "model": {"enum": ["single_qd", "cqd"]},
        "dots": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"single": _DOT, "b": _DOT, "u": _DOT},
        },
        "kappa_c": _NUMBER,
        "kappa_s": _NUMBER,
        "reservoirs": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "beta", "mu"],
                "properties": {
                    "id": {"type": "string"},
                    "beta": _NUMBER,
                    "mu": _NUMBER,
                    "gamma": _NUMBER,
                    "spin": _SPIN,
                },
            },
        },
        "reduction": {"enum": [None, "sb", "icc"]},
    },
}


def _path(error: jsonschema.ValidationError) -> str:
    out = "$"
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def parse_config(document: str | bytes | Mapping[str, Any]) -> Scenario:
    """Validate a config document and build its scenario.

    A requested reduction is applied after construction, so a conflicting
    temperature is overwritten and recorded in ``scenario.warnings``.

    Raises
    ------
    ConfigurationError
        Naming the offending JSON path for schema violations, or quoting the
        violated invariant (``"kappa_s ≥ 0 violated"``) otherwise.
    """
    try:
        return _build(document)
    except InvalidParameterError as exc:
        raise ConfigurationError(f"$: {exc}") from exc


def _build(document: str | bytes | Mapping[str, Any]) -> Scenario:
    if isinstance(document, (str, bytes)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"$: invalid JSON ({exc})") from exc
    else:
        data = document
    error = jsonschema.exceptions.best_match(jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(data))
    if error is not None:
        raise ConfigurationError(f"{_path(error)}: {error.message}")

    model = data["model"]
    dots = data["dots"]
    expected = ["single"] if model == "single_qd" else ["b", "u"]
    if sorted(dots) != expected:
        raise ConfigurationError(f"$.dots: model {model!r} needs dots {expected} (got {sorted(dots)})")
    reservoirs = {
        r["id"]: ReservoirSpec(r["id"], r["beta"], r["mu"], r.get("gamma", 1.0), r.get("spin", Spin.UNPOLARIZED))
        for r in data["reservoirs"]
    }
    if len(reservoirs) != len(data["reservoirs"]):
        raise ConfigurationError("$.reservoirs: ids must be unique")
    leads = ("l", "r") if model == "single_qd" else ("l", "r", "u")
    if sorted(reservoirs) != sorted(leads):
        raise ConfigurationError(f"$.reservoirs: model {model!r} needs ids {list(leads)} (got {list(reservoirs)})")

    if model == "single_qd":
        if data.get("kappa_c", 0) or data.get("kappa_s", 0):
            raise ConfigurationError("$: single-dot systems have kappa_c = kappa_s = 0")
        if data.get("reduction") is not None:
            raise ConfigurationError("$.reduction: reductions apply to the coupled-dot model only")
        dot = dots["single"]
        return single_qd_two_terminal(
            dot["epsilon"], reservoirs["l"], reservoirs["r"], dot.get("spin", Spin.UNPOLARIZED)
        )

    kappa_s = data.get("kappa_s", 0.0)
    spins = None
    if "spin" in dots["b"] or "spin" in dots["u"]:
        default = Spin.DOWN if kappa_s > 0 else Spin.UNPOLARIZED, Spin.UP if kappa_s > 0 else Spin.UNPOLARIZED
        spins = (Spin(dots["b"].get("spin", default[0])), Spin(dots["u"].get("spin", default[1])))
    scenario = cqd_three_terminal(
        dots["b"]["epsilon"], dots["u"]["epsilon"], data.get("kappa_c", 0.0), kappa_s,
        reservoirs["l"], reservoirs["r"], reservoirs["u"], spins=spins,
    )
    reduction = data.get("reduction")
    if reduction == "sb":
        scenario = sb_reduction(scenario)
    elif reduction == "icc":
        scenario = icc_reduction(scenario)
    return scenario


def serialize_scenario(scenario: Scenario) -> dict[str, Any]:
    """Config document that :func:`parse_config` maps back to ``scenario``."""
    dots = {d.label: {"epsilon": d.epsilon, "spin": d.spin.value} for d in scenario.system.dots}
    doc: dict[str, Any] = {
        "model": scenario.model,
        "dots": dots,
        "reservoirs": [
            {"id": r.id, "beta": r.beta, "mu": r.mu, "gamma": r.gamma, "spin": r.spin.value}
            for r in scenario.reservoirs
        ],
        "reduction": scenario.reduction,
    }
    if scenario.model == "cqd":
        doc["kappa_c"] = scenario.system.kappa_c
        doc["kappa_s"] = scenario.system.kappa_s
    return doc


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _meta() -> dict[str, str]:
    return {"package": PACKAGE, "version": _version()}


def run_steady(scenario: Scenario, tol: float = thermo.DEFAULT_TOL) -> dict[str, Any]:
    """Solve ``scenario`` and collect every derived quantity in one document."""
    report = scenario.solve()
    views = scenario.views(report)
    classification = scenario.classification_view(report)
    regime = None
    if classification is not None:
        regime = thermo.classify_view(classification, tol).value
    return {
        "model": scenario.model,
        "reduction": scenario.reduction,
        "populations": {s.index: float(p) for s, p in zip(report.basis, report.populations)},
        "currents": {
            rid: {"J_E": c.energy, "J_N": c.particle, "J_Q": c.heat} for rid, c in report.currents.items()
        },
        "cycle_flux": report.cycle_flux,
        "sigma_dot": report.sigma_dot,
        "representations": [
            {
                "name": v.representation,
                "entropic": v.entropic,
                "pairs": [
                    {"kind": p.kind, "reservoir": p.reservoir, "flux": p.flux, "force": p.force} for p in v.pairs
                ],
                "sigma_check": v.sigma_check,
                "residual": thermo.bilinear_check(report, v),
            }
            for v in views
        ],
        "classification": None if classification is None else classification.representation,
        "regime": regime,
        "solver_residual": report.residual,
        "warnings": [w.as_dict() for w in scenario.warnings],
        "meta": _meta(),
    }


# --- sweeps ---------------------------------------------------------------

FORCE_AXES = ("force_energy", "force_particle")


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigurationError(f"axis {self.name!r}: count must be ≥ 1 (got {self.count})")
        if self.count > 1 and self.start == self.stop:
            raise ConfigurationError(f"axis {self.name!r}: degenerate range start = stop = {self.start} with count {self.count}")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


def _set_parameter(doc: dict[str, Any], name: str, value: float) -> None:
    cqd_only = ("eps_b", "eps_u", "kappa", "kappa_c", "kappa_s")
    if name in cqd_only and doc["model"] != "cqd":
        raise ConfigurationError(f"sweep parameter {name!r} needs the coupled-dot model")
    if name == "eps" and doc["model"] != "single_qd":
        raise ConfigurationError("sweep parameter 'eps' needs the single-dot model")
    if name == "eps":
        doc["dots"]["single"]["epsilon"] = value
    elif name in ("eps_b", "eps_u"):
        doc["dots"][name[-1]]["epsilon"] = value
    elif name in ("kappa_c", "kappa_s"):
        doc[name] = value
    elif name == "kappa":
        doc["kappa_c"], doc["kappa_s"] = split_kappa(value)
    elif "_" in name and name.split("_", 1)[0] in ("beta", "mu", "gamma"):
        field_name, res_id = name.split("_", 1)
        for res in doc["reservoirs"]:
            if res["id"] == res_id:
                res[field_name] = value
                break
        else:
            raise ConfigurationError(f"sweep parameter {name!r}: unknown reservoir {res_id!r}")
    else:
        raise ConfigurationError(f"unknown sweep parameter {name!r}")


def apply_parameters(template: Scenario, params: Mapping[str, float]) -> Scenario:
    """Copy of ``template`` with the named parameters replaced.

    ``force_energy``/``force_particle`` set lead ``l`` so that the l-referenced
    forces against lead ``r`` take the given values; a force that is not named
    keeps its template value. They are applied last.
    """
    doc = copy.deepcopy(serialize_scenario(template))
    for name, value in params.items():
        if name not in FORCE_AXES:
            _set_parameter(doc, name, float(value))
    scenario = parse_config(doc)
    if any(name in FORCE_AXES for name in params):
        if scenario.reduction == "sb":
            raise ConfigurationError("force axes need l-referenced forces; not available with reduction 'sb'")
        l, r = scenario.reservoir("l"), scenario.reservoir("r")
        fe, fn = thermo.forces_two_terminal(l, r)
        fe = float(params.get("force_energy", fe))
        fn = float(params.get("force_particle", fn))
        beta_l, mu_l = lead_from_forces(r.beta, r.mu, fe, fn)
        for res in doc["reservoirs"]:
            if res["id"] == "l":
                res["beta"], res["mu"] = beta_l, mu_l
        scenario = parse_config(doc)
    return scenario


@dataclass(frozen=True)
class TemplateFamily:
    """Picklable builder ``(**params) -> Scenario`` over a template."""

    template: Scenario

    def __call__(self, **params: float) -> Scenario:
        return apply_parameters(self.template, params)


def _force_view(scenario: Scenario, report):
    """Reduced view when the scenario has one, else the eliminate-r biases."""
    if scenario.model == "single_qd" or scenario.reduction:
        return scenario.classification_view(report)
    l, r, u = (scenario.reservoir(k) for k in "lru")
    return thermo.force_flux_view(report, thermo.forces_three_terminal(l, r, u, "r", "l"))


def _sweep_row(template: Scenario, params: dict[str, float], columns, tol: float) -> list[Any]:
    scenario = apply_parameters(template, params)
    report = scenario.solve()
    row: list[Any] = list(params.values())
    for res in template.reservoirs:
        c = report.currents[res.id]
        row += [c.energy, c.particle, c.heat]
    row += [report.cycle_flux, report.sigma_dot]
    forces = {(p.kind, p.reservoir): p.force for p in _force_view(scenario, report).pairs}
    row += [forces[c] for c in columns]
    view = scenario.classification_view(report)
    row.append("" if view is None else thermo.classify_view(view, tol).value)
    return row


def _sweep_chunk(template: Scenario, chunk, columns, tol) -> list[list[Any]]:
    return [_sweep_row(template, params, columns, tol) for params in chunk]


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value + 0.0, ".17g")  # + 0.0 folds -0.0 into 0
    return str(value)


def run_sweep(
    template: Scenario,
    axes: Sequence[Axis],
    out: str | Path | None = None,
    tol: float = thermo.DEFAULT_TOL,
    workers: int = 1,
) -> tuple[list[str], list[list[Any]]]:
    """Evaluate a 1-D or 2-D grid and write it as CSV.

    Rows follow lexicographic grid order whatever ``workers`` is. Returns the
    header and the raw rows.
    """
    if not 1 <= len(axes) <= 2:
        raise ConfigurationError(f"sweep needs 1 or 2 axes (got {len(axes)})")
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"repeated sweep axis in {names}")
    grid = thermo.grid_points({a.name: a.values for a in axes})
    first = apply_parameters(template, grid[0])
    columns = [(p.kind, p.reservoir) for p in _force_view(first, first.solve()).pairs]

    header = list(names)
    for res in template.reservoirs:
        header += [f"J_E_{res.id}", f"J_N_{res.id}", f"J_Q_{res.id}"]
    header += ["cycle_flux", "sigma_dot"]
    header += [f"F_{'E' if kind == 'energy' else 'N'}_{lead}" for kind, lead in columns]
    header.append("label")

    if workers > 1 and len(grid) > 1:
        size = -(-len(grid) // (4 * workers))
        chunks = [grid[i:i + size] for i in range(0, len(grid), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_sweep_chunk, [template] * len(chunks), chunks, [columns] * len(chunks), [tol] * len(chunks))
            rows = [row for part in parts for row in part]
    else:
        rows = _sweep_chunk(template, grid, columns, tol)

    if out is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
    return header, rows


# --- Onsager and ICC scans ------------------------------------------------

def _equilibrium_reference(scenario: Scenario) -> tuple[float, float]:
    betas = {r.beta for r in scenario.reservoirs}
    mus = {r.mu for r in scenario.reservoirs}
    if len(betas) != 1 or len(mus) != 1:
        raise PreconditionError(
            "Onsager reference must be an equilibrium: all reservoirs need the same beta and mu"
        )
    return betas.pop(), mus.pop()


def run_onsager(
    scenario: Scenario,
    reference: tuple[float, float] | None = None,
    step: float = 1e-4,
    rtol: float = 1e-3,
) -> dict[str, Any]:
    """Onsager matrix around ``reference`` (default: the scenario's own equilibrium)."""
    if reference is None:
        reference = _equilibrium_reference(scenario)
    beta, mu = reference
    L = thermo.onsager_matrix(LeadPerturbation(scenario, beta, mu), beta, mu, step)
    return {
        "model": scenario.model,
        "reference": {"beta": beta, "mu": mu},
        "step": step,
        "L": [[L.L_EE, L.L_EN], [L.L_NE, L.L_NN]],
        "reciprocity_residual": L.reciprocity_residual,
        "reciprocal": L.reciprocal(rtol),
        "direct_positive": L.direct_positive,
        "meta": _meta(),
    }


def run_icc_scan(
    template: Scenario,
    grid: Mapping[str, Sequence[float]],
    tol: float = thermo.DEFAULT_TOL,
    workers: int = 1,
) -> dict[str, Any]:
    if template.model == "cqd" and template.reduction != "icc":
        template = icc_reduction(template)
    if template.model == "single_qd" and "kappa" in grid:
        raise ConfigurationError("kappa axis needs the coupled-dot model")
    result = thermo.scan_icc(TemplateFamily(template), grid, tol, workers)
    return {
        "model": template.model,
        "n_points": len(result.points),
        "counts": {label.value: n for label, n in result.counts.items()},
        "certificate": result.certificate,
        "witnesses": [
            {
                "params": dict(p.params),
                "F_E": p.forces[0],
                "F_N": p.forces[1],
                "J_E": p.fluxes[0],
                "J_N": p.fluxes[1],
                "sigma_dot": p.report.sigma_dot,
            }
            for p in result.witnesses
        ],
        "warnings": [w.as_dict() for w in template.warnings],
        "meta": _meta(),
    }


# --- entry point ----------------------------------------------------------

def _dump(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(path: str) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_config(text)


def _range(values: Sequence[str], name: str) -> np.ndarray:
    return Axis(name, float(values[0]), float(values[1]), int(values[2])).values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PACKAGE, description="Steady-state coupled transport through quantum dots.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON scenario file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--tol", type=float, default=thermo.DEFAULT_TOL, help="zero threshold for regime labels")

    common(sub.add_parser("validate", help="parse a config and echo the normalized scenario"))
    common(sub.add_parser("steady", help="steady-state report"))

    p = sub.add_parser("sweep", help="CSV table over one or two parameters")
    common(p)
    p.add_argument("--axis", nargs=4, action="append", required=True, metavar=("NAME", "START", "STOP", "COUNT"))
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("onsager", help="linear-response coefficients at equilibrium")
    common(p)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--beta", type=float)
    p.add_argument("--mu", type=float)

    p = sub.add_parser("icc-scan", help="classify a force grid of the ICC-reduced model")
    common(p)
    p.add_argument("--kappa", nargs=3, metavar=("START", "STOP", "COUNT"))
    p.add_argument("--force-energy", nargs=3, required=True, metavar=("START", "STOP", "COUNT"))
    p.add_argument("--force-particle", nargs=3, required=True, metavar=("START", "STOP", "COUNT"))
    p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = _load(args.config)
        if args.command == "validate":
            doc = {
                "scenario": serialize_scenario(scenario),
                "warnings": [w.as_dict() for w in scenario.warnings],
                "meta": _meta(),
            }
            _emit(_dump(doc), args.out)
        elif args.command == "steady":
            _emit(_dump(run_steady(scenario, args.tol)), args.out)
        elif args.command == "sweep":
            axes = [Axis(a[0], float(a[1]), float(a[2]), int(a[3])) for a in args.axis]
            if args.out:
                run_sweep(scenario, axes, args.out, args.tol, args.workers)
            else:
                header, rows = run_sweep(scenario, axes, None, args.tol, args.workers)
                writer = csv.writer(sys.stdout, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_fmt(v) for v in row])
        elif args.command == "onsager":
            if (args.beta is None) != (args.mu is None):
                raise ConfigurationError("--beta and --mu must be given together")
            reference = None if args.beta is None else (args.beta, args.mu)
            _emit(_dump(run_onsager(scenario, reference, args.step)), args.out)
        elif args.command == "icc-scan":
            grid = {}
            if args.kappa:
                grid["kappa"] = _range(args.kappa, "kappa")
            grid["force_energy"] = _range(args.force_energy, "force_energy")
            grid["force_particle"] = _range(args.force_particle, "force_particle")
            _emit(_dump(run_icc_scan(scenario, grid, args.tol, args.workers)), args.out)
    except (TransportError, ValueError) as exc:
        record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        sys.stdout.write(_dump(record))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
