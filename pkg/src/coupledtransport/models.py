"""Scenario type and builders for the single-dot and coupled-dot models."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

from .core import (
    ConfigurationError,
    DotSpec,
    ForceFluxView,
    ForceSet,
    PreconditionError,
    ReservoirSpec,
    Spin,
    SteadyReport,
    SystemSpec,
    TopologyError,
    TransitionGraph,
    RateMatrix,
    WarningRecord,
)
from . import rates, steady, thermo

MODELS = ("single_qd", "cqd")
REDUCTIONS = (None, "sb", "icc")

_TOPOLOGY = {
    "single_qd": frozenset({("single", "l"), ("single", "r")}),
    "cqd": frozenset({("b", "l"), ("b", "r"), ("u", "u")}),
}
_LEADS = {"single_qd": ("l", "r"), "cqd": ("l", "r", "u")}


@dataclass(frozen=True)
class Scenario:
    """A validated model: dots, leads, and an optional force reduction.

    ``warnings`` records every silent adjustment (reduction overwrites,
    unconventional level ordering); it does not take part in equality.
    """

    model: str
    system: SystemSpec
    reservoirs: tuple[ReservoirSpec, ...]
    reduction: str | None = None
    warnings: tuple[WarningRecord, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "reservoirs", tuple(self.reservoirs))
        if self.model not in MODELS:
            raise ConfigurationError(f"model must be one of {MODELS} (got {self.model!r})")
        if self.reduction not in REDUCTIONS:
            raise ConfigurationError(f"reduction must be one of {REDUCTIONS} (got {self.reduction!r})")
        ids = [r.id for r in self.reservoirs]
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"reservoir ids must be unique (got {ids})")
        if sorted(ids) != sorted(_LEADS[self.model]):
            raise ConfigurationError(f"model {self.model!r} needs reservoirs {list(_LEADS[self.model])} (got {ids})")
        if self.system.is_cqd != (self.model == "cqd"):
            raise ConfigurationError(f"model {self.model!r} does not match a {len(self.system.dots)}-dot system")
        if self.system.couplings != _TOPOLOGY[self.model]:
            raise ConfigurationError(
                f"model {self.model!r} has fixed contacts {sorted(_TOPOLOGY[self.model])} (got {sorted(self.system.couplings)})"
            )
        for dot in self.system.dots:
            if not any(d == dot.label for d, _ in self.system.couplings):
                raise ConfigurationError(f"dot {dot.label!r} has no coupled reservoir")
        for dot_label, res_id in self.system.couplings:
            dot, res = self.system.dot(dot_label), self.reservoir(res_id)
            if not dot.spin.compatible(res.spin):
                raise ConfigurationError(f"spin mismatch between dot {dot_label!r} and reservoir {res_id!r}")
        if self.reduction is not None and self.model != "cqd":
            raise TopologyError("reductions apply to the coupled-dot model only")
        if self.reduction == "sb" and self.reservoir("l").beta != self.reservoir("r").beta:
            raise ConfigurationError("reduction 'sb' requires beta_l = beta_r")
        if self.reduction == "icc" and self.reservoir("r").beta != self.reservoir("u").beta:
            raise ConfigurationError("reduction 'icc' requires beta_r = beta_u")

    def reservoir(self, res_id: str) -> ReservoirSpec:
        for r in self.reservoirs:
            if r.id == res_id:
                return r
        raise ConfigurationError(f"unknown reservoir {res_id!r}")

    def with_reservoir(self, res_id: str, **changes) -> "Scenario":
        updated = tuple(dataclasses.replace(r, **changes) if r.id == res_id else r for r in self.reservoirs)
        return dataclasses.replace(self, reservoirs=updated, warnings=self.warnings)

    @cached_property
    def graph(self) -> TransitionGraph:
        return rates.build_transition_graph(self.system, self.reservoirs)

    @cached_property
    def rate_matrix(self) -> RateMatrix:
        return rates.build_rate_matrix(self.graph, self.reservoirs)

    def solve(self) -> SteadyReport:
        W = self.rate_matrix
        p = steady.solve_steady_state(W)
        currents = steady.reservoir_currents(p, W, self.reservoirs)
        return SteadyReport(
            populations=p,
            basis=self.graph.basis,
            currents=currents,
            sigma_dot=thermo.entropy_production_rate(currents, self.reservoirs),
            cycle_flux=steady.cycle_flux(p, W) if self.model == "cqd" else None,
            residual=steady.residual(W, p),
        )

    def force_sets(self) -> list[ForceSet]:
        """Every valid force representation of this scenario."""
        if self.model == "single_qd":
            return thermo.two_terminal_force_sets(self.reservoir("l"), self.reservoir("r"))
        l, r, u = (self.reservoir(k) for k in "lru")
        sets = [
            thermo.forces_three_terminal(l, r, u, eliminate=e, particle_lead=n)
            for e in ("r", "l", "u") for n in ("l", "r")
        ]
        if l.beta == r.beta:
            sets.append(thermo.sb_forces(l, r, u))
        if r.beta == u.beta:
            sets.append(thermo.icc_forces(l, r, u))
        return sets

    def views(self, report: SteadyReport) -> list[ForceFluxView]:
        return [thermo.force_flux_view(report, fs) for fs in self.force_sets()]

    def classification_view(self, report: SteadyReport) -> ForceFluxView | None:
        """The two-force view the regime labels are defined on, if any."""
        if self.model == "single_qd":
            fs = thermo.two_terminal_force_sets(self.reservoir("l"), self.reservoir("r"))[0]
            return thermo.force_flux_view(report, fs)
        l, r, u = (self.reservoir(k) for k in "lru")
        if self.reduction == "sb" or (self.reduction is None and l.beta == r.beta):
            return thermo.force_flux_view(report, thermo.sb_forces(l, r, u))
        if self.reduction == "icc" or (self.reduction is None and r.beta == u.beta):
            return thermo.force_flux_view(report, thermo.icc_forces(l, r, u))
        return None


def _require_ids(*pairs: tuple[ReservoirSpec, str]) -> None:
    for res, expected in pairs:
        if res.id != expected:
            raise ConfigurationError(f"expected reservoir id {expected!r} (got {res.id!r})")


def single_qd_two_terminal(
    eps: float, l: ReservoirSpec, r: ReservoirSpec, spin: Spin = Spin.UNPOLARIZED
) -> Scenario:
    _require_ids((l, "l"), (r, "r"))
    system = SystemSpec((DotSpec("single", eps, spin),), couplings=_TOPOLOGY["single_qd"])
    return Scenario("single_qd", system, (l, r))


def cqd_three_terminal(
    eps_b: float,
    eps_u: float,
    kappa_c: float,
    kappa_s: float,
    l: ReservoirSpec,
    r: ReservoirSpec,
    u: ReservoirSpec,
    spins: tuple[Spin, Spin] | None = None,
) -> Scenario:
    """Coupled dots: ``b`` between leads ``l`` and ``r``, ``u`` on lead ``u``.

    Unless ``spins`` is given, a spin-spin term (``kappa_s > 0``) polarizes
    the dots as ``b: down`` and ``u: up``; leads must then be unpolarized or
    carry the matching spin.
    """
    _require_ids((l, "l"), (r, "r"), (u, "u"))
    if spins is None:
        spins = (Spin.DOWN, Spin.UP) if kappa_s > 0 else (Spin.UNPOLARIZED, Spin.UNPOLARIZED)
    dots = (DotSpec("b", eps_b, spins[0]), DotSpec("u", eps_u, spins[1]))
    system = SystemSpec(dots, kappa_c, kappa_s, _TOPOLOGY["cqd"])
    warnings = ()
    if not eps_b < eps_u:
        warnings = (WarningRecord("level-order", f"eps_b < eps_u expected (got eps_b={eps_b}, eps_u={eps_u})"),)
    return Scenario("cqd", system, (l, r, u), warnings=warnings)


def split_kappa(kappa: float) -> tuple[float, float]:
    """Non-negative ``(kappa_c, kappa_s)`` with ``kappa_c - kappa_s = kappa``."""
    return (kappa, 0.0) if kappa >= 0 else (0.0, -kappa)


def _reduce(scenario: Scenario, name: str, source: str, target: str) -> Scenario:
    if scenario.model != "cqd":
        raise TopologyError(f"{name} reduction needs the coupled-dot model")
    beta = scenario.reservoir(source).beta
    old = scenario.reservoir(target).beta
    warnings = scenario.warnings
    if old != beta:
        warnings += (WarningRecord(f"{name}-reduction", f"beta_{target} overwritten from {old} to beta_{source} = {beta}"),)
    reduced = scenario.with_reservoir(target, beta=beta)
    return dataclasses.replace(reduced, reduction=name, warnings=warnings)


def sb_reduction(scenario: Scenario) -> Scenario:
    """Equalize the conductor temperatures by setting ``beta_r = beta_l``."""
    return _reduce(scenario, "sb", "l", "r")


def icc_reduction(scenario: Scenario) -> Scenario:
    """Give ``u`` the temperature of ``r`` so both forces refer to lead ``l``."""
    return _reduce(scenario, "icc", "r", "u")


def lead_from_forces(beta: float, mu: float, force_energy: float, force_particle: float) -> tuple[float, float]:
    """``(beta_l, mu_l)`` producing the given l-referenced forces against ``(beta, mu)``."""
    beta_l = beta - force_energy
    if not beta_l > 0:
        raise PreconditionError(f"energy force {force_energy} needs beta_l = {beta_l} > 0")
    return beta_l, (force_particle + beta * mu) / beta_l


@dataclass(frozen=True)
class ICCFamily:
    """ICC-reduced coupled dots parametrized by ``kappa`` and the two l-forces.

    Leads ``r`` and ``u`` sit at ``beta``; ``r`` at ``mu_r`` and ``u`` at
    ``mu_u`` (default ``mu_r``).
    """

    eps_b: float
    eps_u: float
    beta: float
    mu_r: float
    mu_u: float | None = None
    gamma: float = 1.0

    def __call__(self, kappa: float, force_energy: float, force_particle: float) -> Scenario:
        beta_l, mu_l = lead_from_forces(self.beta, self.mu_r, force_energy, force_particle)
        kc, ks = split_kappa(kappa)
        mu_u = self.mu_r if self.mu_u is None else self.mu_u
        scenario = cqd_three_terminal(
            self.eps_b, self.eps_u, kc, ks,
            ReservoirSpec("l", beta_l, mu_l, self.gamma),
            ReservoirSpec("r", self.beta, self.mu_r, self.gamma),
            ReservoirSpec("u", self.beta, mu_u, self.gamma),
        )
        return icc_reduction(scenario)


@dataclass(frozen=True)
class SingleQDFamily:
    """Single dot parametrized by the two l-forces against lead ``r`` at ``(beta, mu)``."""

    eps: float
    beta: float
    mu: float
    gamma: float = 1.0

    def __call__(self, force_energy: float, force_particle: float) -> Scenario:
        beta_l, mu_l = lead_from_forces(self.beta, self.mu, force_energy, force_particle)
        return single_qd_two_terminal(
            self.eps,
            ReservoirSpec("l", beta_l, mu_l, self.gamma),
            ReservoirSpec("r", self.beta, self.mu, self.gamma),
        )


@dataclass(frozen=True)
class LeadPerturbation:
    """Onsager builder: lead ``l`` at ``(beta_l, mu_l)``, every other lead at the reference."""

    template: Scenario
    beta: float
    mu: float

    def __call__(self, beta_l: float, mu_l: float) -> Scenario:
        reservoirs = tuple(
            dataclasses.replace(r, beta=beta_l, mu=mu_l) if r.id == "l"
            else dataclasses.replace(r, beta=self.beta, mu=self.mu)
            for r in self.template.reservoirs
        )
        reduction = self.template.reduction if self.template.reduction == "icc" else None
        return dataclasses.replace(self.template, reservoirs=reservoirs, reduction=reduction, warnings=())
