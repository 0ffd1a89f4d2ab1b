"""Domain types shared across the package.

Units are dimensionless with hbar = k_B = 1: energies, chemical potentials and
rates share one energy unit, inverse temperatures carry its reciprocal.
Currents are positive when they flow from a reservoir into the system.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class TransportError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(TransportError, ValueError):
    """A numeric parameter is outside its admissible range."""


class ConfigurationError(TransportError, ValueError):
    """Inconsistent scenario wiring (couplings, labels, spins, axes)."""


class TopologyError(TransportError):
    """Operation requested on a model it is not defined for."""


class SolverError(TransportError):
    """Linear solve produced an unusable population vector."""


class NonUniqueSteadyStateError(SolverError):
    """The generator has more than one closed class of states."""

    def __init__(self, message: str, components: list[list[str]]):
        super().__init__(message)
        self.components = components


class PreconditionError(TransportError):
    """A documented precondition of an operation does not hold."""


class StepSizeError(TransportError, ValueError):
    """Finite-difference or integration step is unusable."""


class UnsupportedRepresentationError(TransportError):
    """Regime classification asked for a representation it cannot label."""


class Spin(str, enum.Enum):
    UP = "up"
    DOWN = "down"
    UNPOLARIZED = "unpolarized"

    def compatible(self, other: "Spin") -> bool:
        return Spin.UNPOLARIZED in (self, other) or self is other


class Regime(str, enum.Enum):
    EQUILIBRIUM = "Equilibrium"
    SEEBECK_NORMAL = "SeebeckNormal"
    SEEBECK_UNCONVENTIONAL = "SeebeckUnconventional"
    PELTIER_NORMAL = "PeltierNormal"
    PELTIER_UNCONVENTIONAL = "PeltierUnconventional"
    CROSS_EFFECT_ENGINE = "CrossEffectEngine"
    CROSS_EFFECT_REFRIGERATOR = "CrossEffectRefrigerator"
    PARALLEL_DISSIPATIVE = "ParallelDissipative"
    PSEUDO_ICC = "PseudoICC"
    GENUINE_ICC = "GenuineICC"


DOT_LABELS = ("b", "u", "single")


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite (got {value!r})")


@dataclass(frozen=True)
class ReservoirSpec:
    """A fermionic lead in the wide-band limit.

    Attributes
    ----------
    id : str
        Short label, unique within a scenario (``"l"``, ``"r"``, ``"u"``).
    beta : float
        Inverse temperature.
    mu : float
        Chemical potential.
    gamma : float
        Bare, energy-independent tunnelling rate.
    spin : Spin
        Spin species carried by the lead.
    """

    id: str
    beta: float
    mu: float
    gamma: float = 1.0
    spin: Spin = Spin.UNPOLARIZED

    def __post_init__(self) -> None:
        object.__setattr__(self, "spin", Spin(self.spin))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "gamma", float(self.gamma))
        if not self.id:
            raise InvalidParameterError("reservoir id must be non-empty")
        for name in ("beta", "mu", "gamma"):
            _finite(f"{self.id}.{name}", getattr(self, name))
        if not self.beta > 0:
            raise InvalidParameterError(f"beta > 0 violated for reservoir {self.id!r} (got {self.beta})")
        if not self.gamma >= 0:
            raise InvalidParameterError(f"gamma ≥ 0 violated for reservoir {self.id!r} (got {self.gamma})")


@dataclass(frozen=True)
class DotSpec:
    label: str
    epsilon: float
    spin: Spin = Spin.UNPOLARIZED

    def __post_init__(self) -> None:
        object.__setattr__(self, "spin", Spin(self.spin))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if self.label not in DOT_LABELS:
            raise InvalidParameterError(f"dot label must be one of {DOT_LABELS} (got {self.label!r})")
        _finite(f"{self.label}.epsilon", self.epsilon)


@dataclass(frozen=True)
class SystemSpec:
    """Diagonal dot Hamiltonian plus the set of allowed tunnel contacts.

    The CQD eigenvalue table uses the effective interaction
    ``kappa = kappa_c - kappa_s``; single-particle levels are taken as already
    renormalized by the spin-spin term.
    """

    dots: tuple[DotSpec, ...]
    kappa_c: float = 0.0
    kappa_s: float = 0.0
    couplings: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "dots", tuple(self.dots))
        object.__setattr__(self, "couplings", frozenset(tuple(c) for c in self.couplings))
        object.__setattr__(self, "kappa_c", float(self.kappa_c))
        object.__setattr__(self, "kappa_s", float(self.kappa_s))
        _finite("kappa_c", self.kappa_c)
        _finite("kappa_s", self.kappa_s)
        if self.kappa_c < 0:
            raise InvalidParameterError(f"kappa_c ≥ 0 violated (got {self.kappa_c})")
        if self.kappa_s < 0:
            raise InvalidParameterError(f"kappa_s ≥ 0 violated (got {self.kappa_s})")
        labels = [d.label for d in self.dots]
        if len(self.dots) == 1:
            if labels != ["single"]:
                raise InvalidParameterError("a single-dot system uses the dot label 'single'")
            if self.kappa_c != 0 or self.kappa_s != 0:
                raise InvalidParameterError("single-dot systems have kappa_c = kappa_s = 0")
        elif len(self.dots) == 2:
            if sorted(labels) != ["b", "u"]:
                raise InvalidParameterError("a coupled-dot system uses the dot labels 'b' and 'u'")
        else:
            raise InvalidParameterError(f"one or two dots supported (got {len(self.dots)})")
        for dot_label, _ in self.couplings:
            if dot_label not in labels:
                raise ConfigurationError(f"coupling references unknown dot {dot_label!r}")

    @property
    def kappa(self) -> float:
        return self.kappa_c - self.kappa_s

    @property
    def is_cqd(self) -> bool:
        return len(self.dots) == 2

    def dot(self, label: str) -> DotSpec:
        for d in self.dots:
            if d.label == label:
                return d
        raise ConfigurationError(f"unknown dot {label!r}")

    @property
    def dot_order(self) -> tuple[str, ...]:
        """Dot labels in the order used by occupation tuples."""
        return ("b", "u") if self.is_cqd else ("single",)


@dataclass(frozen=True)
class EigenState:
    index: str
    occupations: tuple[int, ...]
    energy: float

    @property
    def particles(self) -> int:
        return sum(self.occupations)


@dataclass(frozen=True)
class Transition:
    """One directed, reservoir-mediated hop between eigenstates.

    ``omega`` is ``E(target) - E(source)``; ``direction`` is ``+1`` when a
    particle enters the system and ``-1`` when it leaves.
    """

    source: str
    target: str
    omega: float
    reservoir: str
    dot: str
    direction: int

    @property
    def excitation_energy(self) -> float:
        """Energy of the particle-adding member of the pair."""
        return self.omega if self.direction > 0 else -self.omega

    def reversed(self) -> "Transition":
        return Transition(self.target, self.source, -self.omega, self.reservoir, self.dot, -self.direction)


@dataclass(frozen=True)
class TransitionGraph:
    basis: tuple[EigenState, ...]
    transitions: tuple[Transition, ...]

    def position(self, index: str) -> int:
        for k, s in enumerate(self.basis):
            if s.index == index:
                return k
        raise KeyError(index)

    def excitations(self, reservoir: str | None = None) -> list[Transition]:
        return [
            t for t in self.transitions
            if t.direction > 0 and (reservoir is None or t.reservoir == reservoir)
        ]

    def pairs(self) -> set[frozenset[str]]:
        return {frozenset((t.source, t.target)) for t in self.transitions}


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Population-sector generator ``W``: ``W[j, i]`` is the total rate i -> j."""

    generator: np.ndarray
    rates: Mapping[Transition, float]
    graph: TransitionGraph

    def rate(self, transition: Transition) -> float:
        try:
            return self.rates[transition]
        except KeyError:
            raise KeyError(f"no channel {transition.source}->{transition.target} via {transition.reservoir}") from None


@dataclass(frozen=True)
class Currents:
    energy: float
    particle: float
    heat: float


@dataclass(frozen=True, eq=False)
class SteadyReport:
    populations: np.ndarray
    basis: tuple[EigenState, ...]
    currents: Mapping[str, Currents]
    sigma_dot: float
    cycle_flux: float | None = None
    residual: float = 0.0

    def population(self, index: str) -> float:
        for k, s in enumerate(self.basis):
            if s.index == index:
                return float(self.populations[k])
        raise KeyError(index)


@dataclass(frozen=True)
class FluxForcePair:
    kind: str  # "energy" | "particle"
    reservoir: str
    flux: float
    force: float


@dataclass(frozen=True)
class ForceSet:
    """Forces conjugate to one choice of independent fluxes.

    ``entropic`` marks representation-dependent biases; it is false when the
    set is unique (two terminals) or a reduction made one bias vanish.
    """

    representation: str
    forces: tuple[tuple[str, str, float], ...]
    entropic: bool = False

    def get(self, kind: str, reservoir: str) -> float:
        for k, lead, value in self.forces:
            if (k, lead) == (kind, reservoir):
                return value
        raise KeyError((kind, reservoir))


@dataclass(frozen=True)
class ForceFluxView:
    representation: str
    pairs: tuple[FluxForcePair, ...]
    sigma_check: float
    entropic: bool = False


@dataclass(frozen=True)
class OnsagerMatrix:
    L_EE: float
    L_EN: float
    L_NE: float
    L_NN: float
    beta: float
    mu: float
    step: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.L_EE, self.L_EN], [self.L_NE, self.L_NN]])

    @property
    def reciprocity_residual(self) -> float:
        return abs(self.L_EN - self.L_NE)

    def reciprocal(self, rtol: float = 1e-3, floor: float = 1e-12) -> bool:
        scale = max(abs(self.L_EN), abs(self.L_NE), floor)
        return bool(self.reciprocity_residual <= rtol * scale)

    @property
    def direct_positive(self) -> bool:
        return bool(self.L_EE > 0 and self.L_NN > 0)


@dataclass(frozen=True)
class WarningRecord:
    code: str
    message: str

    def as_dict(self) -> dict[str, str]:
        return {"code": self.code, "message": self.message}


@dataclass(frozen=True)
class ScanPoint:
    params: Mapping[str, float]
    label: Regime
    report: SteadyReport = field(compare=False)
    forces: tuple[float, float] = (0.0, 0.0)
    fluxes: tuple[float, float] = (0.0, 0.0)
