"""Entropy production, force-flux representations, Onsager coefficients and
transport-regime classification."""

from __future__ import annotations

import itertools
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .core import (
    ConfigurationError,
    Currents,
    FluxForcePair,
    ForceFluxView,
    ForceSet,
    OnsagerMatrix,
    PreconditionError,
    Regime,
    ReservoirSpec,
    ScanPoint,
    SteadyReport,
    StepSizeError,
    UnsupportedRepresentationError,
)

DEFAULT_TOL = 1e-10
BILINEAR_RTOL = 1e-10


def entropy_production_rate(currents: Mapping[str, Currents], reservoirs: Iterable[ReservoirSpec]) -> float:
    """Steady-state entropy production ``-sum_lambda beta_lambda J_Q^lambda``."""
    return -sum(res.beta * currents[res.id].heat for res in reservoirs)


def forces_two_terminal(l: ReservoirSpec, r: ReservoirSpec) -> tuple[float, float]:
    """Energy and particle forces conjugate to the ``l`` fluxes.

    ``F_E = beta_r - beta_l`` and ``F_N = beta_l mu_l - beta_r mu_r``; the
    ``r``-referenced forces are the negations.
    """
    return r.beta - l.beta, l.beta * l.mu - r.beta * r.mu


def two_terminal_force_sets(l: ReservoirSpec, r: ReservoirSpec) -> list[ForceSet]:
    fe, fn = forces_two_terminal(l, r)
    return [
        ForceSet(f"{l.id}-based", (("energy", l.id, fe), ("particle", l.id, fn))),
        ForceSet(f"{r.id}-based", (("energy", r.id, -fe), ("particle", r.id, -fn))),
    ]


def forces_three_terminal(
    l: ReservoirSpec,
    r: ReservoirSpec,
    u: ReservoirSpec,
    eliminate: str = "r",
    particle_lead: str = "l",
) -> ForceSet:
    """Entropic biases conjugate to the two energy fluxes kept after dropping one.

    Energy conservation lets one energy current be eliminated; the remaining
    two are paired with ``beta_eliminated - beta_kept``. The particle force is
    unique up to the choice of lead (``l`` or ``r``). The set is flagged
    ``entropic`` unless one energy bias vanishes identically.
    """
    by_label = {"l": l, "r": r, "u": u}
    if eliminate not in by_label:
        raise ConfigurationError(f"eliminate must be one of l, r, u (got {eliminate!r})")
    if particle_lead not in ("l", "r"):
        raise ConfigurationError(f"particle_lead must be l or r (got {particle_lead!r})")
    dropped = by_label[eliminate]
    energy = tuple(
        ("energy", res.id, dropped.beta - res.beta)
        for key, res in by_label.items() if key != eliminate
    )
    fn = l.beta * l.mu - r.beta * r.mu
    particle = ("particle", l.id, fn) if particle_lead == "l" else ("particle", r.id, -fn)
    reduced = any(value == 0.0 for _, _, value in energy)
    return ForceSet(f"eliminate-{eliminate}/N{particle_lead}", energy + (particle,), entropic=not reduced)


def sb_forces(l: ReservoirSpec, r: ReservoirSpec, u: ReservoirSpec) -> ForceSet:
    """Forces of the equal-conductor-temperature reduction.

    With ``beta_l = beta_r = beta``: ``F_E^u = beta - beta_u`` and
    ``F_N^l = beta (mu_l - mu_r)``.
    """
    if l.beta != r.beta:
        raise PreconditionError(f"sb reduction needs beta_l = beta_r (got {l.beta}, {r.beta})")
    beta = l.beta
    return ForceSet("sb", (("energy", u.id, beta - u.beta), ("particle", l.id, beta * (l.mu - r.mu))))


def icc_forces(l: ReservoirSpec, r: ReservoirSpec, u: ReservoirSpec) -> ForceSet:
    """Mutually parallel forces when ``r`` and ``u`` share ``beta``.

    ``F_E^l = beta - beta_l`` and ``F_N^l = beta_l mu_l - beta mu_r``, both
    conjugate to fluxes out of ``l``.
    """
    if r.beta != u.beta:
        raise PreconditionError(f"icc reduction needs beta_r = beta_u (got {r.beta}, {u.beta})")
    beta = r.beta
    return ForceSet("icc", (("energy", l.id, beta - l.beta), ("particle", l.id, l.beta * l.mu - beta * r.mu)))


def force_flux_view(report: SteadyReport, forces: ForceSet) -> ForceFluxView:
    pairs = []
    for kind, lead, value in forces.forces:
        if lead not in report.currents:
            raise ConfigurationError(f"representation {forces.representation!r} references reservoir {lead!r} absent from report")
        c = report.currents[lead]
        flux = c.energy if kind == "energy" else c.particle
        pairs.append(FluxForcePair(kind, lead, flux, value))
    sigma = sum(p.flux * p.force for p in pairs)
    return ForceFluxView(forces.representation, tuple(pairs), sigma, forces.entropic)


def bilinear_check(report: SteadyReport, view: ForceFluxView) -> float:
    """``|sigma_dot - sum J F|`` for one representation of the same steady state."""
    for p in view.pairs:
        if p.reservoir not in report.currents:
            raise ConfigurationError(f"view {view.representation!r} does not match the report's reservoirs")
    return abs(report.sigma_dot - sum(p.flux * p.force for p in view.pairs))


def bilinear_tolerance(report: SteadyReport) -> float:
    return BILINEAR_RTOL * max(1.0, abs(report.sigma_dot))


# --- Onsager coefficients -------------------------------------------------

def _rate_scale(scenario, lead: str) -> float:
    """Summed channel rates through ``lead``, plain and energy-weighted.

    A net current is a difference of rate-times-population terms whose
    populations carry absolute rounding errors, so this sets its noise floor.
    """
    W = scenario.rate_matrix
    particles = energy = 0.0
    for t in W.graph.transitions:
        if t.reservoir == lead:
            particles += W.rate(t)
            energy += abs(t.omega) * W.rate(t)
    return max(particles, energy)


def onsager_matrix(
    builder: Callable[[float, float], "object"],
    beta: float,
    mu: float,
    step: float = 1e-4,
) -> OnsagerMatrix:
    """Linear-response coefficients of ``(J_E^l, J_N^l)`` around equilibrium.

    ``builder(beta_l, mu_l)`` must return a scenario whose other reservoirs sit
    at the reference ``(beta, mu)``; ``builder(beta, mu)`` is checked to be a
    true equilibrium. Each force is displaced by ``+-step`` with the other held
    at zero by inverting ``F_E = beta - beta_l``, ``F_N = beta_l mu_l - beta mu``
    for ``(beta_l, mu_l)``, and the currents are central-differenced.
    """
    if not step > 0:
        raise StepSizeError(f"step must be positive (got {step})")
    reference = builder(beta, mu)
    for res in reference.reservoirs:
        if res.beta != beta or res.mu != mu:
            raise PreconditionError(
                f"reference is not an equilibrium: reservoir {res.id!r} at (beta={res.beta}, mu={res.mu}), expected ({beta}, {mu})"
            )

    def currents(fe: float, fn: float) -> tuple[float, float]:
        beta_l = beta - fe
        if not beta_l > 0:
            raise StepSizeError(f"step {step} drives beta_l non-positive at beta={beta}")
        mu_l = (fn + beta * mu) / beta_l
        c = builder(beta_l, mu_l).solve().currents["l"]
        return c.energy, c.particle

    e_plus, e_minus = currents(step, 0.0), currents(-step, 0.0)
    n_plus, n_minus = currents(0.0, step), currents(0.0, -step)
    # net currents vanish at the reference; rounding noise follows the rates
    floor = 1e3 * sys.float_info.epsilon * _rate_scale(reference, "l")
    d_ee = e_plus[0] - e_minus[0]
    d_nn = n_plus[1] - n_minus[1]
    if abs(d_ee) <= floor or abs(d_nn) <= floor:
        raise StepSizeError(f"step {step} too small: current differences at rounding level")
    two_h = 2.0 * step
    return OnsagerMatrix(
        L_EE=float(d_ee / two_h),
        L_EN=float((n_plus[0] - n_minus[0]) / two_h),
        L_NE=float((e_plus[1] - e_minus[1]) / two_h),
        L_NN=float(d_nn / two_h),
        beta=beta,
        mu=mu,
        step=step,
    )


# --- regime classification ------------------------------------------------

def classify_regime(
    forces: Sequence[float],
    currents: Sequence[float],
    tol: float = DEFAULT_TOL,
    parallel: bool = True,
) -> Regime:
    """Label a two-force state ``(F_E, F_N)`` with fluxes ``(J_E, J_N)``.

    ``parallel`` says whether both forces refer to the same lead, so that
    equal signs mean physically parallel drives. Only then can a current
    opposing both forces be an ICC, and a cross current opposing the lone
    non-zero force a pseudo-ICC. Values with ``|x| < tol`` count as zero.
    """
    if len(forces) != 2 or len(currents) != 2:
        raise UnsupportedRepresentationError(
            f"classification needs exactly two force-flux pairs (got {len(forces)}); reduce the model first"
        )
    fe, fn = (0.0 if abs(x) < tol else float(x) for x in forces)
    je, jn = (0.0 if abs(x) < tol else float(x) for x in currents)

    if fe == 0.0 and fn == 0.0:
        return Regime.EQUILIBRIUM
    if fn == 0.0:
        if jn * fe < 0:
            return Regime.PSEUDO_ICC if parallel else Regime.SEEBECK_UNCONVENTIONAL
        return Regime.SEEBECK_NORMAL
    if fe == 0.0:
        if je * fn < 0:
            return Regime.PSEUDO_ICC if parallel else Regime.PELTIER_UNCONVENTIONAL
        return Regime.PELTIER_NORMAL

    against_e = je * fe < 0
    against_n = jn * fn < 0
    if against_e and against_n:
        raise ValueError("both currents oppose their conjugate forces: negative entropy production")
    if not (against_e or against_n):
        return Regime.PARALLEL_DISSIPATIVE
    if parallel and fe * fn > 0:
        return Regime.GENUINE_ICC
    return Regime.CROSS_EFFECT_ENGINE if against_n else Regime.CROSS_EFFECT_REFRIGERATOR


def classify_view(view: ForceFluxView, tol: float = DEFAULT_TOL) -> Regime:
    """Classify a representation, dropping an energy bias that vanishes.

    Three-pair views are accepted only when one energy bias is zero, which is
    what a reduction produces; otherwise the labels would depend on the
    arbitrary choice of eliminated flux.
    """
    pairs = list(view.pairs)
    if len(pairs) == 3:
        zero = [p for p in pairs if p.kind == "energy" and abs(p.force) < tol]
        if len(zero) != 1:
            raise UnsupportedRepresentationError(
                f"representation {view.representation!r} has three non-trivial biases; classify a reduced model"
            )
        pairs.remove(zero[0])
    if len(pairs) != 2:
        raise UnsupportedRepresentationError(f"representation {view.representation!r} is not a two-force view")
    energy = [p for p in pairs if p.kind == "energy"]
    particle = [p for p in pairs if p.kind == "particle"]
    if len(energy) != 1 or len(particle) != 1:
        raise UnsupportedRepresentationError("need one energy and one particle pair")
    e, n = energy[0], particle[0]
    return classify_regime((e.force, n.force), (e.flux, n.flux), tol, parallel=e.reservoir == n.reservoir)


# --- ICC scans ------------------------------------------------------------

@dataclass
class ScanResult:
    points: list[ScanPoint]
    counts: dict[Regime, int] = field(default_factory=dict)

    @property
    def witnesses(self) -> list[ScanPoint]:
        return [p for p in self.points if p.label is Regime.GENUINE_ICC]

    @property
    def certificate(self) -> str:
        n = len(self.witnesses)
        if n == 0:
            return f"no ICC found on {len(self.points)} grid points"
        return f"{n} ICC witnesses on {len(self.points)} grid points"


def _evaluate_point(builder, params: dict[str, float], tol: float) -> ScanPoint:
    scenario = builder(**params)
    report = scenario.solve()
    view = scenario.classification_view(report)
    if view is None:
        raise UnsupportedRepresentationError("scan needs a scenario with a two-force representation")
    label = classify_view(view, tol)
    energy = next(p for p in view.pairs if p.kind == "energy")
    particle = next(p for p in view.pairs if p.kind == "particle")
    return ScanPoint(params, label, report, (energy.force, particle.force), (energy.flux, particle.flux))


def _evaluate_chunk(builder, chunk: list[dict[str, float]], tol: float) -> list[ScanPoint]:
    return [_evaluate_point(builder, params, tol) for params in chunk]


def grid_points(grid: Mapping[str, Sequence[float]]) -> list[dict[str, float]]:
    """Cartesian product of the axes, lexicographic in axis order."""
    names = list(grid)
    return [dict(zip(names, map(float, combo))) for combo in itertools.product(*(grid[n] for n in names))]


def scan_icc(
    builder: Callable[..., "object"],
    grid: Mapping[str, Sequence[float]],
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> ScanResult:
    """Solve and classify every grid point of a two-force model family.

    ``builder(**params)`` returns a scenario exposing ``solve()`` and
    ``classification_view(report)``. With ``workers > 1`` the grid is split
    across processes (the builder must be picklable); output order always
    follows the grid.
    """
    params = grid_points(grid)
    if workers > 1 and len(params) > 1:
        size = -(-len(params) // (4 * workers))
        chunks = [params[i:i + size] for i in range(0, len(params), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_evaluate_chunk, itertools.repeat(builder), chunks, itertools.repeat(tol))
            points = [p for part in parts for p in part]
    else:
        points = _evaluate_chunk(builder, params, tol)
    counts = Counter(p.label for p in points)
    return ScanResult(points, {label: counts.get(label, 0) for label in Regime})
