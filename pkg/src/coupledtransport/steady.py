"""Steady-state populations, net transition rates and reservoir currents."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import (
    Currents,
    NonUniqueSteadyStateError,
    RateMatrix,
    ReservoirSpec,
    SolverError,
    TopologyError,
    Transition,
    TransitionGraph,
)

RESIDUAL_TOL = 1e-12
CLIP_TOL = 1e-12


def _closed_classes(W: np.ndarray) -> list[list[int]]:
    """Communicating classes of the jump graph that have no exit."""
    n = W.shape[0]
    # reach[i, j]: j reachable from i (W[j, i] > 0 is a jump i -> j)
    reach = (W.T > 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(max(n, 2)))))):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    mutual = reach & reach.T
    closed, seen = [], set()
    for i in range(n):
        if i in seen:
            continue
        members = np.flatnonzero(mutual[i])
        seen.update(members.tolist())
        if not reach[i, ~mutual[i]].any():
            closed.append(members.tolist())
    return closed


def solve_steady_state(W: RateMatrix) -> np.ndarray:
    """Null vector of the generator, normalized to a probability vector.

    The last row of ``W`` is replaced with the normalization condition and the
    square system is solved by LU with partial pivoting.

    Raises
    ------
    NonUniqueSteadyStateError
        If the jump graph has more than one closed class.
    SolverError
        If the solution has a component below ``-1e-12`` or the residual
        ``|W p|_inf`` exceeds tolerance.
    """
    G = W.generator
    n = G.shape[0]
    closed = _closed_classes(G)
    if len(closed) != 1:
        names = [[W.graph.basis[k].index for k in comp] for comp in closed]
        raise NonUniqueSteadyStateError(f"state graph has {len(closed)} closed components: {names}", names)
    A = G.copy()
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        p = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular steady-state system: {exc}") from exc
    if p.min() < -CLIP_TOL:
        raise SolverError(f"negative population {p.min():.3e} in steady state")
    p = np.where(p < 0, 0.0, p)
    scale = max(1.0, float(np.abs(G).max()))
    if residual(W, p) > RESIDUAL_TOL * scale:
        raise SolverError(f"steady-state residual {residual(W, p):.3e} above tolerance")
    return p


def residual(W: RateMatrix, p: np.ndarray) -> float:
    return float(np.abs(W.generator @ p).max())


def net_transition_rate(p: np.ndarray, W: RateMatrix, transition: Transition) -> float:
    """Forward flow along ``transition`` minus the flow along its reverse.

    For an excitation ``i -> j`` this is ``gamma f+ p_i - gamma f- p_j``; the
    de-excitation ``j -> i`` gives the negative of the same number.
    """
    graph = W.graph
    forward = W.rate(transition)
    backward = W.rate(transition.reversed())
    return float(forward * p[graph.position(transition.source)] - backward * p[graph.position(transition.target)])


def reservoir_currents(
    p: np.ndarray, W: RateMatrix, reservoirs: Sequence[ReservoirSpec]
) -> dict[str, Currents]:
    """Energy, particle and heat currents out of each reservoir into the system."""
    out = {}
    for res in reservoirs:
        jn = 0.0
        je = 0.0
        for t in W.graph.excitations(res.id):
            g = net_transition_rate(p, W, t)
            jn += g
            je += t.omega * g
        je, jn = float(je), float(jn)
        out[res.id] = Currents(energy=je, particle=jn, heat=je - res.mu * jn)
    return out


def _cqd_leads(graph: TransitionGraph) -> tuple[list[str], list[str]]:
    if [s.index for s in graph.basis] != ["A", "B", "C", "D"]:
        raise TopologyError("cycle flux is defined for the coupled-dot model only")
    lower = sorted({t.reservoir for t in graph.transitions if t.dot == "b"})
    upper = sorted({t.reservoir for t in graph.transitions if t.dot == "u"})
    if not lower or not upper:
        raise TopologyError("cycle flux needs both dots tunnel-coupled")
    return lower, upper


def _composite(p: np.ndarray, W: RateMatrix, source: str, target: str, leads: list[str]) -> float:
    total = 0.0
    for t in W.graph.transitions:
        if t.source == source and t.target == target and t.reservoir in leads:
            total += net_transition_rate(p, W, t)
    return float(total)


def cycle_rates(p: np.ndarray, W: RateMatrix) -> tuple[float, float, float, float]:
    """The four net rates around the cycle A -> B -> D -> C -> A.

    Rates on the lower dot sum over every lead coupled to it. At steady state
    all four coincide.
    """
    lower, upper = _cqd_leads(W.graph)
    return (
        _composite(p, W, "A", "B", lower),
        _composite(p, W, "B", "D", upper),
        _composite(p, W, "D", "C", lower),
        _composite(p, W, "C", "A", upper),
    )


def cycle_flux(p: np.ndarray, W: RateMatrix) -> float:
    """Net rate of the A -> B -> D -> C -> A cycle (lower-dot A -> B leg)."""
    lower, _ = _cqd_leads(W.graph)
    return _composite(p, W, "A", "B", lower)
