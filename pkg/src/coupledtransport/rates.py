"""Fermi statistics, transition graphs and the Pauli generator."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import (
    ConfigurationError,
    EigenState,
    InvalidParameterError,
    RateMatrix,
    ReservoirSpec,
    SystemSpec,
    Transition,
    TransitionGraph,
)

# exp() arguments beyond this magnitude short-circuit to exact 0 or 1
EXP_CUTOFF = 500.0

_CQD_INDEX = {(0, 0): "A", (1, 0): "B", (0, 1): "C", (1, 1): "D"}
_SINGLE_INDEX = {(0,): "A", (1,): "B"}


def fermi_plus(beta: float, mu: float, omega: float) -> float:
    """Occupation of a lead level at ``omega``: ``1 / (1 + exp(beta (omega - mu)))``."""
    if not beta > 0:
        raise InvalidParameterError(f"beta > 0 required (got {beta})")
    x = beta * (omega - mu)
    if x > EXP_CUTOFF:
        return 0.0
    if x < -EXP_CUTOFF:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def fermi_minus(beta: float, mu: float, omega: float) -> float:
    """Vacancy of a lead level, ``1 - fermi_plus``."""
    if not beta > 0:
        raise InvalidParameterError(f"beta > 0 required (got {beta})")
    x = beta * (omega - mu)
    if x > EXP_CUTOFF:
        return 1.0
    if x < -EXP_CUTOFF:
        return 0.0
    # exp(x)/(1+exp(x)) keeps full relative precision where the value is small
    return 1.0 / (1.0 + math.exp(-x))


def build_eigenbasis(system: SystemSpec) -> list[EigenState]:
    """Number-state eigenbasis of the diagonal dot Hamiltonian.

    A single dot gives ``[A(0), B(eps)]``; coupled dots give
    ``[A(0), B(eps_b), C(eps_u), D(eps_b + eps_u + kappa)]`` with occupations
    ordered ``(n_b, n_u)``.
    """
    if not system.is_cqd:
        eps = system.dot("single").epsilon
        return [EigenState("A", (0,), 0.0), EigenState("B", (1,), eps)]
    eb = system.dot("b").epsilon
    eu = system.dot("u").epsilon
    return [
        EigenState("A", (0, 0), 0.0),
        EigenState("B", (1, 0), eb),
        EigenState("C", (0, 1), eu),
        EigenState("D", (1, 1), eb + eu + system.kappa),
    ]


def build_transition_graph(system: SystemSpec, reservoirs: Sequence[ReservoirSpec]) -> TransitionGraph:
    """Sequential-tunnelling transitions allowed by the tunnel contacts.

    Every lead coupled to a dot contributes, for each pair of eigenstates that
    differ only in that dot's occupation, one excitation and one
    de-excitation. Pairs differing in both dots (B-C, A-D) never appear.
    """
    by_id = {}
    for res in reservoirs:
        if res.id in by_id:
            raise ConfigurationError(f"duplicate reservoir id {res.id!r}")
        by_id[res.id] = res

    basis = build_eigenbasis(system)
    order = system.dot_order
    index_of = _CQD_INDEX if system.is_cqd else _SINGLE_INDEX
    energy = {s.index: s.energy for s in basis}

    transitions: list[Transition] = []
    for dot_label, res_id in sorted(system.couplings, key=lambda c: (order.index(c[0]), c[1])):
        if res_id not in by_id:
            raise ConfigurationError(f"coupling ({dot_label!r}, {res_id!r}) references unknown reservoir")
        dot = system.dot(dot_label)
        if not dot.spin.compatible(by_id[res_id].spin):
            raise ConfigurationError(
                f"spin mismatch: dot {dot_label!r} is {dot.spin.value}, reservoir {res_id!r} is {by_id[res_id].spin.value}"
            )
        k = order.index(dot_label)
        for state in basis:
            if state.occupations[k]:
                continue
            occ = list(state.occupations)
            occ[k] = 1
            target = index_of[tuple(occ)]
            omega = energy[target] - state.energy
            up = Transition(state.index, target, omega, res_id, dot_label, +1)
            transitions.extend((up, up.reversed()))
    return TransitionGraph(tuple(basis), tuple(transitions))


def build_rate_matrix(graph: TransitionGraph, reservoirs: Sequence[ReservoirSpec]) -> RateMatrix:
    """Assemble ``W`` with ``W[j, i]`` the summed rate i -> j over reservoirs.

    Excitations run at ``gamma * f+(omega)``, de-excitations at
    ``gamma * f-(omega)`` where ``omega`` is the excitation energy of the pair.
    """
    by_id = {r.id: r for r in reservoirs}
    n = len(graph.basis)
    pos = {s.index: k for k, s in enumerate(graph.basis)}
    W = np.zeros((n, n))
    rates: dict[Transition, float] = {}
    for t in graph.transitions:
        try:
            res = by_id[t.reservoir]
        except KeyError:
            raise ConfigurationError(f"transition references unknown reservoir {t.reservoir!r}") from None
        w = t.excitation_energy
        if t.direction > 0:
            rate = res.gamma * fermi_plus(res.beta, res.mu, w)
        else:
            rate = res.gamma * fermi_minus(res.beta, res.mu, w)
        rates[t] = rate
        W[pos[t.target], pos[t.source]] += rate
    W[np.diag_indices(n)] = 0.0
    W[np.diag_indices(n)] = -W.sum(axis=0)
    return RateMatrix(W, rates, graph)
