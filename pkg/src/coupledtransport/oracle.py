"""Independent references for the steady-state solver.

Nothing here shares code with :mod:`coupledtransport.steady`: the time
integrator relaxes ``dp/dt = W p`` directly and the Gibbs state is computed
from the eigenenergies alone.
"""

from __future__ import annotations

import math

import numpy as np

from .core import InvalidParameterError, RateMatrix, StepSizeError, SystemSpec
from .rates import build_eigenbasis

FALLBACK_TIME = 1e4
DRIFT_TOL = 1e-9
MAX_STEPS = 10_000_000


def _generator(W) -> np.ndarray:
    return W.generator if isinstance(W, RateMatrix) else np.asarray(W, dtype=float)


def integrate(
    W, p0, t_final: float, dt: float, n_samples: int = 101, max_steps: int = MAX_STEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 propagation of the master equation.

    Returns ``(times, samples)`` with ``samples[k]`` the populations at
    ``times[k]``. For a linear right-hand side the four RK4 stages collapse
    into the fixed step map ``1 + hW + (hW)^2/2 + (hW)^3/6 + (hW)^4/24``,
    which is applied once per step.

    Raises
    ------
    StepSizeError
        If ``dt >= 0.1 / max|W_ii|`` (stability guard), ``dt <= 0``, or the
        run would need more than ``max_steps`` steps.
    """
    G = _generator(W)
    p = np.array(p0, dtype=float)
    if p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
        raise InvalidParameterError("p0 must be a probability vector")
    if not dt > 0:
        raise StepSizeError(f"dt must be positive (got {dt})")
    max_rate = float(np.abs(np.diag(G)).max()) if G.size else 0.0
    if max_rate > 0 and not dt < 0.1 / max_rate:
        raise StepSizeError(f"dt={dt} violates the stability guard dt < {0.1 / max_rate:.6g}")

    n_steps = max(1, int(math.ceil(t_final / dt)))
    if n_steps > max_steps:
        raise StepSizeError(f"t_final/dt needs {n_steps} steps (max_steps={max_steps}); the generator is too stiff")
    h = t_final / n_steps
    hW = h * G
    step = np.eye(len(p))
    term = np.eye(len(p))
    for k in range(1, 5):
        term = term @ hW / k
        step = step + term

    sample_at = np.unique(np.linspace(0, n_steps, n_samples).round().astype(int))
    times = sample_at * h
    samples = np.empty((len(sample_at), len(p)))
    k_next = 0
    for n in range(n_steps + 1):
        if n == sample_at[k_next]:
            total = p.sum()
            if abs(total - 1.0) > DRIFT_TOL:
                raise StepSizeError(f"normalization drift {total - 1.0:.3e} at t={n * h}")
            samples[k_next] = p / total
            k_next += 1
            if k_next == len(sample_at):
                break
        p = step @ p
    return times, samples


def relaxation_time(W) -> float:
    """Inverse of the slowest non-zero decay rate of ``W``.

    Falls back to :data:`FALLBACK_TIME` when every eigenvalue vanishes.
    """
    G = _generator(W)
    rates = np.abs(np.linalg.eigvals(G).real)
    scale = rates.max() if rates.size else 0.0
    nonzero = rates[rates > 1e-12 * max(scale, 1.0)]
    if nonzero.size == 0:
        return FALLBACK_TIME
    return 1.0 / nonzero.min()


def long_time_populations(W, p0, settle: float = 40.0, safety: float = 0.05) -> np.ndarray:
    """Integrate for ``settle`` relaxation times and return the last sample.

    After ``t`` relaxation times the slowest mode has decayed by ``exp(-t)``
    times a conditioning factor of the eigenvectors; 40 leaves ample margin
    below ``1e-8``, which 20 does not.
    """
    G = _generator(W)
    t_final = settle * relaxation_time(G)
    max_rate = float(np.abs(np.diag(G)).max())
    dt = safety / max_rate if max_rate > 0 else t_final
    _, samples = integrate(G, p0, t_final, dt, n_samples=2)
    return samples[-1]


def relative_entropy(p, q) -> float:
    """Kullback-Leibler divergence ``sum p ln(p/q)`` with ``0 ln 0 = 0``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def gibbs_state(system: SystemSpec, beta: float, mu: float) -> np.ndarray:
    """Grand-canonical populations ``exp(-beta (E_i - mu N_i)) / Z``."""
    if not beta > 0:
        raise InvalidParameterError(f"beta > 0 required (got {beta})")
    basis = build_eigenbasis(system)
    x = np.array([-beta * (s.energy - mu * s.particles) for s in basis])
    w = np.exp(x - x.max())
    return w / w.sum()
