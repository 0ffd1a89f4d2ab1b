from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from coupledtransport import ReservoirSpec, cqd_three_terminal, single_qd_two_terminal
from coupledtransport.models import split_kappa

# Parameter box shared by the randomized suites.
BETA = (0.1, 10.0)
MU = (-5.0, 5.0)
EPS = (1e-3, 5.0)
GAMMA = (1e-3, 2.0)
KAPPA = (-5.0, 5.0)


def random_single(rng: np.random.Generator):
    b = rng.uniform(*BETA, 2)
    m = rng.uniform(*MU, 2)
    g = rng.uniform(*GAMMA, 2)
    return single_qd_two_terminal(
        rng.uniform(*EPS),
        ReservoirSpec("l", b[0], m[0], g[0]),
        ReservoirSpec("r", b[1], m[1], g[1]),
    )


def random_cqd(rng: np.random.Generator):
    b = rng.uniform(*BETA, 3)
    m = rng.uniform(*MU, 3)
    g = rng.uniform(*GAMMA, 3)
    eps_b, eps_u = np.sort(rng.uniform(*EPS, 2))
    kc, ks = split_kappa(rng.uniform(*KAPPA))
    leads = [ReservoirSpec(i, b[k], m[k], g[k]) for k, i in enumerate("lru")]
    return cqd_three_terminal(eps_b, eps_u, kc, ks, *leads)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


finite = dict(allow_nan=False, allow_infinity=False)
betas = st.floats(*BETA, **finite)
mus = st.floats(*MU, **finite)
gammas = st.floats(*GAMMA, **finite)
levels = st.floats(*EPS, **finite)
kappas = st.floats(*KAPPA, **finite)


@st.composite
def reservoirs(draw, rid: str):
    return ReservoirSpec(rid, draw(betas), draw(mus), draw(gammas))


@st.composite
def single_scenarios(draw):
    return single_qd_two_terminal(draw(levels), draw(reservoirs("l")), draw(reservoirs("r")))


@st.composite
def cqd_scenarios(draw):
    eb, eu = sorted((draw(levels), draw(levels)))
    kc, ks = split_kappa(draw(kappas))
    return cqd_three_terminal(eb, eu, kc, ks, draw(reservoirs("l")), draw(reservoirs("r")), draw(reservoirs("u")))


scenarios = st.one_of(single_scenarios(), cqd_scenarios())

# Milder box for the time-domain oracle: the stiffness ratio of W (fastest
# over slowest rate) sets the RK4 step count.
MILD = dict(beta=(0.1, 2.0), mu=(-2.0, 2.0), gamma=(0.1, 2.0), eps=(0.05, 2.0), kappa=(-2.0, 2.0))


def _mild_lead(rng, rid):
    return ReservoirSpec(rid, rng.uniform(*MILD["beta"]), rng.uniform(*MILD["mu"]), rng.uniform(*MILD["gamma"]))


def mild_single(rng: np.random.Generator):
    return single_qd_two_terminal(rng.uniform(*MILD["eps"]), _mild_lead(rng, "l"), _mild_lead(rng, "r"))


def mild_cqd(rng: np.random.Generator):
    eps_b, eps_u = np.sort(rng.uniform(*MILD["eps"], 2))
    kc, ks = split_kappa(rng.uniform(*MILD["kappa"]))
    return cqd_three_terminal(eps_b, eps_u, kc, ks, *(_mild_lead(rng, i) for i in "lru"))


mild_scenarios = st.builds(
    lambda seed, cqd: (mild_cqd if cqd else mild_single)(np.random.default_rng(seed)),
    st.integers(0, 2**32 - 1),
    st.booleans(),
)


# --- acceptance summary ---------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{status}  criterion {number:2d}: {title}")
