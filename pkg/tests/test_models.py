import dataclasses
import pickle

import numpy as np
import pytest
from hypothesis import given

from coupledtransport import (
    ConfigurationError,
    DotSpec,
    PreconditionError,
    Regime,
    ReservoirSpec,
    Scenario,
    Spin,
    SystemSpec,
    TopologyError,
    cqd_three_terminal,
    icc_reduction,
    sb_reduction,
    single_qd_two_terminal,
)
from coupledtransport.models import ICCFamily, LeadPerturbation, lead_from_forces, split_kappa
from coupledtransport.thermo import classify_view, forces_three_terminal, forces_two_terminal, icc_forces

from conftest import cqd_scenarios


def _lead(rid, beta=1.0, mu=0.0, gamma=1.0, spin=Spin.UNPOLARIZED):
    return ReservoirSpec(rid, beta, mu, gamma, spin)


def _cqd(kc=0.5, ks=0.0, betas=(1.0, 1.0, 1.0), mus=(0.0, 0.0, 0.0), eb=1.0, eu=2.0):
    leads = [_lead(i, b, m) for i, b, m in zip("lru", betas, mus)]
    return cqd_three_terminal(eb, eu, kc, ks, *leads)


# --- single dot ------------------------------------------------------------

def test_single_identical_leads_equilibrium():
    s = single_qd_two_terminal(1.0, _lead("l", 0.9, 0.3), _lead("r", 0.9, 0.3))
    assert len(s.graph.basis) == 2 and len(s.graph.transitions) == 4
    report = s.solve()
    assert all(abs(c.particle) <= 1e-15 and abs(c.energy) <= 1e-15 for c in report.currents.values())


def test_single_hot_left_heats_right():
    report = single_qd_two_terminal(1.0, _lead("l", 0.5), _lead("r", 1.0)).solve()
    assert report.currents["l"].energy > 0
    assert report.currents["l"].energy == pytest.approx(1.0 * report.currents["l"].particle, rel=1e-15)


def test_single_requires_l_and_r():
    with pytest.raises(ConfigurationError):
        single_qd_two_terminal(1.0, _lead("a"), _lead("r"))


# --- coupled dots ----------------------------------------------------------

def test_cqd_repulsive_model():
    s = _cqd(kc=0.7, ks=0.0)
    assert s.system.kappa == 0.7
    assert all(d.spin is Spin.UNPOLARIZED for d in s.system.dots)
    assert s.warnings == ()


def test_cqd_spin_model_inverts_levels():
    s = _cqd(kc=0.2, ks=1.5)
    assert s.system.kappa == pytest.approx(-1.3)
    assert s.system.dot("b").spin is Spin.DOWN and s.system.dot("u").spin is Spin.UP
    energies = {st.index: st.energy for st in s.graph.basis}
    assert energies["D"] < energies["C"]


def test_cqd_identical_leads_no_cycling():
    report = _cqd(betas=(0.6,) * 3, mus=(0.4,) * 3).solve()
    assert abs(report.cycle_flux) <= 1e-15
    assert all(abs(c.energy) <= 1e-13 for c in report.currents.values())


def test_cqd_level_order_warning():
    s = _cqd(eb=2.0, eu=1.0)
    assert [w.code for w in s.warnings] == ["level-order"]


def test_cqd_fixed_topology():
    s = _cqd()
    bad = SystemSpec(s.system.dots, 0.5, 0.0, frozenset({("b", "l"), ("u", "r"), ("u", "u")}))
    with pytest.raises(ConfigurationError, match="fixed contacts"):
        Scenario("cqd", bad, s.reservoirs)


def test_cqd_uncoupled_dot_rejected():
    s = _cqd()
    system = SystemSpec(s.system.dots, 0.5, 0.0, frozenset({("b", "l"), ("b", "r")}))
    with pytest.raises(ConfigurationError):
        Scenario("cqd", system, s.reservoirs)


def test_cqd_spin_mismatch_rejected():
    leads = [_lead("l", spin=Spin.UP), _lead("r"), _lead("u")]
    with pytest.raises(ConfigurationError, match="spin"):
        cqd_three_terminal(1.0, 2.0, 0.0, 1.0, *leads)


def test_model_and_system_must_agree():
    single = single_qd_two_terminal(1.0, _lead("l"), _lead("r"))
    with pytest.raises(ConfigurationError):
        Scenario("cqd", single.system, single.reservoirs)


def test_split_kappa():
    assert split_kappa(0.5) == (0.5, 0.0)
    assert split_kappa(-2.0) == (0.0, 2.0)


# --- reductions ------------------------------------------------------------

def test_sb_reduction_equalizes_conductors():
    s = sb_reduction(_cqd(betas=(0.5, 1.0, 2.0), mus=(0.3, -0.2, 0.0)))
    l, r, u = (s.reservoir(k) for k in "lru")
    assert l.beta == r.beta == 0.5
    assert s.reduction == "sb"
    assert [w.code for w in s.warnings] == ["sb-reduction"]
    assert forces_three_terminal(l, r, u, eliminate="r").get("energy", "l") == 0.0


def test_sb_reduction_equilibrium():
    s = sb_reduction(_cqd(betas=(0.8, 0.8, 0.8), mus=(0.1, 0.1, 0.1)))
    assert s.warnings == ()
    assert classify_view(s.classification_view(s.solve())) is Regime.EQUILIBRIUM


def test_sb_wide_band_has_no_thermoelectric_conversion():
    # energy-independent couplings cannot tell the AB and CD channels apart,
    # so a hot upper bath drives no particle current without a bias
    s = sb_reduction(
        cqd_three_terminal(
            0.0, 1.0, 1.0, 0.0,
            _lead("l", 1.0, 0.0, 0.1), _lead("r", 1.0, 0.0, 2.0), _lead("u", 0.1, 0.0, 1.0),
        )
    )
    report = s.solve()
    assert abs(report.currents["l"].particle) <= 1e-15
    # heat still crosses from the hot upper bath into the conductor
    assert report.cycle_flux > 0
    assert report.currents["u"].energy == pytest.approx(1.0 * report.cycle_flux, rel=1e-12)
    assert classify_view(s.classification_view(report)) is Regime.SEEBECK_NORMAL

    biased = s.with_reservoir("l", mu=0.3)
    report = biased.solve()
    assert report.currents["l"].particle > 0
    assert classify_view(biased.classification_view(report)) is Regime.PARALLEL_DISSIPATIVE


@given(cqd_scenarios())
def test_sb_bilinear(scenario):
    s = sb_reduction(scenario)
    report = s.solve()
    view = s.classification_view(report)
    assert view.representation == "sb"
    assert abs(view.sigma_check - report.sigma_dot) <= 1e-10 * max(1.0, abs(report.sigma_dot))


def test_icc_reduction_equalizes_r_and_u():
    s = icc_reduction(_cqd(betas=(0.5, 1.0, 2.0)))
    assert s.reservoir("u").beta == 1.0
    assert [w.code for w in s.warnings] == ["icc-reduction"]
    fs = icc_forces(*(s.reservoir(k) for k in "lru"))
    assert fs.get("energy", "l") == 0.5


def test_icc_reduction_equilibrium():
    s = icc_reduction(_cqd(betas=(1.0, 1.0, 3.0), mus=(0.4, 0.4, -1.0)))
    view = s.classification_view(s.solve())
    assert classify_view(view) is Regime.EQUILIBRIUM


@given(cqd_scenarios())
def test_icc_forces_share_lead_and_bilinear(scenario):
    s = icc_reduction(scenario)
    report = s.solve()
    view = s.classification_view(report)
    assert {p.reservoir for p in view.pairs} == {"l"}
    assert abs(view.sigma_check - report.sigma_dot) <= 1e-10 * max(1.0, abs(report.sigma_dot))


def test_reductions_need_cqd():
    s = single_qd_two_terminal(1.0, _lead("l"), _lead("r"))
    with pytest.raises(TopologyError):
        sb_reduction(s)
    with pytest.raises(TopologyError):
        icc_reduction(s)


def test_reduction_flag_checked():
    s = _cqd(betas=(0.5, 1.0, 1.0))
    with pytest.raises(ConfigurationError):
        dataclasses.replace(s, reduction="sb")


def test_icc_family_positive_kappa_dissipative():
    family = ICCFamily(1.0, 2.0, 1.0, 2.0)
    for kappa in (0.3, 1.0):
        for fe in (0.1, 0.5):
            for fn in (0.2, 1.5):
                s = family(kappa, fe, fn)
                assert classify_view(s.classification_view(s.solve())) is Regime.PARALLEL_DISSIPATIVE


def test_icc_family_witness():
    s = ICCFamily(1.0, 2.0, 1.0, 2.0)(-2.0, 0.1, 2.0)
    report = s.solve()
    assert classify_view(s.classification_view(report)) is Regime.GENUINE_ICC
    assert report.sigma_dot > 0


# --- force inversion -------------------------------------------------------

def test_lead_from_forces_inverts_two_terminal_forces():
    beta_l, mu_l = lead_from_forces(1.3, 0.4, 0.25, -0.7)
    fe, fn = forces_two_terminal(_lead("l", beta_l, mu_l), _lead("r", 1.3, 0.4))
    assert fe == pytest.approx(0.25, abs=1e-15)
    assert fn == pytest.approx(-0.7, abs=1e-15)


def test_lead_from_forces_rejects_negative_temperature():
    with pytest.raises(PreconditionError):
        lead_from_forces(1.0, 0.0, 1.0, 0.0)


def test_families_pickle():
    for obj in (ICCFamily(1.0, 2.0, 1.0, 2.0), LeadPerturbation(_cqd(), 1.0, 0.0), _cqd()):
        assert pickle.loads(pickle.dumps(obj)) == obj


def test_scenario_equality_ignores_warnings():
    a = _cqd(eb=2.0, eu=1.0)
    b = dataclasses.replace(a, warnings=())
    assert a == b


def test_with_reservoir():
    s = _cqd().with_reservoir("u", mu=0.5)
    assert s.reservoir("u").mu == 0.5
    assert s.reservoir("l").mu == 0.0
    np.testing.assert_allclose(s.rate_matrix.generator.sum(axis=0), 0, atol=1e-15)
