import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from persistflow.bounds import (
    check_guarantee,
    check_lemma1,
    counterexample_lower_bound,
    lemma1_bound,
    omega,
    proposition2_stages,
    stagewise_contraction_check,
    t_sequence,
    theorem1_bound,
    theorem2_bound,
)
from persistflow.dynamics import simulate
from persistflow.errors import HorizonError, MissingEtaError, ValidationError
from persistflow.schedule import (
    ArcBalancedSchedule,
    CutBalancedSchedule,
    ExplicitSchedule,
    builtin,
    constant_schedule,
    lift,
)

ALL3 = [(j, i) for j in range(3) for i in range(3) if i != j]
SYM2 = constant_schedule([[0.9, 0.1], [0.1, 0.9]])


def test_lemma1_examples():
    assert lemma1_bound(0.3, 0.0) == 1.0
    assert lemma1_bound(0.5, 0.5) == pytest.approx(0.5, rel=1e-15)
    rep = check_lemma1([0.5], 0.5, 0.5)
    assert rep.lhs == 0.5 and rep.rhs == pytest.approx(0.5) and rep.holds
    with pytest.raises(ValidationError):
        lemma1_bound(1.0, 0.1)
    with pytest.raises(ValidationError):
        check_lemma1([0.2], 0.3, 1.0)


@given(st.integers(0, 2**32 - 1))
def test_lemma1_property(seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        m = int(rng.integers(1, 51))
        short = rng.uniform(0, 0.7, size=m)
        if short.sum() > 2:
            short *= 2 / short.sum()
        assert check_lemma1(np.clip(1 - short, 0.3, 1), 0.3, 2.0).holds


def test_omega():
    assert omega(1.0, 0.3) == 0
    assert omega(0.5, 0.5) == 1
    assert omega(0.1, 0.5) == math.ceil(math.log(10) / math.log(2))
    assert omega(0.5, 1.0) is None
    # underflowed contraction still yields a finite count
    assert omega(0.5, 0.0, log_contraction=-800.0) > 1e300


def test_theorem1_plug_in_constants():
    a = np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])
    s = constant_schedule(a)
    b = theorem1_bound(s, K=1, L=1, eps_target=0.5, Ep=ALL3, delta=2.0)
    assert b.R_const == pytest.approx(0.5)
    assert b.d0 == 1
    c = math.log(0.5) / (0.5 - 1)
    assert b.S_const == pytest.approx(math.exp(-(0.5 + 2.0 + 2 * b.eps_tail) * c))
    assert b.Q_const == pytest.approx(math.exp(-2 * (1 * (0.5 + 2.0) + 0.5 + b.eps_tail) * c))
    assert b.Q_const <= b.S_const
    assert b.eps_tail == pytest.approx(0.025)
    assert b.T_eps == 0


def test_theorem1_trivial_target():
    s = ArcBalancedSchedule(3, 2, 2, 0.4, seed=1)
    b = theorem1_bound(s, K=2, L=2, eps_target=1.0)
    assert b.omega1 == 0 and b.t_star == 0 and b.guarantee_time == b.T_eps


def test_theorem1_errors():
    s = ArcBalancedSchedule(3, 2, 2, 0.4, seed=1)
    with pytest.raises(ValidationError, match="delta"):
        theorem1_bound(s, K=2, L=2, eps_target=0.5, delta=2 * 2 * 0.6)
    with pytest.raises(MissingEtaError):
        theorem1_bound(builtin("paper-sec5"), K=2, L=1, eps_target=0.5, Ep=ALL3)
    with pytest.raises(ValidationError, match="spanning tree"):
        theorem1_bound(SYM2, K=1, L=1, eps_target=0.5, Ep=[])
    with pytest.raises(ValidationError, match="arc balance"):
        theorem1_bound(s, K=1, L=2, eps_target=0.5)


def test_theorem1_exact_scan_and_guarantee():
    b = theorem1_bound(SYM2, K=1, L=1, eps_target=0.5, Ep=[(0, 1), (1, 0)])
    assert b.t_star_exact and not b.vacuous
    # constant in-weight 0.1 per step: threshold crossed after ceil(threshold / 0.1) steps
    assert b.t_star == math.ceil(round(b.threshold / 0.1, 9))
    tr = simulate(SYM2, [0.0, 1.0], int(b.guarantee_time))
    g = check_guarantee(tr, 0, b.guarantee_time, 0.5)
    assert g.holds and not g.via_monotonicity


def test_t_sequence_constant_mass():
    a = np.array([[0.75, 0.25], [0.25, 0.75]])
    st_ = t_sequence(constant_schedule(a), 1, [(0, 1)], 0.6, 0, 5)
    assert st_.times == [3, 6, 9, 12, 15]
    assert all(m >= 0.6 for m in st_.masses) and all(b < 0.6 for b in st_.before)
    assert t_sequence(constant_schedule(a), 1, [(0, 1)], 0.1, 0, 1).times == [1]


def test_t_sequence_sec5():
    st_ = t_sequence(builtin("paper-sec5"), 1, ALL3, 0.5, 1, 3)
    assert st_.times[0] < st_.times[1] < st_.times[2]
    for m, b in zip(st_.masses, st_.before):
        assert b < 0.5 <= m <= 1.5


def test_t_sequence_errors():
    fin = ExplicitSchedule(tuple([np.array([[0.9, 0.1], [0.1, 0.9]])] * 5))
    with pytest.raises(HorizonError, match="accumulated"):
        t_sequence(fin, 1, [(0, 1)], 0.3, 0, 5)
    with pytest.raises(ValidationError):
        t_sequence(fin, 1, [(1, 0)], 0.3, 0, 1)


def test_theorem1_fixture_stage_structure():
    s = ArcBalancedSchedule(3, 2, 2, 0.4, seed=1)
    b = theorem1_bound(s, K=2, L=2, eps_target=0.1)
    st_ = b.stages
    assert all(x < y for x, y in zip(st_.times, st_.times[1:]))
    assert all(bf < b.delta <= m <= 1 + b.delta for m, bf in zip(st_.masses, st_.before))
    assert b.t_star_lower >= b.threshold / (1 - 0.4)
    bounds = b.stage_boundaries()
    tr = simulate(s, [0.0, 1.0, 2.0], bounds[-1])
    assert stagewise_contraction_check(tr, bounds, b.factor).ok
    assert b.as_dict()["root"] >= 1


def test_theorem2_two_agents():
    s = constant_schedule([[0.6, 0.4], [0.4, 0.6]])
    b = theorem2_bound(s, K=1, L=1, eps_target=0.5, Ep=[(0, 1), (1, 0)])
    k_star = max(1 / 0.6**0, 1 / 0.6)
    assert b.K_star == pytest.approx(k_star)
    assert b.contraction_factor == pytest.approx(1 - 1 / (k_star * 32))
    assert b.W_const == pytest.approx(0.6)
    assert b.k_star_exact
    tr = simulate(s, [0.0, 1.0], int(b.guarantee_time))
    g = check_guarantee(tr, 0, b.guarantee_time, 0.5)
    assert g.holds and not g.via_monotonicity


def test_theorem2_trivial_target():
    b = theorem2_bound(CutBalancedSchedule(4, 2, 3, 0.4, seed=1), K=2, L=3, eps_target=1.0, n_outer=1)
    assert b.omega2 == 0 and b.k_star == 0 and b.guarantee_time == 0


def test_theorem2_fixture_sequences():
    s = CutBalancedSchedule(4, 2, 3, 0.4, seed=1)
    b = theorem2_bound(s, K=2, L=3, eps_target=0.5, n_outer=3)
    assert 0 < b.contraction_factor < 1
    ks = b.k_sequence
    for p, g in enumerate(ks.groups):
        assert all(x < y for x, y in zip(g, g[1:]))
        assert len(g) == 4 // 2 + 1
        if p + 1 < len(ks.groups):
            assert ks.groups[p + 1][0] == g[-1]
        for v, bf in zip(ks.values[p], ks.before[p]):
            assert bf < 1 <= v <= 0.4**3 + 1
    with pytest.raises(ValidationError, match="cut balance"):
        theorem2_bound(s, K=1.2, L=3, eps_target=0.5, n_outer=1)
    with pytest.raises(MissingEtaError):
        theorem2_bound(builtin("paper-sec5"), K=2, L=1, eps_target=0.5)


def test_proposition2_stages_contract():
    s = CutBalancedSchedule(4, 2, 3, 0.4, seed=2)
    cert = proposition2_stages(lift(s, 3), K=2, n_outer=4)
    assert cert.gamma == pytest.approx(0.4**3)
    assert cert.M == max(cert.M_star, 3 / cert.gamma)
    outer = cert.stages.outer
    tr = simulate(lift(s, 3), [3.0, -1.0, 0.5, 2.0], outer[-1])
    rep = stagewise_contraction_check(tr, outer, cert.factor)
    assert rep.ok and len(rep.csv_rows()) == len(outer)


def test_stagewise_trivial_and_violation():
    tr = simulate(SYM2, [1.0, 1.0], 10)
    rep = stagewise_contraction_check(tr, [0, 5, 10], 0.5)
    assert rep.trivial and rep.ok
    tr = simulate(constant_schedule(np.eye(2)), [0.0, 1.0], 10)
    assert not stagewise_contraction_check(tr, [0, 5], 0.5).ok
    with pytest.raises(ValidationError):
        stagewise_contraction_check(tr, [0], 0.0)


def test_counterexample_report():
    tr = simulate(builtin("paper-sec5"), [1, 1, 0], 999)
    rep = counterexample_lower_bound(tr)
    assert rep.ok
    assert rep.partial_product == pytest.approx(rep.partial_product_closed_form, rel=1e-12)
    assert rep.psi_end >= 0.5
    with pytest.raises(ValidationError):
        counterexample_lower_bound(simulate(builtin("paper-sec5"), [0, 1, 0], 10))
    with pytest.raises(ValidationError):
        counterexample_lower_bound(simulate(SYM2, [0.0, 1.0], 10))
