"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from oracles import aif_min, cut_kmin, dyadic_stochastic
from persistflow import cli
from persistflow.balance import aif_partial, balanced_asymmetry_Mmin, balanced_asymmetry_ratio, cut_balance_Kmin
from persistflow.bounds import (
    check_guarantee,
    counterexample_lower_bound,
    stagewise_contraction_check,
    theorem1_bound,
    theorem2_bound,
)
from persistflow.dynamics import simulate
from persistflow.graph_analysis import PERSISTENT, accumulate
from persistflow.schedule import (
    SEC4_EXPECTED,
    ArcBalancedSchedule,
    CutBalancedSchedule,
    ExplicitSchedule,
    builtin,
    lift,
)
from persistflow.suites import run_all


@pytest.fixture
def report(capsys):
    def emit(number, title, checks, detail=""):
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title}"
        if detail:
            line += f" ({detail})"
        if failed:
            line += f" failed: {', '.join(failed)}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def test_1_counterexample_reproduction(report):
    t = time.perf_counter()
    traj = simulate(builtin("paper-sec5"), [1.0, 1.0, 0.0], 10_000)
    rep = counterexample_lower_bound(traj, tol=1e-12)
    elapsed = time.perf_counter() - t
    psi_1e4 = traj.psi(10_000)
    report(1, "three-agent counterexample keeps Psi above 1/2", {
        "psi1_psi2_exactly_one": traj.psi(1) == 1.0 and traj.psi(2) == 1.0,
        "per_step_lower_bound": rep.steps_ok,
        "psi_at_1e4": psi_1e4 >= 0.5 - 1e-9,
        "partial_product_chain": rep.end_ok,
        "runtime_below_1s": elapsed < 1.0,
    }, f"Psi(10^4)={psi_1e4:.6f}, worst step margin {rep.worst_step_margin:.2e}, {elapsed:.3f}s")


def test_2_sorted_state_example(report):
    traj = simulate(builtin("paper-sec4"), SEC4_EXPECTED["y0"], 1, record_sorted=True)
    rec = traj.sorted_records
    C0, Cp0, z0, z1 = rec.C[0], rec.C_prime[0], rec.z[0], rec.z[1]
    report(2, "four-agent sorted-state example", {
        "y1": traj.x(1).tolist() == SEC4_EXPECTED["y1"],
        "sigma1": (rec.sigma[1] + 1).tolist() == SEC4_EXPECTED["sigma1"],
        "z1": z1.tolist() == SEC4_EXPECTED["z1"],
        "C0": np.array_equal(C0, np.array(SEC4_EXPECTED["C0"], dtype=float)),
        "z1_equals_C0_z0": np.array_equal(C0 @ z0, z1),
        "z1_differs_from_Cprime0_z0": not np.array_equal(Cp0 @ z0, z1),
    }, f"C'(0)z(0)={(Cp0 @ z0).tolist()}")


def test_3_lemma_suites(report):
    t = time.perf_counter()
    results = run_all(trials=1000, seed=7, workers=1, slack=1e-9)
    elapsed = time.perf_counter() - t
    checks = {f"{r.lemma}_zero_violations": r.ok for r in results}
    checks["runtime_below_30s"] = elapsed < 30
    detail = ", ".join(f"{r.lemma}: {r.checks} checks" for r in results) + f"; {elapsed:.1f}s"
    report(3, "randomized suites for the product, cut and sorted-state inequalities", checks, detail)


def test_4_balance_checker_vs_oracle(report):
    rng = np.random.default_rng(20240)
    aif_ok, cut_ok, cases = True, True, 0
    for n in (2, 3, 4):
        for T in range(1, 7):
            for _ in range(3):
                mats = [dyadic_stochastic(rng, n) for _ in range(T)]
                s = ExplicitSchedule(tuple(mats))
                aif_ok &= aif_partial(s, (0, T - 1)).min_flow == aif_min(mats)
                for L in range(1, T + 1):
                    cut_ok &= cut_balance_Kmin(s, L, (0, T - 1)).K_min == cut_kmin(mats, L)
                cases += 1
    report(4, "subset-sequence DP and cut-balance scan equal exhaustive enumeration", {
        "aif_exact": bool(aif_ok),
        "cut_balance_exact": bool(cut_ok),
    }, f"{cases} random instances, N<=4, horizon<=6")


def test_5_counterexample_balance_findings(report):
    s = builtin("paper-sec5")
    kmin = cut_balance_Kmin(s, 1, (1, 300)).K_min
    ratios_ok, mmin_ok = True, True
    for k in range(1, 11):
        a = s.matrix_at(3 * k + 1)
        # S1 = {1}, S2 = {2} in 1-based labels; the displayed ratio is
        # sum_{i not in S2, j in S1} a_ij / sum_{i in S2, j not in S1} a_ij
        r = balanced_asymmetry_ratio(a, [1], [0])
        ratios_ok &= abs(r - (3 * k + 1)) <= 1e-12 * (3 * k + 1)
        mmin_ok &= balanced_asymmetry_Mmin(a).K_min >= r
    K = 50
    flow = aif_partial(s, (1, 3 * K + 3), c=1).min_flow
    harmonic = sum(1 / (3 * k + 2) for k in range(K + 1))
    report(5, "counterexample is cut-balanced, not balanced-asymmetric, and has infinite flow", {
        "cut_balance_K_at_most_2": kmin <= 2,
        "asymmetry_ratio_3k_plus_1": bool(ratios_ok),
        "asymmetry_Mmin_unbounded": bool(mmin_ok),
        "aif_flow_lower_bound": flow >= harmonic,
    }, f"K_min={kmin}, flow={flow:.4f} >= {harmonic:.4f}")


ARC_FIXTURE = dict(n=3, K=2, L=2, eta=0.4, seed=1)


def test_6_arc_balance_certificate(report):
    t = time.perf_counter()
    s = ArcBalancedSchedule(**ARC_FIXTURE)
    checks, notes = {}, []
    for eps in (0.5, 0.1):
        b = theorem1_bound(s, K=2, L=2, eps_target=eps)
        bounds = b.stage_boundaries()
        traj = simulate(s, [0.0, 1.0, 2.0], max(bounds[-1], 3000) - s.t0)
        g = check_guarantee(traj, s.t0, b.guarantee_time, eps)
        st = stagewise_contraction_check(traj, bounds, b.factor)
        checks[f"guarantee_eps_{eps}"] = g.holds
        checks[f"stagewise_eps_{eps}"] = st.ok and len(st.stages) > 1
        checks[f"stage_mass_le_1_plus_delta_eps_{eps}"] = max(b.stages.masses) <= 1 + b.delta
        notes.append(f"eps={eps}: guarantee time {'=' if b.t_star_exact else '>='} {b.guarantee_time:.3g}, "
                     f"Psi(t_end)/Psi(t0)={g.psi_evaluated / g.psi_t0:.2e}")
    elapsed = time.perf_counter() - t
    checks["runtime_below_10s"] = elapsed < 10
    report(6, "arc-balance rate certificate holds in simulation", checks, "; ".join(notes) + f"; {elapsed:.2f}s")


CUT_FIXTURE = dict(n=4, K=2, L=3, eta=0.4, seed=1)


def test_7_cut_balance_certificate(report):
    t = time.perf_counter()
    s = CutBalancedSchedule(**CUT_FIXTURE)
    checks, notes = {}, []
    for eps in (0.5, 0.1):
        b = theorem2_bound(s, K=2, L=3, eps_target=eps, n_outer=5)
        bounds = b.stage_boundaries()
        traj = simulate(s, [0.0, 1.0, 2.0, 3.0], max(bounds[-1], 3000) - s.t0)
        g = check_guarantee(traj, s.t0, b.guarantee_time, eps)
        st = stagewise_contraction_check(traj, bounds, b.contraction_factor)
        ks = b.k_sequence
        flat = [ks.groups[0][0]] + [k for g_ in ks.groups for k in g_[1:]]
        cap = b.eta**b.L + 1
        checks[f"guarantee_eps_{eps}"] = g.holds
        checks[f"per_stage_contraction_eps_{eps}"] = st.ok and len(st.stages) > 1
        checks[f"k_sequence_increasing_eps_{eps}"] = all(x < y for x, y in zip(flat, flat[1:]))
        checks[f"k_sequence_minimal_eps_{eps}"] = all(
            bf < 1 <= v for vs, bfs in zip(ks.values, ks.before) for v, bf in zip(vs, bfs))
        checks[f"substage_flow_le_eta_L_plus_1_eps_{eps}"] = all(v <= cap for vs in ks.values for v in vs)
        notes.append(f"eps={eps}: k* {'=' if b.k_star_exact else '>='} {b.k_star_lower:.3g}")
    elapsed = time.perf_counter() - t
    checks["runtime_below_30s"] = elapsed < 30
    report(7, "cut-balance rate certificate holds in simulation", checks, "; ".join(notes) + f"; {elapsed:.2f}s")


def test_8_lift_consistency(report):
    s = CutBalancedSchedule(**CUT_FIXTURE)
    n, K, L, eta = s.n, s.K, s.L, s.eta
    b = lift(s, L)
    horizon = 200
    mats = b.matrices(0, horizon - 1)
    m_star = (n - 1) * K * eta ** (-L + 1)
    diag_ok = bool(np.all(np.diagonal(mats, axis1=1, axis2=2) >= eta**L * (1 - 1e-12)))
    kmin = cut_balance_Kmin(b, 1, (0, horizon - 1)).K_min
    arc_ok = True
    for t in range(horizon):
        base = s.matrices(t * L, t * L + L - 1)
        for j, i in s.persistent_arcs:
            arc_ok &= mats[t][i, j] >= eta ** (L - 1) * base[:, i, j].max() * (1 - 1e-12) > 0
    est = accumulate(b, horizon - 1, use_ground_truth=False)
    report(8, "lifted products keep the diagonal floor, per-matrix cut balance and persistent arcs", {
        "diagonals_ge_eta_L": diag_ok,
        "per_matrix_cut_balance_M_star": kmin <= m_star,
        "lifted_arc_dominates_base_arc": bool(arc_ok),
        "persistent_arcs_carry_over": s.persistent_arcs <= est.arcs(PERSISTENT),
    }, f"max cut ratio {kmin:.3f} <= M*={m_star:.3f}")


def _run_all_commands(out, tmp_path):
    gen_arc = tmp_path / "arc.json"
    gen_arc.write_text('{"generator": "arc-balanced", "n": 3, "K": 2, "L": 2, "eta": 0.4, "seed": 1}')
    gen_cut = '{"generator": "cut-balanced", "n": 4, "K": 2, "L": 3, "eta": 0.4, "seed": 1}'
    codes = [
        cli.main(["example", "--id", "paper-sec5", "--steps", "2000", "--out-dir", str(out / "sec5")]),
        cli.main(["example", "--id", "paper-sec4", "--out-dir", str(out / "sec4")]),
        cli.main(["simulate", "--schedule", gen_cut, "--steps", "300", "--out", str(out / "sim.csv"),
                  "--sorted-out", str(out / "sorted.csv"), "--report", str(out / "sim.json")]),
        cli.main(["persistence", "--schedule", str(gen_arc), "--horizon", "80", "--heuristic",
                  "--out", str(out / "persist.json")]),
        cli.main(["balance", "--schedule", gen_cut, "--condition", "all", "--L", "3", "--horizon", "20",
                  "--out", str(out / "balance.json")]),
        cli.main(["bound-arc", "--schedule", str(gen_arc), "--K", "2", "--L", "2", "--eps", "0.1",
                  "--out", str(out / "arc.json"), "--csv", str(out / "arc.csv")]),
        cli.main(["bound-cut", "--schedule", gen_cut, "--K", "2", "--L", "3", "--eps", "0.1", "--rounds", "2",
                  "--out", str(out / "cut.json"), "--csv", str(out / "cut.csv")]),
        cli.main(["verify", "--trials", "60", "--seed", "3", "--workers", "1", "--out", str(out / "verify.json")]),
    ]
    return codes


def test_9_determinism(report, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    codes = _run_all_commands(a, tmp_path) + _run_all_commands(b, tmp_path)
    # a different worker count must not change the suite output
    cli.main(["verify", "--trials", "60", "--seed", "3", "--workers", "2", "--out", str(b / "verify.json")])
    capsys.readouterr()
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    same = files_a == files_b and all((a / f).read_bytes() == (b / f).read_bytes() for f in files_a)
    report(9, "repeated runs give byte-identical outputs", {
        "all_commands_succeed": all(c == 0 for c in codes),
        "byte_identical": same,
    }, f"{len(files_a)} files compared")
