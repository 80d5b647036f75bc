"""Reproduce the two worked examples and print what they show.

    python3 scripts/reproduce_examples.py --steps 10000 --out-dir runs/examples
"""

import argparse
from pathlib import Path

from persistflow.balance import aif_partial, balanced_asymmetry_ratio, cut_balance_Kmin
from persistflow.bounds import counterexample_lower_bound
from persistflow.dynamics import simulate
from persistflow.schedule import SEC4_EXPECTED, builtin


def sorted_state_example(out_dir):
    traj = simulate(builtin("paper-sec4"), SEC4_EXPECTED["y0"], 1, record_sorted=True)
    rec = traj.sorted_records
    print("four agents, one step from y(0) =", SEC4_EXPECTED["y0"])
    print("  y(1)      =", traj.x(1).tolist())
    print("  sigma_1   =", (rec.sigma[1] + 1).tolist())
    print("  z(1)      =", rec.z[1].tolist())
    print("  C(0)z(0)  =", (rec.C[0] @ rec.z[0]).tolist())
    print("  C'(0)z(0) =", (rec.C_prime[0] @ rec.z[0]).tolist(), "(not the sorted state)")
    print("  C(0) =")
    for row in rec.C[0]:
        print("   ", " ".join(f"{v:.2f}" for v in row))
    if out_dir:
        traj.write_csv(out_dir / "sorted_example.csv")
        traj.write_sorted_csv(out_dir / "sorted_example_sigma_z.csv")


def counterexample(steps, out_dir):
    s = builtin("paper-sec5")
    traj = simulate(s, [1.0, 1.0, 0.0], steps)
    rep = counterexample_lower_bound(traj)
    print(f"three agents, x(1) = [1, 1, 0], {steps} steps")
    print(f"  Psi(1) = {rep.psi1}, Psi(2) = {rep.psi2}, Psi({rep.horizon}) = {rep.psi_end:.9f}")
    print(f"  product lower bound at horizon = {rep.partial_product:.9f} (limit 1/2)")
    print(f"  smallest margin in Psi(t+1) >= (1 - 1/t^2) Psi(t): {rep.worst_step_margin:.3e}")
    print(f"  cut-balance K over [1, 300] with L = 1: {cut_balance_Kmin(s, 1, (1, 300)).K_min}")
    for k in (1, 5, 10):
        r = balanced_asymmetry_ratio(s.matrix_at(3 * k + 1), [1], [0])
        print(f"  asymmetry ratio at t = {3 * k + 1}: {r:.6g}")
    K = 50
    flow = aif_partial(s, (1, 3 * K + 3), c=1).min_flow
    print(f"  minimal single-node flow over [1, {3 * K + 3}]: {flow:.6f}"
          f" >= {sum(1 / (3 * k + 2) for k in range(K + 1)):.6f}")
    if out_dir:
        traj.write_csv(out_dir / "counterexample.csv")
    return rep.ok


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--out-dir", type=Path)
    args = p.parse_args()
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    sorted_state_example(args.out_dir)
    print()
    ok = counterexample(args.steps, args.out_dir)
    raise SystemExit(0 if ok else 2)


if __name__ == "__main__":
    main()
