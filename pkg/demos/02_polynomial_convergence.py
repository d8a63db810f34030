"""Manufactured polynomial benchmark.

Solves -Delta Psi + (2/eps^2)(|Psi|^2 - 1) Psi = f with the exact solution
u = v = x(1-x)y(1-y) at eps = 0.2 and verifies the orders of convergence:
k in the dG norm and k+1 in L2 for P_k elements.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import ldg

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

newton = ldg.NewtonConfig(tol_dg=1e-8, tol_res=1e-10)

fig, ax = plt.subplots(figsize=(6, 5))
for k, levels in ((1, 5), (2, 4)):
    res = ldg.polynomial_study(0.2, k, levels, n0=4, newton_cfg=newton)
    t = res.table
    print(f"\nP{k} elements (eps = 0.2, sigma = {10 * k * k}):")
    print(f"{'h':>8} {'dG error':>12} {'order':>7} {'L2 error':>12} {'order':>7} {'its':>4}")
    for rec, odg, ol2 in zip(t.records, t.orders_dg, t.orders_l2):
        print(f"{rec.h:8.4f} {rec.err_dg:12.4e} "
              f"{odg if odg is not None else float('nan'):7.3f} "
              f"{rec.err_l2:12.4e} "
              f"{ol2 if ol2 is not None else float('nan'):7.3f} "
              f"{rec.newton_iters:4d}")
    hs = [r.h for r in t.records]
    ax.loglog(hs, [r.err_dg for r in t.records], "o-", label=f"dG error, k={k}")
    ax.loglog(hs, [r.err_l2 for r in t.records], "s--", label=f"L2 error, k={k}")

ax.set_xlabel("h")
ax.set_ylabel("error")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "polynomial_convergence.png"), dpi=130)
print("\nwrote", os.path.join(OUT, "polynomial_convergence.png"))
