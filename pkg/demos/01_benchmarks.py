"""Nash and monopoly benchmarks for the three demand models, plus a profit surface.

Run: python demos/01_benchmarks.py
"""
import numpy as np

from bertrand_arena import MarketSpec, build_grid, equilibrium_report, profit_surface

markets = {
    "logit": MarketSpec.logit(c=1.0, g=2.0, mu=0.25),
    "standard": MarketSpec.standard(),
    "edgeworth": MarketSpec.edgeworth(k=0.6),
}
for name, spec in markets.items():
    eq = equilibrium_report(spec)
    print(f"{name:>9}: p^N={eq.p_nash:.4f}  p^M={eq.p_monopoly:.4f}  "
          f"pi^N={eq.pi_nash:.4f}  pi^M={eq.pi_monopoly:.4f}")

# the action space agents price on: 15 levels around [p^N, p^M], widened by zeta
logit = markets["logit"]
grid = build_grid(logit, equilibrium_report(logit), 15, 0.1)
print("\nLogit price grid:", np.round(grid.values, 4))

# firm 0's profit over a coarse price square; rows are (p0, p1, profit0)
surface = profit_surface(logit, 5)
best = surface[np.argmax(surface[:, 2])]
print(f"\n5x5 Logit surface: max profit0 {best[2]:.4f} at p0={best[0]:.3f}, p1={best[1]:.3f}")
