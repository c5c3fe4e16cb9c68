"""
Equilibria and the coexistence condition
========================================

Whether both phases survive in the long run depends only on the masses
and on beta_i = exp(mu*_g,i - mu*_s,i): coexistence requires
sum m_i beta_i > 1 and sum m_i / beta_i > 1.
"""
import numpy as np

from cutcell_xdiff import coexistence_condition, solve_stationary, tc1_params
from cutcell_xdiff.model import stationary_equation

params = tc1_params()
m0 = np.array([0.25, 0.25, 0.5])

holds, s, s_inv = coexistence_condition(m0, params)
print(f"sum m beta = {s:.6f}, sum m / beta = {s_inv:.6f}, coexistence: {holds}")

st = solve_stationary(m0, params)
print("X_bar =", st.X_bar)
print("solid:", st.c_solid_bar)
print("gas:  ", st.c_gas_bar)

# the equilibrium interface is the interior root of a convex function
X = np.linspace(0, 1, 11)
for x, g in zip(X, stationary_equation(X, m0, params.beta)):
    print(f"  g({x:.1f}) = {g:+.4f}")

# scanning the mass of species 1 shows where one phase must vanish
print("\nm_1    coexistence  X_bar")
for m1 in np.linspace(0.05, 0.9, 10):
    rest = (1 - m1) / 3
    m = np.array([m1, rest, 2 * rest])
    holds, _, _ = coexistence_condition(m, params)
    X_bar = f"{solve_stationary(m, params).X_bar:.4f}" if holds else "-"
    print(f"{m1:.3f}  {str(holds):11s}  {X_bar}")
